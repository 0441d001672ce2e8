//! Minimal Complexity Machine (MCM) regression.
//!
//! An MCM regressor is the hyperplane `w·x + eta·y + b = 0` that separates the
//! target-shifted copies `(x_i, y_i + epsilon)` and `(x_i, y_i - epsilon)` of the training
//! data while minimizing `h`, an upper bound on the margin ratio that tracks the VC
//! dimension of the classifier. Training is a single linear program; prediction is
//! `y = -(w·x + b) / eta`. The kernel variant expands `w` over the training points.

pub mod cli;
pub mod dataset;
pub mod harness;
pub mod kernel;
pub mod lp;
pub mod matrix;
pub mod mcm;
