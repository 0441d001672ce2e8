//! Kernel functions and dense Gram matrices.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::{dot, squared_distance, Matrix};

#[derive(Debug, Error, PartialEq)]
pub enum KernelError {
    #[error("rbf kernel needs gamma > 0, got {0}")]
    BadGamma(f64),
    #[error("polynomial kernel needs degree >= 1")]
    BadDegree,
    #[error("vector dimensions differ: {0} vs {1}")]
    DimensionMismatch(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Rbf,
    Polynomial,
}

impl std::str::FromStr for KernelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(KernelKind::Linear),
            "rbf" | "gaussian" => Ok(KernelKind::Rbf),
            "polynomial" | "poly" => Ok(KernelKind::Polynomial),
            _ => Err(format!("unknown kernel {s:?}")),
        }
    }
}

/// Kernel choice with its parameters. The Gaussian kernel is `exp(-gamma * |p - q|^2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default)]
    pub coef0: f64,
}

fn default_degree() -> u32 {
    1
}

impl KernelSpec {
    pub fn linear() -> Self {
        Self {
            kind: KernelKind::Linear,
            gamma: 0.0,
            degree: 1,
            coef0: 0.0,
        }
    }

    pub fn rbf(gamma: f64) -> Result<Self, KernelError> {
        let spec = Self {
            kind: KernelKind::Rbf,
            gamma,
            degree: 1,
            coef0: 0.0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn polynomial(degree: u32, coef0: f64) -> Result<Self, KernelError> {
        let spec = Self {
            kind: KernelKind::Polynomial,
            gamma: 0.0,
            degree,
            coef0,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), KernelError> {
        match self.kind {
            KernelKind::Rbf if !(self.gamma > 0.0 && self.gamma.is_finite()) => {
                Err(KernelError::BadGamma(self.gamma))
            }
            KernelKind::Polynomial if self.degree < 1 => Err(KernelError::BadDegree),
            _ => Ok(()),
        }
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, p: &[f64], q: &[f64]) -> f64 {
        match self.kind {
            KernelKind::Linear => dot(p, q),
            KernelKind::Rbf => (-self.gamma * squared_distance(p, q)).exp(),
            KernelKind::Polynomial => (dot(p, q) + self.coef0).powi(self.degree as i32),
        }
    }
}

pub fn kernel_eval(spec: &KernelSpec, p: &[f64], q: &[f64]) -> Result<f64, KernelError> {
    if p.len() != q.len() {
        return Err(KernelError::DimensionMismatch(p.len(), q.len()));
    }
    spec.validate()?;
    Ok(spec.eval_unchecked(p, q))
}

/// M x M Gram matrix. Each unordered pair is evaluated once and mirrored, so the result is
/// exactly symmetric.
pub fn gram(spec: &KernelSpec, x: &Matrix) -> Result<Matrix, KernelError> {
    spec.validate()?;
    let m = x.rows();
    let mut g = Matrix::zeros(m, m);
    for i in 0..m {
        for j in i..m {
            let v = spec.eval_unchecked(x.row(i), x.row(j));
            g[(i, j)] = v;
            g[(j, i)] = v;
        }
    }
    Ok(g)
}

/// M x P matrix of kernel values between the rows of `x` and the rows of `z`.
pub fn cross_gram(spec: &KernelSpec, x: &Matrix, z: &Matrix) -> Result<Matrix, KernelError> {
    if x.cols() != z.cols() {
        return Err(KernelError::DimensionMismatch(x.cols(), z.cols()));
    }
    spec.validate()?;
    let mut k = Matrix::zeros(x.rows(), z.rows());
    for i in 0..x.rows() {
        let xi = x.row(i);
        for (j, v) in k.row_mut(i).iter_mut().enumerate() {
            *v = spec.eval_unchecked(xi, z.row(j));
        }
    }
    Ok(k)
}
