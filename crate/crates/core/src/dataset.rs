//! Regression datasets: CSV loading, z-score standardization and k-fold partitioning.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use log::warn;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::matrix::Matrix;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("empty dataset")]
    Empty,
    #[error("line {line}, column {column}: cannot parse {cell:?} as a number")]
    Parse {
        line: usize,
        column: usize,
        cell: String,
    },
    #[error("line {line}, column {column}: non-finite value")]
    NonFinite { line: usize, column: usize },
    #[error("line {line}: expected {expected} fields, found {found}")]
    Ragged {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("target column {index} out of range for {columns} columns")]
    TargetColumn { index: usize, columns: usize },
    #[error("need at least one feature column besides the target")]
    NoFeatures,
    #[error("{features} feature rows but {targets} targets")]
    ShapeMismatch { features: usize, targets: usize },
    #[error("feature_names has {names} entries for {columns} columns")]
    NameCount { names: usize, columns: usize },
    #[error("standardization needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("k-fold split needs 2 <= k <= M, got k={k}, M={m}")]
    InvalidFolds { k: usize, m: usize },
    #[error("scaling parameters expect {expected} features, got {found}")]
    FeatureCount { expected: usize, found: usize },
}

/// M samples of dimension n with real targets.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    targets: Vec<f64>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        targets: Vec<f64>,
        feature_names: Option<Vec<String>>,
    ) -> Result<Self, DatasetError> {
        if features.rows() == 0 || features.cols() == 0 {
            return Err(if features.rows() == 0 {
                DatasetError::Empty
            } else {
                DatasetError::NoFeatures
            });
        }
        if features.rows() != targets.len() {
            return Err(DatasetError::ShapeMismatch {
                features: features.rows(),
                targets: targets.len(),
            });
        }
        if let Some(names) = &feature_names {
            if names.len() != features.cols() {
                return Err(DatasetError::NameCount {
                    names: names.len(),
                    columns: features.cols(),
                });
            }
        }
        for (i, row) in features.iter_rows().enumerate() {
            if let Some(j) = row.iter().position(|v| !v.is_finite()) {
                return Err(DatasetError::NonFinite {
                    line: i + 1,
                    column: j + 1,
                });
            }
        }
        if let Some(i) = targets.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite {
                line: i + 1,
                column: features.cols() + 1,
            });
        }
        Ok(Self {
            features,
            targets,
            feature_names,
        })
    }

    /// Convenience constructor from row slices.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R], targets: &[f64]) -> Result<Self, DatasetError> {
        let features = Matrix::from_rows(rows).ok_or(DatasetError::Ragged {
            line: 0,
            expected: rows.first().map_or(0, |r| r.as_ref().len()),
            found: 0,
        })?;
        Self::new(features, targets.to_vec(), None)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> &[f64] {
        &self.targets
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn n_samples(&self) -> usize {
        self.features.rows()
    }

    pub fn n_features(&self) -> usize {
        self.features.cols()
    }

    /// Rows `idx`, in order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            targets: idx.iter().map(|&i| self.targets[i]).collect(),
            feature_names: self.feature_names.clone(),
        }
    }

    pub fn with_targets(&self, targets: Vec<f64>) -> Result<Dataset, DatasetError> {
        Dataset::new(self.features.clone(), targets, self.feature_names.clone())
    }

    /// Serializes as CSV with the target in the last column. Values use the shortest
    /// representation that parses back to the same `f64`.
    pub fn to_csv_string(&self, header: bool) -> String {
        let mut out = String::new();
        if header {
            let names: Vec<String> = match &self.feature_names {
                Some(n) => n.clone(),
                None => (0..self.n_features()).map(|j| format!("x{j}")).collect(),
            };
            out.push_str(&names.join(","));
            out.push_str(",y\n");
        }
        for (row, y) in self.features.iter_rows().zip(&self.targets) {
            for v in row {
                let _ = write!(out, "{v:?},");
            }
            let _ = writeln!(out, "{y:?}");
        }
        out
    }

    pub fn write_csv(&self, path: &Path, header: bool) -> Result<(), DatasetError> {
        fs::write(path, self.to_csv_string(header)).map_err(|source| DatasetError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

/// Which CSV column holds the regression target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TargetColumn {
    #[default]
    Last,
    Index(usize),
}

impl std::str::FromStr for TargetColumn {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("last") {
            return Ok(TargetColumn::Last);
        }
        s.parse::<usize>()
            .map(TargetColumn::Index)
            .map_err(|_| format!("expected a column index or \"last\", got {s:?}"))
    }
}

pub fn load_csv(
    path: &Path,
    has_header: bool,
    target: TargetColumn,
) -> Result<Dataset, DatasetError> {
    let text = fs::read_to_string(path).map_err(|source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, has_header, target)
}

struct Table {
    header: Option<Vec<String>>,
    width: Option<usize>,
    n_rows: usize,
    values: Vec<f64>,
}

fn parse_table(text: &str, has_header: bool) -> Result<Table, DatasetError> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty());

    let header: Option<Vec<String>> = if has_header {
        lines
            .next()
            .map(|(_, l)| l.split(',').map(|s| s.trim().to_string()).collect())
    } else {
        None
    };

    let mut width = header.as_ref().map(Vec::len);
    let mut values = Vec::new();
    let mut n_rows = 0;
    for (line, l) in lines {
        let cells: Vec<&str> = l.split(',').collect();
        let expected = *width.get_or_insert(cells.len());
        if cells.len() != expected {
            return Err(DatasetError::Ragged {
                line,
                expected,
                found: cells.len(),
            });
        }
        for (j, cell) in cells.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| DatasetError::Parse {
                line,
                column: j + 1,
                cell: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(DatasetError::NonFinite {
                    line,
                    column: j + 1,
                });
            }
            values.push(v);
        }
        n_rows += 1;
    }
    Ok(Table {
        header,
        width,
        n_rows,
        values,
    })
}

/// Reads a feature-only CSV (no target column). Empty input gives a matrix with no rows.
pub fn parse_features_csv(text: &str, has_header: bool) -> Result<Matrix, DatasetError> {
    let t = parse_table(text, has_header)?;
    let width = t.width.unwrap_or(0);
    Ok(Matrix::from_row_major(t.n_rows, width, t.values))
}

/// Parses comma-separated numeric text. Blank lines are ignored; line numbers in errors are
/// 1-based positions in the input.
pub fn parse_csv(
    text: &str,
    has_header: bool,
    target: TargetColumn,
) -> Result<Dataset, DatasetError> {
    let Table {
        header,
        width,
        n_rows,
        values,
    } = parse_table(text, has_header)?;
    let width = match width {
        Some(w) if n_rows > 0 => w,
        _ => return Err(DatasetError::Empty),
    };
    if width < 2 {
        return Err(DatasetError::NoFeatures);
    }
    let tcol = match target {
        TargetColumn::Last => width - 1,
        TargetColumn::Index(i) if i < width => i,
        TargetColumn::Index(i) => {
            return Err(DatasetError::TargetColumn {
                index: i,
                columns: width,
            })
        }
    };

    let mut features = Vec::with_capacity(n_rows * (width - 1));
    let mut targets = Vec::with_capacity(n_rows);
    for row in values.chunks(width) {
        for (j, &v) in row.iter().enumerate() {
            if j == tcol {
                targets.push(v);
            } else {
                features.push(v);
            }
        }
    }
    let names = header.map(|mut h| {
        h.remove(tcol);
        h
    });
    Dataset::new(
        Matrix::from_row_major(n_rows, width - 1, features),
        targets,
        names,
    )
}

/// Per-column z-score parameters for features and target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingParams {
    pub feature_means: Vec<f64>,
    pub feature_stds: Vec<f64>,
    pub target_mean: f64,
    pub target_std: f64,
    /// Feature columns that were constant at fit time; they pass through unchanged.
    #[serde(default)]
    pub constant_features: Vec<usize>,
    #[serde(default)]
    pub constant_target: bool,
}

/// Mean and sample standard deviation (divisor n - 1). A zero std yields `None`.
fn moments(values: impl Iterator<Item = f64> + Clone) -> Option<(f64, f64)> {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    let std = var.sqrt();
    (std > 1e-12 * (1.0 + mean.abs())).then_some((mean, std))
}

impl ScalingParams {
    pub fn fit(d: &Dataset) -> Result<Self, DatasetError> {
        let m = d.n_samples();
        if m < 2 {
            return Err(DatasetError::TooFewSamples(m));
        }
        let n = d.n_features();
        let x = d.features();
        let mut feature_means = vec![0.0; n];
        let mut feature_stds = vec![1.0; n];
        let mut constant_features = Vec::new();
        for j in 0..n {
            match moments((0..m).map(|i| x[(i, j)])) {
                Some((mean, std)) => {
                    feature_means[j] = mean;
                    feature_stds[j] = std;
                }
                None => constant_features.push(j),
            }
        }
        if !constant_features.is_empty() {
            let names: Vec<String> = constant_features
                .iter()
                .map(|&j| match d.feature_names() {
                    Some(n) => n[j].clone(),
                    None => format!("#{j}"),
                })
                .collect();
            warn!(
                "constant feature column(s) {} kept unscaled",
                names.join(", ")
            );
        }
        let (target_mean, target_std, constant_target) = match moments(d.targets().iter().copied())
        {
            Some((mean, std)) => (mean, std, false),
            None => {
                warn!("constant target kept unscaled");
                (0.0, 1.0, true)
            }
        };
        Ok(Self {
            feature_means,
            feature_stds,
            target_mean,
            target_std,
            constant_features,
            constant_target,
        })
    }

    /// The identity transform for `n` features.
    pub fn identity(n: usize) -> Self {
        Self {
            feature_means: vec![0.0; n],
            feature_stds: vec![1.0; n],
            target_mean: 0.0,
            target_std: 1.0,
            constant_features: Vec::new(),
            constant_target: false,
        }
    }

    pub fn n_features(&self) -> usize {
        self.feature_means.len()
    }

    pub fn scale_features(&self, x: &Matrix) -> Result<Matrix, DatasetError> {
        self.check_width(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = (*v - self.feature_means[j]) / self.feature_stds[j];
            }
        }
        Ok(out)
    }

    pub fn unscale_features(&self, x: &Matrix) -> Result<Matrix, DatasetError> {
        self.check_width(x)?;
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                *v = *v * self.feature_stds[j] + self.feature_means[j];
            }
        }
        Ok(out)
    }

    pub fn scale_target(&self, y: f64) -> f64 {
        (y - self.target_mean) / self.target_std
    }

    pub fn unscale_target(&self, y: f64) -> f64 {
        y * self.target_std + self.target_mean
    }

    pub fn apply(&self, d: &Dataset) -> Result<Dataset, DatasetError> {
        Dataset::new(
            self.scale_features(d.features())?,
            d.targets().iter().map(|&y| self.scale_target(y)).collect(),
            d.feature_names.clone(),
        )
    }

    pub fn invert(&self, d: &Dataset) -> Result<Dataset, DatasetError> {
        Dataset::new(
            self.unscale_features(d.features())?,
            d.targets()
                .iter()
                .map(|&y| self.unscale_target(y))
                .collect(),
            d.feature_names.clone(),
        )
    }

    fn check_width(&self, x: &Matrix) -> Result<(), DatasetError> {
        if x.cols() != self.n_features() {
            return Err(DatasetError::FeatureCount {
                expected: self.n_features(),
                found: x.cols(),
            });
        }
        Ok(())
    }
}

/// Z-scores every feature column and the target (sample standard deviation).
pub fn standardize(d: &Dataset) -> Result<(Dataset, ScalingParams), DatasetError> {
    let params = ScalingParams::fit(d)?;
    Ok((params.apply(d)?, params))
}

/// Assignment of each sample to one of `k` validation folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    k: usize,
    assignments: Vec<usize>,
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn assignments(&self) -> &[usize] {
        &self.assignments
    }

    /// (training indices, validation indices) for `fold`, both ascending.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        (0..self.assignments.len()).partition(|&i| self.assignments[i] != fold)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.assignments {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Shuffles sample indices with a seeded ChaCha stream and deals them round-robin into `k`
/// folds, so fold sizes differ by at most one.
pub fn kfold_split(d: &Dataset, k: usize, seed: u64) -> Result<FoldPlan, DatasetError> {
    kfold_plan(d.n_samples(), k, seed)
}

pub fn kfold_plan(m: usize, k: usize, seed: u64) -> Result<FoldPlan, DatasetError> {
    if k < 2 || k > m {
        return Err(DatasetError::InvalidFolds { k, m });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut assignments = vec![0; m];
    for (pos, &i) in order.iter().enumerate() {
        assignments[i] = pos % k;
    }
    Ok(FoldPlan { k, assignments })
}
