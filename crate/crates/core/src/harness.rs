//! K-fold cross-validation and grid search over MCM hyperparameters.
//!
//! Each fold is standardized with statistics of its own training split, trained, and scored
//! by validation MSE. Folds that fail to train are recorded and left out of the aggregates.
//! Grid search tunes and reports on the same folds, so its scores are optimistically biased.

use std::fmt::Write as _;
use std::time::Instant;

use log::warn;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{kfold_split, Dataset, DatasetError, ScalingParams};
use crate::kernel::{KernelKind, KernelSpec};
use crate::lp::SolverOptions;
use crate::mcm::{predict_kernel, predict_linear, train_kernel, train_linear, Hyper, McmError};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error(transparent)]
    Model(#[from] McmError),
    #[error("support count {sv} is outside [0, {train}]")]
    InvalidLooInput { sv: f64, train: usize },
    #[error("every grid point failed:\n{}", .0.join("\n"))]
    AllFailed(Vec<String>),
}

/// Linear MCM on the raw features, or kernel MCM on a Gram matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Linear,
    Kernel,
}

impl std::str::FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Ok(ModelKind::Linear),
            "kernel" => Ok(ModelKind::Kernel),
            _ => Err(format!(
                "unknown model kind {s:?}; expected linear or kernel"
            )),
        }
    }
}

/// One hyperparameter setting. `gamma` is set only for RBF kernel runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HyperPoint {
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub gamma: Option<f64>,
}

impl HyperPoint {
    pub fn hyper(&self) -> Hyper {
        Hyper::soft(self.epsilon, self.c)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    #[serde(rename = "C_values")]
    pub c_values: Vec<f64>,
    pub epsilon_values: Vec<f64>,
    pub gamma_values: Vec<f64>,
    pub kernel_kind: KernelKind,
    /// Polynomial kernel settings; unused by the other kinds.
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default)]
    pub coef0: f64,
}

fn default_degree() -> u32 {
    2
}

impl Default for HyperGrid {
    fn default() -> Self {
        Self {
            c_values: vec![1e-2, 1e-1, 1.0, 10.0, 100.0, 1000.0],
            epsilon_values: vec![0.01, 0.05, 0.1, 0.2],
            gamma_values: (-6..=2).map(|p| 2f64.powi(p)).collect(),
            kernel_kind: KernelKind::Rbf,
            degree: default_degree(),
            coef0: 0.0,
        }
    }
}

impl HyperGrid {
    pub fn validate(&self) -> Result<(), HarnessError> {
        for (name, values) in [
            ("C", &self.c_values),
            ("epsilon", &self.epsilon_values),
            ("gamma", &self.gamma_values),
        ] {
            if values.is_empty() {
                return Err(HarnessError::InvalidGrid(format!("{name} list is empty")));
            }
            if let Some(v) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                return Err(HarnessError::InvalidGrid(format!(
                    "{name} value {v} is not positive"
                )));
            }
            if values.windows(2).any(|w| w[0] >= w[1]) {
                return Err(HarnessError::InvalidGrid(format!(
                    "{name} values must be strictly ascending"
                )));
            }
        }
        if self.kernel_kind == KernelKind::Polynomial && self.degree < 1 {
            return Err(HarnessError::InvalidGrid(
                "polynomial degree must be >= 1".into(),
            ));
        }
        Ok(())
    }

    /// Grid points in a fixed order: C outermost, then epsilon, then gamma. Gamma is
    /// expanded only for RBF kernel runs.
    pub fn points(&self, kind: ModelKind) -> Vec<HyperPoint> {
        let gammas: Vec<Option<f64>> =
            if kind == ModelKind::Kernel && self.kernel_kind == KernelKind::Rbf {
                self.gamma_values.iter().copied().map(Some).collect()
            } else {
                vec![None]
            };
        let mut out = Vec::new();
        for &c in &self.c_values {
            for &epsilon in &self.epsilon_values {
                for &gamma in &gammas {
                    out.push(HyperPoint { epsilon, c, gamma });
                }
            }
        }
        out
    }

    pub fn kernel_spec(&self, gamma: Option<f64>) -> Result<KernelSpec, HarnessError> {
        let spec = match self.kernel_kind {
            KernelKind::Linear => KernelSpec::linear(),
            KernelKind::Rbf => KernelSpec::rbf(gamma.unwrap_or(1.0)).map_err(McmError::from)?,
            KernelKind::Polynomial => {
                KernelSpec::polynomial(self.degree, self.coef0).map_err(McmError::from)?
            }
        };
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CvOptions {
    pub k: usize,
    pub seed: u64,
    /// Z-score each fold with its training statistics.
    pub standardize: bool,
    /// Report MSE in raw target units instead of standardized units.
    pub raw_units: bool,
    pub solver: SolverOptions,
}

impl Default for CvOptions {
    fn default() -> Self {
        Self {
            k: 5,
            seed: 0,
            standardize: true,
            raw_units: false,
            solver: SolverOptions::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: usize,
    pub n_train: usize,
    pub n_valid: usize,
    /// `None` when training failed; see `error`.
    pub mse: Option<f64>,
    pub sv_count: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub error: Option<String>,
    /// Training-split statistics used for this fold, when standardizing.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub scaling: Option<ScalingParams>,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub kind: ModelKind,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel: Option<KernelSpec>,
    pub chosen_hyper: HyperPoint,
    pub k: usize,
    pub seed: u64,
    pub mse_units: String,
    pub folds: Vec<FoldResult>,
    /// Per-fold MSE; `null` marks a failed fold.
    pub fold_mse: Vec<Option<f64>>,
    /// Aggregates over successful folds only; `None` when every fold failed.
    pub mse_mean: Option<f64>,
    pub mse_std: Option<f64>,
    pub fold_sv_counts: Vec<Option<usize>>,
    pub sv_mean: Option<f64>,
    pub sv_std: Option<f64>,
    /// Mean support count over mean training size (kernel runs).
    pub loo_bound: Option<f64>,
    pub n_failed: usize,
}

impl CvReport {
    pub fn succeeded(&self) -> bool {
        self.mse_mean.is_some()
    }
}

/// Expected leave-one-out error bound: support vectors over training samples.
pub fn loo_bound(sv_count: f64, train_count: usize) -> Result<f64, HarnessError> {
    if train_count == 0 || !(0.0..=train_count as f64).contains(&sv_count) {
        return Err(HarnessError::InvalidLooInput {
            sv: sv_count,
            train: train_count,
        });
    }
    Ok(sv_count / train_count as f64)
}

/// Mean and sample standard deviation; the std of a single value is 0.
fn mean_std(values: &[f64]) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    Some((mean, std))
}

fn mse(pred: &[f64], truth: &[f64]) -> f64 {
    pred.iter()
        .zip(truth)
        .map(|(p, t)| (p - t) * (p - t))
        .sum::<f64>()
        / truth.len() as f64
}

/// Fits and scores one fold; returns (mse, support count).
fn run_fold(
    train: &Dataset,
    valid: &Dataset,
    kind: ModelKind,
    spec: Option<KernelSpec>,
    hyper: Hyper,
    opts: &CvOptions,
    scaling: Option<&ScalingParams>,
) -> Result<(f64, Option<usize>), HarnessError> {
    let (train_s, valid_s) = match scaling {
        Some(s) => (s.apply(train)?, s.apply(valid)?),
        None => (train.clone(), valid.clone()),
    };
    let (pred, sv) = match kind {
        ModelKind::Linear => {
            let m = train_linear(&train_s, hyper, &opts.solver)?;
            (predict_linear(&m, valid_s.features())?, None)
        }
        ModelKind::Kernel => {
            let spec = spec.expect("kernel runs carry a spec");
            let m = train_kernel(&train_s, spec, hyper, &opts.solver)?;
            (predict_kernel(&m, valid_s.features())?, Some(m.n_support()))
        }
    };
    let err = match (scaling, opts.raw_units) {
        (Some(s), true) => {
            let raw: Vec<f64> = pred.iter().map(|&p| s.unscale_target(p)).collect();
            mse(&raw, valid.targets())
        }
        _ => mse(&pred, valid_s.targets()),
    };
    Ok((err, sv))
}

/// Training-split scaling parameters for `fold` of the plan derived from `(k, seed)`.
pub fn fold_scaling(
    d: &Dataset,
    k: usize,
    seed: u64,
    fold: usize,
) -> Result<ScalingParams, HarnessError> {
    let plan = kfold_split(d, k, seed)?;
    let (train, _) = plan.split(fold);
    Ok(ScalingParams::fit(&d.subset(&train))?)
}

pub fn cross_validate(
    d: &Dataset,
    point: HyperPoint,
    kind: ModelKind,
    spec: Option<KernelSpec>,
    opts: &CvOptions,
) -> Result<CvReport, HarnessError> {
    let hyper = point.hyper();
    hyper.validate()?;
    if let Some(s) = &spec {
        s.validate().map_err(McmError::from)?;
    }
    let spec = match kind {
        ModelKind::Linear => None,
        ModelKind::Kernel => Some(spec.unwrap_or(KernelSpec::linear())),
    };
    let plan = kfold_split(d, opts.k, opts.seed)?;
    let mut folds = Vec::with_capacity(opts.k);
    for fold in 0..opts.k {
        let (train_idx, valid_idx) = plan.split(fold);
        let train = d.subset(&train_idx);
        let valid = d.subset(&valid_idx);
        let start = Instant::now();
        let scaling = if opts.standardize {
            match ScalingParams::fit(&train) {
                Ok(s) => Some(s),
                Err(e) => {
                    folds.push(failed_fold(
                        fold,
                        &train_idx,
                        &valid_idx,
                        e.to_string(),
                        None,
                        start,
                    ));
                    continue;
                }
            }
        } else {
            None
        };
        let result = match run_fold(&train, &valid, kind, spec, hyper, opts, scaling.as_ref()) {
            Ok((mse, sv_count)) => FoldResult {
                fold,
                n_train: train_idx.len(),
                n_valid: valid_idx.len(),
                mse: Some(mse),
                sv_count,
                error: None,
                scaling,
                wall_time_s: start.elapsed().as_secs_f64(),
            },
            Err(e) => failed_fold(fold, &train_idx, &valid_idx, e.to_string(), scaling, start),
        };
        folds.push(result);
    }
    Ok(summarize(kind, spec, point, opts, folds))
}

fn failed_fold(
    fold: usize,
    train: &[usize],
    valid: &[usize],
    error: String,
    scaling: Option<ScalingParams>,
    start: Instant,
) -> FoldResult {
    warn!("fold {fold} failed and is excluded from the aggregates: {error}");
    FoldResult {
        fold,
        n_train: train.len(),
        n_valid: valid.len(),
        mse: None,
        sv_count: None,
        error: Some(error),
        scaling,
        wall_time_s: start.elapsed().as_secs_f64(),
    }
}

fn summarize(
    kind: ModelKind,
    spec: Option<KernelSpec>,
    point: HyperPoint,
    opts: &CvOptions,
    folds: Vec<FoldResult>,
) -> CvReport {
    let fold_mse: Vec<Option<f64>> = folds.iter().map(|f| f.mse).collect();
    let fold_sv_counts: Vec<Option<usize>> = folds.iter().map(|f| f.sv_count).collect();
    let ok_mse: Vec<f64> = fold_mse.iter().flatten().copied().collect();
    let ok_sv: Vec<f64> = fold_sv_counts.iter().flatten().map(|&s| s as f64).collect();
    let ok_train: Vec<f64> = folds
        .iter()
        .filter(|f| f.sv_count.is_some())
        .map(|f| f.n_train as f64)
        .collect();
    let mse_stats = mean_std(&ok_mse);
    let sv_stats = mean_std(&ok_sv);
    let loo = match (sv_stats, mean_std(&ok_train)) {
        (Some((sv, _)), Some((train, _))) => Some(sv / train),
        _ => None,
    };
    CvReport {
        kind,
        kernel: spec,
        chosen_hyper: point,
        k: opts.k,
        seed: opts.seed,
        mse_units: if opts.raw_units && opts.standardize {
            "raw"
        } else {
            "standardized"
        }
        .into(),
        n_failed: folds.iter().filter(|f| f.mse.is_none()).count(),
        folds,
        fold_mse,
        mse_mean: mse_stats.map(|s| s.0),
        mse_std: mse_stats.map(|s| s.1),
        fold_sv_counts,
        sv_mean: sv_stats.map(|s| s.0),
        sv_std: sv_stats.map(|s| s.1),
        loo_bound: loo,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub kind: ModelKind,
    pub grid: HyperGrid,
    pub best: HyperPoint,
    /// Index of the selected point in `points`.
    pub best_index: usize,
    pub points: Vec<CvReport>,
}

impl GridReport {
    pub fn best_report(&self) -> &CvReport {
        &self.points[self.best_index]
    }
}

/// Selection order: lower mean MSE, then fewer mean support vectors, then smaller C, then
/// smaller gamma. Exact ties on all four keep the earlier grid point.
fn better(a: &CvReport, b: &CvReport) -> bool {
    let (Some(ma), Some(mb)) = (a.mse_mean, b.mse_mean) else {
        return a.mse_mean.is_some();
    };
    let key = |r: &CvReport| {
        (
            r.sv_mean.unwrap_or(0.0),
            r.chosen_hyper.c,
            r.chosen_hyper.gamma.unwrap_or(0.0),
        )
    };
    let (ka, kb) = (key(a), key(b));
    ma.total_cmp(&mb)
        .then(ka.0.total_cmp(&kb.0))
        .then(ka.1.total_cmp(&kb.1))
        .then(ka.2.total_cmp(&kb.2))
        .is_lt()
}

pub fn grid_search(
    d: &Dataset,
    grid: &HyperGrid,
    kind: ModelKind,
    opts: &CvOptions,
) -> Result<GridReport, HarnessError> {
    grid.validate()?;
    let mut points = Vec::new();
    let mut best: Option<usize> = None;
    for point in grid.points(kind) {
        let spec = match kind {
            ModelKind::Linear => None,
            ModelKind::Kernel => Some(grid.kernel_spec(point.gamma)?),
        };
        let report = cross_validate(d, point, kind, spec, opts)?;
        log::info!(
            "C={} epsilon={} gamma={:?}: mse {:?}, failed folds {}",
            point.c,
            point.epsilon,
            point.gamma,
            report.mse_mean,
            report.n_failed
        );
        if best.is_none_or(|b| better(&report, &points[b])) {
            best = Some(points.len());
        }
        points.push(report);
    }
    match best {
        Some(i) if points[i].succeeded() => Ok(GridReport {
            kind,
            grid: grid.clone(),
            best: points[i].chosen_hyper,
            best_index: i,
            points,
        }),
        _ => Err(HarnessError::AllFailed(
            points
                .iter()
                .map(|r| {
                    let errors: Vec<&str> =
                        r.folds.iter().filter_map(|f| f.error.as_deref()).collect();
                    format!("{}: {}", describe(&r.chosen_hyper), errors.join("; "))
                })
                .collect(),
        )),
    }
}

fn describe(p: &HyperPoint) -> String {
    match p.gamma {
        Some(g) => format!("C={} epsilon={} gamma={}", p.c, p.epsilon, g),
        None => format!("C={} epsilon={}", p.c, p.epsilon),
    }
}

/// JSON form of a report. With `timings` false every `wall_time_s` field is dropped, so two
/// runs on the same inputs serialize identically.
pub fn report_json<T: Serialize>(report: &T, timings: bool) -> serde_json::Value {
    let mut v = serde_json::to_value(report).expect("reports contain only finite numbers");
    if !timings {
        strip_key(&mut v, "wall_time_s");
    }
    v
}

fn strip_key(v: &mut serde_json::Value, key: &str) {
    match v {
        serde_json::Value::Object(map) => {
            map.remove(key);
            map.values_mut().for_each(|c| strip_key(c, key));
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(|c| strip_key(c, key)),
        _ => {}
    }
}

fn fmt_pm(mean: Option<f64>, std: Option<f64>, digits: usize) -> String {
    match (mean, std) {
        (Some(m), Some(s)) => format!("{m:.digits$} ± {s:.digits$}"),
        _ => "failed".into(),
    }
}

/// Aligned text table with one row per report: hyperparameters, MSE mean ± std, SV count
/// mean ± std, LOO bound and failed folds.
pub fn report_table(reports: &[&CvReport]) -> String {
    let header = ["C", "epsilon", "gamma", "MSE", "SVs", "LOO bound", "failed"];
    let rows: Vec<[String; 7]> = reports
        .iter()
        .map(|r| {
            let h = &r.chosen_hyper;
            [
                format!("{}", h.c),
                format!("{}", h.epsilon),
                h.gamma.map_or("-".into(), |g| format!("{g}")),
                fmt_pm(r.mse_mean, r.mse_std, 4),
                if r.kind == ModelKind::Kernel {
                    fmt_pm(r.sv_mean, r.sv_std, 1)
                } else {
                    "-".into()
                },
                r.loo_bound.map_or("-".into(), |l| format!("{l:.4}")),
                format!("{}/{}", r.n_failed, r.k),
            ]
        })
        .collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let mut out = String::new();
    let line = |cells: &[&str], out: &mut String| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:>w$}", w = *w))
            .collect();
        let _ = writeln!(out, "{}", padded.join("  ").trim_end());
    };
    line(&header, &mut out);
    for row in &rows {
        let cells: Vec<&str> = row.iter().map(String::as_str).collect();
        line(&cells, &mut out);
    }
    out
}
