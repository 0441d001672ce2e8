//! Command-line front end: `train`, `predict`, `cv` and `grid`.
//!
//! Exit codes: 0 success, 1 I/O or malformed input, 2 usage error, 3 numerical failure
//! (infeasible, degenerate or unsolved LP). Errors are written to stderr as a JSON object
//! `{"error": {"kind", "code", "message"}}`.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::dataset::{
    load_csv, parse_features_csv, Dataset, DatasetError, ScalingParams, TargetColumn,
};
use crate::harness::{
    cross_validate, grid_search, report_json, report_table, CvOptions, HarnessError, HyperGrid,
    HyperPoint, ModelKind,
};
use crate::kernel::{KernelKind, KernelSpec};
use crate::lp::SolverOptions;
use crate::matrix::Matrix;
use crate::mcm::{
    mean_squared_error, predict_kernel, predict_linear, train_kernel, train_linear, Hyper,
    KernelMcmModel, LinearMcmModel, McmError,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Parser)]
#[command(name = "mcm", version, about = "Minimal Complexity Machine regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit a model on a CSV file and write it as JSON.
    Train(TrainArgs),
    /// Predict targets for a feature-only CSV file.
    Predict(PredictArgs),
    /// K-fold cross-validation at one hyperparameter setting.
    Cv(CvArgs),
    /// K-fold cross-validation over a hyperparameter grid.
    Grid(GridArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// Input CSV file.
    #[arg(long)]
    pub data: PathBuf,
    /// The input has no header row.
    #[arg(long)]
    pub no_header: bool,
    /// RNG seed for fold assignment.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Only errors on stderr, no summary on stdout.
    #[arg(long)]
    pub quiet: bool,
}

#[derive(Debug, Clone, Args)]
pub struct TargetArgs {
    /// Zero-based index of the target column, or "last".
    #[arg(long, default_value = "last")]
    pub target_col: TargetColumn,
}

#[derive(Debug, Clone, Args)]
pub struct KernelArgs {
    #[arg(long, default_value = "linear")]
    pub kind: ModelKind,
    /// Kernel for `--kind kernel`: rbf, polynomial or linear.
    #[arg(long, default_value = "rbf")]
    pub kernel: KernelKind,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub coef0: f64,
    /// Train on the raw columns instead of z-scores.
    #[arg(long)]
    pub no_standardize: bool,
    /// Simplex iteration limit.
    #[arg(long)]
    pub max_iter: Option<usize>,
}

#[derive(Debug, Clone, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub model: KernelArgs,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub epsilon: f64,
    /// Slack penalty. Omit for the hard-margin linear machine.
    #[arg(long = "C", allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Args)]
pub struct PredictArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Model JSON written by `train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Emit predictions in the standardized target units the model was trained in.
    #[arg(long)]
    pub standardized: bool,
}

#[derive(Debug, Clone, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub model: KernelArgs,
    #[arg(long, default_value_t = 0.1, allow_negative_numbers = true)]
    pub epsilon: f64,
    #[arg(long = "C", allow_negative_numbers = true)]
    pub c: f64,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub gamma: f64,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    /// Report MSE in the original target units.
    #[arg(long)]
    pub raw_units: bool,
    /// Leave per-fold wall times out of the JSON report.
    #[arg(long)]
    pub no_timings: bool,
}

#[derive(Debug, Clone, Args)]
pub struct GridArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub target: TargetArgs,
    #[command(flatten)]
    pub model: KernelArgs,
    /// Comma-separated, strictly ascending.
    #[arg(
        long = "C-values",
        value_delimiter = ',',
        allow_negative_numbers = true
    )]
    pub c_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub epsilon_values: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub gamma_values: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long)]
    pub raw_units: bool,
    #[arg(long)]
    pub no_timings: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn io(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    pub fn numerical(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    fn kind(&self) -> &'static str {
        match self.code {
            1 => "io",
            2 => "usage",
            _ => "numerical",
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        json!({"error": {"kind": self.kind(), "code": self.code, "message": self.message}})
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::InvalidFolds { .. }
            | DatasetError::TargetColumn { .. }
            | DatasetError::FeatureCount { .. } => CliError::usage(e.to_string()),
            _ => CliError::io(e.to_string()),
        }
    }
}

impl From<McmError> for CliError {
    fn from(e: McmError) -> Self {
        match e {
            McmError::InvalidEpsilon(_)
            | McmError::InvalidC(_)
            | McmError::MissingC
            | McmError::Kernel(_)
            | McmError::DimensionMismatch { .. } => CliError::usage(e.to_string()),
            _ => CliError::numerical(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Dataset(d) => d.into(),
            HarnessError::Model(m) => m.into(),
            HarnessError::InvalidGrid(_) | HarnessError::InvalidLooInput { .. } => {
                CliError::usage(e.to_string())
            }
            HarnessError::AllFailed(_) => CliError::numerical(e.to_string()),
        }
    }
}

/// Everything needed to reproduce predictions of a trained model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub kind: ModelKind,
    pub n_features: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub kernel: Option<KernelSpec>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub w: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub lambda: Option<Vec<f64>>,
    pub b: f64,
    pub eta: f64,
    pub h: f64,
    pub epsilon: f64,
    #[serde(rename = "C")]
    pub c: Option<f64>,
    /// Training statistics applied to inputs and inverted on outputs; `None` for raw models.
    pub scaling: Option<ScalingParams>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub support_indices: Option<Vec<usize>>,
    /// Training inputs (in model units) that the kernel expansion refers to.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub train_x: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum TrainedModel {
    Linear(LinearMcmModel),
    Kernel(KernelMcmModel),
}

impl ModelFile {
    pub fn from_linear(m: &LinearMcmModel, scaling: Option<ScalingParams>) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            kind: ModelKind::Linear,
            n_features: m.w.len(),
            kernel: None,
            w: Some(m.w.clone()),
            lambda: None,
            b: m.b,
            eta: m.eta,
            h: m.h,
            epsilon: m.hyper.epsilon,
            c: m.hyper.c,
            scaling,
            support_indices: None,
            train_x: None,
        }
    }

    pub fn from_kernel(m: &KernelMcmModel, scaling: Option<ScalingParams>) -> Self {
        Self {
            format_version: MODEL_FORMAT_VERSION,
            kind: ModelKind::Kernel,
            n_features: m.train_x.cols(),
            kernel: Some(m.spec),
            w: None,
            lambda: Some(m.lambda.clone()),
            b: m.b,
            eta: m.eta,
            h: m.h,
            epsilon: m.hyper.epsilon,
            c: m.hyper.c,
            scaling,
            support_indices: Some(m.support_indices.clone()),
            train_x: Some(m.train_x.clone()),
        }
    }

    pub fn model(&self) -> Result<TrainedModel, CliError> {
        let hyper = Hyper {
            epsilon: self.epsilon,
            c: self.c,
        };
        let missing = |field: &str| CliError::io(format!("model file has no {field:?} field"));
        match self.kind {
            ModelKind::Linear => {
                let w = self.w.clone().ok_or_else(|| missing("w"))?;
                if w.len() != self.n_features {
                    return Err(CliError::io(
                        "model file: length of w differs from n_features",
                    ));
                }
                Ok(TrainedModel::Linear(LinearMcmModel {
                    w,
                    b: self.b,
                    eta: self.eta,
                    h: self.h,
                    slacks_plus: Vec::new(),
                    slacks_minus: Vec::new(),
                    hyper,
                }))
            }
            ModelKind::Kernel => {
                let lambda = self.lambda.clone().ok_or_else(|| missing("lambda"))?;
                let train_x = self.train_x.clone().ok_or_else(|| missing("train_x"))?;
                let support_indices = self
                    .support_indices
                    .clone()
                    .ok_or_else(|| missing("support_indices"))?;
                if train_x.rows() != lambda.len() || train_x.cols() != self.n_features {
                    return Err(CliError::io(
                        "model file: train_x does not match lambda and n_features",
                    ));
                }
                if support_indices.iter().any(|&j| j >= lambda.len()) {
                    return Err(CliError::io("model file: support index out of range"));
                }
                Ok(TrainedModel::Kernel(KernelMcmModel {
                    lambda,
                    b: self.b,
                    eta: self.eta,
                    h: self.h,
                    support_indices,
                    train_x,
                    spec: self.kernel.ok_or_else(|| missing("kernel"))?,
                    hyper,
                }))
            }
        }
    }

    /// Predictions for raw input rows, in raw target units unless `standardized`.
    pub fn predict(&self, x: &Matrix, standardized: bool) -> Result<Vec<f64>, CliError> {
        if x.cols() != self.n_features {
            return Err(CliError::usage(format!(
                "model expects {} features, input has {}",
                self.n_features,
                x.cols()
            )));
        }
        let scaled;
        let input = match &self.scaling {
            Some(s) => {
                scaled = s.scale_features(x)?;
                &scaled
            }
            None => x,
        };
        let mut y = match self.model()? {
            TrainedModel::Linear(m) => predict_linear(&m, input)?,
            TrainedModel::Kernel(m) => predict_kernel(&m, input)?,
        };
        if let (Some(s), false) = (&self.scaling, standardized) {
            y.iter_mut().for_each(|v| *v = s.unscale_target(*v));
        }
        Ok(y)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model parameters are finite")
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        let m: ModelFile = serde_json::from_str(text)
            .map_err(|e| CliError::io(format!("invalid model file: {e}")))?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(CliError::io(format!(
                "unsupported model format_version {} (expected {MODEL_FORMAT_VERSION})",
                m.format_version
            )));
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<(), CliError> {
        write_file(path, &self.to_json())
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        Self::from_json(&read_file(path)?)
    }
}

fn read_file(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))
}

fn solver_options(max_iter: Option<usize>) -> SolverOptions {
    SolverOptions {
        max_iter,
        ..SolverOptions::default()
    }
}

fn kernel_spec(args: &KernelArgs, gamma: f64) -> Result<KernelSpec, CliError> {
    let spec = match args.kernel {
        KernelKind::Linear => KernelSpec::linear(),
        KernelKind::Rbf => KernelSpec::rbf(gamma).map_err(McmError::from)?,
        KernelKind::Polynomial => {
            KernelSpec::polynomial(args.degree, args.coef0).map_err(McmError::from)?
        }
    };
    Ok(spec)
}

fn load_dataset(common: &CommonArgs, target: &TargetArgs) -> Result<Dataset, CliError> {
    Ok(load_csv(
        &common.data,
        !common.no_header,
        target.target_col,
    )?)
}

fn require_seed(common: &CommonArgs) -> Result<u64, CliError> {
    common.seed.ok_or_else(|| {
        CliError::usage("--seed is required so that fold assignment is reproducible")
    })
}

/// Parses `args` (including the program name) and runs the command. Returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{e}");
                return 0;
            }
            let err = CliError::usage(e.to_string().trim_end());
            let _ = writeln!(stderr, "{}", err.to_json());
            return err.code;
        }
    };
    match execute(&cli.command, stdout) {
        Ok(()) => 0,
        Err(err) => {
            let _ = writeln!(stderr, "{}", err.to_json());
            err.code
        }
    }
}

pub fn execute(command: &Command, stdout: &mut dyn Write) -> Result<(), CliError> {
    match command {
        Command::Train(a) => cmd_train(a, stdout),
        Command::Predict(a) => cmd_predict(a, stdout),
        Command::Cv(a) => cmd_cv(a, stdout),
        Command::Grid(a) => cmd_grid(a, stdout),
    }
}

fn emit(stdout: &mut dyn Write, text: &str) -> Result<(), CliError> {
    stdout
        .write_all(text.as_bytes())
        .map_err(|e| CliError::io(format!("cannot write to stdout: {e}")))
}

pub fn cmd_train(a: &TrainArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let hyper = Hyper {
        epsilon: a.epsilon,
        c: a.c,
    };
    hyper.validate()?;
    if a.model.kind == ModelKind::Kernel && a.c.is_none() {
        return Err(CliError::usage("kernel training needs --C"));
    }
    let spec = match a.model.kind {
        ModelKind::Kernel => Some(kernel_spec(&a.model, a.gamma)?),
        ModelKind::Linear => None,
    };
    let out = a
        .common
        .out
        .as_deref()
        .ok_or_else(|| CliError::usage("train needs --out for the model file"))?;
    let raw = load_dataset(&a.common, &a.target)?;
    let (data, scaling) = if a.model.no_standardize {
        (raw.clone(), None)
    } else {
        let s = ScalingParams::fit(&raw)?;
        (s.apply(&raw)?, Some(s))
    };
    let opts = solver_options(a.model.max_iter);
    let (file, fitted) = match spec {
        None => {
            let m = train_linear(&data, hyper, &opts)?;
            let fitted = predict_linear(&m, data.features())?;
            (ModelFile::from_linear(&m, scaling.clone()), fitted)
        }
        Some(spec) => {
            let m = train_kernel(&data, spec, hyper, &opts)?;
            let fitted = predict_kernel(&m, data.features())?;
            (ModelFile::from_kernel(&m, scaling.clone()), fitted)
        }
    };
    let mse_model = mean_squared_error(&fitted, data.targets());
    let raw_fitted: Vec<f64> = match &scaling {
        Some(s) => fitted.iter().map(|&v| s.unscale_target(v)).collect(),
        None => fitted,
    };
    let mse_raw = mean_squared_error(&raw_fitted, raw.targets());
    file.save(out)?;
    if !a.common.quiet {
        let mut summary = json!({
            "kind": file.kind,
            "h": file.h,
            "eta": file.eta,
            "b": file.b,
            "train_mse": mse_raw,
            "train_mse_model_units": mse_model,
            "model": out.display().to_string(),
        });
        if let Some(sv) = &file.support_indices {
            summary["n_support"] = json!(sv.len());
            summary["n_train"] = json!(data.n_samples());
        }
        emit(
            stdout,
            &format!(
                "{}\n",
                serde_json::to_string_pretty(&summary).expect("finite")
            ),
        )?;
    }
    Ok(())
}

pub fn cmd_predict(a: &PredictArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let model = ModelFile::load(&a.model)?;
    let text = read_file(&a.common.data)?;
    let x = parse_features_csv(&text, !a.common.no_header)?;
    let mut out = String::new();
    if x.rows() > 0 {
        let y = model.predict(&x, a.standardized)?;
        if !a.common.no_header {
            out.push_str("prediction\n");
        }
        for v in y {
            out.push_str(&format!("{v}\n"));
        }
    }
    match &a.common.out {
        Some(path) => write_file(path, &out),
        None if a.common.quiet => Ok(()),
        None => emit(stdout, &out),
    }
}

fn cv_options(model: &KernelArgs, folds: usize, seed: u64, raw_units: bool) -> CvOptions {
    CvOptions {
        k: folds,
        seed,
        standardize: !model.no_standardize,
        raw_units,
        solver: solver_options(model.max_iter),
    }
}

fn write_report(
    common: &CommonArgs,
    json: &serde_json::Value,
    table: &str,
    stdout: &mut dyn Write,
) -> Result<(), CliError> {
    let text = format!("{}\n", serde_json::to_string_pretty(json).expect("finite"));
    if let Some(path) = &common.out {
        write_file(path, &text)?;
    }
    if !common.quiet {
        emit(stdout, table)?;
        if common.out.is_none() {
            emit(stdout, &format!("\n{text}"))?;
        }
    }
    Ok(())
}

pub fn cmd_cv(a: &CvArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let seed = require_seed(&a.common)?;
    let point = HyperPoint {
        epsilon: a.epsilon,
        c: a.c,
        gamma: (a.model.kind == ModelKind::Kernel && a.model.kernel == KernelKind::Rbf)
            .then_some(a.gamma),
    };
    point.hyper().validate()?;
    let spec = match a.model.kind {
        ModelKind::Kernel => Some(kernel_spec(&a.model, a.gamma)?),
        ModelKind::Linear => None,
    };
    let d = load_dataset(&a.common, &a.target)?;
    let opts = cv_options(&a.model, a.folds, seed, a.raw_units);
    let report = cross_validate(&d, point, a.model.kind, spec, &opts)?;
    if !report.succeeded() {
        let errors: Vec<String> = report
            .folds
            .iter()
            .filter_map(|f| f.error.clone())
            .collect();
        return Err(CliError::numerical(format!(
            "every fold failed: {}",
            errors.join("; ")
        )));
    }
    write_report(
        &a.common,
        &report_json(&report, !a.no_timings),
        &report_table(&[&report]),
        stdout,
    )
}

pub fn cmd_grid(a: &GridArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let seed = require_seed(&a.common)?;
    let defaults = HyperGrid::default();
    let grid = HyperGrid {
        c_values: a.c_values.clone().unwrap_or(defaults.c_values),
        epsilon_values: a.epsilon_values.clone().unwrap_or(defaults.epsilon_values),
        gamma_values: a.gamma_values.clone().unwrap_or(defaults.gamma_values),
        kernel_kind: a.model.kernel,
        degree: a.model.degree,
        coef0: a.model.coef0,
    };
    grid.validate()?;
    let d = load_dataset(&a.common, &a.target)?;
    let opts = cv_options(&a.model, a.folds, seed, a.raw_units);
    let report = grid_search(&d, &grid, a.model.kind, &opts)?;
    let rows: Vec<_> = report.points.iter().collect();
    let best = &report.best;
    let mut table = report_table(&rows);
    table.push_str(&format!(
        "best: C={} epsilon={}{}\n",
        best.c,
        best.epsilon,
        best.gamma.map_or(String::new(), |g| format!(" gamma={g}"))
    ));
    write_report(
        &a.common,
        &report_json(&report, !a.no_timings),
        &table,
        stdout,
    )
}
