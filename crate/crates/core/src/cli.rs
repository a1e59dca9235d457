//! Command-line front end: `safegrid path|bench|validate`.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::data::{load_dataset, synthetic_classification, synthetic_regression, Dataset, Format};
use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::{LossModel, RegularizerModel};
use crate::path::{build_path, PathConfig, Strategy};
use crate::report::{
    gap_curve, write_gap_curve, BenchSummary, DatasetInfo, PathReport, RunReport, SkippedStrategy, ValidationReport,
};
use crate::solve::SolverConfig;
use crate::validate::{validation_error, validation_path, Task, ValidationConfig};

#[derive(Debug, Parser)]
#[command(name = "safegrid", version, about = "Certified approximation paths and safe hyperparameter selection")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build one approximation path and certify it.
    Path(PathArgs),
    /// Certify a default grid, then build the adaptive grids at its error.
    Bench(BenchArgs),
    /// Safe hyperparameter selection on a holdout split.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatArg {
    Libsvm,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Regression,
    Classification,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum LossArg {
    Lasso,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StrategyArg {
    Unilateral,
    Bilateral,
    UniformUnilateral,
    UniformBilateral,
    Default,
}

/// Parses `l1` or `enet:γ`.
pub fn parse_regularizer(s: &str) -> std::result::Result<RegularizerModel, String> {
    match s.split_once(':') {
        None if s == "l1" => Ok(RegularizerModel::l1()),
        Some(("enet", g)) => {
            let gamma: f64 = g.parse().map_err(|e| format!("bad γ in {s:?}: {e}"))?;
            RegularizerModel::elastic_net(gamma).map_err(|e| e.to_string())
        }
        _ => Err(format!("expected l1 or enet:<gamma>, got {s:?}")),
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DataArgs {
    /// Input file (libsvm or CSV with a header and the label last).
    #[arg(long, conflicts_with = "synthetic")]
    pub data: Option<PathBuf>,
    /// File format; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<FormatArg>,
    /// Generate data instead of reading a file (default follows --loss).
    #[arg(long)]
    pub synthetic: Option<SyntheticKind>,
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    #[arg(long, default_value_t = 150)]
    pub p: usize,
    #[arg(long, default_value_t = 10)]
    pub informative: usize,
    /// Gaussian noise level of synthetic regression targets.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Seed of the ChaCha8 generator used for synthetic data and splits.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value_t = LossArg::Lasso)]
    pub loss: LossArg,
    /// `l1` or `enet:<gamma>`.
    #[arg(long, default_value = "l1", value_parser = parse_regularizer)]
    pub reg: RegularizerModel,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PathArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Target path error; defaults to ‖y‖²/40 (lasso) or 1e-4·min(n₀, n₁)/n (logistic).
    #[arg(long)]
    pub eps: Option<f64>,
    /// Inner solver gap; defaults to eps/10.
    #[arg(long)]
    pub eps_c: Option<f64>,
    /// λmin = λmax / ratio.
    #[arg(long, default_value_t = 50.0)]
    pub lmin_ratio: f64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Unilateral)]
    pub strategy: StrategyArg,
    /// Size of the default grid.
    #[arg(long, default_value_t = 10)]
    pub grid_size: usize,
    /// Decades spanned by the default grid.
    #[arg(long, default_value_t = 3.0)]
    pub decades: f64,
    /// Number of λ values in the certification scan (0 disables it).
    #[arg(long, default_value_t = 1000)]
    pub scan_points: usize,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Plot data: lambda, gap_bound_upper, gap_bound_lower, gap_actual.
    #[serde(skip)]
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BenchArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Size T of the default grid.
    #[arg(long, default_value_t = 10)]
    pub grid_size: usize,
    #[arg(long, default_value_t = 3.0)]
    pub decades: f64,
    /// Solver gap on the default grid; defaults to 1e-6·(1 + f(0)).
    #[arg(long)]
    pub eps_c: Option<f64>,
    #[arg(long, default_value_t = 1000)]
    pub scan_points: usize,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ValidateArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Fraction of rows held out for validation.
    #[arg(long, default_value_t = 0.3)]
    pub val_frac: f64,
    /// ε_v levels as multiples of the spread of validation errors on a reference grid.
    #[arg(long, value_delimiter = ',', default_values_t = vec![10.0, 1.0, 0.1])]
    pub eps_v_ladder: Vec<f64>,
    /// Absolute ε_v levels; replaces the ladder.
    #[arg(long, value_delimiter = ',')]
    pub eps_v: Option<Vec<f64>>,
    #[arg(long, default_value_t = 100.0)]
    pub lmin_ratio: f64,
    /// Strong-convexity modulus of the objective; required with l1.
    #[arg(long)]
    pub mu: Option<f64>,
    /// Size of the reference grid used to measure the spread.
    #[arg(long, default_value_t = 200)]
    pub reference_size: usize,
    #[serde(skip)]
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs a parsed command, writing the report and returning it.
pub fn run(cli: &Cli) -> Result<RunReport> {
    let report = match &cli.command {
        Command::Path(a) => cmd_path(a)?,
        Command::Bench(a) => cmd_bench(a)?,
        Command::Validate(a) => cmd_validate(a)?,
    };
    let out = match &cli.command {
        Command::Path(a) => a.out.as_deref(),
        Command::Bench(a) => a.out.as_deref(),
        Command::Validate(a) => a.out.as_deref(),
    };
    match out {
        Some(path) => report.write(path)?,
        None => println!("{}", report.to_json()?),
    }
    Ok(report)
}

/// Entry point for the binary; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(&cli) {
        Ok(_) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

fn load(args: &DataArgs, loss: LossArg) -> Result<(Dataset, String)> {
    if let Some(path) = &args.data {
        let format = match args.format {
            Some(FormatArg::Libsvm) => Format::Libsvm,
            Some(FormatArg::Csv) => Format::Csv,
            None => Format::from_path(path),
        };
        return Ok((load_dataset(path, format)?, path.display().to_string()));
    }
    let kind = args.synthetic.unwrap_or(match loss {
        LossArg::Lasso => SyntheticKind::Regression,
        LossArg::Logistic => SyntheticKind::Classification,
    });
    let ds = match kind {
        SyntheticKind::Regression => synthetic_regression(args.n, args.p, args.informative, args.noise, args.seed),
        SyntheticKind::Classification => synthetic_classification(args.n, args.p, args.informative, args.seed),
    };
    let name = match kind {
        SyntheticKind::Regression => "synthetic_regression",
        SyntheticKind::Classification => "synthetic_classification",
    };
    Ok((ds, format!("{name}(seed={})", args.seed)))
}

fn loss_model(ds: &Dataset, loss: LossArg) -> Result<LossModel> {
    match loss {
        LossArg::Lasso => Ok(LossModel::squared(ds.y.clone())),
        LossArg::Logistic => LossModel::logistic(ds.binary_labels()?),
    }
}

/// `‖y‖²/40` for the squared loss, `1e-4·min(n₀, n₁)/n` for the logistic loss.
pub fn default_eps(loss: &LossModel) -> f64 {
    let y = loss.labels();
    match loss.kind() {
        crate::model::LossKind::Squared => dot(y, y) / 40.0,
        crate::model::LossKind::Logistic => {
            let ones = y.iter().filter(|&&v| v == 1.0).count();
            let minority = ones.min(y.len() - ones).max(1);
            1e-4 * minority as f64 / y.len() as f64
        }
    }
}

fn strategy(arg: StrategyArg, size: usize, decades: f64) -> Strategy {
    match arg {
        StrategyArg::Unilateral => Strategy::Unilateral,
        StrategyArg::Bilateral => Strategy::Bilateral,
        StrategyArg::UniformUnilateral => Strategy::UniformUnilateral,
        StrategyArg::UniformBilateral => Strategy::UniformBilateral,
        StrategyArg::Default => Strategy::Default { size, decades },
    }
}

fn echo<T: Serialize>(args: &T) -> Result<serde_json::Value> {
    Ok(serde_json::to_value(args)?)
}

fn dataset_info(ds: &Dataset, source: String, n_validation: Option<usize>) -> DatasetInfo {
    DatasetInfo {
        source,
        n_samples: ds.n_samples(),
        n_features: ds.n_features(),
        n_validation,
    }
}

pub fn cmd_path(args: &PathArgs) -> Result<RunReport> {
    let started = Instant::now();
    let (ds, source) = load(&args.data, args.model.loss)?;
    let loss = loss_model(&ds, args.model.loss)?;
    let eps = args.eps.unwrap_or_else(|| default_eps(&loss));
    let eps_c = args.eps_c.unwrap_or(eps / 10.0);
    let cfg = PathConfig::new(eps, eps_c, args.lmin_ratio, strategy(args.strategy, args.grid_size, args.decades));
    let solver = SolverConfig::with_eps(eps_c);
    let result = build_path(&ds.x, &loss, &args.model.reg, &cfg, &solver)?;

    let mut report = RunReport::new("path", echo(args)?, dataset_info(&ds, source, None));
    report.paths.push(PathReport::new(&result, &loss, args.scan_points));
    report.timing.paths_secs.push(result.wall_time_secs);
    if let Some(csv) = &args.csv {
        let count = args.scan_points.max(2);
        let rows = gap_curve(&result.certificates, result.lambda_min, result.lambda_max, count, &loss);
        write_gap_curve(csv, &rows)?;
    }
    report.timing.total_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

pub fn cmd_bench(args: &BenchArgs) -> Result<RunReport> {
    let started = Instant::now();
    let (ds, source) = load(&args.data, args.model.loss)?;
    let loss = loss_model(&ds, args.model.loss)?;
    let reg = &args.model.reg;
    let ratio = 10f64.powf(args.decades);
    let eps_c0 = args.eps_c.unwrap_or(1e-6 * loss.scale());
    let default = PathConfig::new(
        // unused by the default grid beyond validation
        2.0 * eps_c0,
        eps_c0,
        ratio,
        Strategy::Default {
            size: args.grid_size,
            decades: args.decades,
        },
    );
    let reference = build_path(&ds.x, &loss, reg, &default, &SolverConfig::with_eps(eps_c0))?;

    let mut report = RunReport::new("bench", echo(args)?, dataset_info(&ds, source, None));
    let eps = reference.certified_eps;
    let mut summary = BenchSummary {
        default_size: reference.size(),
        decades: args.decades,
        default_eps: eps.is_finite().then_some(eps),
        skipped: Vec::new(),
    };
    report.paths.push(PathReport::new(&reference, &loss, args.scan_points));
    report.timing.paths_secs.push(reference.wall_time_secs);

    let adaptive = [
        Strategy::Unilateral,
        Strategy::Bilateral,
        Strategy::UniformUnilateral,
        Strategy::UniformBilateral,
    ];
    for s in adaptive {
        if !(eps.is_finite() && eps > 0.0) {
            summary.skipped.push(SkippedStrategy {
                strategy: s.name().into(),
                reason: format!("default grid error {eps} is not a usable target"),
            });
            continue;
        }
        let cfg = PathConfig::new(eps, eps / 10.0, ratio, s);
        match build_path(&ds.x, &loss, reg, &cfg, &SolverConfig::with_eps(eps / 10.0)) {
            Ok(result) => {
                report.paths.push(PathReport::new(&result, &loss, args.scan_points));
                report.timing.paths_secs.push(result.wall_time_secs);
            }
            Err(e @ Error::ModulusUnavailable(_)) => summary.skipped.push(SkippedStrategy {
                strategy: s.name().into(),
                reason: e.to_string(),
            }),
            Err(e) => return Err(e),
        }
    }
    report.bench = Some(summary);
    report.timing.total_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

pub fn cmd_validate(args: &ValidateArgs) -> Result<RunReport> {
    let started = Instant::now();
    let (ds, source) = load(&args.data, args.model.loss)?;
    let (train, val) = ds.split(args.val_frac, args.data.seed)?;
    let loss = loss_model(&train, args.model.loss)?;
    let reg = &args.model.reg;
    let task = match args.model.loss {
        LossArg::Lasso => Task::Regression,
        LossArg::Logistic => Task::Classification,
    };
    let levels: Vec<(f64, Option<f64>)> = match &args.eps_v {
        Some(abs) => abs.iter().map(|&e| (e, None)).collect(),
        None => {
            let spread = reference_spread(&train, &val, &loss, reg, task, args.reference_size, args.lmin_ratio)?;
            if !(spread > 0.0) {
                return Err(Error::InvalidConfig(
                    "validation error is constant on the reference grid; pass --eps-v".into(),
                ));
            }
            args.eps_v_ladder.iter().map(|&m| (m * spread, Some(m))).collect()
        }
    };

    let n_val = val.n_samples();
    let mut report = RunReport::new("validate", echo(args)?, dataset_info(&ds, source, Some(n_val)));
    for (eps_v, multiplier) in levels {
        let eps_v = match task {
            // ε_v ≥ 1 certifies nothing for a 0/1 error
            Task::Classification => eps_v.min(1.0 - 0.5 / n_val as f64),
            Task::Regression => eps_v,
        };
        let mut cfg = ValidationConfig::new(eps_v, task, args.lmin_ratio);
        cfg.mu = args.mu;
        let result = validation_path(&train.x, &loss, reg, &val.x, &val.y, &cfg, &SolverConfig::default())?;
        report.validation.push(ValidationReport::new(&result, multiplier));
        report.timing.validation_secs.push(result.wall_time_secs);
    }
    report.timing.total_secs = started.elapsed().as_secs_f64();
    Ok(report)
}

/// `max − min` of the validation error over a default grid spanning `[λmax/ratio, λmax]`.
pub fn reference_spread(
    train: &Dataset,
    val: &Dataset,
    loss: &LossModel,
    reg: &RegularizerModel,
    task: Task,
    size: usize,
    ratio: f64,
) -> Result<f64> {
    let eps_c = 1e-6 * loss.scale();
    let cfg = PathConfig::new(
        2.0 * eps_c,
        eps_c,
        ratio,
        Strategy::Default {
            size,
            decades: ratio.log10(),
        },
    );
    let path = build_path(&train.x, loss, reg, &cfg, &SolverConfig::with_eps(eps_c))?;
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for c in &path.certificates {
        let e = validation_error(&c.beta, &val.x, &val.y, task)?;
        lo = lo.min(e);
        hi = hi.max(e);
    }
    Ok(hi - lo)
}

/// Reads a report written by [`run`].
pub fn read_report(path: &Path) -> Result<RunReport> {
    RunReport::from_json(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regularizer_flag() {
        assert_eq!(parse_regularizer("l1").unwrap(), RegularizerModel::l1());
        assert_eq!(parse_regularizer("enet:0.5").unwrap(), RegularizerModel::elastic_net(0.5).unwrap());
        assert!(parse_regularizer("enet:-1").is_err());
        assert!(parse_regularizer("l2").is_err());
    }

    #[test]
    fn unknown_flag_is_a_usage_error() {
        assert_eq!(main_with_args(["safegrid", "path", "--bogus"]), 2);
    }

    #[test]
    fn default_eps_examples() {
        let sq = LossModel::squared(vec![2.0, 6.0]);
        assert_eq!(default_eps(&sq), 1.0);
        let lg = LossModel::logistic(vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        assert!((default_eps(&lg) - 2.5e-5).abs() < 1e-18);
    }

    #[test]
    fn clap_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
