//! Command-line entry point: one subcommand per experiment plus `verify`.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use inexact_admm_cli::experiment::{
    gamma_20_sqrt_log2, gamma_2_sqrt_log2, run_experiment, Experiment, ExperimentConfig,
    ExperimentError,
};
use inexact_admm_cli::report::{read_csv, recompute_p, write_report, ReportFormat, RunReport};

#[derive(Parser)]
#[command(
    name = "inexact-admm",
    about = "Inexact generalized ADMM with per-iteration convergence certificates"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Synthetic LASSO with injected truncated-Gaussian prox errors
    Lasso(LassoArgs),
    /// Robust regression with squared k-support regularization and loop
    /// perforation or early inner termination
    Ksupp(KsuppArgs),
    /// Re-read a CSV report and recompute the empirical probability
    Verify(VerifyArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Data rows of the synthetic instance
    #[arg(long, default_value_t = 500)]
    m: usize,
    /// Variables of the synthetic instance
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Probability parameter; a number or a preset
    /// (`2sqrtlog2` ~ 1.6651, `20sqrtlog2` ~ 16.651)
    #[arg(long)]
    gamma: Option<String>,
    /// Iteration budget
    #[arg(long, default_value_t = 3000)]
    iters: usize,
    /// Seed for data generation and solver initialization
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Absolute feasibility tolerance
    #[arg(long, default_value_t = 1e-6)]
    abstol: f64,
    /// Relative feasibility tolerance
    #[arg(long, default_value_t = 1e-6)]
    reltol: f64,
    /// Reciprocal penalty (lambda = 1/rho)
    #[arg(long, default_value_t = 1.0)]
    lambda: f64,
    /// x-side proximal scaling
    #[arg(long, default_value_t = 1.0)]
    lambda_x: f64,
    /// z-side proximal scaling
    #[arg(long, default_value_t = 1.0)]
    lambda_z: f64,
    /// Output path
    #[arg(long, default_value = "report.csv")]
    out: PathBuf,
    /// Output format
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args)]
struct LassoArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Injected noise level in [0, 1] (fraction of the iterate magnitude)
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args)]
struct KsuppArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Perforation stride for both k-support candidate loops
    #[arg(long)]
    skip: Option<usize>,
    /// Early-termination tolerance of the l1-affine inner loop
    #[arg(long)]
    inner_tol: Option<f64>,
    /// Support parameter of the squared k-support norm
    #[arg(long, default_value_t = 20)]
    ksupp: usize,
    /// Regularization weight
    #[arg(long, default_value_t = 1.0)]
    lambda_reg: f64,
}

#[derive(Args)]
struct VerifyArgs {
    /// CSV report to re-read
    #[arg(long)]
    input: PathBuf,
    /// Optional JSON report whose summary must match the recomputation
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

fn parse_gamma(raw: &Option<String>, default: f64) -> Result<f64, ExperimentError> {
    let Some(raw) = raw else {
        return Ok(default);
    };
    match raw.as_str() {
        "2sqrtlog2" => Ok(gamma_2_sqrt_log2()),
        "20sqrtlog2" => Ok(gamma_20_sqrt_log2()),
        other => other.parse::<f64>().map_err(|_| {
            ExperimentError::Config(format!(
                "gamma must be a number or one of 2sqrtlog2/20sqrtlog2, got {other:?}"
            ))
        }),
    }
}

fn fill_common(cfg: &mut ExperimentConfig, common: &CommonArgs) -> Result<(), ExperimentError> {
    cfg.m = common.m;
    cfg.n = common.n;
    cfg.gamma = parse_gamma(&common.gamma, cfg.gamma)?;
    cfg.iters = common.iters;
    cfg.seed = common.seed;
    cfg.abstol = common.abstol;
    cfg.reltol = common.reltol;
    cfg.lambda = common.lambda;
    cfg.lambda_x = common.lambda_x;
    cfg.lambda_z = common.lambda_z;
    Ok(())
}

fn emit(report: &RunReport, common: &CommonArgs) -> Result<(), ExperimentError> {
    let format = match common.format {
        FormatArg::Csv => ReportFormat::Csv,
        FormatArg::Json => ReportFormat::Json,
    };
    write_report(report, &common.out, format)?;
    let p = report
        .summary
        .p_empirical
        .map_or("undefined".to_string(), |p| format!("{p:.4}"));
    println!(
        "wrote {} ({} iterations, p_empirical = {p}, eps0 = {:.6e}, f* = {:.9e})",
        common.out.display(),
        report.summary.n,
        report.summary.eps0,
        report.summary.f_star
    );
    Ok(())
}

fn run_cli(cli: Cli) -> Result<(), ExperimentError> {
    match cli.command {
        Command::Lasso(args) => {
            let mut cfg = ExperimentConfig::new(Experiment::Lasso);
            fill_common(&mut cfg, &args.common)?;
            cfg.delta = args.delta;
            let report = run_experiment(&cfg)?;
            emit(&report, &args.common)
        }
        Command::Ksupp(args) => {
            let mut cfg = ExperimentConfig::new(Experiment::Ksupp);
            fill_common(&mut cfg, &args.common)?;
            cfg.skip = args.skip;
            cfg.inner_tol = args.inner_tol;
            cfg.k_supp = args.ksupp;
            cfg.lambda_reg = args.lambda_reg;
            let report = run_experiment(&cfg)?;
            emit(&report, &args.common)
        }
        Command::Verify(args) => {
            let rows = read_csv(&args.input)?;
            let p = recompute_p(&rows);
            let shown = p.map_or("undefined".to_string(), |p| format!("{p:.6}"));
            println!("{}: N = {}, p_empirical = {shown}", args.input.display(), rows.len());
            if let Some(json_path) = &args.json {
                let text = std::fs::read_to_string(json_path).map_err(|source| {
                    ExperimentError::Io {
                        path: json_path.display().to_string(),
                        source,
                    }
                })?;
                let report: RunReport = serde_json::from_str(&text)
                    .map_err(|e| ExperimentError::Parse(e.to_string()))?;
                if report.summary.p_empirical != p {
                    return Err(ExperimentError::Parse(format!(
                        "summary p_empirical {:?} disagrees with recomputed {:?}",
                        report.summary.p_empirical, p
                    )));
                }
                println!("summary matches recomputed probability");
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_cli(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
