//! Command-line entry point: `validate`, `run` and `sweep` over a TOML
//! experiment config.
//!
//! Exit codes: 0 pass, 1 validation or verdict failure, 2 config error,
//! 3 I/O error.

mod config;
mod output;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, Subcommand};

pub use config::{Format, RunConfig, SweepConfig};
pub use output::{real, risk_csv, sweep_csv, write_atomic, RISK_COLUMNS, RISK_SCHEMA, SWEEP_COLUMNS, SWEEP_SCHEMA};

use crate::error::{Error, Result};
use crate::experiments::{
    remainder_sweep, run_scenario_with, scales_for_targets, verify_log_remainder_bound, Check, RunOptions, Verdict,
};
use crate::families::{check_condition, check_prior_identity};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_IO: i32 = 3;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "EXPWEIGHT_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "expweight-out";

#[derive(Debug, Parser)]
#[command(name = "expweight", version, about = "Exponential weighting of ordered smoothers: risk experiments")]
pub struct Cli {
    /// Replace the seed of every scenario.
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build every family and report its order, condition constants and prior identity residual.
    Validate { config: PathBuf },
    /// Run every scenario and write one report per scenario.
    Run {
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        /// Comma-separated checks: weighted_ure, kl_oracle, log_remainder, stein, calibration.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        checks: Option<Vec<String>>,
    },
    /// Run the remainder sweep of one scenario over signal scales.
    Sweep {
        config: PathBuf,
        #[command(flatten)]
        out: OutputArgs,
        /// Comma-separated signal scales, overriding the config.
        #[arg(long, value_name = "LIST", value_delimiter = ',')]
        scales: Option<Vec<f64>>,
    },
}

#[derive(Debug, clap::Args)]
pub struct OutputArgs {
    /// Output directory (default: config `output_dir`, then $EXPWEIGHT_OUT_DIR, then ./expweight-out).
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated formats: csv, json.
    #[arg(long, value_name = "LIST", value_delimiter = ',')]
    pub format: Option<Vec<String>>,
    /// Worker threads for the replications.
    #[arg(long, value_name = "N")]
    pub threads: Option<usize>,
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) => EXIT_CONFIG,
        Error::Io(_) => EXIT_IO,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn init_logging(verbosity: &str) -> Result<()> {
    let level = log::LevelFilter::from_str(verbosity)
        .map_err(|_| Error::Config(format!("unknown verbosity `{verbosity}`")))?;
    let _ = env_logger::Builder::new().filter_level(level).parse_default_env().try_init();
    Ok(())
}

fn load(path: &Path, seed: Option<u64>) -> Result<RunConfig> {
    let mut config = RunConfig::load(path)?;
    init_logging(&config.verbosity)?;
    if let Some(seed) = seed {
        for s in &mut config.scenarios {
            s.seed = seed;
        }
    }
    Ok(config)
}

pub fn execute(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Validate { config } => cmd_validate(&load(config, cli.seed)?),
        Command::Run { config, out, checks } => cmd_run(&load(config, cli.seed)?, out, checks.as_deref()),
        Command::Sweep { config, out, scales } => cmd_sweep(&load(config, cli.seed)?, out, scales.as_deref()),
    }
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}

pub fn cmd_validate(config: &RunConfig) -> Result<i32> {
    println!("{:<24} {:>8} {:>14} {:>14} {:>14}  status", "scenario", "members", "k_lower", "k_upper", "identity_resid");
    let mut code = EXIT_PASS;
    for s in &config.scenarios {
        let ctx = match s.context() {
            Ok(ctx) => ctx,
            Err(e @ Error::Config(_)) => return Err(Error::Config(format!("scenario `{}`: {e}", s.name))),
            Err(e) => {
                println!("{:<24} {:>8} {:>14} {:>14} {:>14}  INVALID: {e}", s.name, "-", "-", "-", "-");
                code = EXIT_FAILURE;
                continue;
            }
        };
        let report = check_condition(&ctx.family);
        let residual = check_prior_identity(&ctx.priors, &ctx.family)?;
        let ok = residual <= 1e-12 && report.satisfied();
        let mut status = if ok { "ok".to_string() } else { "FAILED".to_string() };
        if ctx.family.merged() > 0 {
            status.push_str(&format!(" ({} near-duplicate members merged)", ctx.family.merged()));
        }
        println!(
            "{:<24} {:>8} {:>14} {:>14} {:>14.3e}  {status}",
            s.name,
            ctx.family.len(),
            fmt_opt(report.k_lower),
            fmt_opt(report.k_upper),
            residual
        );
        if !ok {
            code = EXIT_FAILURE;
        }
    }
    Ok(code)
}

fn output_dir(config: &RunConfig, out: &OutputArgs) -> PathBuf {
    out.out
        .clone()
        .or_else(|| config.output_dir.clone())
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

/// Creates the directory and proves it is writable before any work starts.
fn prepare_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
    tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::Io(format!("{} is not writable: {e}", dir.display())))?;
    Ok(())
}

fn formats(config: &RunConfig, out: &OutputArgs) -> Result<Vec<Format>> {
    match &out.format {
        Some(list) => list.iter().map(|f| Format::parse(f.trim())).collect(),
        None => Ok(config.formats.clone()),
    }
}

fn options(config: &RunConfig, out: &OutputArgs, checks: Option<&[String]>) -> Result<RunOptions> {
    let checks = match checks {
        Some(list) => list.iter().map(|c| Check::parse(c.trim())).collect::<Result<Vec<_>>>()?,
        None => config.checks.clone().unwrap_or_else(|| Check::ALL.to_vec()),
    };
    if out.threads == Some(0) {
        return Err(Error::Config("--threads must be positive".into()));
    }
    Ok(RunOptions {
        psi_c: config.psi_c,
        sampled_lambdas: config.sampled_lambdas,
        checks,
        threads: out.threads,
        ..RunOptions::default()
    })
}

fn verdict_line(scenario: &str, v: &Verdict) -> String {
    let status = match (v.passed, v.theory_applicable) {
        (true, _) => "PASS",
        (false, true) => "FAIL",
        (false, false) => "FAIL (theory-not-applicable)",
    };
    format!(
        "{status} {scenario} {}: {} lhs={:.6e} rhs={:.6e} se={:.3e} margin={:.3e}",
        v.check.name(),
        v.label,
        v.lhs,
        v.rhs,
        v.se,
        v.margin
    )
}

pub fn cmd_run(config: &RunConfig, out: &OutputArgs, checks: Option<&[String]>) -> Result<i32> {
    let formats = formats(config, out)?;
    let options = options(config, out, checks)?;
    let dir = output_dir(config, out);
    prepare_dir(&dir)?;
    let mut code = EXIT_PASS;
    for s in &config.scenarios {
        let report = run_scenario_with(s, &options)?;
        if formats.contains(&Format::Csv) {
            write_atomic(&dir.join(format!("{}.csv", s.name)), &risk_csv(&report)?)?;
        }
        if formats.contains(&Format::Json) {
            write_atomic(&dir.join(format!("{}.json", s.name)), &output::json_bytes(&report)?)?;
        }
        println!(
            "{}: oracle={:.6e} ew={:.6e}±{:.2e} ure={:.6e}±{:.2e} bound_log={:.6e}",
            s.name,
            report.oracle_risk,
            report.mc_risk_ew.mean,
            report.mc_risk_ew.se,
            report.mc_risk_ure.mean,
            report.mc_risk_ure.se,
            report.bound_log
        );
        for v in &report.verdicts {
            println!("{}", verdict_line(&s.name, v));
        }
        if !report.passed() {
            code = EXIT_FAILURE;
        }
    }
    Ok(code)
}

#[derive(serde::Serialize)]
struct SweepDocument<'a> {
    library_version: &'a str,
    sweep: &'a crate::experiments::RemainderSweep,
    verdict: &'a crate::experiments::SweepVerdict,
}

pub fn cmd_sweep(config: &RunConfig, out: &OutputArgs, scales: Option<&[f64]>) -> Result<i32> {
    let formats = formats(config, out)?;
    let options = options(config, out, None)?;
    let base = config.sweep_base()?;
    let sweep_cfg = config.sweep.as_ref();
    let scales = match (scales, sweep_cfg.and_then(|c| c.scales.clone()), sweep_cfg.and_then(|c| c.targets.clone())) {
        (Some(s), _, _) => s.to_vec(),
        (None, Some(s), None) => s,
        (None, None, Some(t)) => scales_for_targets(base, &t)?,
        (None, Some(_), Some(_)) => return Err(Error::Config("[sweep] takes `scales` or `targets`, not both".into())),
        (None, None, None) => return Err(Error::Config("sweep needs --scales or a [sweep] block with scales or targets".into())),
    };
    let dir = output_dir(config, out);
    prepare_dir(&dir)?;

    let sweep = remainder_sweep(base, &scales, &options).map_err(|e| match e {
        Error::NonMonotoneGrid(k) => Error::Config(format!("signal scales must be strictly increasing (position {k})")),
        other => other,
    })?;
    let verdict = verify_log_remainder_bound(&sweep);
    if formats.contains(&Format::Csv) {
        write_atomic(&dir.join(format!("{}-sweep.csv", base.name)), &sweep_csv(&sweep, &verdict)?)?;
    }
    if formats.contains(&Format::Json) {
        let doc = SweepDocument { library_version: crate::VERSION, sweep: &sweep, verdict: &verdict };
        write_atomic(&dir.join(format!("{}-sweep.json", base.name)), &output::json_bytes(&doc)?)?;
    }

    println!(
        "{:>14} {:>14} {:>14} {:>14} {:>14} {:>10}  bound",
        "scale", "rH/sigma2", "remainder_ew", "remainder_ure", "bound_log", "log/sqrt"
    );
    for (row, v) in sweep.rows.iter().zip(&verdict.rows) {
        println!(
            "{:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>14.6e} {:>10.4}  {}",
            row.scale,
            row.oracle_over_sigma2,
            row.remainder_ew,
            row.remainder_ure,
            row.bound_log,
            row.shape_ratio(),
            if v.passed { "ok" } else { "EXCEEDED" }
        );
    }
    let crossover = sweep
        .rows
        .iter()
        .rposition(|r| r.shape_ratio() >= 1.0)
        .map_or(Some(0), |k| (k + 1 < sweep.rows.len()).then_some(k + 1));
    match crossover {
        Some(k) => println!("log bound below the sqrt shape from rH/sigma2 = {:.6e} on", sweep.rows[k].oracle_over_sigma2),
        None => println!("log bound stays above the sqrt shape on this sweep"),
    }
    println!(
        "c* = {:.6e}; normalized remainder max = {:.4e} (limit {:.1}); spearman = {:.4}",
        verdict.c_star,
        verdict.normalized_max,
        10.0 * base.beta,
        verdict.spearman
    );
    let failed = verdict.rows.iter().any(Verdict::counts_as_failure);
    Ok(if failed { EXIT_FAILURE } else { EXIT_PASS })
}
