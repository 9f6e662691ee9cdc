//! Report files. CSV columns are fixed per schema version; reals are written
//! in scientific notation with 17 significant digits.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::experiments::{RemainderSweep, RiskReport, SweepVerdict};

pub const RISK_SCHEMA: &str = "expweight-risk-v1";
pub const SWEEP_SCHEMA: &str = "expweight-sweep-v1";

pub const RISK_COLUMNS: [&str; 28] = [
    "schema",
    "scenario",
    "n",
    "sigma",
    "beta",
    "replications",
    "seed",
    "family_size",
    "oracle_risk",
    "oracle_index",
    "mc_risk_ew",
    "mc_risk_ew_se",
    "mc_risk_ure",
    "mc_risk_ure_se",
    "weighted_ure_mean",
    "weighted_ure_se",
    "remainder_ew",
    "remainder_ure",
    "bound_log",
    "bound_sqrt_shape",
    "psi_c",
    "k_lower",
    "k_upper",
    "theory_applicable",
    "verdicts_passed",
    "verdicts_failed",
    "library_version",
    "scenario_json",
];

pub const SWEEP_COLUMNS: [&str; 16] = [
    "schema",
    "scenario",
    "scale",
    "oracle_risk",
    "oracle_over_sigma2",
    "remainder_ew",
    "remainder_ew_se",
    "remainder_ure",
    "remainder_ure_se",
    "bound_log",
    "bound_sqrt_shape",
    "shape_ratio",
    "normalized_remainder",
    "bound_passed",
    "library_version",
    "scenario_json",
];

pub fn real(x: f64) -> String {
    format!("{x:.16e}")
}

fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .map_err(|e| Error::Io(format!("cannot create a file in {}: {e}", dir.display())))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(format!("cannot write {}: {}", path.display(), e.error)))?;
    Ok(())
}

fn csv_bytes(header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(header).map_err(io)?;
    for row in rows {
        w.write_record(row).map_err(io)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn risk_csv(report: &RiskReport) -> Result<Vec<u8>> {
    let s = &report.scenario;
    let failed = report.verdicts.iter().filter(|v| !v.passed).count();
    let echo = serde_json::to_string(s).map_err(|e| Error::Io(e.to_string()))?;
    let row = vec![
        RISK_SCHEMA.to_string(),
        s.name.clone(),
        s.n.to_string(),
        real(s.sigma),
        real(s.beta),
        s.replications.to_string(),
        s.seed.to_string(),
        report.family_size.to_string(),
        real(report.oracle_risk),
        report.oracle_index.to_string(),
        real(report.mc_risk_ew.mean),
        real(report.mc_risk_ew.se),
        real(report.mc_risk_ure.mean),
        real(report.mc_risk_ure.se),
        real(report.weighted_ure_mean.mean),
        real(report.weighted_ure_mean.se),
        real(report.remainder_ew),
        real(report.remainder_ure),
        real(report.bound_log),
        real(report.bound_sqrt_shape),
        real(report.psi.c),
        opt_real(report.condition.k_lower),
        opt_real(report.condition.k_upper),
        report.theory_applicable.to_string(),
        (report.verdicts.len() - failed).to_string(),
        failed.to_string(),
        report.library_version.clone(),
        echo,
    ];
    csv_bytes(&RISK_COLUMNS, &[row])
}

pub fn sweep_csv(sweep: &RemainderSweep, verdict: &SweepVerdict) -> Result<Vec<u8>> {
    let echo = serde_json::to_string(&sweep.base).map_err(|e| Error::Io(e.to_string()))?;
    let rows: Vec<Vec<String>> = sweep
        .rows
        .iter()
        .enumerate()
        .map(|(k, r)| {
            vec![
                SWEEP_SCHEMA.to_string(),
                sweep.base.name.clone(),
                real(r.scale),
                real(r.oracle_risk),
                real(r.oracle_over_sigma2),
                real(r.remainder_ew),
                real(r.remainder_ew_se),
                real(r.remainder_ure),
                real(r.remainder_ure_se),
                real(r.bound_log),
                real(r.bound_sqrt_shape),
                real(r.shape_ratio()),
                real(verdict.normalized[k]),
                verdict.rows[k].passed.to_string(),
                crate::VERSION.to_string(),
                echo.clone(),
            ]
        })
        .collect();
    csv_bytes(&SWEEP_COLUMNS, &rows)
}
