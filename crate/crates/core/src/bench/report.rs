use std::io::Write;

use super::{ExperimentResult, PointResult};
use crate::error::Result;

/// Column set of the results CSV, identical for every experiment kind.
pub const CSV_HEADER: &str = "kind,anchors,noise,method,rmse,rmse_se,mse,mse_se,tau,tau_se,flipped,trials,flagged,unreliable";

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn row(kind: &str, p: &PointResult) -> String {
    format!(
        "{kind},{},{},{},{},{},{},{},{},{},{},{},{},{}",
        p.anchors,
        p.noise,
        p.method.name(),
        p.rmse,
        p.rmse_se,
        p.mse,
        p.mse_se,
        opt(p.tau),
        opt(p.tau_se),
        opt(p.flipped_comparisons),
        p.trials,
        p.flagged,
        p.unreliable
    )
}

/// Writes one row per (grid point, method). Floats use shortest round-trip
/// formatting, so equal results give byte-identical files.
pub fn write_csv<W: Write>(result: &ExperimentResult, mut out: W) -> Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    let kind = result.config.kind.name();
    for p in &result.points {
        writeln!(out, "{}", row(kind, p))?;
    }
    Ok(())
}
