//! Summary table of check verdicts.

use std::fmt::Write as _;
use std::path::Path;

use super::run::{CheckResult, RunManifest};
use crate::error::Result;
use crate::grid::fmt_f64;

pub fn write_summary_csv(path: &Path, checks: &[CheckResult]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["check", "instance", "n", "value", "comparison", "threshold", "pass"])?;
    for c in checks {
        w.write_record([
            c.check.clone(),
            c.instance.clone(),
            c.n.to_string(),
            fmt_f64(c.value),
            c.comparison.symbol().to_string(),
            fmt_f64(c.threshold),
            c.pass.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Fixed-width table of every check followed by any stage errors.
pub fn emit_summary(m: &RunManifest) -> String {
    let mut s = String::new();
    let wc = m.checks.iter().map(|c| c.check.len()).max().unwrap_or(5).max(5);
    let wi = m.checks.iter().map(|c| c.instance.len() + 1 + c.n.to_string().len()).max().unwrap_or(8).max(8);
    let _ = writeln!(s, "{:<wc$}  {:<wi$}  {:>13}     {:>13}  result", "check", "instance", "value", "threshold");
    for c in &m.checks {
        let inst = format!("{}/{}", c.instance, c.n);
        let _ = writeln!(
            s,
            "{:<wc$}  {:<wi$}  {:>13.6e}  {:<2} {:>13.6e}  {}",
            c.check,
            inst,
            c.value,
            c.comparison.symbol(),
            c.threshold,
            if c.pass { "PASS" } else { "FAIL" }
        );
    }
    for e in &m.errors {
        let _ = writeln!(s, "error [{}/{} {}]: {}", e.instance, e.n, e.stage, e.message);
    }
    let failed = m.checks.iter().filter(|c| !c.pass).count();
    let _ = writeln!(
        s,
        "{} checks, {} failed, {} errors",
        m.checks.len(),
        failed,
        m.errors.len()
    );
    s
}
