use std::fmt::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::harness::CheckReport;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Text,
    Json,
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Self::Text),
            "json" => Ok(Self::Json),
            other => Err(Error::Usage(format!("unknown output format `{other}` (expected text or json)"))),
        }
    }
}

fn fmt_err(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.3e}"),
        None => "-".into(),
    }
}

pub fn render_report(reports: &[CheckReport], format: OutputFormat) -> Result<String> {
    if reports.is_empty() {
        return Err(Error::Usage("no reports to render".into()));
    }
    match format {
        OutputFormat::Json => {
            let mut s = serde_json::to_string_pretty(reports)
                .map_err(|e| Error::Usage(format!("cannot serialize reports: {e}")))?;
            s.push('\n');
            Ok(s)
        }
        OutputFormat::Text => {
            let mut out = String::new();
            let header = format!(
                "{:<30} {:<26} {:<15} {:>7} {:>11} {:>9} {:<8}",
                "check", "structure", "metric", "samples", "max_error", "tol", "verdict"
            );
            writeln!(out, "{header}").unwrap();
            writeln!(out, "{}", "-".repeat(header.len())).unwrap();
            for r in reports {
                write!(
                    out,
                    "{:<30} {:<26} {:<15} {:>7} {:>11} {:>9.1e} {:<8}",
                    r.check_name,
                    r.structure_id,
                    r.metric_id,
                    r.samples_run,
                    fmt_err(r.max_abs_error),
                    r.tolerance,
                    r.verdict.as_str()
                )
                .unwrap();
                if let Some(e) = &r.error {
                    write!(out, "  error: {e}").unwrap();
                }
                out.push('\n');
            }
            let count = |v| reports.iter().filter(|r| r.verdict == v).count();
            writeln!(
                out,
                "\n{} checks: {} pass, {} fail, {} reported",
                reports.len(),
                count(crate::harness::Verdict::Pass),
                count(crate::harness::Verdict::Fail),
                count(crate::harness::Verdict::Reported)
            )
            .unwrap();
            Ok(out)
        }
    }
}
