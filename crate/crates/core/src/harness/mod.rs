//! Suite driver: resolves ids, runs every applicable check over every
//! compatible (structure, metric) pair, and renders the reports.

pub mod checks;
pub mod eval;
pub mod report;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chart::{ChartPoint, MetricField};
use crate::diff::DerivativeStrategy;
use crate::error::{Error, Result};
use crate::sampling::task_rng;
use crate::zoo::{metric_by_id, structure_by_id, MetricSpec, StructureSpec};

pub use checks::{Check, Scope};
pub use eval::{eval_point, Quantity, SquareEvaluation, VectorArgs};
pub use report::{render_report, OutputFormat};

/// Metric id used in reports of checks that do not involve a metric.
pub const NO_METRIC: &str = "none";
pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_SAMPLES: usize = 100;

pub const DEFAULT_STRUCTURES: [&str; 6] = [
    "standard:n4",
    "standard:n6",
    "conjugated:n2:seed5:a0.3",
    "conjugated:n4:seed7:a0.3",
    "conjugated:n6:seed3:a0.2",
    "s6",
];

pub const DEFAULT_METRICS: [&str; 7] = [
    "euclid:n2",
    "euclid:n4",
    "euclid:n6",
    "spd:n2:seed11",
    "spd:n4:seed11",
    "spd:n6:seed11",
    "round:s6",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub structure_ids: Vec<String>,
    pub metric_ids: Vec<String>,
    pub samples: usize,
    pub seed: u64,
    /// Per-check overrides of the default tolerance.
    pub tolerances: BTreeMap<String, f64>,
    pub deriv: DerivativeStrategy,
    pub output: OutputFormat,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            structure_ids: DEFAULT_STRUCTURES.iter().map(|s| s.to_string()).collect(),
            metric_ids: DEFAULT_METRICS.iter().map(|s| s.to_string()).collect(),
            samples: DEFAULT_SAMPLES,
            seed: DEFAULT_SEED,
            tolerances: BTreeMap::new(),
            deriv: DerivativeStrategy::analytic(),
            output: OutputFormat::Json,
        }
    }
}

impl SuiteConfig {
    pub fn tolerance(&self, check: Check) -> f64 {
        self.tolerances
            .get(check.name())
            .copied()
            .unwrap_or_else(|| check.default_tolerance(&self.deriv))
    }

    fn validate(&self) -> Result<(Vec<StructureSpec>, Vec<MetricSpec>)> {
        if self.samples == 0 {
            return Err(Error::Config("samples must be at least 1".into()));
        }
        if !(self.deriv.h0 > 0.0 && self.deriv.h0.is_finite()) {
            return Err(Error::Config(format!("h0 must be positive, got {}", self.deriv.h0)));
        }
        for (name, tol) in &self.tolerances {
            if Check::from_name(name).is_none() {
                return Err(Error::Config(format!("unknown check `{name}` in tolerance override")));
            }
            if !(*tol > 0.0) {
                return Err(Error::Config(format!("tolerance for `{name}` must be > 0")));
            }
        }
        if self.structure_ids.is_empty() {
            return Err(Error::Config("no structures given".into()));
        }
        let structures = self
            .structure_ids
            .iter()
            .map(|id| structure_by_id(id).map_err(|e| unresolved(id, e)))
            .collect::<Result<Vec<_>>>()?;
        let metrics = self
            .metric_ids
            .iter()
            .map(|id| metric_by_id(id).map_err(|e| unresolved(id, e)))
            .collect::<Result<Vec<_>>>()?;
        Ok((structures, metrics))
    }
}

fn unresolved(id: &str, e: Error) -> Error {
    match e {
        Error::Config(_) => e,
        other => Error::Config(format!("cannot build `{id}`: {other}")),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
    Reported,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Reported => "reported",
        }
    }
}

/// Outcome of one check on one (structure, metric) combination.
///
/// `max_abs_error` is the worst sampled error after normalization by
/// `max(1, |reference|)`, so `verdict == pass` exactly when it is at most
/// `tolerance`. Exploratory checks carry the measured magnitude instead.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub check_name: String,
    pub structure_id: String,
    pub metric_id: String,
    pub samples_run: usize,
    pub max_abs_error: Option<f64>,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub worst_point: Option<ChartPoint>,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Task<'a> {
    check: Check,
    structure: &'a StructureSpec,
    metric: Option<&'a MetricSpec>,
}

fn run_task(task: &Task, config: &SuiteConfig) -> CheckReport {
    let metric_id = task.metric.map_or(NO_METRIC, |m| m.id.as_str());
    let env = checks::CheckEnv {
        structure: task.structure,
        metric: task.metric,
        euclidean: MetricField::euclidean(task.structure.dim),
        strategy: config.deriv,
        samples: config.samples,
    };
    let mut rng = task_rng(
        config.seed,
        &[task.check.name(), &task.structure.id, metric_id],
    );
    let tolerance = config.tolerance(task.check);
    let mut report = CheckReport {
        check_name: task.check.name().to_string(),
        structure_id: task.structure.id.clone(),
        metric_id: metric_id.to_string(),
        samples_run: 0,
        max_abs_error: None,
        tolerance,
        verdict: Verdict::Fail,
        worst_point: None,
        seed: config.seed,
        error: None,
    };
    match checks::run_check(task.check, &env, &mut rng) {
        Ok(m) => {
            report.samples_run = m.samples_run;
            report.max_abs_error = Some(m.max_error);
            report.worst_point = m.worst_point;
            report.verdict = if task.check.is_reported() {
                Verdict::Reported
            } else if m.max_error <= tolerance {
                Verdict::Pass
            } else {
                Verdict::Fail
            };
        }
        Err(e) => {
            report.error = Some(e.to_string());
            if task.check.is_reported() {
                report.verdict = Verdict::Reported;
            }
        }
    }
    report
}

/// Runs every applicable check. Metric-free checks run once per structure;
/// the others once per structure and dimension-compatible metric. Output is
/// sorted by (check name, structure id, metric id).
pub fn run_suite(config: &SuiteConfig) -> Result<Vec<CheckReport>> {
    let (structures, metrics) = config.validate()?;
    let mut tasks = Vec::new();
    for structure in &structures {
        for check in Check::ALL {
            if !check.applies_to(structure) {
                continue;
            }
            match check.scope() {
                Scope::Structure => tasks.push(Task {
                    check,
                    structure,
                    metric: None,
                }),
                Scope::StructureMetric => {
                    for metric in metrics.iter().filter(|m| m.dim == structure.dim) {
                        tasks.push(Task {
                            check,
                            structure,
                            metric: Some(metric),
                        });
                    }
                }
            }
        }
    }
    let mut reports: Vec<CheckReport> = tasks.par_iter().map(|t| run_task(t, config)).collect();
    reports.sort_by(|a, b| {
        (&a.check_name, &a.structure_id, &a.metric_id).cmp(&(&b.check_name, &b.structure_id, &b.metric_id))
    });
    reports.dedup_by(|a, b| {
        a.check_name == b.check_name && a.structure_id == b.structure_id && a.metric_id == b.metric_id
    });
    Ok(reports)
}

pub fn any_failed(reports: &[CheckReport]) -> bool {
    reports.iter().any(|r| r.verdict == Verdict::Fail)
}
