//! Acceptance suite: one line per criterion, nonzero exit if any fails.
//!
//! Run with `cargo test --test acceptance`.

use std::collections::BTreeMap;
use std::process::{Command, ExitCode};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use njsq::harness::{run_suite, CheckReport, SuiteConfig, Verdict};
use njsq::sampling::{sample_point, sample_vector};
use njsq::zoo::{round_metric_s6, s6_octonion_j};
use njsq::{evaluate_pairing, DerivativeStrategy};

const WEAK_T_STRUCTURES: [&str; 5] = [
    "standard:n4",
    "standard:n6",
    "conjugated:n4:seed7:a0.3",
    "conjugated:n6:seed3:a0.2",
    "s6",
];

const ALL_STRUCTURES: [&str; 9] = [
    "standard:n4",
    "standard:n6",
    "conjugated:n2:seed5:a0.3",
    "conjugated:n2:seed9:a0.4",
    "conjugated:n2:seed23:a0.5",
    "conjugated:n4:seed7:a0.3",
    "conjugated:n6:seed3:a0.2",
    "s6",
    "s6-south",
];

const METRICS: [&str; 7] = [
    "euclid:n2",
    "euclid:n4",
    "euclid:n6",
    "spd:n2:seed11",
    "spd:n4:seed11",
    "spd:n6:seed11",
    "round:s6",
];

/// The tolerance each criterion states, pinned here so that changes to the
/// harness defaults cannot loosen a criterion.
const TOLERANCES: [(&str, f64); 18] = [
    ("weak-t-zero", 1e-8),
    ("weak-t-metric-independence", 1e-8),
    ("oracle-equivalence", 1e-6),
    ("n-x-jy", 1e-8),
    ("n-jx-jy", 1e-8),
    ("n-x-jx", 1e-8),
    ("n2-jx", 1e-8),
    ("l-slot-symmetry", 1e-10),
    ("l-diagonal-shortcut", 1e-10),
    ("l-diagonal-asymmetry", 1e-10),
    ("ell-swap", 1e-10),
    ("ell-rebase", 1e-8),
    ("plane-invariant-rebase", 1e-8),
    ("polarization", 1e-10),
    ("frame-sum", 1e-8),
    ("ell-zero-implies-n2-zero", 1e-7),
    ("n-vanishes", 1e-8),
    ("j-squared", 1e-9),
];

/// Lower bound pinned for the largest frame-pair |N| of the octonionic
/// structure over 100 chart points (measured 4.72 with seed 1).
const S6_N_FLOOR: f64 = 1.0;

struct Outcome {
    pass: bool,
    detail: String,
}

fn suite(structures: &[&str], deriv: DerivativeStrategy, tolerances: &[(&str, f64)]) -> Vec<CheckReport> {
    let config = SuiteConfig {
        structure_ids: structures.iter().map(|s| s.to_string()).collect(),
        metric_ids: METRICS.iter().map(|s| s.to_string()).collect(),
        samples: 100,
        seed: 1,
        tolerances: tolerances.iter().map(|&(k, v)| (k.to_string(), v)).collect::<BTreeMap<_, _>>(),
        deriv,
        ..SuiteConfig::default()
    };
    run_suite(&config).expect("acceptance configuration is valid")
}

/// Gates on every report of `checks` accepted by `keep`.
fn gate(reports: &[CheckReport], checks: &[&str], keep: impl Fn(&CheckReport) -> bool) -> Outcome {
    let selected: Vec<&CheckReport> = reports
        .iter()
        .filter(|r| checks.contains(&r.check_name.as_str()) && keep(r))
        .collect();
    if selected.is_empty() {
        return Outcome {
            pass: false,
            detail: "no matching reports".into(),
        };
    }
    let failing: Vec<&&CheckReport> = selected.iter().filter(|r| r.verdict != Verdict::Pass).collect();
    if failing.is_empty() {
        let worst = selected
            .iter()
            .map(|r| r.max_abs_error.unwrap_or(f64::NAN) / r.tolerance)
            .fold(0.0f64, f64::max);
        return Outcome {
            pass: true,
            detail: format!("{} reports, worst error/tolerance {worst:.2e}", selected.len()),
        };
    }
    let listed: Vec<String> = failing
        .iter()
        .take(4)
        .map(|r| {
            let err = r
                .max_abs_error
                .map_or_else(|| r.error.clone().unwrap_or_default(), |e| format!("{e:.2e}"));
            format!("{} {} {} {}", r.check_name, r.structure_id, r.metric_id, err)
        })
        .collect();
    Outcome {
        pass: false,
        detail: format!(
            "{}/{} reports fail; e.g. {}",
            failing.len(),
            selected.len(),
            listed.join("; ")
        ),
    }
}

fn both(a: Outcome, b: Outcome) -> Outcome {
    Outcome {
        pass: a.pass && b.pass,
        detail: format!("{} | {}", a.detail, b.detail),
    }
}

fn in_set<'a>(set: &'a [&'a str]) -> impl Fn(&CheckReport) -> bool + 'a {
    move |r| set.contains(&r.structure_id.as_str())
}

fn s6_sanity(reports: &[CheckReport]) -> Outcome {
    let find = |check: &str, metric: &str| {
        reports
            .iter()
            .find(|r| r.check_name == check && r.structure_id == "s6" && r.metric_id == metric)
            .and_then(|r| r.max_abs_error)
            .unwrap_or(f64::NAN)
    };
    let j2 = find("j-squared", "none");
    let n_max = find("n-magnitude", "none");
    let t = find("weak-t-zero", "round:s6");
    let n2 = find("s6-n2-magnitude", "none");

    let spec = s6_octonion_j();
    let g = round_metric_s6().g;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut orth = 0.0f64;
    for _ in 0..100 {
        let p = sample_point(&mut rng, &spec.chart_id, &spec.domain);
        let j = spec.j.value_at(&p).expect("sample inside chart");
        let (v, w) = (sample_vector(&mut rng, 6), sample_vector(&mut rng, 6));
        let lhs = evaluate_pairing(&g, &p, &(&j * &v), &(&j * &w)).expect("pairing");
        let rhs = evaluate_pairing(&g, &p, &v, &w).expect("pairing");
        orth = orth.max((lhs - rhs).abs() / rhs.abs().max(1.0));
    }
    let pass = j2 <= 1e-9 && orth <= 1e-8 && n_max > S6_N_FLOOR && t <= 1e-5;
    Outcome {
        pass,
        detail: format!(
            "J²+I {j2:.2e}, round orthogonality {orth:.2e}, max |N| {n_max:.3} (floor {S6_N_FLOOR}), \
             |T| {t:.2e}; reported max |N²| {n2:.3}"
        ),
    }
}

fn determinism() -> Outcome {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_njsq"))
            .args(["verify", "--output", "json"])
            .env_remove("NJSQ_SEED")
            .output()
            .expect("njsq runs")
            .stdout
    };
    let (a, b) = (run(), run());
    Outcome {
        pass: !a.is_empty() && a == b,
        detail: format!("{} and {} bytes, identical: {}", a.len(), b.len(), a == b),
    }
}

fn main() -> ExitCode {
    let analytic = suite(&ALL_STRUCTURES, DerivativeStrategy::analytic(), &TOLERANCES);
    let fd = suite(
        &WEAK_T_STRUCTURES,
        DerivativeStrategy::central(),
        &[("weak-t-zero", 1e-5)],
    );

    let weak_t_set = in_set(&WEAK_T_STRUCTURES);
    let criteria: Vec<(u32, &str, Outcome)> = vec![
        (
            1,
            "weak T vanishes and is metric independent",
            both(
                gate(&analytic, &["weak-t-zero", "weak-t-metric-independence"], &weak_t_set),
                gate(&fd, &["weak-t-zero"], &weak_t_set),
            ),
        ),
        (
            2,
            "coordinate formula matches bracket oracle",
            gate(&analytic, &["oracle-equivalence"], |_| true),
        ),
        (
            3,
            "J-identities of N",
            gate(&analytic, &["n-x-jy", "n-jx-jy", "n-x-jx", "n2-jx"], |_| true),
        ),
        (
            4,
            "L slot symmetries, ell swap, diagonal asymmetry",
            gate(
                &analytic,
                &["l-slot-symmetry", "l-diagonal-shortcut", "ell-swap", "l-diagonal-asymmetry"],
                |_| true,
            ),
        ),
        (
            5,
            "ell transforms by the squared determinant; plane invariant",
            gate(&analytic, &["ell-rebase", "plane-invariant-rebase"], |_| true),
        ),
        (6, "polarization recovers L", gate(&analytic, &["polarization"], |_| true)),
        (
            7,
            "frame sum equals half of T (Euclidean metric)",
            gate(&analytic, &["frame-sum"], |r| r.metric_id.starts_with("euclid:")),
        ),
        (
            8,
            "ell = 0 implies N² = 0 on standard structures",
            gate(&analytic, &["ell-zero-implies-n2-zero"], |r| {
                r.structure_id.starts_with("standard:")
            }),
        ),
        (
            9,
            "N vanishes in dimension 2",
            gate(&analytic, &["n-vanishes"], |r| r.structure_id.starts_with("conjugated:n2:")),
        ),
        (10, "S⁶ fixture sanity", s6_sanity(&analytic)),
        (11, "verify output is byte-for-byte reproducible", determinism()),
    ];

    let mut failed = 0;
    for (n, title, outcome) in &criteria {
        let verdict = if outcome.pass { "PASS" } else { "FAIL" };
        println!("criterion {n:>2}: {verdict}  {title}: {}", outcome.detail);
        failed += usize::from(!outcome.pass);
    }
    println!("{} of {} criteria pass", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
