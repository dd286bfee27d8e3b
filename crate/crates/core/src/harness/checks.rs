//! The property checks run by the suite. Each check samples points (and
//! vectors) from a seeded stream and returns the worst normalized error.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::chart::{ChartPoint, MetricField, TensorField11, VectorField};
use crate::diff::{partial_derivative, tensor_partials, DerivativeStrategy};
use crate::error::{Error, Result};
use crate::nijenhuis::{
    components_from_jet, nijenhuis_bracket_oracle, nijenhuis_components, oracle_components,
    NijenhuisComponents, SquareContext,
};
use crate::sampling::{sample_point, sample_vector};
use crate::zoo::{MetricSpec, StructureSpec};

/// Below this, a sampled `|ℓ|` counts as vanishing in the implication check.
pub const ELL_VANISHING: f64 = 1e-9;
/// Smallest `|ad − bc|` accepted for a re-basing of a plane.
pub const MIN_REBASE_DET: f64 = 0.1;
/// Redraw budget when a sampled input fails a precondition.
const MAX_REDRAWS: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Check {
    JSquared,
    PartialsVsFd,
    OracleEquivalence,
    OracleTensoriality,
    N2Trilinearity,
    NXJyAntilinear,
    NJxJy,
    NXJx,
    N2JxLinear,
    NVanishes,
    NMagnitude,
    S6N2Magnitude,
    MetricSpd,
    LSlotSymmetry,
    LDiagonalShortcut,
    LDiagonalAsymmetry,
    EllSwap,
    EllRebase,
    PlaneInvariantRebase,
    Polarization,
    WeakTZero,
    WeakTMetricIndependence,
    FrameSum,
    EllZeroImpliesN2Zero,
    S6EllMagnitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Depends on the structure only; reported with metric id `none`.
    Structure,
    StructureMetric,
}

/// How many samples a check draws relative to the configured count.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum SampleScale {
    Half,
    Same,
    Double,
}

impl Check {
    pub const ALL: [Check; 25] = [
        Check::JSquared,
        Check::PartialsVsFd,
        Check::OracleEquivalence,
        Check::OracleTensoriality,
        Check::N2Trilinearity,
        Check::NXJyAntilinear,
        Check::NJxJy,
        Check::NXJx,
        Check::N2JxLinear,
        Check::NVanishes,
        Check::NMagnitude,
        Check::S6N2Magnitude,
        Check::MetricSpd,
        Check::LSlotSymmetry,
        Check::LDiagonalShortcut,
        Check::LDiagonalAsymmetry,
        Check::EllSwap,
        Check::EllRebase,
        Check::PlaneInvariantRebase,
        Check::Polarization,
        Check::WeakTZero,
        Check::WeakTMetricIndependence,
        Check::FrameSum,
        Check::EllZeroImpliesN2Zero,
        Check::S6EllMagnitude,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Check::JSquared => "j-squared",
            Check::PartialsVsFd => "partials-vs-fd",
            Check::OracleEquivalence => "oracle-equivalence",
            Check::OracleTensoriality => "oracle-tensoriality",
            Check::N2Trilinearity => "n2-trilinearity",
            Check::NXJyAntilinear => "n-x-jy",
            Check::NJxJy => "n-jx-jy",
            Check::NXJx => "n-x-jx",
            Check::N2JxLinear => "n2-jx",
            Check::NVanishes => "n-vanishes",
            Check::NMagnitude => "n-magnitude",
            Check::S6N2Magnitude => "s6-n2-magnitude",
            Check::MetricSpd => "metric-spd",
            Check::LSlotSymmetry => "l-slot-symmetry",
            Check::LDiagonalShortcut => "l-diagonal-shortcut",
            Check::LDiagonalAsymmetry => "l-diagonal-asymmetry",
            Check::EllSwap => "ell-swap",
            Check::EllRebase => "ell-rebase",
            Check::PlaneInvariantRebase => "plane-invariant-rebase",
            Check::Polarization => "polarization",
            Check::WeakTZero => "weak-t-zero",
            Check::WeakTMetricIndependence => "weak-t-metric-independence",
            Check::FrameSum => "frame-sum",
            Check::EllZeroImpliesN2Zero => "ell-zero-implies-n2-zero",
            Check::S6EllMagnitude => "s6-ell-magnitude",
        }
    }

    pub fn from_name(name: &str) -> Option<Check> {
        Check::ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn scope(self) -> Scope {
        match self {
            Check::JSquared
            | Check::PartialsVsFd
            | Check::OracleEquivalence
            | Check::OracleTensoriality
            | Check::N2Trilinearity
            | Check::NXJyAntilinear
            | Check::NJxJy
            | Check::NXJx
            | Check::N2JxLinear
            | Check::NVanishes
            | Check::NMagnitude
            | Check::S6N2Magnitude => Scope::Structure,
            _ => Scope::StructureMetric,
        }
    }

    /// Exploratory checks measure a quantity without asserting a bound.
    pub fn is_reported(self) -> bool {
        matches!(
            self,
            Check::NMagnitude | Check::S6N2Magnitude | Check::S6EllMagnitude
        )
    }

    fn sample_scale(self) -> SampleScale {
        match self {
            Check::PartialsVsFd
            | Check::OracleEquivalence
            | Check::OracleTensoriality
            | Check::FrameSum => SampleScale::Half,
            Check::Polarization | Check::EllZeroImpliesN2Zero => SampleScale::Double,
            _ => SampleScale::Same,
        }
    }

    pub fn sample_count(self, samples: usize) -> usize {
        match self.sample_scale() {
            SampleScale::Half => (samples / 2).max(1),
            SampleScale::Same => samples,
            SampleScale::Double => 2 * samples,
        }
    }

    /// Whether the check's result depends on how `∂J` is obtained.
    fn routes_through_derivatives(self) -> bool {
        matches!(
            self,
            Check::OracleEquivalence
                | Check::OracleTensoriality
                | Check::NXJyAntilinear
                | Check::NJxJy
                | Check::NXJx
                | Check::N2JxLinear
                | Check::NVanishes
                | Check::WeakTZero
                | Check::WeakTMetricIndependence
                | Check::FrameSum
        )
    }

    pub fn default_tolerance(self, strategy: &DerivativeStrategy) -> f64 {
        if !strategy.is_analytic() && self.routes_through_derivatives() {
            return 1e-5;
        }
        match self {
            Check::JSquared => 1e-9,
            Check::PartialsVsFd | Check::OracleEquivalence | Check::OracleTensoriality => 1e-6,
            Check::N2Trilinearity
            | Check::MetricSpd
            | Check::LSlotSymmetry
            | Check::LDiagonalShortcut
            | Check::LDiagonalAsymmetry
            | Check::EllSwap
            | Check::Polarization => 1e-10,
            Check::EllZeroImpliesN2Zero => 1e-7,
            // Whole-tensor checks, and the bound quoted on exploratory ones.
            _ => 1e-8,
        }
    }

    pub fn applies_to(self, structure: &StructureSpec) -> bool {
        let is_s6 = structure.id.starts_with("s6");
        match self {
            Check::NVanishes => structure.integrable_expected,
            Check::NMagnitude => !structure.integrable_expected,
            Check::PartialsVsFd => structure.j.has_partials(),
            Check::S6N2Magnitude | Check::S6EllMagnitude => is_s6,
            _ => true,
        }
    }
}

/// Worst sample of one check.
#[derive(Debug, Clone)]
pub struct Measurement {
    pub max_error: f64,
    pub worst_point: Option<ChartPoint>,
    pub samples_run: usize,
}

/// Inputs shared by every check of one (structure, metric) task.
pub struct CheckEnv<'a> {
    pub structure: &'a StructureSpec,
    pub metric: Option<&'a MetricSpec>,
    /// Euclidean metric of the structure's dimension, for metric-free checks
    /// and as the reference metric in the independence check.
    pub euclidean: MetricField,
    pub strategy: DerivativeStrategy,
    pub samples: usize,
}

impl CheckEnv<'_> {
    /// The structure as seen by the configured strategy: finite-difference
    /// mode drops the analytic partials so nothing can fall back on them.
    fn j(&self) -> TensorField11 {
        if self.strategy.is_analytic() {
            self.structure.j.clone()
        } else {
            self.structure.j.without_partials()
        }
    }

    fn metric(&self) -> Result<&MetricField> {
        self.metric
            .map(|m| &m.g)
            .ok_or_else(|| Error::Config("check needs a metric".into()))
    }

    fn point(&self, rng: &mut ChaCha8Rng) -> ChartPoint {
        sample_point(rng, &self.structure.chart_id, &self.structure.domain)
    }

    fn vector(&self, rng: &mut ChaCha8Rng) -> DVector<f64> {
        sample_vector(rng, self.structure.dim)
    }

    fn context(&self, j: &TensorField11, g: &MetricField, p: &ChartPoint) -> Result<SquareContext> {
        SquareContext::new(j, g, p, &self.strategy)
    }
}

fn rel(err: f64, reference: f64) -> f64 {
    err / reference.abs().max(1.0)
}

fn vec_rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

fn components_rel(a: &NijenhuisComponents, b: &NijenhuisComponents) -> f64 {
    let diff = a
        .values()
        .iter()
        .zip(b.values())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    diff / b.max_abs().max(1.0)
}

/// Runs `sample` `count` times and keeps the worst value.
fn worst_of(
    count: usize,
    rng: &mut ChaCha8Rng,
    mut sample: impl FnMut(&mut ChaCha8Rng) -> Result<(f64, ChartPoint)>,
) -> Result<Measurement> {
    let mut m = Measurement {
        max_error: 0.0,
        worst_point: None,
        samples_run: 0,
    };
    for _ in 0..count {
        let (err, p) = sample(rng)?;
        m.samples_run += 1;
        if err.is_nan() {
            return Err(Error::Domain(format!("NaN produced at {:?}", p.coords)));
        }
        if m.worst_point.is_none() || err > m.max_error {
            m.max_error = err;
            m.worst_point = Some(p);
        }
    }
    Ok(m)
}

/// Random `(a, b, c, d)` in `[-2, 2]` with `|ad − bc| ≥ MIN_REBASE_DET`.
fn rebase_coefficients(rng: &mut ChaCha8Rng) -> Result<[f64; 4]> {
    for _ in 0..MAX_REDRAWS {
        let c: [f64; 4] = std::array::from_fn(|_| rng.gen_range(-2.0..=2.0));
        if (c[0] * c[3] - c[1] * c[2]).abs() >= MIN_REBASE_DET {
            return Ok(c);
        }
    }
    Err(Error::Domain("could not draw a non-degenerate re-basing".into()))
}

/// Random independent pair `(X, Z)` at `ctx`'s point.
fn independent_pair(ctx: &SquareContext, env: &CheckEnv, rng: &mut ChaCha8Rng) -> Result<(DVector<f64>, DVector<f64>)> {
    for _ in 0..MAX_REDRAWS {
        let x = env.vector(rng);
        let z = env.vector(rng);
        if ctx.plane_invariant(&x, &z).is_ok() {
            return Ok((x, z));
        }
    }
    Err(Error::Domain("could not draw an independent vector pair".into()))
}

fn random_extension(env: &CheckEnv, p: &ChartPoint, v: DVector<f64>, rng: &mut ChaCha8Rng) -> VectorField {
    let n = env.structure.dim;
    let m = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
    let q = env.vector(rng);
    VectorField::affine_quadratic_extension(p, v, m, q)
}

pub fn run_check(check: Check, env: &CheckEnv, rng: &mut ChaCha8Rng) -> Result<Measurement> {
    let count = check.sample_count(env.samples);
    let j = env.j();
    match check {
        Check::JSquared => worst_of(count, rng, |rng| {
            let p = env.point(rng);
            Ok((j.square_deviation(&p)?, p))
        }),
        Check::PartialsVsFd => {
            let fd = DerivativeStrategy::central().with_h0(env.strategy.h0);
            worst_of(count, rng, |rng| {
                let p = env.point(rng);
                let analytic = tensor_partials(&env.structure.j, &p, &DerivativeStrategy::analytic())?;
                let mut worst = 0.0f64;
                for (dir, a) in analytic.iter().enumerate() {
                    let c = partial_derivative(&env.structure.j, &p, dir, &fd)?;
                    worst = worst.max((a - c).amax() / a.amax().max(1.0));
                }
                Ok((worst, p))
            })
        }
        Check::OracleEquivalence => worst_of(count, rng, |rng| {
            let p = env.point(rng);
            let formula = nijenhuis_components(&j, &p, &env.strategy)?;
            let oracle = oracle_components(&j, &p, &env.strategy)?;
            Ok((components_rel(&formula, &oracle), p))
        }),
        Check::OracleTensoriality => worst_of(count, rng, |rng| {
            let p = env.point(rng);
            let x = env.vector(rng);
            let y = env.vector(rng);
            let first = nijenhuis_bracket_oracle(
                &j,
                &random_extension(env, &p, x.clone(), rng),
                &random_extension(env, &p, y.clone(), rng),
                &p,
                &env.strategy,
            )?;
            let second = nijenhuis_bracket_oracle(
                &j,
                &random_extension(env, &p, x, rng),
                &random_extension(env, &p, y, rng),
                &p,
                &env.strategy,
            )?;
            Ok((vec_rel(&first, &second), p))
        }),
        Check::N2Trilinearity => worst_of(count, rng, |rng| {
            let p = env.point(rng);
            let nc = nijenhuis_components(&j, &p, &env.strategy)?;
            let n2 = |a: &DVector<f64>, b: &DVector<f64>, c: &DVector<f64>| nc.apply(&nc.apply(a, b), c);
            let (x, x2, y, z) = (env.vector(rng), env.vector(rng), env.vector(rng), env.vector(rng));
            let (a, b): (f64, f64) = (rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0));
            let mix = &x * a + &x2 * b;
            let mut worst = 0.0f64;
            // linear in each slot
            let refs = [
                (n2(&mix, &y, &z), n2(&x, &y, &z) * a + n2(&x2, &y, &z) * b),
                (n2(&y, &mix, &z), n2(&y, &x, &z) * a + n2(&y, &x2, &z) * b),
                (n2(&y, &z, &mix), n2(&y, &z, &x) * a + n2(&y, &z, &x2) * b),
            ];
            for (lhs, rhs) in &refs {
                worst = worst.max(vec_rel(lhs, rhs));
            }
            // vanishes when the first two slots repeat
            worst = worst.max(n2(&x, &x, &z).amax());
            Ok((worst, p))
        }),
        Check::NXJyAntilinear | Check::NJxJy | Check::NXJx | Check::N2JxLinear => {
            worst_of(count, rng, |rng| {
                let p = env.point(rng);
                let jv = j.value_at(&p)?;
                let nc = nijenhuis_components(&j, &p, &env.strategy)?;
                let (x, y, z) = (env.vector(rng), env.vector(rng), env.vector(rng));
                let jx = &jv * &x;
                let err = match check {
                    // N(X, JY) + J N(X, Y)
                    Check::NXJyAntilinear => {
                        let lhs = nc.apply(&x, &(&jv * &y));
                        let rhs = -(&jv * nc.apply(&x, &y));
                        vec_rel(&lhs, &rhs)
                    }
                    // N(JX, JY) + N(X, Y)
                    Check::NJxJy => {
                        let lhs = nc.apply(&jx, &(&jv * &y));
                        let rhs = -nc.apply(&x, &y);
                        vec_rel(&lhs, &rhs)
                    }
                    // N(X, JX)
                    Check::NXJx => nc.apply(&x, &jx).amax(),
                    // N(N(JX, Z), Y) − J N(N(X, Z), Y)
                    _ => {
                        let lhs = nc.apply(&nc.apply(&jx, &z), &y);
                        let rhs = &jv * nc.apply(&nc.apply(&x, &z), &y);
                        vec_rel(&lhs, &rhs)
                    }
                };
                Ok((err, p))
            })
        }
        Check::NVanishes | Check::NMagnitude => worst_of(count, rng, |rng| {
            let p = env.point(rng);
            Ok((nijenhuis_components(&j, &p, &env.strategy)?.max_abs(), p))
        }),
        Check::S6N2Magnitude => worst_of(count, rng, |rng| {
            let p = env.point(rng);
            let nc = nijenhuis_components(&j, &p, &env.strategy)?;
            let (x, y, z) = (env.vector(rng), env.vector(rng), env.vector(rng));
            Ok((nc.apply(&nc.apply(&x, &y), &z).amax(), p))
        }),
        Check::MetricSpd => {
            let g = env.metric()?;
            worst_of(count, rng, |rng| {
                let p = env.point(rng);
                Ok((g.spd_residual(&p)?, p))
            })
        }
        Check::LSlotSymmetry
        | Check::LDiagonalShortcut
        | Check::LDiagonalAsymmetry
        | Check::EllSwap
        | Check::Polarization => {
            let g = env.metric()?;
            worst_of(count, rng, |rng| {
                let p = env.point(rng);
                let ctx = env.context(&j, g, &p)?;
                let (x, z, y, w) = (env.vector(rng), env.vector(rng), env.vector(rng), env.vector(rng));
                let err = match check {
                    Check::LSlotSymmetry => {
                        let l = ctx.big_l(&x, &z, &y, &w);
                        let swap13 = ctx.big_l(&y, &z, &x, &w);
                        let swap24 = ctx.big_l(&x, &w, &y, &z);
                        rel((l - swap13).abs().max((l - swap24).abs()), l)
                    }
                    Check::LDiagonalShortcut => {
                        let l = ctx.ell(&x, &z);
                        rel((l - ctx.ell_shortcut(&x, &z)).abs(), l)
                    }
                    Check::LDiagonalAsymmetry => {
                        let l = ctx.big_l(&x, &z, &x, &z);
                        rel((l + ctx.big_l(&z, &x, &x, &z)).abs(), l)
                    }
                    Check::EllSwap => {
                        let l = ctx.ell(&x, &z);
                        rel((l - ctx.ell(&z, &x)).abs(), l)
                    }
                    _ => {
                        let l = ctx.big_l(&x, &z, &y, &w);
                        rel((ctx.polarize_l(&x, &z, &y, &w) - l).abs(), l)
                    }
                };
                Ok((err, p))
            })
        }
        Check::EllRebase | Check::PlaneInvariantRebase => {
            let g = env.metric()?;
            worst_of(count, rng, |rng| {
                let p = env.point(rng);
                let ctx = env.context(&j, g, &p)?;
                let (x, z) = independent_pair(&ctx, env, rng)?;
                let [a, b, c, d] = rebase_coefficients(rng)?;
                let xp = &x * a + &z * b;
                let zp = &x * c + &z * d;
                let err = if check == Check::EllRebase {
                    let expected = (a * d - b * c).powi(2) * ctx.ell(&x, &z);
                    rel((ctx.ell(&xp, &zp) - expected).abs(), expected)
                } else {
                    let before = ctx.plane_invariant(&x, &z)?;
                    rel((ctx.plane_invariant(&xp, &zp)? - before).abs(), before)
                };
                Ok((err, p))
            })
        }
        Check::WeakTZero => {
            let g = env.metric()?;
            worst_of(count, rng, |rng| {
                let p = env.point(rng);
                Ok((env.context(&j, g, &p)?.weak_t().abs(), p))
            })
        }
        Check::WeakTMetricIndependence => {
            let g = env.metric()?;
            worst_of(count, rng, |rng| {
                let p = env.point(rng);
                let t = env.context(&j, g, &p)?.weak_t();
                let t_ref = env.context(&j, &env.euclidean, &p)?.weak_t();
                Ok(((t - t_ref).abs(), p))
            })
        }
        Check::FrameSum => {
            let g = env.metric()?;
            worst_of(count, rng, |rng| {
                let p = env.point(rng);
                let ctx = env.context(&j, g, &p)?;
                let half_t = 0.5 * ctx.weak_t();
                Ok((rel((ctx.frame_sum()? - half_t).abs(), half_t), p))
            })
        }
        Check::EllZeroImpliesN2Zero => {
            // Premise: max |ℓ| over sampled (point, pair). If it holds, the
            // error is the max |N²| over sampled (point, triple); otherwise
            // the implication holds vacuously and the error is zero.
            let g = env.metric()?;
            let ell = worst_of(count, rng, |rng| {
                let p = env.point(rng);
                let ctx = env.context(&j, g, &p)?;
                let (x, z) = (env.vector(rng), env.vector(rng));
                Ok((ctx.ell(&x, &z).abs(), p))
            })?;
            if ell.max_error > ELL_VANISHING {
                return Ok(Measurement {
                    max_error: 0.0,
                    worst_point: ell.worst_point,
                    samples_run: ell.samples_run,
                });
            }
            worst_of(count, rng, |rng| {
                let p = env.point(rng);
                let jv = j.value_at(&p)?;
                let nc = components_from_jet(&jv, &tensor_partials(&j, &p, &env.strategy)?);
                let (x, y, z) = (env.vector(rng), env.vector(rng), env.vector(rng));
                Ok((nc.apply(&nc.apply(&x, &y), &z).amax(), p))
            })
        }
        Check::S6EllMagnitude => {
            let g = env.metric()?;
            worst_of(count, rng, |rng| {
                let p = env.point(rng);
                let ctx = env.context(&j, g, &p)?;
                let (x, z) = (env.vector(rng), env.vector(rng));
                Ok((ctx.ell(&x, &z).abs(), p))
            })
        }
    }
}
