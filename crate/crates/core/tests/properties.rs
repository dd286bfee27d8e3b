//! Randomized properties of the geometric primitives.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use njsq::sampling::{sample_point, sample_vector};
use njsq::zoo::{conjugated_j, euclidean_metric, random_spd_metric, round_metric_s6, s6_octonion_j};
use njsq::{
    evaluate_pairing, gram_determinant, lie_bracket_at, ChartPoint, DerivativeStrategy,
    MetricField, SquareContext, VectorField,
};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1.0)
}

fn vec_rel(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

fn rand_matrix(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0))
}

/// `x ↦ v + M(x − c) + ½ q |x − c|²` with everything needed for exact
/// brackets of brackets.
#[derive(Clone)]
struct Quad {
    c: DVector<f64>,
    v: DVector<f64>,
    m: DMatrix<f64>,
    q: DVector<f64>,
}

impl Quad {
    fn random(rng: &mut ChaCha8Rng, n: usize) -> Self {
        Self {
            c: sample_vector(rng, n),
            v: sample_vector(rng, n),
            m: rand_matrix(rng, n),
            q: sample_vector(rng, n),
        }
    }

    fn scaled(&self, a: f64) -> Self {
        Self {
            c: self.c.clone(),
            v: &self.v * a,
            m: &self.m * a,
            q: &self.q * a,
        }
    }

    fn value(&self, x: &DVector<f64>) -> DVector<f64> {
        let d = x - &self.c;
        &self.v + &self.m * &d + &self.q * (0.5 * d.norm_squared())
    }

    fn jac(&self, x: &DVector<f64>) -> DMatrix<f64> {
        &self.m + &self.q * (x - &self.c).transpose()
    }

    fn field(&self) -> VectorField {
        let (a, b) = (self.clone(), self.clone());
        let n = self.v.len();
        VectorField::new(n, move |x| a.value(&DVector::from_column_slice(x)))
            .with_jacobian(move |x| b.jac(&DVector::from_column_slice(x)))
    }
}

/// `[Y, Z]` as a field with its exact Jacobian
/// `q_Z Yᵀ − q_Y Zᵀ + DZ·DY − DY·DZ`.
fn bracket_field(y: &Quad, z: &Quad) -> VectorField {
    let n = y.v.len();
    let (y1, z1, y2, z2) = (y.clone(), z.clone(), y.clone(), z.clone());
    VectorField::new(n, move |x| {
        let x = DVector::from_column_slice(x);
        z1.jac(&x) * y1.value(&x) - y1.jac(&x) * z1.value(&x)
    })
    .with_jacobian(move |x| {
        let x = DVector::from_column_slice(x);
        let (dy, dz) = (y2.jac(&x), z2.jac(&x));
        &z2.q * y2.value(&x).transpose() - &y2.q * z2.value(&x).transpose() + &dz * &dy - &dy * &dz
    })
}

fn point(rng: &mut ChaCha8Rng, n: usize) -> ChartPoint {
    ChartPoint::new(format!("R{n}"), sample_vector(rng, n).as_slice().to_vec()).unwrap()
}

/// `g_H(v, w) = g(v, w) + g(Jv, Jw)`, which makes `J` an isometry.
fn hermitian_metric(j: njsq::TensorField11, g: MetricField) -> MetricField {
    let n = g.dim();
    MetricField::new(n, move |x| {
        let p = ChartPoint::new("h", x.to_vec()).unwrap();
        let gv = g.value_at(&p).unwrap();
        let jv = j.value_at(&p).unwrap();
        &gv + jv.transpose() * &gv * &jv
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gram_scales_by_squared_jacobian(
        seed in any::<u64>(),
        a in -2.0..2.0f64, b in -2.0..2.0f64, c in -2.0..2.0f64, d in -2.0..2.0f64,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_spd_metric(4, 11).unwrap().g;
        let p = point(&mut rng, 4);
        let (x, z) = (sample_vector(&mut rng, 4), sample_vector(&mut rng, 4));
        let det = a * d - b * c;
        let lhs = gram_determinant(&g, &p, &(&x * a + &z * b), &(&x * c + &z * d)).unwrap();
        let rhs = det * det * gram_determinant(&g, &p, &x, &z).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-12, "{lhs} vs {rhs}");
    }

    #[test]
    fn pairing_is_symmetric_and_bilinear(seed in any::<u64>(), a in -3.0..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = random_spd_metric(6, 11).unwrap().g;
        let p = point(&mut rng, 6);
        let (u, v, w) = (sample_vector(&mut rng, 6), sample_vector(&mut rng, 6), sample_vector(&mut rng, 6));
        prop_assert_eq!(evaluate_pairing(&g, &p, &v, &w).unwrap(), evaluate_pairing(&g, &p, &w, &v).unwrap());
        let lhs = evaluate_pairing(&g, &p, &(&u * a + &v), &w).unwrap();
        let rhs = a * evaluate_pairing(&g, &p, &u, &w).unwrap() + evaluate_pairing(&g, &p, &v, &w).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-12);
    }

    #[test]
    fn bracket_is_bilinear_and_antisymmetric(seed in any::<u64>(), a in -2.0..2.0f64, b in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3;
        let s = DerivativeStrategy::analytic();
        let p = point(&mut rng, n);
        let (x, y, z) = (Quad::random(&mut rng, n), Quad::random(&mut rng, n), Quad::random(&mut rng, n));
        // aX + bY with a shared centre stays in the same family.
        let y_same_c = Quad { c: x.c.clone(), ..y };
        let sa = x.scaled(a);
        let sb = y_same_c.scaled(b);
        let mix = Quad { c: x.c.clone(), v: &sa.v + &sb.v, m: &sa.m + &sb.m, q: &sa.q + &sb.q };
        let lhs = lie_bracket_at(&mix.field(), &z.field(), &p, &s).unwrap();
        let rhs = lie_bracket_at(&x.field(), &z.field(), &p, &s).unwrap() * a
            + lie_bracket_at(&y_same_c.field(), &z.field(), &p, &s).unwrap() * b;
        prop_assert!(vec_rel(&lhs, &rhs) <= 1e-12);
        let xz = lie_bracket_at(&x.field(), &z.field(), &p, &s).unwrap();
        let zx = lie_bracket_at(&z.field(), &x.field(), &p, &s).unwrap();
        prop_assert_eq!(xz, -zx);
    }

    #[test]
    fn n_is_antisymmetric_and_bilinear(seed in any::<u64>(), a in -2.0..2.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = conjugated_j(4, 7, 0.3).unwrap();
        let s = DerivativeStrategy::analytic();
        let p = sample_point(&mut rng, &spec.chart_id, &spec.domain);
        let ctx = SquareContext::new(&spec.j, &euclidean_metric(4).unwrap().g, &p, &s).unwrap();
        let (x, x2, y) = (sample_vector(&mut rng, 4), sample_vector(&mut rng, 4), sample_vector(&mut rng, 4));
        prop_assert_eq!(ctx.nijenhuis(&x, &y), -ctx.nijenhuis(&y, &x));
        prop_assert_eq!(ctx.nijenhuis(&x, &x).amax(), 0.0);
        let lhs = ctx.nijenhuis(&(&x * a + &x2), &y);
        let rhs = ctx.nijenhuis(&x, &y) * a + ctx.nijenhuis(&x2, &y);
        prop_assert!(vec_rel(&lhs, &rhs) <= 1e-12);
    }

    #[test]
    fn four_slot_form_identities(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = conjugated_j(4, 7, 0.3).unwrap();
        let g = random_spd_metric(4, 11).unwrap().g;
        let p = sample_point(&mut rng, &spec.chart_id, &spec.domain);
        let ctx = SquareContext::new(&spec.j, &g, &p, &DerivativeStrategy::analytic()).unwrap();
        let v: Vec<DVector<f64>> = (0..4).map(|_| sample_vector(&mut rng, 4)).collect();
        let (x, z, y, w) = (&v[0], &v[1], &v[2], &v[3]);
        let l = ctx.big_l(x, z, y, w);
        prop_assert!(rel(ctx.big_l(y, z, x, w), l) <= 1e-12);
        prop_assert!(rel(ctx.big_l(x, w, y, z), l) <= 1e-12);
        prop_assert!(rel(ctx.ell(x, z), ctx.ell_shortcut(x, z)) <= 1e-12);
        prop_assert!(rel(ctx.ell(&(x * 2.0), z), 4.0 * ctx.ell(x, z)) <= 1e-10);
        prop_assert!(rel(ctx.polarize_l(x, z, y, w), l) <= 1e-10);
        prop_assert!(rel(ctx.polarize_l(x, z, x, z), ctx.ell(x, z)) <= 1e-10);
        prop_assert!(ctx.ell(x, x).abs() <= 1e-14);
        // What the four-term average actually gives on the swapped diagonal.
        let diag = ctx.big_l(x, z, x, z) + ctx.big_l(z, x, x, z);
        prop_assert!(rel(diag, 0.75 * ctx.ell(x, z) - 0.25 * ctx.ell(z, x)) <= 1e-10);
    }

    /// For a metric that makes `J` an isometry, `ℓ` turns out to be
    /// antisymmetric rather than symmetric.
    #[test]
    fn ell_is_antisymmetric_for_hermitian_metrics(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = conjugated_j(4, 7, 0.3).unwrap();
        let g = hermitian_metric(spec.j.clone(), random_spd_metric(4, 11).unwrap().g);
        let p = sample_point(&mut rng, &spec.chart_id, &spec.domain);
        let ctx = SquareContext::new(&spec.j, &g, &p, &DerivativeStrategy::analytic()).unwrap();
        let (x, z) = (sample_vector(&mut rng, 4), sample_vector(&mut rng, 4));
        let (xz, zx) = (ctx.ell(&x, &z), ctx.ell(&z, &x));
        prop_assert!(rel(xz, -zx) <= 1e-10, "{xz} vs {zx}");
    }

    #[test]
    fn s6_round_metric_is_j_invariant(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = s6_octonion_j();
        let g = round_metric_s6().g;
        let p = sample_point(&mut rng, &spec.chart_id, &spec.domain);
        let j = spec.j.value_at(&p).unwrap();
        let (v, w) = (sample_vector(&mut rng, 6), sample_vector(&mut rng, 6));
        let lhs = evaluate_pairing(&g, &p, &(&j * &v), &(&j * &w)).unwrap();
        let rhs = evaluate_pairing(&g, &p, &v, &w).unwrap();
        prop_assert!(rel(lhs, rhs) <= 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn jacobi_identity_on_quadratic_fields(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = 3;
        let s = DerivativeStrategy::analytic();
        let p = point(&mut rng, n);
        let (x, y, z) = (Quad::random(&mut rng, n), Quad::random(&mut rng, n), Quad::random(&mut rng, n));
        let cyclic = lie_bracket_at(&x.field(), &bracket_field(&y, &z), &p, &s).unwrap()
            + lie_bracket_at(&y.field(), &bracket_field(&z, &x), &p, &s).unwrap()
            + lie_bracket_at(&z.field(), &bracket_field(&x, &y), &p, &s).unwrap();
        prop_assert!(cyclic.amax() <= 1e-8, "{}", cyclic.amax());
    }
}
