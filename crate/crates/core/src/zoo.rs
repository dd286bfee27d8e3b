//! Concrete almost-complex structures and metrics with analytic derivatives.
//!
//! Ids accepted by [`structure_by_id`] and [`metric_by_id`]:
//!
//! | id                         | object                                        |
//! |----------------------------|-----------------------------------------------|
//! | `standard:n4`              | constant block structure on R^4               |
//! | `conjugated:n4:seed7:a0.3` | `A(x) J₀ A(x)⁻¹`, `A = I + 0.3 P(x)`          |
//! | `s6`                       | octonionic structure on S⁶, north-pole chart  |
//! | `s6-south`                 | same structure, south-pole chart              |
//! | `euclid:n4`                | identity metric                               |
//! | `round:s6`                 | round metric in stereographic coordinates     |
//! | `spd:n4:seed11`            | `B(x)ᵀ B(x) + 0.1 I`, `B` affine in x         |

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{BoxDomain, MetricField, TensorField11};
use crate::error::{Error, Result};
use crate::octonion;

pub const MAX_STANDARD_DIM: usize = 16;
/// Half-width of the coordinate box used by the flat structures.
pub const FLAT_HALF_WIDTH: f64 = 1.0;
/// Half-width of the stereographic coordinate box; keeps away from the
/// projection pole, which sits at infinity in the chart.
pub const S6_HALF_WIDTH: f64 = 2.0;
/// Regularization added to `BᵀB` in the random metrics.
pub const SPD_EPSILON: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct StructureSpec {
    pub id: String,
    pub chart_id: String,
    pub dim: usize,
    pub j: TensorField11,
    pub domain: BoxDomain,
    /// Documentation only: whether N is expected to vanish identically.
    pub integrable_expected: bool,
    pub provenance: String,
}

#[derive(Debug, Clone)]
pub struct MetricSpec {
    pub id: String,
    pub dim: usize,
    pub g: MetricField,
    pub domain: Option<BoxDomain>,
}

/// The constant complex structure with 2×2 blocks `[[0, −1], [1, 0]]`.
pub fn standard_matrix(n: usize) -> Result<DMatrix<f64>> {
    if n % 2 != 0 || n == 0 {
        return Err(Error::Dimension(n));
    }
    let mut j0 = DMatrix::zeros(n, n);
    for b in 0..n / 2 {
        j0[(2 * b + 1, 2 * b)] = 1.0;
        j0[(2 * b, 2 * b + 1)] = -1.0;
    }
    Ok(j0)
}

fn flat_chart(n: usize) -> String {
    format!("R{n}")
}

pub fn standard_j(n: usize) -> Result<StructureSpec> {
    if n > MAX_STANDARD_DIM {
        return Err(Error::Dimension(n));
    }
    let j0 = standard_matrix(n)?;
    let domain = BoxDomain::cube(n, FLAT_HALF_WIDTH);
    Ok(StructureSpec {
        id: format!("standard:n{n}"),
        chart_id: flat_chart(n),
        dim: n,
        j: TensorField11::constant(j0).with_domain(domain.clone()),
        domain,
        integrable_expected: true,
        provenance: "flat complex structure of C^(n/2)".into(),
    })
}

/// Matrix-valued polynomial of degree ≤ 2 in x.
#[derive(Debug, Clone)]
struct MatrixPoly {
    constant: DMatrix<f64>,
    linear: Vec<DMatrix<f64>>,
    /// Coefficient of `x_i x_j`, `i ≤ j`.
    quadratic: Vec<(usize, usize, DMatrix<f64>)>,
}

impl MatrixPoly {
    fn random(n: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut draw = || DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
        let constant = draw();
        let linear = (0..n).map(|_| draw()).collect();
        let mut quadratic = Vec::new();
        for i in 0..n {
            for j in i..n {
                quadratic.push((i, j, draw()));
            }
        }
        Self {
            constant,
            linear,
            quadratic,
        }
    }

    fn terms_mut(&mut self) -> impl Iterator<Item = &mut DMatrix<f64>> {
        std::iter::once(&mut self.constant)
            .chain(self.linear.iter_mut())
            .chain(self.quadratic.iter_mut().map(|(_, _, m)| m))
    }

    fn terms(&self) -> impl Iterator<Item = &DMatrix<f64>> {
        std::iter::once(&self.constant)
            .chain(self.linear.iter())
            .chain(self.quadratic.iter().map(|(_, _, m)| m))
    }

    /// Upper bound on `sup ‖P(x)‖₂` over `[-1, 1]^n`, via the Frobenius norm
    /// of the entrywise bound `Σ |coefficients|`.
    fn sup_bound_on_unit_cube(&self) -> f64 {
        let n = self.constant.nrows();
        let mut entry_bound = DMatrix::<f64>::zeros(n, n);
        for m in self.terms() {
            entry_bound += m.abs();
        }
        entry_bound.norm()
    }

    fn eval(&self, x: &[f64]) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (i, m) in self.linear.iter().enumerate() {
            out += m * x[i];
        }
        for (i, j, m) in &self.quadratic {
            out += m * (x[*i] * x[*j]);
        }
        out
    }

    fn partial(&self, x: &[f64], dir: usize) -> DMatrix<f64> {
        let mut out = self.linear[dir].clone();
        for (i, j, m) in &self.quadratic {
            let d = match (*i == dir, *j == dir) {
                (true, true) => 2.0 * x[dir],
                (true, false) => x[*j],
                (false, true) => x[*i],
                (false, false) => continue,
            };
            out += m * d;
        }
        out
    }
}

/// `J(x) = A(x) J₀ A(x)⁻¹` with `A(x) = I + amplitude·P(x)` on `(-1, 1)^n`.
///
/// `P` is a degree-2 matrix polynomial with seeded coefficients in
/// `[-1, 1]`, rescaled so that its operator norm is at most 1 on the unit
/// cube. With `amplitude < 1`, `A` is then invertible on the whole domain.
pub fn conjugated_j(n: usize, seed: u64, amplitude: f64) -> Result<StructureSpec> {
    let j0 = standard_matrix(n)?;
    if !(amplitude > 0.0 && amplitude <= 0.5) {
        return Err(Error::Construction(format!(
            "amplitude {amplitude} outside (0, 0.5]"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut poly = MatrixPoly::random(n, &mut rng);
    let bound = poly.sup_bound_on_unit_cube();
    for m in poly.terms_mut() {
        *m /= bound;
    }
    let sup = amplitude * poly.sup_bound_on_unit_cube();
    if sup >= 1.0 {
        return Err(Error::Construction(format!(
            "perturbation norm bound {sup} does not keep A(x) invertible"
        )));
    }

    let poly = Arc::new(poly);
    let a_inv = {
        let poly = poly.clone();
        move |x: &[f64]| -> (DMatrix<f64>, DMatrix<f64>) {
            let a = DMatrix::identity(n, n) + poly.eval(x) * amplitude;
            let inv = a
                .clone()
                .try_inverse()
                .expect("A(x) is invertible on the domain by the norm bound");
            (a, inv)
        }
    };
    let a_inv = Arc::new(a_inv);

    let value = {
        let (a_inv, j0) = (a_inv.clone(), j0.clone());
        move |x: &[f64]| {
            let (a, inv) = a_inv(x);
            a * &j0 * inv
        }
    };
    let partials = {
        let (a_inv, j0, poly) = (a_inv.clone(), j0.clone(), poly.clone());
        move |x: &[f64]| {
            let (a, inv) = a_inv(x);
            let j = &a * &j0 * &inv;
            // ∂J = [∂A A⁻¹, J]
            (0..n)
                .map(|dir| {
                    let b = poly.partial(x, dir) * amplitude * &inv;
                    &b * &j - &j * &b
                })
                .collect()
        }
    };
    let domain = BoxDomain::cube(n, FLAT_HALF_WIDTH);
    Ok(StructureSpec {
        id: format!("conjugated:n{n}:seed{seed}:a{amplitude}"),
        chart_id: flat_chart(n),
        dim: n,
        j: TensorField11::new(n, value)
            .with_partials(partials)
            .with_domain(domain.clone()),
        domain,
        integrable_expected: n == 2,
        provenance: "conjugation of the flat structure by a polynomial frame field".into(),
    })
}

/// Which pole the stereographic chart projects from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pole {
    North,
    South,
}

impl Pole {
    fn sign(self) -> f64 {
        match self {
            Pole::North => 1.0,
            Pole::South => -1.0,
        }
    }
}

/// Inverse stereographic map `u ↦ p ∈ S⁶ ⊂ R⁷` and its differential
/// `D = dp/du` (7×6). The pole is `±e_7`.
pub fn stereographic_lift(u: &[f64], pole: Pole) -> (DVector<f64>, DMatrix<f64>) {
    let sign = pole.sign();
    let r2: f64 = u.iter().map(|v| v * v).sum();
    let s = 1.0 + r2;
    let mut p = DVector::zeros(7);
    for a in 0..6 {
        p[a] = 2.0 * u[a] / s;
    }
    p[6] = sign * (r2 - 1.0) / s;
    let mut d = DMatrix::zeros(7, 6);
    for a in 0..6 {
        for i in 0..6 {
            let delta = if a == i { 1.0 } else { 0.0 };
            d[(a, i)] = 2.0 * delta / s - 4.0 * u[a] * u[i] / (s * s);
        }
    }
    for i in 0..6 {
        d[(6, i)] = sign * 4.0 * u[i] / (s * s);
    }
    (p, d)
}

/// `∂_m D` for the differential returned by [`stereographic_lift`].
fn stereographic_second(u: &[f64], pole: Pole, m: usize) -> DMatrix<f64> {
    let sign = pole.sign();
    let r2: f64 = u.iter().map(|v| v * v).sum();
    let s = 1.0 + r2;
    let (s2, s3) = (s * s, s * s * s);
    let kd = |a: usize, b: usize| if a == b { 1.0 } else { 0.0 };
    let mut out = DMatrix::zeros(7, 6);
    for a in 0..6 {
        for i in 0..6 {
            out[(a, i)] = -4.0 * kd(a, i) * u[m] / s2
                - 4.0 * (kd(a, m) * u[i] + u[a] * kd(i, m)) / s2
                + 16.0 * u[a] * u[i] * u[m] / s3;
        }
    }
    for i in 0..6 {
        out[(6, i)] = sign * (4.0 * kd(i, m) / s2 - 16.0 * u[i] * u[m] / s3);
    }
    out
}

/// The octonionic almost-complex structure on S⁶ in a stereographic chart:
/// `J_p(v) = p × v` pulled back through the chart, i.e.
/// `J(u) = λ⁻² Dᵀ C(p) D` where `C(p)` is the cross-product matrix and
/// `λ = 2 / (1 + |u|²)` is the conformal factor of the chart (`DᵀD = λ² I`).
pub fn s6_octonion_j_in_chart(pole: Pole) -> StructureSpec {
    let value = move |u: &[f64]| {
        let (p, d) = stereographic_lift(u, pole);
        let s = 1.0 + u.iter().map(|v| v * v).sum::<f64>();
        d.transpose() * octonion::cross_matrix(&p) * &d * (s * s / 4.0)
    };
    let partials = move |u: &[f64]| {
        let (p, d) = stereographic_lift(u, pole);
        let s = 1.0 + u.iter().map(|v| v * v).sum::<f64>();
        let c = octonion::cross_matrix(&p);
        let core = d.transpose() * &c * &d;
        (0..6)
            .map(|m| {
                let dd = stereographic_second(u, pole, m);
                let dc = octonion::cross_matrix(&d.column(m).into_owned());
                let d_core = dd.transpose() * &c * &d
                    + d.transpose() * dc * &d
                    + d.transpose() * &c * &dd;
                &core * (s * u[m]) + d_core * (s * s / 4.0)
            })
            .collect()
    };
    let domain = BoxDomain::cube(6, S6_HALF_WIDTH);
    let (id, chart) = match pole {
        Pole::North => ("s6", "s6-north"),
        Pole::South => ("s6-south", "s6-south"),
    };
    StructureSpec {
        id: id.into(),
        chart_id: chart.into(),
        dim: 6,
        j: TensorField11::new(6, value)
            .with_partials(partials)
            .with_domain(domain.clone()),
        domain,
        integrable_expected: false,
        provenance: "Kirchhoff's structure: left multiplication by p in the imaginary octonions"
            .into(),
    }
}

pub fn s6_octonion_j() -> StructureSpec {
    s6_octonion_j_in_chart(Pole::North)
}

pub fn euclidean_metric(n: usize) -> Result<MetricSpec> {
    if n == 0 {
        return Err(Error::Dimension(0));
    }
    Ok(MetricSpec {
        id: format!("euclid:n{n}"),
        dim: n,
        g: MetricField::euclidean(n),
        domain: None,
    })
}

/// Pullback of the ambient metric of R⁷ under the inverse stereographic
/// map: `4 / (1 + |u|²)² · I`.
pub fn round_metric_s6() -> MetricSpec {
    let factor = |u: &[f64]| {
        let s = 1.0 + u.iter().map(|v| v * v).sum::<f64>();
        4.0 / (s * s)
    };
    MetricSpec {
        id: "round:s6".into(),
        dim: 6,
        g: MetricField::new(6, move |u| DMatrix::identity(6, 6) * factor(u))
            .with_inverse(move |u| DMatrix::identity(6, 6) / factor(u)),
        domain: None,
    }
}

/// `B(x)ᵀ B(x) + 0.1 I` with `B(x) = B₀ + Σ x_i B_i`, entries seeded in
/// `[-1, 1]`.
pub fn random_spd_metric(n: usize, seed: u64) -> Result<MetricSpec> {
    if n == 0 {
        return Err(Error::Dimension(0));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..=1.0));
    let b0 = draw();
    let b1: Vec<DMatrix<f64>> = (0..n).map(|_| draw()).collect();
    let g = MetricField::new(n, move |x| {
        let mut b = b0.clone();
        for (i, m) in b1.iter().enumerate() {
            b += m * x[i];
        }
        b.transpose() * &b + DMatrix::identity(n, n) * SPD_EPSILON
    });
    Ok(MetricSpec {
        id: format!("spd:n{n}:seed{seed}"),
        dim: n,
        g,
        domain: None,
    })
}

fn parse_tagged<T: std::str::FromStr>(field: &str, tag: &str, id: &str) -> Result<T> {
    field
        .strip_prefix(tag)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Config(format!("cannot parse `{field}` in id `{id}` (expected {tag}<value>)")))
}

pub fn structure_by_id(id: &str) -> Result<StructureSpec> {
    let parts: Vec<&str> = id.split(':').collect();
    match parts.as_slice() {
        ["standard", n] => standard_j(parse_tagged(n, "n", id)?),
        ["conjugated", n, seed, amp] => conjugated_j(
            parse_tagged(n, "n", id)?,
            parse_tagged(seed, "seed", id)?,
            parse_tagged(amp, "a", id)?,
        ),
        ["s6"] => Ok(s6_octonion_j()),
        ["s6-south"] => Ok(s6_octonion_j_in_chart(Pole::South)),
        _ => Err(Error::Config(format!("unknown structure id `{id}`"))),
    }
}

pub fn metric_by_id(id: &str) -> Result<MetricSpec> {
    let parts: Vec<&str> = id.split(':').collect();
    match parts.as_slice() {
        ["euclid", n] => euclidean_metric(parse_tagged(n, "n", id)?),
        ["round", "s6"] => Ok(round_metric_s6()),
        ["spd", n, seed] => random_spd_metric(parse_tagged(n, "n", id)?, parse_tagged(seed, "seed", id)?),
        _ => Err(Error::Config(format!("unknown metric id `{id}`"))),
    }
}

/// Id patterns with one concrete example each, for `njsq list`.
pub fn catalog() -> (Vec<(&'static str, &'static str)>, Vec<(&'static str, &'static str)>) {
    let structures = vec![
        ("standard:n<even n, 2..16>", "standard:n4"),
        ("conjugated:n<even n>:seed<u64>:a<amplitude in (0,0.5]>", "conjugated:n4:seed7:a0.3"),
        ("s6", "s6"),
        ("s6-south", "s6-south"),
    ];
    let metrics = vec![
        ("euclid:n<n>", "euclid:n4"),
        ("round:s6", "round:s6"),
        ("spd:n<n>:seed<u64>", "spd:n4:seed11"),
    ];
    (structures, metrics)
}
