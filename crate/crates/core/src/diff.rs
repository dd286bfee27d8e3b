//! First partial derivatives of fields and pointwise Lie brackets.

use std::ops::{Div, Sub};
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chart::{BoxDomain, ChartPoint, MetricField, TensorField11, VectorField};
use crate::error::{check_len, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DerivativeMode {
    Analytic,
    CentralDifference,
}

impl FromStr for DerivativeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "analytic" => Ok(Self::Analytic),
            "fd" | "central_difference" => Ok(Self::CentralDifference),
            other => Err(Error::Usage(format!(
                "unknown derivative mode `{other}` (expected analytic or fd)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivativeStrategy {
    pub mode: DerivativeMode,
    /// Base step; the step along axis i is `h0 * max(1, |x_i|)`.
    pub h0: f64,
}

impl DerivativeStrategy {
    pub fn default_h0() -> f64 {
        f64::EPSILON.cbrt()
    }

    pub fn analytic() -> Self {
        Self {
            mode: DerivativeMode::Analytic,
            h0: Self::default_h0(),
        }
    }

    pub fn central() -> Self {
        Self {
            mode: DerivativeMode::CentralDifference,
            h0: Self::default_h0(),
        }
    }

    pub fn with_h0(mut self, h0: f64) -> Self {
        self.h0 = h0;
        self
    }

    pub fn step(&self, x: f64) -> f64 {
        self.h0 * x.abs().max(1.0)
    }

    pub fn is_analytic(&self) -> bool {
        self.mode == DerivativeMode::Analytic
    }
}

impl Default for DerivativeStrategy {
    fn default() -> Self {
        Self::analytic()
    }
}

/// Anything with a value at a chart point that can be differenced.
pub trait Differentiable {
    type Value: Clone + Sub<Output = Self::Value> + Div<f64, Output = Self::Value>;

    fn dim(&self) -> usize;
    fn domain(&self) -> Option<&BoxDomain>;
    fn eval(&self, p: &ChartPoint) -> Result<Self::Value>;
    /// `∂_i` of the value, if the field carries it in closed form.
    fn analytic_partial(&self, p: &ChartPoint, direction: usize) -> Result<Option<Self::Value>>;
}

impl Differentiable for VectorField {
    type Value = DVector<f64>;

    fn dim(&self) -> usize {
        VectorField::dim(self)
    }
    fn domain(&self) -> Option<&BoxDomain> {
        VectorField::domain(self)
    }
    fn eval(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        self.value_at(p)
    }
    fn analytic_partial(&self, p: &ChartPoint, direction: usize) -> Result<Option<DVector<f64>>> {
        Ok(self.jacobian_at(p)?.map(|j| j.column(direction).into_owned()))
    }
}

impl Differentiable for TensorField11 {
    type Value = DMatrix<f64>;

    fn dim(&self) -> usize {
        TensorField11::dim(self)
    }
    fn domain(&self) -> Option<&BoxDomain> {
        TensorField11::domain(self)
    }
    fn eval(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        self.value_at(p)
    }
    fn analytic_partial(&self, p: &ChartPoint, direction: usize) -> Result<Option<DMatrix<f64>>> {
        Ok(self.partials_at(p)?.map(|mut parts| parts.swap_remove(direction)))
    }
}

impl Differentiable for MetricField {
    type Value = DMatrix<f64>;

    fn dim(&self) -> usize {
        MetricField::dim(self)
    }
    fn domain(&self) -> Option<&BoxDomain> {
        MetricField::domain(self)
    }
    fn eval(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        self.value_at(p)
    }
    fn analytic_partial(&self, _p: &ChartPoint, _direction: usize) -> Result<Option<DMatrix<f64>>> {
        Ok(None)
    }
}

/// A black-box scalar field, mostly for user-supplied functions and tests.
pub struct ScalarField<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(&[f64]) -> f64> ScalarField<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(&[f64]) -> f64> Differentiable for ScalarField<F> {
    type Value = f64;

    fn dim(&self) -> usize {
        self.dim
    }
    fn domain(&self) -> Option<&BoxDomain> {
        None
    }
    fn eval(&self, p: &ChartPoint) -> Result<f64> {
        check_len(self.dim, p.dim())?;
        Ok((self.f)(&p.coords))
    }
    fn analytic_partial(&self, _p: &ChartPoint, _direction: usize) -> Result<Option<f64>> {
        Ok(None)
    }
}

/// `∂_direction` of `field` at `p`.
///
/// Analytic mode returns the stored partial and fails if the field has none.
/// Central mode returns `(f(p + h e_i) − f(p − h e_i)) / 2h`; both stencil
/// points must lie inside the field's domain.
pub fn partial_derivative<F: Differentiable + ?Sized>(
    field: &F,
    p: &ChartPoint,
    direction: usize,
    strategy: &DerivativeStrategy,
) -> Result<F::Value> {
    check_len(field.dim(), p.dim())?;
    if direction >= field.dim() {
        return Err(Error::Shape {
            expected: field.dim(),
            got: direction,
        });
    }
    match strategy.mode {
        DerivativeMode::Analytic => field.analytic_partial(p, direction)?.ok_or_else(|| {
            Error::Usage("analytic derivative requested but the field carries no partials".into())
        }),
        DerivativeMode::CentralDifference => {
            let h = strategy.step(p.coords[direction]);
            let plus = p.shifted(direction, h);
            let minus = p.shifted(direction, -h);
            if let Some(domain) = field.domain() {
                if !domain.contains(&plus.coords) || !domain.contains(&minus.coords) {
                    return Err(Error::Domain(format!(
                        "difference stencil at {:?} along axis {direction} leaves {domain}",
                        p.coords
                    )));
                }
            }
            // Use the representable step actually taken.
            let width = plus.coords[direction] - minus.coords[direction];
            Ok((field.eval(&plus)? - field.eval(&minus)?) / width)
        }
    }
}

/// Jacobian `(k, j) = ∂_j X^k` of a vector field.
pub fn vector_jacobian(
    x: &VectorField,
    p: &ChartPoint,
    strategy: &DerivativeStrategy,
) -> Result<DMatrix<f64>> {
    let n = x.dim();
    let mut jac = DMatrix::zeros(n, n);
    for j in 0..n {
        jac.set_column(j, &partial_derivative(x, p, j, strategy)?);
    }
    Ok(jac)
}

/// All first partials `∂_p J` of a (1,1) tensor field.
pub fn tensor_partials(
    j: &TensorField11,
    p: &ChartPoint,
    strategy: &DerivativeStrategy,
) -> Result<Vec<DMatrix<f64>>> {
    if strategy.is_analytic() {
        if let Some(parts) = j.partials_at(p)? {
            return Ok(parts);
        }
    }
    (0..j.dim())
        .map(|dir| partial_derivative(j, p, dir, strategy))
        .collect()
}

/// `[X, Y]^k = X^p ∂_p Y^k − Y^p ∂_p X^k` at `p`.
pub fn lie_bracket_at(
    x: &VectorField,
    y: &VectorField,
    p: &ChartPoint,
    strategy: &DerivativeStrategy,
) -> Result<DVector<f64>> {
    check_len(x.dim(), y.dim())?;
    let xv = x.value_at(p)?;
    let yv = y.value_at(p)?;
    let dx = vector_jacobian(x, p, strategy)?;
    let dy = vector_jacobian(y, p, strategy)?;
    Ok(dy * xv - dx * yv)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(coords: &[f64]) -> ChartPoint {
        ChartPoint::new("R", coords.to_vec()).unwrap()
    }

    #[test]
    fn constant_field_has_zero_derivative() {
        let v = DVector::from_vec(vec![1.5, -2.0, 3.0]);
        let field = VectorField::constant(v.clone());
        let field_fd = VectorField::new(3, move |_| v.clone());
        let p = pt(&[0.2, 0.4, -1.0]);
        for dir in 0..3 {
            let a = partial_derivative(&field, &p, dir, &DerivativeStrategy::analytic()).unwrap();
            let c = partial_derivative(&field_fd, &p, dir, &DerivativeStrategy::central()).unwrap();
            assert_eq!(a, DVector::zeros(3));
            assert_eq!(c, DVector::zeros(3));
        }
    }

    #[test]
    fn product_rule_example() {
        let f = ScalarField::new(2, |x: &[f64]| x[0] * x[1]);
        let d = partial_derivative(&f, &pt(&[2.0, 3.0]), 0, &DerivativeStrategy::central()).unwrap();
        assert!((d - 3.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn central_difference_of_cubic() {
        let f = ScalarField::new(1, |x: &[f64]| x[0].powi(3));
        let s = DerivativeStrategy::central().with_h0(1e-5);
        let d = partial_derivative(&f, &pt(&[1.0]), 0, &s).unwrap();
        // analytic: 3 x² = 3
        assert!((d - 3.0).abs() < 1e-9, "{d}");
    }

    #[test]
    fn central_difference_is_second_order() {
        // f = x³ + 2x⁴ at x = 0.7, f' = 3x² + 8x³
        let f = ScalarField::new(1, |x: &[f64]| x[0].powi(3) + 2.0 * x[0].powi(4));
        let exact = 3.0 * 0.49 + 8.0 * 0.343;
        let p = pt(&[0.7]);
        let err = |h0: f64| {
            let s = DerivativeStrategy::central().with_h0(h0);
            (partial_derivative(&f, &p, 0, &s).unwrap() - exact).abs()
        };
        let ratio = err(1e-2) / err(5e-3);
        assert!((3.5..=4.5).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn direction_out_of_range() {
        let f = ScalarField::new(2, |x: &[f64]| x[0]);
        let r = partial_derivative(&f, &pt(&[0.0, 0.0]), 2, &DerivativeStrategy::central());
        assert!(matches!(r, Err(Error::Shape { .. })));
    }

    #[test]
    fn stencil_must_stay_in_domain() {
        let field = VectorField::new(1, |x: &[f64]| DVector::from_vec(vec![x[0]]))
            .with_domain(BoxDomain::cube(1, 1.0));
        let p = pt(&[1.0 - 1e-7]);
        let r = partial_derivative(&field, &p, 0, &DerivativeStrategy::central());
        assert!(matches!(r, Err(Error::Domain(_))));
    }

    #[test]
    fn analytic_mode_needs_partials() {
        let field = VectorField::new(1, |x: &[f64]| DVector::from_vec(vec![x[0]]));
        let r = partial_derivative(&field, &pt(&[0.0]), 0, &DerivativeStrategy::analytic());
        assert!(matches!(r, Err(Error::Usage(_))));
    }

    #[test]
    fn coordinate_fields_commute() {
        let p = pt(&[0.1, 0.2, 0.3]);
        let b = lie_bracket_at(
            &VectorField::coordinate(3, 0),
            &VectorField::coordinate(3, 2),
            &p,
            &DerivativeStrategy::analytic(),
        )
        .unwrap();
        assert_eq!(b, DVector::zeros(3));
    }

    #[test]
    fn bracket_examples() {
        // X = x² ∂x, Y = ∂x on R¹ at x = 1.
        let x = VectorField::new(1, |c: &[f64]| DVector::from_vec(vec![c[0] * c[0]]))
            .with_jacobian(|c: &[f64]| DMatrix::from_element(1, 1, 2.0 * c[0]));
        let y = VectorField::coordinate(1, 0);
        let b = lie_bracket_at(&x, &y, &pt(&[1.0]), &DerivativeStrategy::analytic()).unwrap();
        assert_eq!(b[0], -2.0);

        // X = x ∂y, Y = ∂x on R².
        let x = VectorField::new(2, |c: &[f64]| DVector::from_vec(vec![0.0, c[0]]))
            .with_jacobian(|_| DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 0.0]));
        let y = VectorField::coordinate(2, 0);
        for s in [DerivativeStrategy::analytic(), DerivativeStrategy::central()] {
            let b = lie_bracket_at(&x, &y, &pt(&[0.4, -1.3]), &s).unwrap();
            assert!((b - DVector::from_vec(vec![0.0, -1.0])).amax() < 1e-10);
        }
    }
}
