//! Points, chart domains and the pointwise-evaluable fields everything else
//! is computed from.
//!
//! Fields are closures over chart coordinates. Evaluation validates the point
//! (length, finiteness, domain membership) before calling the closure, so a
//! bad point surfaces as an [`Error`] rather than a NaN further down.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

pub type VectorFn = dyn Fn(&[f64]) -> DVector<f64> + Send + Sync;
pub type MatrixFn = dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync;
/// Returns one matrix per coordinate direction.
pub type MatrixPartialsFn = dyn Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    pub chart_id: String,
    pub coords: Vec<f64>,
}

impl ChartPoint {
    pub fn new(chart_id: impl Into<String>, coords: Vec<f64>) -> Result<Self> {
        if let Some(bad) = coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate {bad}")));
        }
        Ok(Self {
            chart_id: chart_id.into(),
            coords,
        })
    }

    pub fn origin(chart_id: impl Into<String>, dim: usize) -> Self {
        Self {
            chart_id: chart_id.into(),
            coords: vec![0.0; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Copy of this point moved by `delta` along coordinate `axis`.
    pub fn shifted(&self, axis: usize, delta: f64) -> Self {
        let mut coords = self.coords.clone();
        coords[axis] += delta;
        Self {
            chart_id: self.chart_id.clone(),
            coords,
        }
    }

    fn validate(&self, dim: usize, domain: Option<&BoxDomain>) -> Result<()> {
        check_len(dim, self.coords.len())?;
        if let Some(bad) = self.coords.iter().find(|c| !c.is_finite()) {
            return Err(Error::Domain(format!("non-finite coordinate {bad}")));
        }
        if let Some(domain) = domain {
            if !domain.contains(&self.coords) {
                return Err(Error::Domain(format!(
                    "point {:?} lies outside the chart domain {domain}",
                    self.coords
                )));
            }
        }
        Ok(())
    }
}

/// Open box `(lo_i, hi_i)` in R^n.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxDomain {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxDomain {
    pub fn cube(dim: usize, half_width: f64) -> Self {
        Self {
            lo: vec![-half_width; dim],
            hi: vec![half_width; dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim()
            && x
                .iter()
                .zip(self.lo.iter().zip(&self.hi))
                .all(|(&v, (&lo, &hi))| v > lo && v < hi)
    }

    /// Concentric sub-box with every side scaled by `1 - fraction`.
    pub fn shrunk(&self, fraction: f64) -> Self {
        let (lo, hi) = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(&lo, &hi)| {
                let mid = 0.5 * (lo + hi);
                let half = 0.5 * (hi - lo) * (1.0 - fraction);
                (mid - half, mid + half)
            })
            .unzip();
        Self { lo, hi }
    }
}

impl fmt::Display for BoxDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sides: Vec<String> = self
            .lo
            .iter()
            .zip(&self.hi)
            .map(|(lo, hi)| format!("({lo}, {hi})"))
            .collect();
        write!(f, "{}", sides.join(" x "))
    }
}

/// A smooth vector field. The Jacobian, when present, has entry `(k, j)`
/// equal to `∂_j X^k`.
#[derive(Clone)]
pub struct VectorField {
    dim: usize,
    domain: Option<BoxDomain>,
    value: Arc<VectorFn>,
    jacobian: Option<Arc<MatrixFn>>,
}

impl fmt::Debug for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VectorField")
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("analytic", &self.jacobian.is_some())
            .finish()
    }
}

impl VectorField {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            domain: None,
            value: Arc::new(value),
            jacobian: None,
        }
    }

    pub fn with_jacobian(
        mut self,
        jacobian: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.jacobian = Some(Arc::new(jacobian));
        self
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        self.domain = Some(domain);
        self
    }

    /// The field with the same value `v` everywhere.
    pub fn constant(v: DVector<f64>) -> Self {
        let dim = v.len();
        let value = v.clone();
        Self::new(dim, move |_| value.clone()).with_jacobian(move |_| DMatrix::zeros(dim, dim))
    }

    /// Coordinate frame field `∂_i`.
    pub fn coordinate(dim: usize, i: usize) -> Self {
        Self::constant(DVector::from_fn(dim, |k, _| if k == i { 1.0 } else { 0.0 }))
    }

    /// `x ↦ v + M (x - p) + ½ q ‖x - p‖²`: an extension of `v` at `p` that is
    /// neither constant nor linear.
    pub fn affine_quadratic_extension(
        base: &ChartPoint,
        v: DVector<f64>,
        linear: DMatrix<f64>,
        quadratic: DVector<f64>,
    ) -> Self {
        let dim = v.len();
        let p0 = base.coords.clone();
        let p1 = base.coords.clone();
        let (lin, quad) = (linear.clone(), quadratic.clone());
        Self::new(dim, move |x| {
            let d = DVector::from_fn(dim, |i, _| x[i] - p0[i]);
            &v + &lin * &d + &quad * (0.5 * d.norm_squared())
        })
        .with_jacobian(move |x| {
            let d = DVector::from_fn(dim, |i, _| x[i] - p1[i]);
            &linear + &quadratic * d.transpose()
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Option<&BoxDomain> {
        self.domain.as_ref()
    }

    pub fn has_jacobian(&self) -> bool {
        self.jacobian.is_some()
    }

    pub fn value_at(&self, p: &ChartPoint) -> Result<DVector<f64>> {
        p.validate(self.dim, self.domain.as_ref())?;
        Ok((self.value)(&p.coords))
    }

    pub fn jacobian_at(&self, p: &ChartPoint) -> Result<Option<DMatrix<f64>>> {
        p.validate(self.dim, self.domain.as_ref())?;
        Ok(self.jacobian.as_ref().map(|jac| jac(&p.coords)))
    }

    /// The field `x ↦ J(x) X(x)`. Analytic when both factors are.
    pub fn apply_tensor(&self, j: &TensorField11) -> Result<VectorField> {
        check_len(self.dim, j.dim())?;
        let dim = self.dim;
        let domain = match (&self.domain, j.domain()) {
            (Some(d), _) => Some(d.clone()),
            (None, d) => d.cloned(),
        };
        let (xv, jv) = (self.value.clone(), j.value.clone());
        let mut out = VectorField::new(dim, move |x| jv(x) * xv(x));
        out.domain = domain;
        if let (Some(xjac), Some(jpart)) = (self.jacobian.clone(), j.partials.clone()) {
            let (xv, jv) = (self.value.clone(), j.value.clone());
            out.jacobian = Some(Arc::new(move |x: &[f64]| {
                // ∂_p (J X)^k = (∂_p J)^k_i X^i + J^k_i ∂_p X^i
                let xval = xv(x);
                let mut jac = jv(x) * xjac(x);
                for (p, dj) in jpart(x).iter().enumerate() {
                    let col = dj * &xval;
                    let mut target = jac.column_mut(p);
                    target += col;
                }
                jac
            }));
        }
        Ok(out)
    }
}

/// A smooth (1,1) tensor field. `value` has entry `(k, i)` equal to `J^k_i`;
/// `partials[p]` holds `∂_p J^k_i`.
#[derive(Clone)]
pub struct TensorField11 {
    dim: usize,
    domain: Option<BoxDomain>,
    value: Arc<MatrixFn>,
    partials: Option<Arc<MatrixPartialsFn>>,
}

impl fmt::Debug for TensorField11 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TensorField11")
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("analytic", &self.partials.is_some())
            .finish()
    }
}

impl TensorField11 {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            domain: None,
            value: Arc::new(value),
            partials: None,
        }
    }

    pub fn with_partials(
        mut self,
        partials: impl Fn(&[f64]) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    ) -> Self {
        self.partials = Some(Arc::new(partials));
        self
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        self.domain = Some(domain);
        self
    }

    /// Same field with its analytic partials dropped; derivatives then have
    /// to come from finite differences.
    pub fn without_partials(&self) -> Self {
        Self {
            partials: None,
            ..self.clone()
        }
    }

    pub fn constant(m: DMatrix<f64>) -> Self {
        let dim = m.nrows();
        Self::new(dim, move |_| m.clone())
            .with_partials(move |_| vec![DMatrix::zeros(dim, dim); dim])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Option<&BoxDomain> {
        self.domain.as_ref()
    }

    pub fn has_partials(&self) -> bool {
        self.partials.is_some()
    }

    pub fn value_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        p.validate(self.dim, self.domain.as_ref())?;
        Ok((self.value)(&p.coords))
    }

    pub fn partials_at(&self, p: &ChartPoint) -> Result<Option<Vec<DMatrix<f64>>>> {
        p.validate(self.dim, self.domain.as_ref())?;
        Ok(self.partials.as_ref().map(|f| f(&p.coords)))
    }

    /// Largest entry of `J² + I` at `p`.
    pub fn square_deviation(&self, p: &ChartPoint) -> Result<f64> {
        let j = self.value_at(p)?;
        let sq = &j * &j + DMatrix::identity(self.dim, self.dim);
        Ok(sq.amax())
    }
}

/// A Riemannian metric field `g_ij`, with an optional closed-form inverse.
#[derive(Clone)]
pub struct MetricField {
    dim: usize,
    domain: Option<BoxDomain>,
    value: Arc<MatrixFn>,
    inverse: Option<Arc<MatrixFn>>,
}

impl fmt::Debug for MetricField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MetricField")
            .field("dim", &self.dim)
            .field("domain", &self.domain)
            .field("closed_form_inverse", &self.inverse.is_some())
            .finish()
    }
}

impl MetricField {
    pub fn new(
        dim: usize,
        value: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            domain: None,
            value: Arc::new(value),
            inverse: None,
        }
    }

    pub fn with_inverse(
        mut self,
        inverse: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.inverse = Some(Arc::new(inverse));
        self
    }

    pub fn with_domain(mut self, domain: BoxDomain) -> Self {
        self.domain = Some(domain);
        self
    }

    pub fn euclidean(dim: usize) -> Self {
        Self::new(dim, move |_| DMatrix::identity(dim, dim))
            .with_inverse(move |_| DMatrix::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn domain(&self) -> Option<&BoxDomain> {
        self.domain.as_ref()
    }

    pub fn value_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        p.validate(self.dim, self.domain.as_ref())?;
        Ok((self.value)(&p.coords))
    }

    /// `g^{ij}`. Uses the closed form when one was supplied, otherwise a
    /// Cholesky solve, which also rejects matrices that are not SPD.
    pub fn inverse_at(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        match &self.inverse {
            Some(inv) => {
                p.validate(self.dim, self.domain.as_ref())?;
                Ok(inv(&p.coords))
            }
            None => {
                let g = self.value_at(p)?;
                let chol = g.cholesky().ok_or_else(|| {
                    Error::Metric(format!("metric is not positive definite at {:?}", p.coords))
                })?;
                Ok(chol.inverse())
            }
        }
    }

    /// Verifies symmetry, positive-definiteness and `g g⁻¹ = I` at `p`;
    /// returns the largest residual among those tests.
    pub fn spd_residual(&self, p: &ChartPoint) -> Result<f64> {
        let g = self.value_at(p)?;
        if g.clone().cholesky().is_none() {
            return Err(Error::Metric(format!(
                "Cholesky factorization failed at {:?}",
                p.coords
            )));
        }
        let inv = self.inverse_at(p)?;
        let symmetry = (&g - g.transpose()).amax() / g.amax().max(1.0);
        let identity = (&g * &inv - DMatrix::identity(self.dim, self.dim)).amax();
        Ok(symmetry.max(identity))
    }

    /// A g-orthonormal frame at `p`, as the columns of the returned matrix.
    pub fn orthonormal_frame(&self, p: &ChartPoint) -> Result<DMatrix<f64>> {
        let g = self.value_at(p)?;
        let chol = g.cholesky().ok_or_else(|| {
            Error::Metric(format!("metric is not positive definite at {:?}", p.coords))
        })?;
        // g = L Lᵀ, so F = L⁻ᵀ gives Fᵀ g F = I.
        let l_inv = chol
            .l()
            .try_inverse()
            .ok_or_else(|| Error::Metric("singular Cholesky factor".into()))?;
        Ok(l_inv.transpose())
    }
}

/// `Σ g_ij(p) v^i w^j`.
pub fn evaluate_pairing(
    g: &MetricField,
    p: &ChartPoint,
    v: &DVector<f64>,
    w: &DVector<f64>,
) -> Result<f64> {
    check_len(g.dim(), v.len())?;
    check_len(g.dim(), w.len())?;
    let gm = g.value_at(p)?;
    Ok(pair_with(&gm, v, w))
}

pub(crate) fn pair_with(gm: &DMatrix<f64>, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
    // Averaging both orders makes the result exactly symmetric in rounding.
    0.5 * (gm * w).dot(v) + 0.5 * (gm * v).dot(w)
}

/// `g(X,X) g(Z,Z) − g(X,Z)²`, the squared area of the parallelogram on X, Z.
pub fn gram_determinant(
    g: &MetricField,
    p: &ChartPoint,
    x: &DVector<f64>,
    z: &DVector<f64>,
) -> Result<f64> {
    check_len(g.dim(), x.len())?;
    check_len(g.dim(), z.len())?;
    let gm = g.value_at(p)?;
    Ok(gram_with(&gm, x, z))
}

pub(crate) fn gram_with(gm: &DMatrix<f64>, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
    let xx = pair_with(gm, x, x);
    let zz = pair_with(gm, z, z);
    let xz = pair_with(gm, x, z);
    // Cauchy-Schwarz: clamp rounding noise below zero.
    (xx * zz - xz * xz).max(0.0)
}
