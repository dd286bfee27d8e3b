//! The Nijenhuis tensor of an almost-complex structure and the quantities
//! built from it: the strong square `N(N(X,Y),Z)`, the four-slot metric
//! tensor `L`, its diagonal `ℓ`, the double metric trace `T`, the
//! polarization that recovers `L` from `ℓ`, and the plane invariant
//! `ℓ / gram`.
//!
//! Index conventions: `J` is stored with entry `(k, i) = J^k_i`, the
//! partials as `dj[p][(k, i)] = ∂_p J^k_i`, and the Nijenhuis components as
//! `N^k_{ij}` with `N(∂_i, ∂_j) = N^k_{ij} ∂_k`.
//!
//! The component formula is the coordinate expansion of
//! `N(X,Y) = [JX,JY] − J[X,JY] − J[JX,Y] − [X,Y]` on coordinate fields:
//!
//! ```text
//! N^k_{ij} = J^p_i ∂_p J^k_j − J^p_j ∂_p J^k_i − J^k_p ∂_i J^p_j + J^k_p ∂_j J^p_i
//! ```
//!
//! Note the index placement: the contracted index `p` runs over the upper
//! slot of the undifferentiated `J` in the first pair of terms and over the
//! lower slot in the second pair. Writing the prefactor as `J^k_i` instead
//! (so that `k` appears three times) gives an ill-formed expression.
//! [`nijenhuis_bracket_oracle`] evaluates the bracket definition directly
//! and is the independent check on the expansion above.

use nalgebra::{DMatrix, DVector};

use crate::chart::{gram_with, pair_with, ChartPoint, MetricField, TensorField11, VectorField};
use crate::diff::{lie_bracket_at, tensor_partials, DerivativeStrategy};
use crate::error::{check_len, Error, Result};

/// Relative tolerance on `J² + I` before the structure is rejected.
pub const STRUCTURE_TOLERANCE: f64 = 1e-8;

/// `N^k_{ij}` at a single point, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct NijenhuisComponents {
    dim: usize,
    values: Vec<f64>,
}

impl NijenhuisComponents {
    fn zeros(dim: usize) -> Self {
        Self {
            dim,
            values: vec![0.0; dim * dim * dim],
        }
    }

    #[inline]
    fn index(&self, k: usize, i: usize, j: usize) -> usize {
        (k * self.dim + i) * self.dim + j
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `N^k_{ij}`.
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.values[self.index(k, i, j)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `N(X, Y)^k = N^k_{ij} X^i Y^j`, summed over `i < j` against
    /// `X^i Y^j − X^j Y^i` so that swapping the arguments negates the result
    /// exactly.
    pub fn apply(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        let n = self.dim;
        let wedge: Vec<(usize, f64)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .map(|(i, j)| (i * n + j, x[i] * y[j] - x[j] * y[i]))
            .filter(|&(_, w)| w != 0.0)
            .collect();
        DVector::from_fn(n, |k, _| {
            let block = &self.values[k * n * n..(k + 1) * n * n];
            wedge.iter().map(|&(ij, w)| block[ij] * w).sum()
        })
    }

    /// The vector `N(∂_i, ∂_j)`.
    pub fn frame_pair(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_fn(self.dim, |k, _| self.get(k, i, j))
    }
}

fn check_almost_complex(j: &DMatrix<f64>, p: &ChartPoint) -> Result<()> {
    let n = j.nrows();
    let deviation = (j * j + DMatrix::identity(n, n)).amax();
    let scale = j.amax().powi(2).max(1.0);
    if deviation > STRUCTURE_TOLERANCE * scale {
        return Err(Error::Structure {
            point: p.coords.clone(),
            deviation,
        });
    }
    Ok(())
}

/// Components from a value of `J` and its partials at one point.
pub fn components_from_jet(j: &DMatrix<f64>, dj: &[DMatrix<f64>]) -> NijenhuisComponents {
    let n = j.nrows();
    let mut out = NijenhuisComponents::zeros(n);
    for k in 0..n {
        for i in 0..n {
            for jj in (i + 1)..n {
                let mut acc = 0.0;
                for p in 0..n {
                    acc += j[(p, i)] * dj[p][(k, jj)] - j[(p, jj)] * dj[p][(k, i)]
                        - j[(k, p)] * dj[i][(p, jj)]
                        + j[(k, p)] * dj[jj][(p, i)];
                }
                let a = out.index(k, i, jj);
                let b = out.index(k, jj, i);
                out.values[a] = acc;
                out.values[b] = -acc;
            }
        }
    }
    out
}

/// `N^k_{ij}` of `j` at `p` via the coordinate formula. Rejects fields that
/// fail `J² = −I` at `p`.
pub fn nijenhuis_components(
    j: &TensorField11,
    p: &ChartPoint,
    strategy: &DerivativeStrategy,
) -> Result<NijenhuisComponents> {
    let jv = j.value_at(p)?;
    check_almost_complex(&jv, p)?;
    let dj = tensor_partials(j, p, strategy)?;
    Ok(components_from_jet(&jv, &dj))
}

/// `N(X, Y)` at `p` for tangent vectors `X`, `Y`.
pub fn nijenhuis_at(
    j: &TensorField11,
    p: &ChartPoint,
    x: &DVector<f64>,
    y: &DVector<f64>,
    strategy: &DerivativeStrategy,
) -> Result<DVector<f64>> {
    check_len(j.dim(), x.len())?;
    check_len(j.dim(), y.len())?;
    Ok(nijenhuis_components(j, p, strategy)?.apply(x, y))
}

/// `[JX,JY] − J[X,JY] − J[JX,Y] − [X,Y]` at `p`, evaluated from the bracket
/// definition on the given field extensions.
pub fn nijenhuis_bracket_oracle(
    j: &TensorField11,
    x: &VectorField,
    y: &VectorField,
    p: &ChartPoint,
    strategy: &DerivativeStrategy,
) -> Result<DVector<f64>> {
    let jx = x.apply_tensor(j)?;
    let jy = y.apply_tensor(j)?;
    let jp = j.value_at(p)?;
    let b1 = lie_bracket_at(&jx, &jy, p, strategy)?;
    let b2 = lie_bracket_at(x, &jy, p, strategy)?;
    let b3 = lie_bracket_at(&jx, y, p, strategy)?;
    let b4 = lie_bracket_at(x, y, p, strategy)?;
    Ok(b1 - &jp * b2 - &jp * b3 - b4)
}

/// Every frame pair `N(∂_i, ∂_j)` from the bracket oracle, packed like
/// [`NijenhuisComponents`].
pub fn oracle_components(
    j: &TensorField11,
    p: &ChartPoint,
    strategy: &DerivativeStrategy,
) -> Result<NijenhuisComponents> {
    let n = j.dim();
    let mut out = NijenhuisComponents::zeros(n);
    for i in 0..n {
        for jj in 0..n {
            if i == jj {
                continue;
            }
            let v = nijenhuis_bracket_oracle(
                j,
                &VectorField::coordinate(n, i),
                &VectorField::coordinate(n, jj),
                p,
                strategy,
            )?;
            for k in 0..n {
                let idx = out.index(k, i, jj);
                out.values[idx] = v[k];
            }
        }
    }
    Ok(out)
}

/// `N(N(X, Y), Z)` at `p`.
pub fn n_squared(
    j: &TensorField11,
    p: &ChartPoint,
    x: &DVector<f64>,
    y: &DVector<f64>,
    z: &DVector<f64>,
    strategy: &DerivativeStrategy,
) -> Result<DVector<f64>> {
    check_len(j.dim(), z.len())?;
    let inner = nijenhuis_at(j, p, x, y, strategy)?;
    nijenhuis_at(j, p, &inner, z, strategy)
}

/// Everything needed to evaluate the metric squares at one point: `J`,
/// `N^k_{ij}`, `g_ij` and `g^{ij}`.
#[derive(Debug, Clone)]
pub struct SquareContext {
    point: ChartPoint,
    j: DMatrix<f64>,
    n: NijenhuisComponents,
    g: DMatrix<f64>,
    g_inv: DMatrix<f64>,
}

impl SquareContext {
    pub fn new(
        j: &TensorField11,
        g: &MetricField,
        p: &ChartPoint,
        strategy: &DerivativeStrategy,
    ) -> Result<Self> {
        check_len(j.dim(), g.dim())?;
        let jv = j.value_at(p)?;
        check_almost_complex(&jv, p)?;
        let dj = tensor_partials(j, p, strategy)?;
        let n = components_from_jet(&jv, &dj);
        let g_val = g.value_at(p)?;
        let g_inv = g.inverse_at(p)?;
        if !g_inv.iter().all(|v| v.is_finite()) {
            return Err(Error::Metric(format!("singular metric at {:?}", p.coords)));
        }
        Ok(Self {
            point: p.clone(),
            j: jv,
            n,
            g: g_val,
            g_inv,
        })
    }

    pub fn from_parts(
        point: ChartPoint,
        j: DMatrix<f64>,
        n: NijenhuisComponents,
        g: DMatrix<f64>,
    ) -> Result<Self> {
        let g_inv = g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Metric("metric is not positive definite".into()))?
            .inverse();
        Ok(Self {
            point,
            j,
            n,
            g,
            g_inv,
        })
    }

    pub fn dim(&self) -> usize {
        self.j.nrows()
    }

    pub fn point(&self) -> &ChartPoint {
        &self.point
    }

    pub fn j(&self) -> &DMatrix<f64> {
        &self.j
    }

    pub fn components(&self) -> &NijenhuisComponents {
        &self.n
    }

    pub fn metric(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn nijenhuis(&self, x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
        self.n.apply(x, y)
    }

    pub fn n_squared(&self, x: &DVector<f64>, y: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        self.n.apply(&self.n.apply(x, y), z)
    }

    pub fn pairing(&self, v: &DVector<f64>, w: &DVector<f64>) -> f64 {
        pair_with(&self.g, v, w)
    }

    pub fn gram(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        gram_with(&self.g, x, z)
    }

    /// `⟨J N(N(a, b), c), d⟩_g`.
    pub fn jn2_pairing(
        &self,
        a: &DVector<f64>,
        b: &DVector<f64>,
        c: &DVector<f64>,
        d: &DVector<f64>,
    ) -> f64 {
        self.pairing(&(&self.j * self.n_squared(a, b, c)), d)
    }

    /// `L(X, Z, Y, W)`: the average of the four pairings
    /// `⟨JN(N(X,Z),Y),W⟩`, `⟨JN(N(Y,Z),X),W⟩`, `⟨JN(N(X,W),Y),Z⟩`,
    /// `⟨JN(N(Y,W),X),Z⟩`.
    pub fn big_l(
        &self,
        x: &DVector<f64>,
        z: &DVector<f64>,
        y: &DVector<f64>,
        w: &DVector<f64>,
    ) -> f64 {
        0.25 * (self.jn2_pairing(x, z, y, w)
            + self.jn2_pairing(y, z, x, w)
            + self.jn2_pairing(x, w, y, z)
            + self.jn2_pairing(y, w, x, z))
    }

    /// `ℓ(X, Z) = L(X, Z, X, Z)`.
    pub fn ell(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        self.big_l(x, z, x, z)
    }

    /// The unsymmetrized form `⟨J N(N(X,Z),X), Z⟩_g`, which equals `ℓ(X,Z)`.
    pub fn ell_shortcut(&self, x: &DVector<f64>, z: &DVector<f64>) -> f64 {
        self.jn2_pairing(x, z, x, z)
    }

    /// `L` on the coordinate frame, entry `[((i*n + k)*n + j)*n + l] =
    /// L(e_i, e_k, e_j, e_l)`.
    pub fn big_l_tensor(&self) -> Vec<f64> {
        let n = self.dim();
        let idx3 = |a: usize, b: usize, c: usize| (a * n + b) * n + c;
        // N²^s_{ikj} = N^s_{rj} N^r_{ik}
        let mut nn = vec![0.0; n * n * n * n];
        for s in 0..n {
            for i in 0..n {
                for k in 0..n {
                    for jj in 0..n {
                        let mut acc = 0.0;
                        for r in 0..n {
                            acc += self.n.get(s, r, jj) * self.n.get(r, i, k);
                        }
                        nn[s * n * n * n + idx3(i, k, jj)] = acc;
                    }
                }
            }
        }
        // Q_{ikjl} = g_{tl} J^t_s N²^s_{ikj}
        let gj = self.g.transpose() * &self.j;
        let mut q = vec![0.0; n * n * n * n];
        for i in 0..n {
            for k in 0..n {
                for jj in 0..n {
                    for l in 0..n {
                        let mut acc = 0.0;
                        for s in 0..n {
                            acc += gj[(l, s)] * nn[s * n * n * n + idx3(i, k, jj)];
                        }
                        q[idx3(i, k, jj) * n + l] = acc;
                    }
                }
            }
        }
        let idx4 = |a: usize, b: usize, c: usize, d: usize| ((a * n + b) * n + c) * n + d;
        let mut l_tensor = vec![0.0; n * n * n * n];
        for i in 0..n {
            for k in 0..n {
                for jj in 0..n {
                    for l in 0..n {
                        l_tensor[idx4(i, k, jj, l)] = 0.25
                            * (q[idx4(i, k, jj, l)]
                                + q[idx4(jj, k, i, l)]
                                + q[idx4(i, l, jj, k)]
                                + q[idx4(jj, l, i, k)]);
                    }
                }
            }
        }
        l_tensor
    }

    /// `T = Σ g^{ij} g^{kl} L(e_i, e_k, e_j, e_l)`.
    pub fn weak_t(&self) -> f64 {
        let n = self.dim();
        let l = self.big_l_tensor();
        let mut t = 0.0;
        for i in 0..n {
            for k in 0..n {
                for jj in 0..n {
                    let gij = self.g_inv[(i, jj)];
                    if gij == 0.0 {
                        continue;
                    }
                    for ll in 0..n {
                        t += gij * self.g_inv[(k, ll)] * l[((i * n + k) * n + jj) * n + ll];
                    }
                }
            }
        }
        t
    }

    /// `L(X,Z,Y,W)` recovered from `ℓ` alone: `¼ ∂²/∂s∂t ℓ(X+sY, Z+tW)` at
    /// zero, evaluated with the unit 2×2 central stencil. `ℓ(X+sY, Z+tW)` has
    /// degree two in each of s and t, so the stencil is exact.
    pub fn polarize_l(
        &self,
        x: &DVector<f64>,
        z: &DVector<f64>,
        y: &DVector<f64>,
        w: &DVector<f64>,
    ) -> f64 {
        let (xp, xm) = (x + y, x - y);
        let (zp, zm) = (z + w, z - w);
        let mixed =
            0.25 * (self.ell(&xp, &zp) - self.ell(&xm, &zp) - self.ell(&xp, &zm) + self.ell(&xm, &zm));
        0.25 * mixed
    }

    /// `ℓ(X,Z) / (g(X,X) g(Z,Z) − g(X,Z)²)`.
    pub fn plane_invariant(&self, x: &DVector<f64>, z: &DVector<f64>) -> Result<f64> {
        let gram = self.gram(x, z);
        let threshold = 1e-10 * self.pairing(x, x) * self.pairing(z, z);
        if gram <= threshold || gram == 0.0 {
            return Err(Error::DegeneratePlane { gram, threshold });
        }
        Ok(self.ell(x, z) / gram)
    }

    /// `Σ_{i<j} ℓ(f_i, f_j)` over a g-orthonormal frame `f`.
    pub fn frame_sum(&self) -> Result<f64> {
        let n = self.dim();
        let chol = self
            .g
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Metric("metric is not positive definite".into()))?;
        let frame = chol
            .l()
            .try_inverse()
            .ok_or_else(|| Error::Metric("singular Cholesky factor".into()))?
            .transpose();
        let mut sum = 0.0;
        for i in 0..n {
            for jj in (i + 1)..n {
                sum += self.ell(&frame.column(i).into_owned(), &frame.column(jj).into_owned());
            }
        }
        Ok(sum)
    }
}

fn context(
    j: &TensorField11,
    g: &MetricField,
    p: &ChartPoint,
    vectors: &[&DVector<f64>],
    strategy: &DerivativeStrategy,
) -> Result<SquareContext> {
    for v in vectors {
        check_len(j.dim(), v.len())?;
    }
    SquareContext::new(j, g, p, strategy)
}

pub fn big_l(
    j: &TensorField11,
    g: &MetricField,
    p: &ChartPoint,
    [x, z, y, w]: [&DVector<f64>; 4],
    strategy: &DerivativeStrategy,
) -> Result<f64> {
    Ok(context(j, g, p, &[x, z, y, w], strategy)?.big_l(x, z, y, w))
}

pub fn ell(
    j: &TensorField11,
    g: &MetricField,
    p: &ChartPoint,
    x: &DVector<f64>,
    z: &DVector<f64>,
    strategy: &DerivativeStrategy,
) -> Result<f64> {
    Ok(context(j, g, p, &[x, z], strategy)?.ell(x, z))
}

pub fn weak_t(
    j: &TensorField11,
    g: &MetricField,
    p: &ChartPoint,
    strategy: &DerivativeStrategy,
) -> Result<f64> {
    Ok(SquareContext::new(j, g, p, strategy)?.weak_t())
}

pub fn polarize_l(
    j: &TensorField11,
    g: &MetricField,
    p: &ChartPoint,
    [x, z, y, w]: [&DVector<f64>; 4],
    strategy: &DerivativeStrategy,
) -> Result<f64> {
    Ok(context(j, g, p, &[x, z, y, w], strategy)?.polarize_l(x, z, y, w))
}

pub fn plane_invariant(
    j: &TensorField11,
    g: &MetricField,
    p: &ChartPoint,
    x: &DVector<f64>,
    z: &DVector<f64>,
    strategy: &DerivativeStrategy,
) -> Result<f64> {
    context(j, g, p, &[x, z], strategy)?.plane_invariant(x, z)
}
