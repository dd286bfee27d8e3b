//! The seven-dimensional cross product from imaginary octonion
//! multiplication.
//!
//! Basis `e_1..e_7` of the imaginary octonions, stored 0-based. Each triple
//! `(a, b, c)` below means `e_a e_b = e_c`, and cyclic permutations of it;
//! this is the Fano-plane labelling of Cayley's multiplication table
//! (`e1e2=e3, e1e4=e5, e1e7=e6, e2e4=e6, e2e5=e7, e3e4=e7, e3e6=e5`).
//! Every unordered pair of distinct units lies in exactly one triple.

use nalgebra::{DMatrix, DVector};

pub const TRIPLES: [(usize, usize, usize); 7] = [
    (0, 1, 2),
    (0, 3, 4),
    (0, 6, 5),
    (1, 3, 5),
    (1, 4, 6),
    (2, 3, 6),
    (2, 5, 4),
];

/// Structure constants `c[a][b][c]` with `e_a × e_b = Σ_c c[a][b][c] e_c`;
/// totally antisymmetric.
pub fn structure_constants() -> [[[f64; 7]; 7]; 7] {
    let mut c = [[[0.0; 7]; 7]; 7];
    for &(a, b, d) in &TRIPLES {
        for (x, y, z) in [(a, b, d), (b, d, a), (d, a, b)] {
            c[x][y][z] = 1.0;
            c[y][x][z] = -1.0;
        }
    }
    c
}

pub fn cross(x: &DVector<f64>, y: &DVector<f64>) -> DVector<f64> {
    cross_matrix(x) * y
}

/// The matrix of `v ↦ x × v`.
pub fn cross_matrix(x: &DVector<f64>) -> DMatrix<f64> {
    let c = structure_constants();
    DMatrix::from_fn(7, 7, |k, j| (0..7).map(|i| c[i][j][k] * x[i]).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(rng: &mut ChaCha8Rng) -> DVector<f64> {
        DVector::from_fn(7, |_, _| rng.gen_range(-1.0..1.0))
    }

    #[test]
    fn every_pair_in_one_triple() {
        for a in 0..7 {
            for b in (a + 1)..7 {
                let hits = TRIPLES
                    .iter()
                    .filter(|&&(x, y, z)| [x, y, z].contains(&a) && [x, y, z].contains(&b))
                    .count();
                assert_eq!(hits, 1, "pair ({a},{b})");
            }
        }
    }

    #[test]
    fn cross_product_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..50 {
            let x = random_vec(&mut rng);
            let y = random_vec(&mut rng);
            let xy = cross(&x, &y);
            // orthogonal to both factors
            assert!(xy.dot(&x).abs() < 1e-12);
            assert!(xy.dot(&y).abs() < 1e-12);
            // |x × y|² = |x|²|y|² − (x·y)²
            let lhs = xy.norm_squared();
            let rhs = x.norm_squared() * y.norm_squared() - x.dot(&y).powi(2);
            assert!((lhs - rhs).abs() < 1e-12, "{lhs} vs {rhs}");
            // x × (x × y) = (x·y) x − |x|² y
            let lhs = cross(&x, &xy);
            let rhs = &x * x.dot(&y) - &y * x.norm_squared();
            assert!((lhs - rhs).amax() < 1e-12);
        }
    }
}
