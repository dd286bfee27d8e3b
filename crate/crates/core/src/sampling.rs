//! Seeded sampling of chart points and tangent vectors.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::chart::{BoxDomain, ChartPoint};

/// Fraction by which a chart domain is shrunk before sampling.
pub const DOMAIN_MARGIN: f64 = 0.1;

/// Deterministic RNG for a named task. The stream depends only on `seed`
/// and the labels, not on scheduling or process.
pub fn task_rng(seed: u64, labels: &[&str]) -> ChaCha8Rng {
    // FNV-1a over the labels, folded into the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for label in labels {
        for b in label.bytes().chain(std::iter::once(0xff)) {
            h ^= u64::from(b);
            h = h.wrapping_mul(0x0000_0100_0000_01b3);
        }
    }
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&h.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Uniform point in `domain` shrunk by [`DOMAIN_MARGIN`].
pub fn sample_point<R: Rng>(rng: &mut R, chart_id: &str, domain: &BoxDomain) -> ChartPoint {
    let inner = domain.shrunk(DOMAIN_MARGIN);
    let coords = inner
        .lo
        .iter()
        .zip(&inner.hi)
        .map(|(&lo, &hi)| rng.gen_range(lo..hi))
        .collect();
    ChartPoint {
        chart_id: chart_id.to_string(),
        coords,
    }
}

/// Uniform vector in `[-1, 1]^n`.
pub fn sample_vector<R: Rng>(rng: &mut R, n: usize) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.gen_range(-1.0..=1.0))
}
