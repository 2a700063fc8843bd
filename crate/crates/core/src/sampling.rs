//! Seeded random generators shared by the Monte Carlo harnesses.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::credal::CredalSet;
use crate::dist::{Dist, PositiveDist};
use crate::error::Result;

/// Entries of random interior distributions are clamped to at least this value
/// before renormalization.
pub const RANDOM_FLOOR: f64 = 1e-6;

/// Independent stream `stream` of the generator seeded by `seed`.
///
/// Per-trial streams make Monte Carlo results independent of scheduling.
pub fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Symmetric Dirichlet(1) draw, clamped to [`RANDOM_FLOOR`] and renormalized.
pub fn random_positive_dist<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Result<PositiveDist> {
    let raw: Vec<f64> = (0..dim)
        .map(|_| rng.sample::<f64, _>(Exp1).max(RANDOM_FLOOR))
        .collect();
    PositiveDist::strict(Dist::from_unnormalized(raw)?)
}

/// Reduced credal set spanned by `points` random interior distributions.
pub fn random_credal_set<R: Rng + ?Sized>(dim: usize, points: usize, rng: &mut R) -> Result<CredalSet> {
    let pts = (0..points.max(1))
        .map(|_| random_positive_dist(dim, rng).map(PositiveDist::into_dist))
        .collect::<Result<Vec<_>>>()?;
    CredalSet::reduce(pts)
}

/// Uniform draw from `[lo, hi)`.
pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
