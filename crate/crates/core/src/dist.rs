//! Probability vectors over a finite outcome space and the two ground metrics
//! used throughout the crate: total variation and the Hilbert projective metric.
//!
//! The dominating measure on the parameter space is the counting measure, so
//! densities and probability weights coincide.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, CredalError, Result};

/// Inputs whose weights sum further than this from 1 are rejected.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Floor used when a [`PositiveDist`] is built without an explicit one.
pub const DEFAULT_FLOOR: f64 = 1e-9;

/// Negative weights down to this magnitude are treated as rounding noise.
const NEGATIVE_NOISE: f64 = 1e-12;

/// A probability vector on `dim >= 2` outcomes.
///
/// Weights are nonnegative and renormalized on construction, so they sum to 1
/// up to floating-point rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Dist {
    weights: Vec<f64>,
}

impl Dist {
    /// Builds a distribution from weights that already sum to 1 (within 1e-6).
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        let sum = validate_weights(&weights)?;
        if (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(CredalError::Normalization { sum });
        }
        Ok(Self::normalized(weights, sum))
    }

    /// Builds a distribution from arbitrary nonnegative weights with positive
    /// total mass by dividing through by the total.
    pub fn from_unnormalized(weights: Vec<f64>) -> Result<Self> {
        let sum = validate_weights(&weights)?;
        if !(sum > 0.0) || !sum.is_finite() {
            return Err(CredalError::Normalization { sum });
        }
        Ok(Self::normalized(weights, sum))
    }

    fn normalized(mut weights: Vec<f64>, sum: f64) -> Self {
        for w in &mut weights {
            *w = (*w).max(0.0) / sum;
        }
        Self { weights }
    }

    pub fn uniform(dim: usize) -> Result<Self> {
        Self::from_unnormalized(vec![1.0; dim])
    }

    /// The point mass on outcome `index`.
    pub fn vertex(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(CredalError::Parameter(format!(
                "vertex index {index} out of range for dimension {dim}"
            )));
        }
        let mut w = vec![0.0; dim];
        w[index] = 1.0;
        Self::new(w)
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// `(1 - t) * self + t * other`.
    pub fn mix(&self, other: &Dist, t: f64) -> Result<Dist> {
        check_dim(self.dim(), other.dim())?;
        if !(0.0..=1.0).contains(&t) {
            return Err(CredalError::Parameter(format!("mixing weight {t} outside [0, 1]")));
        }
        let w = self
            .weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (1.0 - t) * a + t * b)
            .collect();
        Dist::from_unnormalized(w)
    }

    pub fn min_weight(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

impl TryFrom<Vec<f64>> for Dist {
    type Error = CredalError;

    fn try_from(weights: Vec<f64>) -> Result<Self> {
        Dist::new(weights)
    }
}

impl From<Dist> for Vec<f64> {
    fn from(d: Dist) -> Self {
        d.weights
    }
}

fn validate_weights(weights: &[f64]) -> Result<f64> {
    if weights.len() < 2 {
        return Err(CredalError::TooFewOutcomes(weights.len()));
    }
    let mut sum = 0.0;
    for (index, &value) in weights.iter().enumerate() {
        if !value.is_finite() || value < -NEGATIVE_NOISE {
            return Err(CredalError::NegativeWeight { index, value });
        }
        sum += value.max(0.0);
    }
    Ok(sum)
}

/// A distribution whose every weight is at least `floor > 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PositiveDist {
    dist: Dist,
    floor: f64,
}

impl PositiveDist {
    /// Promotes `dist` using [`DEFAULT_FLOOR`].
    pub fn new(dist: Dist) -> Result<Self> {
        Self::with_floor(dist, DEFAULT_FLOOR)
    }

    pub fn with_floor(dist: Dist, floor: f64) -> Result<Self> {
        if !(floor > 0.0) || !floor.is_finite() {
            return Err(CredalError::Parameter(format!("floor must be positive, got {floor}")));
        }
        if let Some((index, &value)) = dist.weights.iter().enumerate().find(|(_, &w)| w < floor) {
            return Err(CredalError::Positivity { index, value, floor });
        }
        Ok(Self { dist, floor })
    }

    /// Promotes any strictly positive distribution, taking its smallest weight
    /// as the floor.
    pub fn strict(dist: Dist) -> Result<Self> {
        let min = dist.min_weight();
        if !(min > 0.0) {
            let index = dist.weights.iter().position(|&w| w <= 0.0).unwrap_or(0);
            return Err(CredalError::Positivity { index, value: min, floor: 0.0 });
        }
        Ok(Self { dist, floor: min })
    }

    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        Self::new(Dist::new(weights)?)
    }

    pub fn floor(&self) -> f64 {
        self.floor
    }

    pub fn weights(&self) -> &[f64] {
        self.dist.weights()
    }

    pub fn dim(&self) -> usize {
        self.dist.dim()
    }

    pub fn as_dist(&self) -> &Dist {
        &self.dist
    }

    pub fn into_dist(self) -> Dist {
        self.dist
    }
}

/// A strictly positive likelihood vector `l(E | theta_i)` with tight bounds
/// `alpha = min`, `beta = max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Likelihood {
    values: Vec<f64>,
    alpha: f64,
    beta: f64,
}

impl Likelihood {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(CredalError::TooFewOutcomes(values.len()));
        }
        for (index, &value) in values.iter().enumerate() {
            if !(value > 0.0) || !value.is_finite() {
                return Err(CredalError::Positivity { index, value, floor: 0.0 });
            }
        }
        let alpha = values.iter().copied().fold(f64::INFINITY, f64::min);
        let beta = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Ok(Self { values, alpha, beta })
    }

    pub fn constant(dim: usize, value: f64) -> Result<Self> {
        Self::new(vec![value; dim])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// `beta / alpha`.
    pub fn ratio(&self) -> f64 {
        self.beta / self.alpha
    }

    /// The same likelihood multiplied by `factor > 0`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.values.iter().map(|v| v * factor).collect())
    }
}

impl TryFrom<Vec<f64>> for Likelihood {
    type Error = CredalError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Likelihood::new(values)
    }
}

impl From<Likelihood> for Vec<f64> {
    fn from(l: Likelihood) -> Self {
        l.values
    }
}

/// Total variation distance `½ Σ |p_i - q_i|`.
pub fn tv_distance(p: &Dist, q: &Dist) -> Result<f64> {
    check_dim(p.dim(), q.dim())?;
    Ok(0.5 * p.weights.iter().zip(&q.weights).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

/// Hilbert projective distance `log max(p/q) - log min(p/q)`.
pub fn hilbert_distance(p: &PositiveDist, q: &PositiveDist) -> Result<f64> {
    hilbert_distance_raw(p.weights(), q.weights())
}

/// Hilbert projective distance between two strictly positive vectors that
/// need not be normalized. Invariant under positive scaling of either input.
pub fn hilbert_distance_raw(p: &[f64], q: &[f64]) -> Result<f64> {
    check_dim(p.len(), q.len())?;
    for v in [p, q] {
        if let Some((index, &value)) = v.iter().enumerate().find(|(_, &x)| !(x > 0.0)) {
            return Err(CredalError::Positivity { index, value, floor: 0.0 });
        }
    }
    // Differences of logs keep the result exactly symmetric in (p, q).
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for (a, b) in p.iter().zip(q) {
        let r = a.ln() - b.ln();
        lo = lo.min(r);
        hi = hi.max(r);
    }
    Ok(hi - lo)
}

/// Bayes update of `p` by the likelihood `ell`: weights `ell_i p_i / Σ ell_j p_j`.
///
/// The result carries the floor `alpha * p.floor / beta`.
pub fn bayes_tilt(p: &PositiveDist, ell: &Likelihood) -> Result<PositiveDist> {
    check_dim(ell.dim(), p.dim())?;
    let raw: Vec<f64> = p.weights().iter().zip(ell.values()).map(|(w, l)| w * l).collect();
    let dist = Dist::from_unnormalized(raw)?;
    // Leave room for one rounding step below the analytic bound.
    let floor = ell.alpha() * p.floor() / ell.beta() * (1.0 - 1e-12);
    PositiveDist::with_floor(dist, floor)
}

/// Expectation of `direction` under `p`.
pub fn support_value(p: &Dist, direction: &[f64]) -> Result<f64> {
    check_dim(p.dim(), direction.len())?;
    Ok(p.weights.iter().zip(direction).map(|(w, d)| w * d).sum())
}
