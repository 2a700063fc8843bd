//! Conjugate normal-normal updates of a finitely generated set of Gaussian
//! priors on a location parameter, with unit observation variance.

use rand_distr::StandardNormal;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{Dist, PositiveDist};
use crate::error::{CredalError, Result};
use crate::sampling::rng_for;

/// Sample size used when a configuration does not give one.
pub const DEFAULT_SAMPLE_SIZE: usize = 20;
pub const DEFAULT_ROUNDS: usize = 50;

/// A normal prior `N(mu, tau2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParam")]
pub struct GaussianParam {
    mu: f64,
    tau2: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParam {
    mu: f64,
    tau2: f64,
}

impl TryFrom<RawParam> for GaussianParam {
    type Error = CredalError;

    fn try_from(raw: RawParam) -> Result<Self> {
        GaussianParam::new(raw.mu, raw.tau2)
    }
}

impl GaussianParam {
    pub fn new(mu: f64, tau2: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(CredalError::Parameter(format!("mean must be finite, got {mu}")));
        }
        if !(tau2 > 0.0 && tau2.is_finite()) {
            return Err(CredalError::Parameter(format!("variance must be positive, got {tau2}")));
        }
        Ok(Self { mu, tau2 })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn tau2(&self) -> f64 {
        self.tau2
    }

    pub fn density(&self, x: f64) -> f64 {
        let z = x - self.mu;
        (-z * z / (2.0 * self.tau2)).exp() / (2.0 * std::f64::consts::PI * self.tau2).sqrt()
    }
}

/// Convex hull of finitely many Gaussian priors, tracked by their parameters.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GaussianCredalSet {
    params: Vec<GaussianParam>,
    round: usize,
}

impl GaussianCredalSet {
    pub fn new(params: Vec<GaussianParam>) -> Result<Self> {
        if params.is_empty() {
            return Err(CredalError::EmptyCredal);
        }
        Ok(Self { params, round: 0 })
    }

    pub fn params(&self) -> &[GaussianParam] {
        &self.params
    }

    pub fn round(&self) -> usize {
        self.round
    }

    pub fn update(&self, batch: &DataBatch) -> Self {
        Self {
            params: self.params.iter().map(|p| conjugate_update(p, batch)).collect(),
            round: self.round + 1,
        }
    }
}

/// Summary statistics of `n` draws from `N(theta_star, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataBatch {
    pub n: usize,
    pub sum_x: f64,
    pub seed: u64,
    pub theta_star: f64,
}

impl DataBatch {
    /// Draws the batch from stream 0 of `seed`.
    pub fn generate(n: usize, theta_star: f64, seed: u64) -> Result<Self> {
        Self::generate_stream(n, theta_star, seed, 0)
    }

    fn generate_stream(n: usize, theta_star: f64, seed: u64, stream: u64) -> Result<Self> {
        if n == 0 {
            return Err(CredalError::Parameter("sample size must be at least 1".into()));
        }
        if !theta_star.is_finite() {
            return Err(CredalError::Parameter(format!("true mean must be finite, got {theta_star}")));
        }
        let mut rng = rng_for(seed, stream);
        let sum_x = (0..n)
            .map(|_| theta_star + rng.sample::<f64, _>(StandardNormal))
            .sum();
        Ok(Self { n, sum_x, seed, theta_star })
    }

    pub fn mean(&self) -> f64 {
        self.sum_x / self.n as f64
    }
}

/// Posterior of `N(mu, tau2)` after observing `batch` with unit noise variance.
pub fn conjugate_update(p: &GaussianParam, batch: &DataBatch) -> GaussianParam {
    let tau2 = 1.0 / (1.0 / p.tau2 + batch.n as f64);
    let mu = tau2 * (p.mu / p.tau2 + batch.sum_x);
    GaussianParam { mu, tau2 }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IllustrationRow {
    pub round: usize,
    /// `(1/J) Σ_j ‖ξ_j(t) - ξ_j(t-1)‖²` with `ξ = (mu, tau2)`.
    pub avg_sq_diff: f64,
    pub params: Vec<GaussianParam>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IllustrationTrace {
    pub initial: Vec<GaussianParam>,
    pub rows: Vec<IllustrationRow>,
    /// Whether each round drew a new batch instead of reusing the given one.
    pub fresh_batches: bool,
}

/// Applies the conjugate update for `rounds` rounds and records the averaged
/// squared parameter movement per round.
///
/// By default every round reuses `batch`. With `fresh_batches`, round `t`
/// draws a new batch of the same size from stream `t` of the batch seed.
pub fn run_illustration(
    init: &GaussianCredalSet,
    batch: &DataBatch,
    rounds: usize,
    fresh_batches: bool,
) -> Result<IllustrationTrace> {
    if rounds == 0 {
        return Err(CredalError::Parameter("at least one round is required".into()));
    }
    let mut current = init.clone();
    let mut rows = Vec::with_capacity(rounds);
    for t in 1..=rounds {
        let data = if fresh_batches {
            DataBatch::generate_stream(batch.n, batch.theta_star, batch.seed, t as u64)?
        } else {
            *batch
        };
        let next = current.update(&data);
        let total: f64 = current
            .params
            .iter()
            .zip(&next.params)
            .map(|(a, b)| (b.mu - a.mu).powi(2) + (b.tau2 - a.tau2).powi(2))
            .sum();
        rows.push(IllustrationRow {
            round: t,
            avg_sq_diff: total / current.params.len() as f64,
            params: next.params.clone(),
        });
        current = next;
    }
    Ok(IllustrationTrace { initial: init.params.clone(), rows, fresh_batches })
}

/// Gaussian density on `grid`, clamped below at `floor` and renormalized.
pub fn discretize(p: &GaussianParam, grid: &[f64], floor: f64) -> Result<PositiveDist> {
    if grid.len() < 2 || grid.iter().any(|x| !x.is_finite()) || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CredalError::Parameter(
            "grid must have at least 2 finite, strictly increasing points".into(),
        ));
    }
    if !(floor > 0.0) {
        return Err(CredalError::Parameter(format!("floor must be positive, got {floor}")));
    }
    let raw = grid.iter().map(|&x| p.density(x).max(floor)).collect();
    PositiveDist::strict(Dist::from_unnormalized(raw)?)
}
