use thiserror::Error;

/// Errors raised by credal-set construction, updating and analysis.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CredalError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("distribution needs at least 2 outcomes, got {0}")]
    TooFewOutcomes(usize),

    #[error("weight {index} is negative or not finite ({value})")]
    NegativeWeight { index: usize, value: f64 },

    #[error("weights sum to {sum}, which is not within 1e-6 of 1")]
    Normalization { sum: f64 },

    #[error("entry {index} = {value} violates the positivity floor {floor}")]
    Positivity { index: usize, value: f64, floor: f64 },

    #[error("credal set has no extreme points")]
    EmptyCredal,

    #[error("evidence class is empty")]
    EmptyEvidence,

    #[error(
        "pessimistic update is not additive for extreme {extreme}, likelihood {k}: \
         atoms {atoms:?} are minimised by different evidence"
    )]
    AdditivityViolation {
        extreme: usize,
        k: usize,
        atoms: Vec<usize>,
    },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("lower envelope is empty: rule images {lo} > {hi} do not intersect")]
    EmptyEnvelope { lo: f64, hi: f64 },

    #[error("sampler could not produce a pair within t = {t} (bin {bin}) after {attempts} attempts")]
    Sampling { bin: usize, t: f64, attempts: usize },

    #[error("trace error: {0}")]
    Trace(String),

    #[error("sandwich inclusion violated at step {step}: {detail}")]
    SandwichViolation { step: usize, detail: String },

    #[error("rule {rule} is not monotone: f([{inner_lo}, {inner_hi}]) is not inside f([{outer_lo}, {outer_hi}])")]
    NotMonotone {
        rule: usize,
        inner_lo: f64,
        inner_hi: f64,
        outer_lo: f64,
        outer_hi: f64,
    },

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error("at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<CredalError>,
    },
}

pub type Result<T> = std::result::Result<T, CredalError>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(CredalError::Dimension { expected, found })
    }
}
