//! Scenario files: TOML documents tagged by `kind`.
//!
//! Parsing rejects unknown keys and checks every vector against its type's
//! invariants. [`Scenario::validate`] then builds every rule and set the run
//! would use, so a scenario that validates only fails at run time for
//! reasons that depend on the computation itself.

use std::path::Path;

use credal_core::credal::IntervalCredal;
use credal_core::fixpoint::{DEFAULT_MAX_ITER, DEFAULT_TOLERANCE};
use credal_core::gaussian::{GaussianParam, DEFAULT_ROUNDS, DEFAULT_SAMPLE_SIZE};
use credal_core::rules::RuleSpec;
use credal_core::{CredalSet, Dist, Likelihood, SetMetric};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Iterate,
    Contract,
    Psi,
    Counterexample,
    Sandwich,
    Gaussian,
    Uniqueness,
}

impl Kind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Kind::Iterate => "iterate",
            Kind::Contract => "contract",
            Kind::Psi => "psi",
            Kind::Counterexample => "counterexample",
            Kind::Sandwich => "sandwich",
            Kind::Gaussian => "gaussian",
            Kind::Uniqueness => "uniqueness",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    Iterate(IterateScenario),
    Contract(ContractScenario),
    Psi(PsiScenario),
    Counterexample(CounterexampleScenario),
    Sandwich(SandwichScenario),
    Gaussian(GaussianScenario),
    Uniqueness(UniquenessScenario),
}

/// A starting set: explicit extreme points or a binary interval `[lo, hi]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SetSpec {
    Extremes(Vec<Dist>),
    Interval(IntervalCredal),
}

#[derive(Debug, Clone, PartialEq)]
pub enum BuiltSet {
    Credal(CredalSet),
    Interval(IntervalCredal),
}

impl SetSpec {
    pub fn build(&self, key: &str) -> Result<BuiltSet> {
        match self {
            SetSpec::Interval(i) => Ok(BuiltSet::Interval(*i)),
            SetSpec::Extremes(points) => CredalSet::reduce(points.clone())
                .map(BuiltSet::Credal)
                .map_err(|e| CliError::invalid(key, e)),
        }
    }

    fn dim(&self) -> Option<usize> {
        match self {
            SetSpec::Extremes(points) => points.first().map(Dist::dim),
            SetSpec::Interval(_) => None,
        }
    }

    fn is_interval(&self) -> bool {
        matches!(self, SetSpec::Interval(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IterateScenario {
    #[serde(default)]
    pub seed: u64,
    pub rule: RuleSpec,
    pub start: SetSpec,
    /// Defaults to `interval` for interval starts and `tv_hausdorff` otherwise.
    #[serde(default)]
    pub metric: Option<SetMetric>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
    /// Known fixed point; `d_limit` is measured against it when given.
    #[serde(default)]
    pub fixed_point: Option<SetSpec>,
    /// When given, a geometric rate fit is checked against this bound.
    #[serde(default)]
    pub tau_bound: Option<f64>,
    #[serde(default = "yes")]
    pub expect_convergence: bool,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ContractMode {
    /// One report per likelihood, on pairs of points.
    #[default]
    Point,
    /// One report for all likelihoods together, on pairs of finite point sets.
    Set,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContractScenario {
    #[serde(default)]
    pub seed: u64,
    pub likelihoods: Vec<Likelihood>,
    pub trials: usize,
    #[serde(default)]
    pub mode: ContractMode,
    #[serde(default = "default_set_size")]
    pub max_set_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SamplerSpec {
    /// Every pair starts from this set.
    Fixed(SetSpec),
    /// Every pair starts from a fresh random interior set.
    Random { dim: usize, points: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PsiScenario {
    #[serde(default)]
    pub seed: u64,
    pub rule: RuleSpec,
    pub sampler: SamplerSpec,
    #[serde(default)]
    pub metric: Option<SetMetric>,
    pub t_grid: Vec<f64>,
    pub pairs_per_bin: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CounterexampleScenario {
    #[serde(default)]
    pub seed: u64,
    pub delta: f64,
    pub start: IntervalCredal,
    #[serde(default = "default_counterexample_iter")]
    pub max_iter: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Lower end `a` of the witness intervals `[a, 1 - delta - 1/n]`.
    #[serde(default = "default_witness_lo")]
    pub witness_lo: f64,
    #[serde(default = "default_witness_n")]
    pub witness_n: Vec<usize>,
    #[serde(default = "default_probe_trials")]
    pub probe_trials: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SandwichScenario {
    #[serde(default)]
    pub seed: u64,
    pub rules: Vec<RuleSpec>,
    pub schedule: Vec<usize>,
    pub start: IntervalCredal,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianScenario {
    #[serde(default)]
    pub seed: u64,
    pub priors: Vec<GaussianParam>,
    #[serde(default)]
    pub theta_star: f64,
    #[serde(default = "default_sample_size")]
    pub n: usize,
    #[serde(default = "default_rounds")]
    pub rounds: usize,
    /// Draw a new batch each round instead of reusing one.
    #[serde(default)]
    pub fresh_batches: bool,
    /// The final averaged difference must fall below this.
    #[serde(default = "default_gaussian_target")]
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum StartsSpec {
    Given(Vec<SetSpec>),
    Random { count: usize, dim: usize, points: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UniquenessScenario {
    #[serde(default)]
    pub seed: u64,
    pub rule: RuleSpec,
    pub starts: StartsSpec,
    #[serde(default)]
    pub metric: Option<SetMetric>,
    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_tol() -> f64 {
    DEFAULT_TOLERANCE
}
fn default_max_iter() -> usize {
    DEFAULT_MAX_ITER
}
fn default_counterexample_iter() -> usize {
    1000
}
fn default_set_size() -> usize {
    5
}
fn default_witness_lo() -> f64 {
    0.3
}
fn default_witness_n() -> Vec<usize> {
    vec![100, 1000, 10_000]
}
fn default_probe_trials() -> usize {
    200
}
fn default_sample_size() -> usize {
    DEFAULT_SAMPLE_SIZE
}
fn default_rounds() -> usize {
    DEFAULT_ROUNDS
}
fn default_gaussian_target() -> f64 {
    1e-8
}
fn yes() -> bool {
    true
}

/// Command-line values that replace scenario fields.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub max_iter: Option<usize>,
    pub tol: Option<f64>,
}

impl Overrides {
    pub fn is_empty(&self) -> bool {
        self.seed.is_none() && self.max_iter.is_none() && self.tol.is_none()
    }
}

/// A parsed scenario and the SHA-256 of its file contents.
#[derive(Debug, Clone)]
pub struct LoadedScenario {
    pub scenario: Scenario,
    pub sha256: String,
}

pub fn load_scenario(path: &Path) -> Result<LoadedScenario> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), source: e })?;
    let scenario = parse_scenario(&text).map_err(|e| e.at_path(path))?;
    scenario.validate()?;
    Ok(LoadedScenario { scenario, sha256: hex::encode(Sha256::digest(text.as_bytes())) })
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    toml::from_str(text).map_err(|e| CliError::Parse { path: None, message: e.to_string() })
}

impl Scenario {
    pub fn kind(&self) -> Kind {
        match self {
            Scenario::Iterate(_) => Kind::Iterate,
            Scenario::Contract(_) => Kind::Contract,
            Scenario::Psi(_) => Kind::Psi,
            Scenario::Counterexample(_) => Kind::Counterexample,
            Scenario::Sandwich(_) => Kind::Sandwich,
            Scenario::Gaussian(_) => Kind::Gaussian,
            Scenario::Uniqueness(_) => Kind::Uniqueness,
        }
    }

    pub fn seed(&self) -> u64 {
        match self {
            Scenario::Iterate(s) => s.seed,
            Scenario::Contract(s) => s.seed,
            Scenario::Psi(s) => s.seed,
            Scenario::Counterexample(s) => s.seed,
            Scenario::Sandwich(s) => s.seed,
            Scenario::Gaussian(s) => s.seed,
            Scenario::Uniqueness(s) => s.seed,
        }
    }

    /// Applies command-line overrides. Returns the names of flags that have
    /// no meaning for this kind.
    pub fn apply_overrides(&mut self, o: &Overrides) -> Vec<&'static str> {
        let mut ignored = Vec::new();
        let seed = match self {
            Scenario::Iterate(s) => &mut s.seed,
            Scenario::Contract(s) => &mut s.seed,
            Scenario::Psi(s) => &mut s.seed,
            Scenario::Counterexample(s) => &mut s.seed,
            Scenario::Sandwich(s) => &mut s.seed,
            Scenario::Gaussian(s) => &mut s.seed,
            Scenario::Uniqueness(s) => &mut s.seed,
        };
        if let Some(v) = o.seed {
            *seed = v;
        }
        let (max_iter, tol) = match self {
            Scenario::Iterate(s) => (Some(&mut s.max_iter), Some(&mut s.tol)),
            Scenario::Counterexample(s) => (Some(&mut s.max_iter), Some(&mut s.tol)),
            Scenario::Sandwich(s) => (Some(&mut s.max_iter), Some(&mut s.tol)),
            Scenario::Uniqueness(s) => (Some(&mut s.max_iter), Some(&mut s.tol)),
            Scenario::Contract(_) | Scenario::Psi(_) | Scenario::Gaussian(_) => (None, None),
        };
        match (o.max_iter, max_iter) {
            (Some(v), Some(slot)) => *slot = v,
            (Some(_), None) => ignored.push("--max-iter"),
            _ => {}
        }
        match (o.tol, tol) {
            (Some(v), Some(slot)) => *slot = v,
            (Some(_), None) => ignored.push("--tol"),
            _ => {}
        }
        ignored
    }

    /// Builds every rule and set the run needs and checks the numeric
    /// parameters, naming the offending key on failure.
    pub fn validate(&self) -> Result<()> {
        match self {
            Scenario::Iterate(s) => {
                check_tol(s.tol)?;
                check_positive_count("max_iter", s.max_iter)?;
                check_rule_fits(&s.rule, &s.start, "rule")?;
                s.start.build("start")?;
                check_metric(s.metric, &s.start, "metric")?;
                if let Some(fp) = &s.fixed_point {
                    if fp.is_interval() != s.start.is_interval() || fp.dim() != s.start.dim() {
                        return Err(CliError::invalid("fixed_point", "must be the same kind of set as start"));
                    }
                    fp.build("fixed_point")?;
                }
                if let Some(t) = s.tau_bound {
                    if !(0.0..=1.0).contains(&t) {
                        return Err(CliError::invalid("tau_bound", format!("must lie in [0, 1], got {t}")));
                    }
                }
                Ok(())
            }
            Scenario::Contract(s) => {
                check_positive_count("trials", s.trials)?;
                check_positive_count("max_set_size", s.max_set_size)?;
                let first = s
                    .likelihoods
                    .first()
                    .ok_or_else(|| CliError::invalid("likelihoods", "at least one likelihood is required"))?;
                if s.likelihoods.iter().any(|l| l.dim() != first.dim()) {
                    return Err(CliError::invalid("likelihoods", "all likelihoods must have the same length"));
                }
                Ok(())
            }
            Scenario::Psi(s) => {
                check_positive_count("pairs_per_bin", s.pairs_per_bin)?;
                if s.t_grid.is_empty() || s.t_grid[0] <= 0.0 || s.t_grid.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(CliError::invalid("t_grid", "must be nonempty, positive and strictly increasing"));
                }
                match &s.sampler {
                    SamplerSpec::Fixed(set) => {
                        check_rule_fits(&s.rule, set, "rule")?;
                        set.build("sampler.fixed")?;
                        check_metric(s.metric, set, "metric")?;
                    }
                    SamplerSpec::Random { dim, points } => {
                        if *dim < 2 {
                            return Err(CliError::invalid("sampler.random.dim", "must be at least 2"));
                        }
                        check_positive_count("sampler.random.points", *points)?;
                        let probe = SetSpec::Extremes(vec![Dist::uniform(*dim).map_err(|e| CliError::invalid("sampler", e))?]);
                        check_rule_fits(&s.rule, &probe, "rule")?;
                        check_metric(s.metric, &probe, "metric")?;
                    }
                }
                Ok(())
            }
            Scenario::Counterexample(s) => {
                check_tol(s.tol)?;
                check_positive_count("max_iter", s.max_iter)?;
                check_positive_count("probe_trials", s.probe_trials)?;
                RuleSpec::Shift { delta: s.delta }.build_interval().map_err(|e| CliError::invalid("delta", e))?;
                if !(0.0..=1.0 - s.delta).contains(&s.witness_lo) {
                    return Err(CliError::invalid("witness_lo", format!("must lie in [0, 1 - delta], got {}", s.witness_lo)));
                }
                if let Some(&n) = s.witness_n.iter().find(|&&n| n == 0 || s.witness_lo > 1.0 - s.delta - 1.0 / n as f64) {
                    return Err(CliError::invalid(
                        "witness_n",
                        format!("witness interval [witness_lo, 1 - delta - 1/{n}] is empty"),
                    ));
                }
                Ok(())
            }
            Scenario::Sandwich(s) => {
                check_tol(s.tol)?;
                check_positive_count("max_iter", s.max_iter)?;
                if s.rules.is_empty() {
                    return Err(CliError::invalid("rules", "at least one rule is required"));
                }
                for (i, r) in s.rules.iter().enumerate() {
                    r.build_interval().map_err(|e| CliError::invalid(&format!("rules[{i}]"), e))?;
                }
                if s.schedule.is_empty() {
                    return Err(CliError::invalid("schedule", "must be nonempty"));
                }
                if let Some(&bad) = s.schedule.iter().find(|&&i| i >= s.rules.len()) {
                    return Err(CliError::invalid("schedule", format!("index {bad} out of range for {} rules", s.rules.len())));
                }
                Ok(())
            }
            Scenario::Gaussian(s) => {
                if s.priors.is_empty() {
                    return Err(CliError::invalid("priors", "at least one prior is required"));
                }
                check_positive_count("n", s.n)?;
                check_positive_count("rounds", s.rounds)?;
                if !s.theta_star.is_finite() {
                    return Err(CliError::invalid("theta_star", "must be finite"));
                }
                if !(s.target > 0.0) {
                    return Err(CliError::invalid("target", "must be positive"));
                }
                Ok(())
            }
            Scenario::Uniqueness(s) => {
                check_tol(s.tol)?;
                check_positive_count("max_iter", s.max_iter)?;
                let probe = match &s.starts {
                    StartsSpec::Given(sets) => {
                        if sets.len() < 2 {
                            return Err(CliError::invalid("starts.given", "at least 2 starts are required"));
                        }
                        for (i, set) in sets.iter().enumerate() {
                            let key = format!("starts.given[{i}]");
                            set.build(&key)?;
                            if set.is_interval() != sets[0].is_interval() || set.dim() != sets[0].dim() {
                                return Err(CliError::invalid(&key, "all starts must be the same kind of set"));
                            }
                        }
                        sets[0].clone()
                    }
                    StartsSpec::Random { count, dim, points } => {
                        if *count < 2 {
                            return Err(CliError::invalid("starts.random.count", "at least 2 starts are required"));
                        }
                        if *dim < 2 {
                            return Err(CliError::invalid("starts.random.dim", "must be at least 2"));
                        }
                        check_positive_count("starts.random.points", *points)?;
                        SetSpec::Extremes(vec![Dist::uniform(*dim).map_err(|e| CliError::invalid("starts", e))?])
                    }
                };
                check_rule_fits(&s.rule, &probe, "rule")?;
                check_metric(s.metric, &probe, "metric")
            }
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 0.0 && tol.is_finite() {
        Ok(())
    } else {
        Err(CliError::invalid("tol", format!("must be positive, got {tol}")))
    }
}

fn check_positive_count(key: &str, value: usize) -> Result<()> {
    if value == 0 {
        Err(CliError::invalid(key, "must be at least 1"))
    } else {
        Ok(())
    }
}

fn check_rule_fits(rule: &RuleSpec, set: &SetSpec, key: &str) -> Result<()> {
    match (rule, set) {
        (RuleSpec::Cbdl { likelihoods }, _) => {
            if set.is_interval() {
                return Err(CliError::invalid(key, "cbdl needs a start given by extremes"));
            }
            if likelihoods.is_empty() {
                return Err(CliError::invalid(key, "at least one likelihood is required"));
            }
            if let Some(l) = likelihoods.iter().find(|l| Some(l.dim()) != set.dim()) {
                return Err(CliError::invalid(
                    key,
                    format!("likelihood of length {} for sets of dimension {:?}", l.dim(), set.dim()),
                ));
            }
        }
        (RuleSpec::Pcbdl { evidence }, _) => {
            if set.is_interval() || Some(evidence.dim()) != set.dim() {
                return Err(CliError::invalid(key, "evidence dimension does not match the start"));
            }
        }
        _ => {
            if !set.is_interval() && set.dim() != Some(2) {
                return Err(CliError::invalid(key, "interval rules need an interval or two-outcome start"));
            }
        }
    }
    // Builds the rule to check its numeric parameters.
    let built = if set.is_interval() { rule.build_interval().map(|_| ()) } else { rule.build_credal().map(|_| ()) };
    built.map_err(|e| CliError::invalid(key, e))
}

fn check_metric(metric: Option<SetMetric>, set: &SetSpec, key: &str) -> Result<()> {
    match (metric, set.is_interval()) {
        (Some(SetMetric::FiniteHilbert), true) => {
            Err(CliError::invalid(key, "finite_hilbert is not defined for interval sets"))
        }
        (Some(SetMetric::Interval), false) if set.dim() != Some(2) => {
            Err(CliError::invalid(key, "the interval metric needs two-outcome sets"))
        }
        _ => Ok(()),
    }
}

/// Metric used when the scenario does not name one.
pub fn default_metric(metric: Option<SetMetric>, interval: bool) -> SetMetric {
    metric.unwrap_or(if interval { SetMetric::Interval } else { SetMetric::TvHausdorff })
}
