//! Update rules on credal sets.
//!
//! * [`Cbdl`]: credal Bayesian update. Every extreme prior is tilted by every
//!   extreme likelihood and the convex hull of the images is taken.
//! * [`Pcbdl`]: pessimistic variant taking, atom by atom, the smallest
//!   posterior over an evidence class. It is only a probability when a single
//!   evidence item attains every atom's infimum, which is checked.
//! * [`DiscontinuousShift`]: an interval rule without fixed points.
//! * [`AnchorContraction`]: a monotone interval contraction toward a point.
//! * [`LowerEnvelope`] / [`UpperEnvelope`]: intersection and hull-of-union of
//!   a family of interval rules.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::credal::{CredalSet, CredalSpace, IntervalCredal, SetMetric};
use crate::dist::{bayes_tilt, Likelihood, PositiveDist};
use crate::error::{check_dim, CredalError, Result};
use crate::sampling::rng_for;

/// Tolerance for accepting one evidence item as the minimiser of every atom.
pub const MINIMIZER_TOLERANCE: f64 = 1e-12;

/// A map from credal sets to credal sets.
pub trait UpdateRule: Send + Sync {
    type Set: CredalSpace;

    fn apply(&self, set: &Self::Set) -> Result<Self::Set>;

    fn descriptor(&self) -> RuleSpec;
}

/// Shared handle to an interval rule, used by the envelope and sandwich code.
pub type IntervalRule = Arc<dyn UpdateRule<Set = IntervalCredal>>;

/// Shared handle to a rule on finitely generated credal sets.
pub type CredalRule = Arc<dyn UpdateRule<Set = CredalSet>>;

/// Serializable description of a rule and its parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum RuleSpec {
    Cbdl { likelihoods: Vec<Likelihood> },
    Pcbdl { evidence: EvidenceClass },
    Shift { delta: f64 },
    AnchorContraction { gamma: f64, anchor: f64 },
    LowerEnvelope { rules: Vec<RuleSpec> },
    UpperEnvelope { rules: Vec<RuleSpec> },
}

impl RuleSpec {
    /// Builds a rule on finitely generated credal sets. Interval rules act on
    /// two-outcome sets through the `λ ↦ (1 - λ, λ)` embedding.
    pub fn build_credal(&self) -> Result<CredalRule> {
        match self {
            RuleSpec::Cbdl { likelihoods } => Ok(Arc::new(Cbdl::new(likelihoods.clone())?)),
            RuleSpec::Pcbdl { evidence } => Ok(Arc::new(Pcbdl::new(evidence.clone()))),
            _ => Ok(Arc::new(BinaryEmbedding::new(self.build_interval()?))),
        }
    }

    pub fn build_interval(&self) -> Result<IntervalRule> {
        match self {
            RuleSpec::Shift { delta } => Ok(Arc::new(DiscontinuousShift::new(*delta)?)),
            RuleSpec::AnchorContraction { gamma, anchor } => {
                Ok(Arc::new(AnchorContraction::new(*gamma, *anchor)?))
            }
            RuleSpec::LowerEnvelope { rules } => Ok(Arc::new(envelope_maps(build_all(rules)?)?.0)),
            RuleSpec::UpperEnvelope { rules } => Ok(Arc::new(envelope_maps(build_all(rules)?)?.1)),
            RuleSpec::Cbdl { .. } | RuleSpec::Pcbdl { .. } => Err(CredalError::Parameter(
                "credal Bayesian rules act on finitely generated credal sets, not intervals".into(),
            )),
        }
    }

    /// Whether the rule acts on interval credal sets natively.
    pub fn is_interval_rule(&self) -> bool {
        !matches!(self, RuleSpec::Cbdl { .. } | RuleSpec::Pcbdl { .. })
    }
}

fn build_all(rules: &[RuleSpec]) -> Result<Vec<IntervalRule>> {
    rules.iter().map(RuleSpec::build_interval).collect()
}

// ---------------------------------------------------------------------------
// Credal Bayesian update
// ---------------------------------------------------------------------------

/// Tilts every extreme of `prior` by every likelihood and reduces the images.
pub fn cbdl_update(prior: &CredalSet, likelihoods: &[Likelihood]) -> Result<CredalSet> {
    if likelihoods.is_empty() {
        return Err(CredalError::Parameter("at least one likelihood is required".into()));
    }
    let mut images = Vec::with_capacity(prior.len() * likelihoods.len());
    for p in prior.positive_extremes()? {
        for ell in likelihoods {
            check_dim(p.dim(), ell.dim())?;
            images.push(bayes_tilt(&p, ell)?.into_dist());
        }
    }
    CredalSet::reduce(images)
}

#[derive(Debug, Clone)]
pub struct Cbdl {
    likelihoods: Vec<Likelihood>,
}

impl Cbdl {
    pub fn new(likelihoods: Vec<Likelihood>) -> Result<Self> {
        let first = likelihoods
            .first()
            .ok_or_else(|| CredalError::Parameter("at least one likelihood is required".into()))?;
        for l in &likelihoods {
            check_dim(first.dim(), l.dim())?;
        }
        Ok(Self { likelihoods })
    }

    pub fn likelihoods(&self) -> &[Likelihood] {
        &self.likelihoods
    }
}

impl UpdateRule for Cbdl {
    type Set = CredalSet;

    fn apply(&self, set: &CredalSet) -> Result<CredalSet> {
        cbdl_update(set, &self.likelihoods)
    }

    fn descriptor(&self) -> RuleSpec {
        RuleSpec::Cbdl { likelihoods: self.likelihoods.clone() }
    }
}

// ---------------------------------------------------------------------------
// Pessimistic update
// ---------------------------------------------------------------------------

/// One candidate piece of evidence: one likelihood per extreme likelihood index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceItem {
    pub label: String,
    pub likelihoods: Vec<Likelihood>,
}

/// A nonempty class of evidence items sharing the number of likelihoods and
/// the parameter dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<EvidenceItem>", into = "Vec<EvidenceItem>")]
pub struct EvidenceClass {
    items: Vec<EvidenceItem>,
}

impl EvidenceClass {
    pub fn new(items: Vec<EvidenceItem>) -> Result<Self> {
        let first = items.first().ok_or(CredalError::EmptyEvidence)?;
        let k = first.likelihoods.len();
        if k == 0 {
            return Err(CredalError::Parameter(format!(
                "evidence item '{}' has no likelihoods",
                first.label
            )));
        }
        let dim = first.likelihoods[0].dim();
        for item in &items {
            if item.likelihoods.len() != k {
                return Err(CredalError::Parameter(format!(
                    "evidence item '{}' has {} likelihoods, expected {k}",
                    item.label,
                    item.likelihoods.len()
                )));
            }
            for l in &item.likelihoods {
                check_dim(dim, l.dim())?;
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[EvidenceItem] {
        &self.items
    }

    /// Number of extreme likelihoods per item.
    pub fn k(&self) -> usize {
        self.items[0].likelihoods.len()
    }

    pub fn dim(&self) -> usize {
        self.items[0].likelihoods[0].dim()
    }
}

impl TryFrom<Vec<EvidenceItem>> for EvidenceClass {
    type Error = CredalError;

    fn try_from(items: Vec<EvidenceItem>) -> Result<Self> {
        EvidenceClass::new(items)
    }
}

impl From<EvidenceClass> for Vec<EvidenceItem> {
    fn from(e: EvidenceClass) -> Self {
        e.items
    }
}

/// Result of the atom-wise infimum over an evidence class.
#[derive(Debug, Clone, PartialEq)]
pub enum PcbdlOutcome {
    /// One item attains every atom's infimum; the posterior under it.
    Additive { posterior: PositiveDist, minimizer: String },
    /// The raw atom-wise infima, which do not sum to one.
    NonAdditive { infima: Vec<f64>, atom_minimizers: Vec<String> },
}

impl PcbdlOutcome {
    pub fn common_minimizer(&self) -> bool {
        matches!(self, PcbdlOutcome::Additive { .. })
    }

    pub fn weights(&self) -> &[f64] {
        match self {
            PcbdlOutcome::Additive { posterior, .. } => posterior.weights(),
            PcbdlOutcome::NonAdditive { infima, .. } => infima,
        }
    }
}

/// Pessimistic update of one extreme prior with likelihood index `k`.
///
/// Atoms are the singletons of the parameter space; on a finite space, an
/// additive result is determined by its atom values.
pub fn pcbdl_update(prior_extreme: &PositiveDist, k: usize, evidence: &EvidenceClass) -> Result<PcbdlOutcome> {
    if k >= evidence.k() {
        return Err(CredalError::Parameter(format!(
            "likelihood index {k} out of range for {} likelihoods",
            evidence.k()
        )));
    }
    let posteriors = evidence
        .items
        .iter()
        .map(|item| bayes_tilt(prior_extreme, &item.likelihoods[k]))
        .collect::<Result<Vec<_>>>()?;

    let dim = prior_extreme.dim();
    let mut infima = vec![f64::INFINITY; dim];
    let mut argmin = vec![0usize; dim];
    for (e, post) in posteriors.iter().enumerate() {
        for (i, &w) in post.weights().iter().enumerate() {
            if w < infima[i] {
                infima[i] = w;
                argmin[i] = e;
            }
        }
    }

    let common = posteriors.iter().position(|post| {
        post.weights()
            .iter()
            .zip(&infima)
            .all(|(w, inf)| *w <= inf + MINIMIZER_TOLERANCE)
    });
    Ok(match common {
        Some(e) => PcbdlOutcome::Additive {
            posterior: posteriors[e].clone(),
            minimizer: evidence.items[e].label.clone(),
        },
        None => PcbdlOutcome::NonAdditive {
            infima,
            atom_minimizers: argmin.iter().map(|&e| evidence.items[e].label.clone()).collect(),
        },
    })
}

/// Pessimistic update of a whole credal set.
#[derive(Debug, Clone, PartialEq)]
pub struct PcbdlUpdate {
    pub set: CredalSet,
    /// Minimising evidence label for each extreme (outer) and index `k` (inner).
    pub minimizers: Vec<Vec<String>>,
    /// Whether every extreme selected the same evidence for each `k`.
    pub minimizer_consistent: bool,
}

pub fn pcbdl_credal_update(prior: &CredalSet, evidence: &EvidenceClass) -> Result<PcbdlUpdate> {
    check_dim(evidence.dim(), prior.dim())?;
    let mut images = Vec::new();
    let mut minimizers = Vec::with_capacity(prior.len());
    for (j, p) in prior.positive_extremes()?.iter().enumerate() {
        let mut row = Vec::with_capacity(evidence.k());
        for k in 0..evidence.k() {
            match pcbdl_update(p, k, evidence)? {
                PcbdlOutcome::Additive { posterior, minimizer } => {
                    images.push(posterior.into_dist());
                    row.push(minimizer);
                }
                PcbdlOutcome::NonAdditive { atom_minimizers, .. } => {
                    let atoms = atom_minimizers
                        .iter()
                        .enumerate()
                        .filter(|(_, label)| **label != atom_minimizers[0])
                        .map(|(i, _)| i)
                        .collect();
                    return Err(CredalError::AdditivityViolation { extreme: j, k, atoms });
                }
            }
        }
        minimizers.push(row);
    }
    let minimizer_consistent = minimizers.windows(2).all(|w| w[0] == w[1]);
    Ok(PcbdlUpdate {
        set: CredalSet::reduce(images)?,
        minimizers,
        minimizer_consistent,
    })
}

#[derive(Debug, Clone)]
pub struct Pcbdl {
    evidence: EvidenceClass,
}

impl Pcbdl {
    pub fn new(evidence: EvidenceClass) -> Self {
        Self { evidence }
    }
}

impl UpdateRule for Pcbdl {
    type Set = CredalSet;

    fn apply(&self, set: &CredalSet) -> Result<CredalSet> {
        pcbdl_credal_update(set, &self.evidence).map(|u| u.set)
    }

    fn descriptor(&self) -> RuleSpec {
        RuleSpec::Pcbdl { evidence: self.evidence.clone() }
    }
}

// ---------------------------------------------------------------------------
// Interval rules
// ---------------------------------------------------------------------------

/// Shifts the interval right by `delta` unless its upper end is at least
/// `1 - delta`, in which case it shifts left by `delta` and clips at 0.
///
/// The map is not Hausdorff-continuous at `hi = 1 - delta` and has no fixed
/// point.
pub fn discontinuous_shift(i: &IntervalCredal, delta: f64) -> Result<IntervalCredal> {
    check_delta(delta)?;
    if i.hi() < 1.0 - delta {
        IntervalCredal::new(i.lo() + delta, (i.hi() + delta).min(1.0))
    } else {
        IntervalCredal::new((i.lo() - delta).max(0.0), i.hi() - delta)
    }
}

fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.5 {
        Ok(())
    } else {
        Err(CredalError::Parameter(format!("delta must lie in (0, 1/2), got {delta}")))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct DiscontinuousShift {
    delta: f64,
}

impl DiscontinuousShift {
    pub fn new(delta: f64) -> Result<Self> {
        check_delta(delta)?;
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }
}

impl UpdateRule for DiscontinuousShift {
    type Set = IntervalCredal;

    fn apply(&self, set: &IntervalCredal) -> Result<IntervalCredal> {
        discontinuous_shift(set, self.delta)
    }

    fn descriptor(&self) -> RuleSpec {
        RuleSpec::Shift { delta: self.delta }
    }
}

/// `[(1-γ) lo + γ a, (1-γ) hi + γ a]`: monotone under inclusion, a Hausdorff
/// `(1-γ)`-contraction, with the degenerate interval at `anchor` as its unique
/// fixed point.
pub fn anchor_contraction(set: &IntervalCredal, gamma: f64, anchor: f64) -> Result<IntervalCredal> {
    check_anchor(gamma, anchor)?;
    let map = |x: f64| ((1.0 - gamma) * x + gamma * anchor).clamp(0.0, 1.0);
    IntervalCredal::new(map(set.lo()), map(set.hi()))
}

fn check_anchor(gamma: f64, anchor: f64) -> Result<()> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(CredalError::Parameter(format!("gamma must lie in (0, 1), got {gamma}")));
    }
    if !(0.0..=1.0).contains(&anchor) {
        return Err(CredalError::Parameter(format!("anchor must lie in [0, 1], got {anchor}")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy)]
pub struct AnchorContraction {
    gamma: f64,
    anchor: f64,
}

impl AnchorContraction {
    pub fn new(gamma: f64, anchor: f64) -> Result<Self> {
        check_anchor(gamma, anchor)?;
        Ok(Self { gamma, anchor })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn anchor(&self) -> f64 {
        self.anchor
    }
}

impl UpdateRule for AnchorContraction {
    type Set = IntervalCredal;

    fn apply(&self, set: &IntervalCredal) -> Result<IntervalCredal> {
        anchor_contraction(set, self.gamma, self.anchor)
    }

    fn descriptor(&self) -> RuleSpec {
        RuleSpec::AnchorContraction { gamma: self.gamma, anchor: self.anchor }
    }
}

/// Pointwise intersection of the images of a family of interval rules.
#[derive(Clone)]
pub struct LowerEnvelope {
    rules: Vec<IntervalRule>,
}

/// Smallest interval containing the images of a family of interval rules.
#[derive(Clone)]
pub struct UpperEnvelope {
    rules: Vec<IntervalRule>,
}

pub fn envelope_maps(rules: Vec<IntervalRule>) -> Result<(LowerEnvelope, UpperEnvelope)> {
    if rules.is_empty() {
        return Err(CredalError::Parameter("envelopes need at least one rule".into()));
    }
    Ok((LowerEnvelope { rules: rules.clone() }, UpperEnvelope { rules }))
}

impl UpdateRule for LowerEnvelope {
    type Set = IntervalCredal;

    fn apply(&self, set: &IntervalCredal) -> Result<IntervalCredal> {
        let mut acc = self.rules[0].apply(set)?;
        for rule in &self.rules[1..] {
            let image = rule.apply(set)?;
            acc = acc.intersect(&image).ok_or(CredalError::EmptyEnvelope {
                lo: acc.lo().max(image.lo()),
                hi: acc.hi().min(image.hi()),
            })?;
        }
        Ok(acc)
    }

    fn descriptor(&self) -> RuleSpec {
        RuleSpec::LowerEnvelope { rules: self.rules.iter().map(|r| r.descriptor()).collect() }
    }
}

impl UpdateRule for UpperEnvelope {
    type Set = IntervalCredal;

    fn apply(&self, set: &IntervalCredal) -> Result<IntervalCredal> {
        let mut acc = self.rules[0].apply(set)?;
        for rule in &self.rules[1..] {
            acc = acc.hull(&rule.apply(set)?);
        }
        Ok(acc)
    }

    fn descriptor(&self) -> RuleSpec {
        RuleSpec::UpperEnvelope { rules: self.rules.iter().map(|r| r.descriptor()).collect() }
    }
}

/// Runs an interval rule on two-outcome credal sets.
pub struct BinaryEmbedding<R: ?Sized> {
    inner: Arc<R>,
}

impl<R: UpdateRule<Set = IntervalCredal> + ?Sized> BinaryEmbedding<R> {
    pub fn new(inner: Arc<R>) -> Self {
        Self { inner }
    }
}

impl<R: UpdateRule<Set = IntervalCredal> + ?Sized> UpdateRule for BinaryEmbedding<R> {
    type Set = CredalSet;

    fn apply(&self, set: &CredalSet) -> Result<CredalSet> {
        let interval = IntervalCredal::from_binary_set(set)?;
        self.inner.apply(&interval)?.to_credal_set()
    }

    fn descriptor(&self) -> RuleSpec {
        self.inner.descriptor()
    }
}

// ---------------------------------------------------------------------------
// Continuity probe
// ---------------------------------------------------------------------------

/// Number of decades in the decreasing-scale sweep of [`continuity_probe`].
pub const PROBE_LEVELS: usize = 4;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeLevel {
    pub scale: f64,
    pub max_input_distance: f64,
    pub max_output_distance: f64,
    /// `max_output_distance / scale`.
    pub modulus_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContinuityReport {
    pub metric: SetMetric,
    pub trials: usize,
    /// One entry per scale, from `perturbation_scale` down by factors of 10.
    pub levels: Vec<ProbeLevel>,
    /// Largest output distance observed at the finest scale.
    pub jump: f64,
    /// Set when the output distance fails to shrink with the input scale.
    pub discontinuity_witness: bool,
}

impl ContinuityReport {
    pub fn max_output_distance(&self) -> f64 {
        self.levels[0].max_output_distance
    }

    pub fn modulus_ratio(&self) -> f64 {
        self.levels[0].modulus_ratio
    }
}

/// Perturbs `base` at decreasing scales and records how far the rule's
/// outputs move.
///
/// A discontinuity witness is flagged when the largest output distance at the
/// finest scale is positive and at least half of that at the coarsest scale;
/// a continuous rule's outputs shrink with the scale instead.
pub fn continuity_probe<R: UpdateRule + ?Sized>(
    rule: &R,
    base: &R::Set,
    perturbation_scale: f64,
    trials: usize,
    metric: SetMetric,
    seed: u64,
) -> Result<ContinuityReport> {
    if !(perturbation_scale > 0.0) {
        return Err(CredalError::Parameter("perturbation scale must be positive".into()));
    }
    if trials == 0 {
        return Err(CredalError::Parameter("at least one trial is required".into()));
    }
    let image = rule.apply(base)?;
    let mut levels = Vec::with_capacity(PROBE_LEVELS);
    for level in 0..PROBE_LEVELS {
        let scale = perturbation_scale * 10f64.powi(-(level as i32));
        let (mut max_in, mut max_out): (f64, f64) = (0.0, 0.0);
        for t in 0..trials {
            let mut rng = rng_for(seed, (level * trials + t) as u64);
            let moved = base.perturb(scale, metric, &mut rng)?;
            max_in = max_in.max(base.distance(&moved, metric)?);
            max_out = max_out.max(image.distance(&rule.apply(&moved)?, metric)?);
        }
        levels.push(ProbeLevel {
            scale,
            max_input_distance: max_in,
            max_output_distance: max_out,
            modulus_ratio: max_out / scale,
        });
    }
    let coarse = levels[0].max_output_distance;
    let jump = levels[PROBE_LEVELS - 1].max_output_distance;
    Ok(ContinuityReport {
        metric,
        trials,
        levels,
        jump,
        discontinuity_witness: jump > 0.0 && jump >= 0.5 * coarse,
    })
}
