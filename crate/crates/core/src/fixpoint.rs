//! Orbits of update rules: convergence detection, rate fits, uniqueness
//! checks and the lower/upper envelope sandwich.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::credal::{CredalSpace, IntervalCredal, SetMetric, SetSummary};
use crate::error::{CredalError, Result};
use crate::rules::{envelope_maps, IntervalRule, UpdateRule};
use crate::sampling::rng_for;

pub const DEFAULT_TOLERANCE: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// Relative slack on the rate inequalities checked by [`fit_rate`].
pub const RATE_TOLERANCE: f64 = 1e-6;

/// Nested pairs tried by [`probe_monotone`].
pub const MONOTONE_PROBE_PAIRS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterateConfig {
    pub tol: f64,
    pub max_iter: usize,
    pub metric: SetMetric,
}

impl Default for IterateConfig {
    fn default() -> Self {
        Self { tol: DEFAULT_TOLERANCE, max_iter: DEFAULT_MAX_ITER, metric: SetMetric::TvHausdorff }
    }
}

impl IterateConfig {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(CredalError::Parameter(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(CredalError::Parameter("max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitStep {
    pub n: usize,
    pub set: SetSummary,
    /// Distance to the previous iterate; absent at step 0.
    pub d_prev: Option<f64>,
    /// Distance from the iterate to its image.
    pub d_fix: f64,
    /// Distance to the limit reference named in the trace.
    pub d_limit: f64,
}

/// What `d_limit` is measured against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitReference {
    /// The last recorded iterate stands in for the unknown fixed point.
    FinalIterate,
    /// A fixed point supplied by the caller.
    Supplied,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrbitTrace {
    pub steps: Vec<OrbitStep>,
    /// Whether the final `d_fix` is below the tolerance.
    pub converged: bool,
    /// Index of the last recorded step.
    pub iterations: usize,
    pub metric: SetMetric,
    pub limit_reference: LimitReference,
}

impl OrbitTrace {
    pub fn metric_name(&self) -> &'static str {
        self.metric.name()
    }

    pub fn final_d_fix(&self) -> f64 {
        self.steps.last().map_or(f64::NAN, |s| s.d_fix)
    }
}

/// A trace together with its last iterate.
#[derive(Debug, Clone)]
pub struct Orbit<S> {
    pub trace: OrbitTrace,
    pub last: S,
}

/// Applies `rule` repeatedly from `start` until `d_fix < tol` or `max_iter`
/// steps have been taken.
pub fn iterate<R: UpdateRule + ?Sized>(rule: &R, start: &R::Set, cfg: &IterateConfig) -> Result<OrbitTrace> {
    orbit(rule, start, cfg, None).map(|o| o.trace)
}

/// Like [`iterate`], measuring `d_limit` against a known fixed point.
pub fn iterate_towards<R: UpdateRule + ?Sized>(
    rule: &R,
    start: &R::Set,
    cfg: &IterateConfig,
    fixed_point: &R::Set,
) -> Result<OrbitTrace> {
    orbit(rule, start, cfg, Some(fixed_point)).map(|o| o.trace)
}

pub fn orbit<R: UpdateRule + ?Sized>(
    rule: &R,
    start: &R::Set,
    cfg: &IterateConfig,
    fixed_point: Option<&R::Set>,
) -> Result<Orbit<R::Set>> {
    cfg.validate()?;
    let at = |iteration: usize| move |e: CredalError| CredalError::AtIteration { iteration, source: Box::new(e) };

    let mut sets = Vec::new();
    let mut d_fixes = Vec::new();
    let mut current = start.clone();
    let mut converged = false;
    for n in 0..=cfg.max_iter {
        let next = rule.apply(&current).map_err(at(n))?;
        let d_fix = current.distance(&next, cfg.metric).map_err(at(n))?;
        sets.push(current);
        d_fixes.push(d_fix);
        if d_fix < cfg.tol {
            converged = true;
            break;
        }
        current = next;
    }

    let last = sets.last().expect("at least one step").clone();
    let reference = fixed_point.unwrap_or(&last);
    let mut steps = Vec::with_capacity(sets.len());
    for (n, set) in sets.iter().enumerate() {
        steps.push(OrbitStep {
            n,
            set: set.summary(),
            // The previous image is exactly this iterate.
            d_prev: n.checked_sub(1).map(|m| d_fixes[m]),
            d_fix: d_fixes[n],
            d_limit: set.distance(reference, cfg.metric)?,
        });
    }
    Ok(Orbit {
        trace: OrbitTrace {
            iterations: steps.len() - 1,
            steps,
            converged,
            metric: cfg.metric,
            limit_reference: if fixed_point.is_some() { LimitReference::Supplied } else { LimitReference::FinalIterate },
        },
        last,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RateFit {
    /// `exp` of the slope of a least-squares fit of `ln d_prev` against `n`.
    pub rho_hat: f64,
    pub r_squared: f64,
    pub tau_bound: f64,
    /// Whether `d_limit(n) <= tau^n d_limit(0) (1 + RATE_TOLERANCE)` at every step.
    pub bound_satisfied: bool,
    /// Steps with `d_limit(n+1) > tau d_limit(n) (1 + RATE_TOLERANCE)`.
    pub per_step_violations: usize,
    /// Steps violating the cumulative bound.
    pub cumulative_violations: usize,
    pub limit_reference: LimitReference,
}

/// Fits a geometric rate to an orbit and checks it against `tau_bound`.
pub fn fit_rate(trace: &OrbitTrace, tau_bound: f64) -> Result<RateFit> {
    let points: Vec<(f64, f64)> = trace
        .steps
        .iter()
        .filter_map(|s| s.d_prev.filter(|d| *d > 0.0).map(|d| (s.n as f64, d.ln())))
        .collect();
    if points.len() < 3 {
        return Err(CredalError::Trace(format!(
            "rate fit needs at least 3 steps with positive d_prev, found {}",
            points.len()
        )));
    }
    let m = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / m;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };

    let d: Vec<f64> = trace.steps.iter().map(|s| s.d_limit).collect();
    let slack = 1.0 + RATE_TOLERANCE;
    let per_step = d.windows(2).filter(|w| w[1] > tau_bound * w[0] * slack).count();
    let cumulative = d
        .iter()
        .enumerate()
        .filter(|(n, dn)| **dn > tau_bound.powi(*n as i32) * d[0] * slack)
        .count();
    Ok(RateFit {
        rho_hat: slope.exp(),
        r_squared,
        tau_bound,
        bound_satisfied: cumulative == 0,
        per_step_violations: per_step,
        cumulative_violations: cumulative,
        limit_reference: trace.limit_reference,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairDistance {
    pub i: usize,
    pub j: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessReport {
    pub converged: Vec<bool>,
    pub iterations: Vec<usize>,
    pub limits: Vec<SetSummary>,
    pub pairwise: Vec<PairDistance>,
    pub max_pairwise: f64,
    /// All orbits converged and all limits lie within `10 tol` of each other.
    pub passed: bool,
    #[serde(skip)]
    pub traces: Vec<OrbitTrace>,
}

pub fn uniqueness_check<R: UpdateRule + ?Sized>(
    rule: &R,
    starts: &[R::Set],
    cfg: &IterateConfig,
) -> Result<UniquenessReport> {
    if starts.len() < 2 {
        return Err(CredalError::Parameter(format!(
            "uniqueness check needs at least 2 starts, got {}",
            starts.len()
        )));
    }
    let orbits = starts
        .iter()
        .map(|s| orbit(rule, s, cfg, None))
        .collect::<Result<Vec<_>>>()?;
    let mut pairwise = Vec::new();
    for i in 0..orbits.len() {
        for j in i + 1..orbits.len() {
            let distance = orbits[i].last.distance(&orbits[j].last, cfg.metric)?;
            pairwise.push(PairDistance { i, j, distance });
        }
    }
    let max_pairwise = pairwise.iter().map(|p| p.distance).fold(0.0, f64::max);
    let converged: Vec<bool> = orbits.iter().map(|o| o.trace.converged).collect();
    Ok(UniquenessReport {
        passed: converged.iter().all(|c| *c) && max_pairwise < 10.0 * cfg.tol,
        iterations: orbits.iter().map(|o| o.trace.iterations).collect(),
        limits: orbits.iter().map(|o| o.last.summary()).collect(),
        converged,
        pairwise,
        max_pairwise,
        traces: orbits.into_iter().map(|o| o.trace).collect(),
    })
}

/// Counterexample to monotonicity: `inner ⊆ outer` but `f(inner) ⊄ f(outer)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonotoneCounterexample {
    pub inner: IntervalCredal,
    pub outer: IntervalCredal,
    pub inner_image: IntervalCredal,
    pub outer_image: IntervalCredal,
}

/// Checks `f(inner) ⊆ f(outer)` on random nested pairs. Passing is evidence,
/// not proof, of monotonicity.
pub fn probe_monotone(
    rule: &dyn UpdateRule<Set = IntervalCredal>,
    pairs: usize,
    seed: u64,
) -> Result<Option<MonotoneCounterexample>> {
    for k in 0..pairs {
        let mut rng = rng_for(seed, k as u64);
        let outer = random_interval(&mut rng, 0.0, 1.0)?;
        let inner = random_interval(&mut rng, outer.lo(), outer.hi())?;
        let inner_image = rule.apply(&inner)?;
        let outer_image = rule.apply(&outer)?;
        if !outer_image.includes(&inner_image) {
            return Ok(Some(MonotoneCounterexample { inner, outer, inner_image, outer_image }));
        }
    }
    Ok(None)
}

fn random_interval<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> Result<IntervalCredal> {
    let a = lo + (hi - lo) * rng.random::<f64>();
    let b = lo + (hi - lo) * rng.random::<f64>();
    IntervalCredal::new(a.min(b), a.max(b))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichStep {
    pub n: usize,
    /// Index of the rule applied to reach the composed iterate; absent at step 0.
    pub rule: Option<usize>,
    pub lower: IntervalCredal,
    pub composed: IntervalCredal,
    pub upper: IntervalCredal,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SandwichReport {
    pub steps: Vec<SandwichStep>,
    pub lower_limit: IntervalCredal,
    pub composed_limit: IntervalCredal,
    pub upper_limit: IntervalCredal,
    /// Whether all three orbits moved less than `tol` on the last step.
    pub converged: bool,
    pub composed_converged: bool,
    /// `lower ⊆ composed ⊆ upper` held at every step.
    pub inclusion_holds: bool,
}

/// Runs the lower-envelope, scheduled and upper-envelope orbits side by side
/// and checks `lower ⊆ composed ⊆ upper` at every step.
///
/// Every rule must pass [`probe_monotone`] first.
pub fn sandwich_run(
    rules: &[IntervalRule],
    schedule: &[usize],
    start: &IntervalCredal,
    tol: f64,
    max_iter: usize,
    seed: u64,
) -> Result<SandwichReport> {
    if schedule.is_empty() {
        return Err(CredalError::Parameter("schedule must be nonempty".into()));
    }
    if let Some(&bad) = schedule.iter().find(|&&i| i >= rules.len()) {
        return Err(CredalError::Parameter(format!(
            "schedule index {bad} out of range for {} rules",
            rules.len()
        )));
    }
    IterateConfig { tol, max_iter, metric: SetMetric::Interval }.validate()?;
    for (i, rule) in rules.iter().enumerate() {
        if let Some(c) = probe_monotone(rule.as_ref(), MONOTONE_PROBE_PAIRS, seed.wrapping_add(i as u64))? {
            return Err(CredalError::NotMonotone {
                rule: i,
                inner_lo: c.inner.lo(),
                inner_hi: c.inner.hi(),
                outer_lo: c.outer.lo(),
                outer_hi: c.outer.hi(),
            });
        }
    }
    let (lower_map, upper_map) = envelope_maps(rules.to_vec())?;
    let at = |iteration: usize| move |e: CredalError| CredalError::AtIteration { iteration, source: Box::new(e) };

    let mut steps = vec![SandwichStep { n: 0, rule: None, lower: *start, composed: *start, upper: *start }];
    let (mut lower, mut composed, mut upper) = (*start, *start, *start);
    let (mut converged, mut composed_converged) = (false, false);
    for n in 1..=max_iter {
        let r = schedule[(n - 1) % schedule.len()];
        let next_lower = lower_map.apply(&lower).map_err(at(n))?;
        let next_composed = rules[r].apply(&composed).map_err(at(n))?;
        let next_upper = upper_map.apply(&upper).map_err(at(n))?;
        if !next_composed.includes(&next_lower) || !next_upper.includes(&next_composed) {
            return Err(CredalError::SandwichViolation {
                step: n,
                detail: format!("lower {next_lower:?}, composed {next_composed:?}, upper {next_upper:?}"),
            });
        }
        let moved = [
            lower.distance(&next_lower, SetMetric::Interval)?,
            composed.distance(&next_composed, SetMetric::Interval)?,
            upper.distance(&next_upper, SetMetric::Interval)?,
        ];
        (lower, composed, upper) = (next_lower, next_composed, next_upper);
        steps.push(SandwichStep { n, rule: Some(r), lower, composed, upper });
        composed_converged = moved[1] < tol;
        if moved.iter().all(|d| *d < tol) {
            converged = true;
            break;
        }
    }
    Ok(SandwichReport {
        steps,
        lower_limit: lower,
        composed_limit: composed,
        upper_limit: upper,
        converged,
        composed_converged,
        inclusion_holds: true,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::credal::CredalSet;
    use crate::dist::{Dist, Likelihood};
    use crate::rules::{AnchorContraction, Cbdl, DiscontinuousShift};

    fn iv(lo: f64, hi: f64) -> IntervalCredal {
        IntervalCredal::new(lo, hi).unwrap()
    }

    fn interval_cfg(tol: f64, max_iter: usize) -> IterateConfig {
        IterateConfig { tol, max_iter, metric: SetMetric::Interval }
    }

    fn anchor(gamma: f64, a: f64) -> IntervalRule {
        Arc::new(AnchorContraction::new(gamma, a).unwrap())
    }

    #[test]
    fn fixed_start_converges_immediately() {
        let rule = AnchorContraction::new(0.4, 0.3).unwrap();
        let t = iterate(&rule, &iv(0.3, 0.3), &interval_cfg(1e-9, 100)).unwrap();
        assert!(t.converged);
        assert_eq!(t.iterations, 0);
        assert_eq!(t.steps[0].d_prev, None);
    }

    #[test]
    fn anchor_orbit_halves_each_step() {
        let rule = AnchorContraction::new(0.5, 0.5).unwrap();
        let t = iterate(&rule, &iv(0.0, 1.0), &interval_cfg(1e-9, 10_000)).unwrap();
        assert!(t.converged);
        assert!((25..=35).contains(&t.iterations), "{}", t.iterations);
        for w in t.steps[1..].windows(2) {
            let r = w[1].d_prev.unwrap() / w[0].d_prev.unwrap();
            assert!((r - 0.5).abs() < 1e-12);
        }
        assert!(t.final_d_fix() < 1e-9);
    }

    #[test]
    fn shift_orbit_never_converges() {
        let rule = DiscontinuousShift::new(0.1).unwrap();
        let t = iterate(&rule, &iv(0.2, 0.3), &interval_cfg(1e-9, 1000)).unwrap();
        assert!(!t.converged);
        assert_eq!(t.steps.len(), 1001);
        assert!(t.steps.iter().all(|s| s.d_fix >= 0.05));
        let fit = fit_rate(&t, 0.9).unwrap();
        assert!(!fit.bound_satisfied);
    }

    #[test]
    fn iterate_rejects_bad_config_and_tags_failures() {
        let rule = AnchorContraction::new(0.5, 0.5).unwrap();
        assert!(iterate(&rule, &iv(0.0, 1.0), &interval_cfg(0.0, 10)).is_err());
        assert!(iterate(&rule, &iv(0.0, 1.0), &interval_cfg(1e-9, 0)).is_err());

        let (lower, _) = envelope_maps(vec![anchor(0.5, 0.3), anchor(0.5, 0.7)]).unwrap();
        match iterate(&lower, &iv(0.0, 1.0), &interval_cfg(1e-9, 10)) {
            Err(CredalError::AtIteration { iteration, source }) => {
                assert_eq!(iteration, 1);
                assert!(matches!(*source, CredalError::EmptyEnvelope { .. }));
            }
            other => panic!("expected a tagged error, got {other:?}"),
        }
    }

    #[test]
    fn iterate_is_deterministic() {
        let rule = Cbdl::new(vec![Likelihood::new(vec![1.0, 2.0, 3.0]).unwrap()]).unwrap();
        let start = CredalSet::reduce(vec![
            Dist::new(vec![0.2, 0.3, 0.5]).unwrap(),
            Dist::new(vec![0.6, 0.3, 0.1]).unwrap(),
        ])
        .unwrap();
        let cfg = IterateConfig::default();
        assert_eq!(iterate(&rule, &start, &cfg).unwrap(), iterate(&rule, &start, &cfg).unwrap());
    }

    fn synthetic(ratio: f64, len: usize) -> OrbitTrace {
        let steps = (0..len)
            .map(|n| OrbitStep {
                n,
                set: SetSummary::Interval { lo: 0.0, hi: 0.0 },
                d_prev: (n > 0).then(|| ratio.powi(n as i32)),
                d_fix: ratio.powi(n as i32 + 1),
                d_limit: ratio.powi(n as i32),
            })
            .collect();
        OrbitTrace {
            steps,
            converged: false,
            iterations: len - 1,
            metric: SetMetric::Interval,
            limit_reference: LimitReference::Supplied,
        }
    }

    #[test]
    fn fit_recovers_a_geometric_ratio() {
        let fit = fit_rate(&synthetic(0.5, 20), 0.5).unwrap();
        assert!((fit.rho_hat - 0.5).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        assert!(fit.bound_satisfied);
        assert_eq!(fit.per_step_violations, 0);

        let fit = fit_rate(&synthetic(0.5, 20), 0.4).unwrap();
        assert!(!fit.bound_satisfied);
        assert!(fit.per_step_violations > 0);

        assert!(matches!(fit_rate(&synthetic(0.5, 3), 0.5), Err(CredalError::Trace(_))));
    }

    #[test]
    fn anchor_orbit_meets_its_rate() {
        let rule = AnchorContraction::new(0.3, 0.2).unwrap();
        let fixed = iv(0.2, 0.2);
        let t = iterate_towards(&rule, &iv(0.0, 1.0), &interval_cfg(1e-12, 1000), &fixed).unwrap();
        let fit = fit_rate(&t, 0.7).unwrap();
        assert!(fit.bound_satisfied, "{fit:?}");
        assert!((fit.rho_hat - 0.7).abs() < 1e-4);
        assert_eq!(fit.limit_reference, LimitReference::Supplied);
    }

    #[test]
    fn uniqueness_examples() {
        let rule = AnchorContraction::new(0.5, 0.4).unwrap();
        let r = uniqueness_check(&rule, &[iv(0.0, 1.0), iv(0.3, 0.3)], &interval_cfg(1e-9, 10_000)).unwrap();
        assert!(r.passed);
        assert!(r.max_pairwise < 1e-8);
        assert!(uniqueness_check(&rule, &[iv(0.0, 1.0)], &interval_cfg(1e-9, 10)).is_err());

        let shift = DiscontinuousShift::new(0.1).unwrap();
        let r = uniqueness_check(&shift, &[iv(0.0, 0.1), iv(0.5, 0.6)], &interval_cfg(1e-9, 50)).unwrap();
        assert!(!r.passed);
        assert_eq!(r.converged, vec![false, false]);
    }

    #[test]
    fn probe_accepts_anchor_and_rejects_shift() {
        assert!(probe_monotone(anchor(0.3, 0.6).as_ref(), 200, 1).unwrap().is_none());
        let shift = DiscontinuousShift::new(0.1).unwrap();
        let c = probe_monotone(&shift, 200, 1).unwrap().expect("counterexample");
        assert!(c.outer.includes(&c.inner));
        assert!(!c.outer_image.includes(&c.inner_image));
    }

    #[test]
    fn sandwich_with_one_rule_is_three_equal_orbits() {
        let r = sandwich_run(&[anchor(0.5, 0.3)], &[0], &iv(0.0, 1.0), 1e-12, 200, 0).unwrap();
        for s in &r.steps {
            assert_eq!(s.lower, s.composed);
            assert_eq!(s.upper, s.composed);
        }
        assert!(r.converged);
    }

    #[test]
    fn sandwich_with_a_common_anchor_holds_at_every_step() {
        let r = sandwich_run(&[anchor(0.2, 0.5), anchor(0.5, 0.5)], &[0, 1], &iv(0.0, 1.0), 1e-15, 100, 3).unwrap();
        assert_eq!(r.steps.len(), 101);
        for s in &r.steps {
            assert!(s.composed.includes(&s.lower) && s.upper.includes(&s.composed));
        }
        assert!(r.upper_limit.includes(&r.composed_limit));
        assert!(r.composed_limit.includes(&r.lower_limit));
    }

    #[test]
    fn sandwich_with_distinct_anchors_empties_the_lower_envelope() {
        // Widths shrink as w' = w/2 - 0.2, so the images stop overlapping.
        let err = sandwich_run(&[anchor(0.5, 0.3), anchor(0.5, 0.7)], &[0, 1], &iv(0.0, 1.0), 1e-9, 100, 0)
            .unwrap_err();
        match err {
            CredalError::AtIteration { iteration, source } => {
                assert_eq!(iteration, 2);
                assert!(matches!(*source, CredalError::EmptyEnvelope { .. }));
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn sandwich_rejects_non_monotone_rules_and_bad_schedules() {
        let shift: IntervalRule = Arc::new(DiscontinuousShift::new(0.1).unwrap());
        let rules = vec![anchor(0.5, 0.5), shift];
        assert!(matches!(
            sandwich_run(&rules, &[0, 1], &iv(0.0, 1.0), 1e-9, 10, 0),
            Err(CredalError::NotMonotone { rule: 1, .. })
        ));
        assert!(sandwich_run(&rules[..1], &[], &iv(0.0, 1.0), 1e-9, 10, 0).is_err());
        assert!(sandwich_run(&rules[..1], &[3], &iv(0.0, 1.0), 1e-9, 10, 0).is_err());
    }
}
