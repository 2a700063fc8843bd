//! Finitely generated credal sets and interval credal sets on a binary space,
//! with hull reduction, membership, support functions and Hausdorff distances.
//!
//! Hausdorff distances between polytopes are evaluated vertex-wise: the TV
//! distance from a point to a convex set is convex in the point, so its
//! supremum over a polytope is attained at a vertex.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{hilbert_distance, support_value, tv_distance, Dist, PositiveDist};
use crate::error::{check_dim, CredalError, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::sampling::{random_positive_dist, uniform};

/// Points within this TV distance of a hull count as members of it.
pub const MEMBERSHIP_TOLERANCE: f64 = 1e-9;

/// A finitely generated credal set: the convex hull of finitely many
/// distributions on a common outcome space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CredalSet {
    extremes: Vec<Dist>,
    reduced: bool,
}

impl CredalSet {
    /// Stores `points` as generators without removing redundant ones.
    pub fn from_points(points: Vec<Dist>) -> Result<Self> {
        let first = points.first().ok_or(CredalError::EmptyCredal)?;
        let dim = first.dim();
        for p in &points {
            check_dim(dim, p.dim())?;
        }
        let reduced = points.len() == 1;
        Ok(Self { extremes: points, reduced })
    }

    /// Keeps a minimal subset of `points` with the same convex hull.
    pub fn reduce(points: Vec<Dist>) -> Result<Self> {
        let set = Self::from_points(points)?;
        let mut kept = set.extremes;
        let mut i = 0;
        while i < kept.len() && kept.len() > 1 {
            let others: Vec<&Dist> = kept
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, p)| p)
                .collect();
            if hull_distance(&kept[i], &others)? <= MEMBERSHIP_TOLERANCE {
                kept.remove(i);
            } else {
                i += 1;
            }
        }
        Ok(Self { extremes: kept, reduced: true })
    }

    pub fn singleton(p: Dist) -> Self {
        Self { extremes: vec![p], reduced: true }
    }

    /// The full probability simplex on `dim` outcomes.
    pub fn whole_simplex(dim: usize) -> Result<Self> {
        let vertices = (0..dim).map(|i| Dist::vertex(dim, i)).collect::<Result<Vec<_>>>()?;
        Ok(Self { extremes: vertices, reduced: true })
    }

    pub fn extremes(&self) -> &[Dist] {
        &self.extremes
    }

    pub fn into_extremes(self) -> Vec<Dist> {
        self.extremes
    }

    pub fn dim(&self) -> usize {
        self.extremes[0].dim()
    }

    pub fn len(&self) -> usize {
        self.extremes.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn is_reduced(&self) -> bool {
        self.reduced
    }

    /// Extremes promoted to strictly positive distributions.
    pub fn positive_extremes(&self) -> Result<Vec<PositiveDist>> {
        self.extremes.iter().cloned().map(PositiveDist::strict).collect()
    }

    pub fn to_weights(&self) -> Vec<Vec<f64>> {
        self.extremes.iter().map(|d| d.weights().to_vec()).collect()
    }
}

/// A credal set on `{0, 1}` given by the interval of probabilities `[lo, hi]`
/// assigned to outcome 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct IntervalCredal {
    lo: f64,
    hi: f64,
}

impl IntervalCredal {
    pub fn new(lo: f64, hi: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&lo) || !(0.0..=1.0).contains(&hi) || lo > hi {
            return Err(CredalError::Parameter(format!(
                "interval [{lo}, {hi}] must satisfy 0 <= lo <= hi <= 1"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn point(lambda: f64) -> Result<Self> {
        Self::new(lambda, lambda)
    }

    pub fn whole() -> Self {
        Self { lo: 0.0, hi: 1.0 }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// Exact inclusion `other ⊆ self`.
    pub fn includes(&self, other: &IntervalCredal) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }

    /// Intersection, or `None` when the intervals are disjoint.
    pub fn intersect(&self, other: &IntervalCredal) -> Option<IntervalCredal> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then_some(IntervalCredal { lo, hi })
    }

    /// Smallest interval containing both.
    pub fn hull(&self, other: &IntervalCredal) -> IntervalCredal {
        IntervalCredal {
            lo: self.lo.min(other.lo),
            hi: self.hi.max(other.hi),
        }
    }

    /// Embeds the interval as a credal set via `λ ↦ (1 - λ, λ)`.
    pub fn to_credal_set(&self) -> Result<CredalSet> {
        let end = |l: f64| Dist::new(vec![1.0 - l, l]);
        if self.lo == self.hi {
            Ok(CredalSet::singleton(end(self.lo)?))
        } else {
            Ok(CredalSet {
                extremes: vec![end(self.lo)?, end(self.hi)?],
                reduced: true,
            })
        }
    }

    /// Inverse of [`IntervalCredal::to_credal_set`] for sets on two outcomes.
    pub fn from_binary_set(set: &CredalSet) -> Result<Self> {
        check_dim(2, set.dim())?;
        let lambdas = set.extremes.iter().map(|d| d.weights()[1]);
        let lo = lambdas.clone().fold(f64::INFINITY, f64::min);
        let hi = lambdas.fold(f64::NEG_INFINITY, f64::max);
        Self::new(lo.clamp(0.0, 1.0), hi.clamp(0.0, 1.0))
    }
}

impl TryFrom<[f64; 2]> for IntervalCredal {
    type Error = CredalError;

    fn try_from([lo, hi]: [f64; 2]) -> Result<Self> {
        IntervalCredal::new(lo, hi)
    }
}

impl From<IntervalCredal> for [f64; 2] {
    fn from(i: IntervalCredal) -> Self {
        [i.lo, i.hi]
    }
}

/// Minimum TV distance from `p` to the convex hull of `generators`.
///
/// Solved as the LP `min ½ Σ (s⁺ + s⁻)` over convex weights `w` with
/// `V w + s⁺ - s⁻ = p`.
fn hull_distance(p: &Dist, generators: &[&Dist]) -> Result<f64> {
    let dim = p.dim();
    for g in generators {
        check_dim(dim, g.dim())?;
    }
    match generators {
        [] => return Err(CredalError::EmptyCredal),
        [single] => return tv_distance(p, single),
        _ => {}
    }
    let k = generators.len();
    let n = k + 2 * dim;
    let mut costs = vec![0.0; n];
    for c in &mut costs[k..] {
        *c = 0.5;
    }
    let mut rows = Vec::with_capacity(dim + 1);
    let mut rhs = Vec::with_capacity(dim + 1);
    for i in 0..dim {
        let mut row = vec![0.0; n];
        for (j, g) in generators.iter().enumerate() {
            row[j] = g.weights()[i];
        }
        row[k + i] = 1.0;
        row[k + dim + i] = -1.0;
        rows.push(row);
        rhs.push(p.weights()[i]);
    }
    let mut simplex_row = vec![0.0; n];
    for v in &mut simplex_row[..k] {
        *v = 1.0;
    }
    rows.push(simplex_row);
    rhs.push(1.0);
    match LinearProgram::new(costs, rows, rhs)?.solve()? {
        LpOutcome::Optimal(s) => Ok(s.objective.max(0.0)),
        other => Err(CredalError::Lp(format!("hull distance LP ended as {other:?}"))),
    }
}

/// Free-function form of [`CredalSet::reduce`].
pub fn reduce(points: Vec<Dist>) -> Result<CredalSet> {
    CredalSet::reduce(points)
}

/// Minimum TV distance from `p` to the hull of `set`; zero iff `p` is a member.
pub fn point_to_set_tv(p: &Dist, set: &CredalSet) -> Result<f64> {
    let generators: Vec<&Dist> = set.extremes.iter().collect();
    hull_distance(p, &generators)
}

pub fn contains(set: &CredalSet, p: &Dist) -> Result<bool> {
    Ok(point_to_set_tv(p, set)? <= MEMBERSHIP_TOLERANCE)
}

/// `b ⊆ a`, checked on the generators of `b`.
pub fn includes(a: &CredalSet, b: &CredalSet) -> Result<bool> {
    check_dim(a.dim(), b.dim())?;
    for p in &b.extremes {
        if !contains(a, p)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `sup_{μ ∈ set} μ(direction)`, attained at an extreme point.
pub fn support_function(set: &CredalSet, direction: &[f64]) -> Result<f64> {
    let mut best = f64::NEG_INFINITY;
    for p in &set.extremes {
        best = best.max(support_value(p, direction)?);
    }
    Ok(best)
}

/// Hausdorff distance between the hulls of `a` and `b` under total variation.
pub fn hausdorff_tv(a: &CredalSet, b: &CredalSet) -> Result<f64> {
    check_dim(a.dim(), b.dim())?;
    let mut d: f64 = 0.0;
    for u in &a.extremes {
        d = d.max(point_to_set_tv(u, b)?);
    }
    for v in &b.extremes {
        d = d.max(point_to_set_tv(v, a)?);
    }
    Ok(d)
}

/// Hausdorff distance between two finite point sets under the Hilbert metric.
pub fn hausdorff_finite_hilbert(s: &[PositiveDist], t: &[PositiveDist]) -> Result<f64> {
    if s.is_empty() || t.is_empty() {
        return Err(CredalError::EmptyCredal);
    }
    let directed = |from: &[PositiveDist], to: &[PositiveDist]| -> Result<f64> {
        let mut worst: f64 = 0.0;
        for p in from {
            let mut nearest = f64::INFINITY;
            for q in to {
                nearest = nearest.min(hilbert_distance(p, q)?);
            }
            worst = worst.max(nearest);
        }
        Ok(worst)
    };
    Ok(directed(s, t)?.max(directed(t, s)?))
}

/// `max(|a.lo - b.lo|, |a.hi - b.hi|)`.
pub fn hausdorff_interval(a: &IntervalCredal, b: &IntervalCredal) -> f64 {
    (a.lo - b.lo).abs().max((a.hi - b.hi).abs())
}

/// Distance used to compare successive credal sets along an orbit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetMetric {
    /// Hausdorff distance of hulls under total variation.
    TvHausdorff,
    /// Hausdorff distance of the extreme-point lists under the Hilbert metric.
    FiniteHilbert,
    /// Endpoint distance of interval credal sets.
    Interval,
}

impl SetMetric {
    pub fn name(&self) -> &'static str {
        match self {
            SetMetric::TvHausdorff => "tv_hausdorff",
            SetMetric::FiniteHilbert => "finite_hilbert",
            SetMetric::Interval => "interval",
        }
    }
}

/// Serializable snapshot of a credal set.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SetSummary {
    Extremes(Vec<Vec<f64>>),
    Interval { lo: f64, hi: f64 },
}

/// Operations the orbit and probing machinery needs from a credal-set type.
pub trait CredalSpace: Clone + Send + Sync {
    fn distance(&self, other: &Self, metric: SetMetric) -> Result<f64>;

    /// A random nearby set at distance at most `scale` under `metric`.
    fn perturb<R: Rng + ?Sized>(&self, scale: f64, metric: SetMetric, rng: &mut R) -> Result<Self>;

    fn summary(&self) -> SetSummary;
}

impl CredalSpace for CredalSet {
    fn distance(&self, other: &Self, metric: SetMetric) -> Result<f64> {
        match metric {
            SetMetric::TvHausdorff => hausdorff_tv(self, other),
            SetMetric::FiniteHilbert => {
                hausdorff_finite_hilbert(&self.positive_extremes()?, &other.positive_extremes()?)
            }
            SetMetric::Interval => {
                check_dim(2, self.dim())?;
                hausdorff_tv(self, other)
            }
        }
    }

    /// Moves each generator independently, then reduces. For TV each point is
    /// mixed with a random interior point; for the Hilbert metric each point
    /// is rescaled coordinatewise by factors in `[e^{-s/2}, e^{s/2}]`.
    fn perturb<R: Rng + ?Sized>(&self, scale: f64, metric: SetMetric, rng: &mut R) -> Result<Self> {
        check_scale(scale)?;
        let dim = self.dim();
        let mut moved = Vec::with_capacity(self.len());
        for p in &self.extremes {
            let q = match metric {
                SetMetric::TvHausdorff | SetMetric::Interval => {
                    let r = random_positive_dist(dim, rng)?;
                    let eps = uniform(rng, 0.0, scale.min(1.0));
                    p.mix(r.as_dist(), eps)?
                }
                SetMetric::FiniteHilbert => {
                    let w = p
                        .weights()
                        .iter()
                        .map(|&w| w * uniform(rng, -0.5 * scale, 0.5 * scale).exp())
                        .collect();
                    Dist::from_unnormalized(w)?
                }
            };
            moved.push(q);
        }
        CredalSet::reduce(moved)
    }

    fn summary(&self) -> SetSummary {
        SetSummary::Extremes(self.to_weights())
    }
}

impl CredalSpace for IntervalCredal {
    fn distance(&self, other: &Self, metric: SetMetric) -> Result<f64> {
        match metric {
            SetMetric::Interval | SetMetric::TvHausdorff => Ok(hausdorff_interval(self, other)),
            SetMetric::FiniteHilbert => Err(CredalError::Parameter(
                "the finite Hilbert metric is not defined for interval credal sets".into(),
            )),
        }
    }

    /// Moves each endpoint by at most `scale`, clamps to [0, 1] and sorts.
    fn perturb<R: Rng + ?Sized>(&self, scale: f64, metric: SetMetric, rng: &mut R) -> Result<Self> {
        check_scale(scale)?;
        if metric == SetMetric::FiniteHilbert {
            return Err(CredalError::Parameter(
                "the finite Hilbert metric is not defined for interval credal sets".into(),
            ));
        }
        let a = (self.lo + uniform(rng, -scale, scale)).clamp(0.0, 1.0);
        let b = (self.hi + uniform(rng, -scale, scale)).clamp(0.0, 1.0);
        IntervalCredal::new(a.min(b), a.max(b))
    }

    fn summary(&self) -> SetSummary {
        SetSummary::Interval { lo: self.lo, hi: self.hi }
    }
}

fn check_scale(scale: f64) -> Result<()> {
    if scale > 0.0 && scale.is_finite() {
        Ok(())
    } else {
        Err(CredalError::Parameter(format!("perturbation scale must be positive, got {scale}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(w: &[f64]) -> Dist {
        Dist::new(w.to_vec()).unwrap()
    }

    fn set(points: &[&[f64]]) -> CredalSet {
        CredalSet::reduce(points.iter().map(|w| d(w)).collect()).unwrap()
    }

    fn pd(w: &[f64]) -> PositiveDist {
        PositiveDist::from_weights(w.to_vec()).unwrap()
    }

    #[test]
    fn reduce_examples() {
        let s = set(&[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]]);
        assert_eq!(s.to_weights(), vec![vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert!(s.is_reduced());

        let s = set(&[&[0.3, 0.7]]);
        assert_eq!(s.to_weights(), vec![vec![0.3, 0.7]]);

        let third = 1.0 / 3.0;
        let s = set(&[&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 1.0], &[third, third, third]]);
        assert_eq!(s.len(), 3);
        assert!(s.extremes().iter().all(|p| p.weights().contains(&1.0)));

        assert!(matches!(CredalSet::reduce(vec![]), Err(CredalError::EmptyCredal)));
        assert!(matches!(
            CredalSet::reduce(vec![d(&[0.5, 0.5]), d(&[0.2, 0.3, 0.5])]),
            Err(CredalError::Dimension { .. })
        ));
    }

    #[test]
    fn reduce_is_idempotent() {
        let s = set(&[&[0.2, 0.3, 0.5], &[0.6, 0.2, 0.2], &[0.4, 0.25, 0.35], &[0.1, 0.8, 0.1]]);
        let again = CredalSet::reduce(s.extremes().to_vec()).unwrap();
        assert_eq!(s, again);
    }

    #[test]
    fn contains_examples() {
        assert!(contains(&set(&[&[1.0, 0.0], &[0.0, 1.0]]), &d(&[0.4, 0.6])).unwrap());
        assert!(!contains(&set(&[&[0.6, 0.4], &[0.8, 0.2]]), &d(&[0.5, 0.5])).unwrap());
        assert!(contains(&set(&[&[0.3, 0.7]]), &d(&[0.3, 0.7])).unwrap());
        assert!(contains(&set(&[&[0.3, 0.7]]), &d(&[0.3, 0.7, 0.0])).is_err());
    }

    #[test]
    fn includes_examples() {
        let whole = CredalSet::whole_simplex(2).unwrap();
        let a = set(&[&[0.6, 0.4], &[0.8, 0.2]]);
        let b = set(&[&[0.65, 0.35]]);
        assert!(includes(&whole, &a).unwrap());
        assert!(includes(&a, &b).unwrap());
        assert!(!includes(&b, &a).unwrap());
    }

    #[test]
    fn support_function_examples() {
        let s = set(&[&[0.3, 0.7]]);
        assert_eq!(support_function(&s, &[2.0, -1.0]).unwrap(), support_value(&d(&[0.3, 0.7]), &[2.0, -1.0]).unwrap());
        assert_eq!(support_function(&set(&[&[1.0, 0.0], &[0.0, 1.0]]), &[2.0, 5.0]).unwrap(), 5.0);
        let s = set(&[&[0.2, 0.3, 0.5], &[0.6, 0.2, 0.2]]);
        assert!((support_function(&s, &[1.0, 1.0, 1.0]).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn point_to_set_examples() {
        let a = set(&[&[0.6, 0.4], &[0.8, 0.2]]);
        assert!(point_to_set_tv(&d(&[0.7, 0.3]), &a).unwrap() < 1e-12);
        assert!((point_to_set_tv(&d(&[0.5, 0.5]), &a).unwrap() - 0.1).abs() < 1e-12);
        assert!((point_to_set_tv(&d(&[1.0, 0.0]), &set(&[&[0.0, 1.0]])).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_tv_examples() {
        let a = set(&[&[0.6, 0.4], &[0.8, 0.2]]);
        assert_eq!(hausdorff_tv(&a, &a).unwrap(), 0.0);
        assert!((hausdorff_tv(&a, &set(&[&[0.7, 0.3]])).unwrap() - 0.1).abs() < 1e-12);
        let whole = CredalSet::whole_simplex(2).unwrap();
        assert!((hausdorff_tv(&whole, &set(&[&[0.5, 0.5]])).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn hausdorff_hilbert_examples() {
        let s = vec![pd(&[0.5, 0.5]), pd(&[0.25, 0.75])];
        assert_eq!(hausdorff_finite_hilbert(&s, &s).unwrap(), 0.0);
        let (p, q) = (pd(&[0.2, 0.8]), pd(&[0.6, 0.4]));
        assert_eq!(
            hausdorff_finite_hilbert(std::slice::from_ref(&p), std::slice::from_ref(&q)).unwrap(),
            hilbert_distance(&p, &q).unwrap()
        );
        let h = hausdorff_finite_hilbert(&s, &[pd(&[0.5, 0.5])]).unwrap();
        assert!((h - 3f64.ln()).abs() < 1e-12);
        assert!(hausdorff_finite_hilbert(&[], &s).is_err());
    }

    #[test]
    fn hausdorff_interval_examples() {
        let i = IntervalCredal::new(0.2, 0.3).unwrap();
        assert_eq!(hausdorff_interval(&i, &i), 0.0);
        let j = IntervalCredal::new(0.3, 0.4).unwrap();
        assert!((hausdorff_interval(&i, &j) - 0.1).abs() < 1e-15);
        assert_eq!(hausdorff_interval(&IntervalCredal::whole(), &IntervalCredal::point(0.5).unwrap()), 0.5);
    }

    #[test]
    fn interval_validation_and_algebra() {
        assert!(IntervalCredal::new(0.4, 0.3).is_err());
        assert!(IntervalCredal::new(-0.1, 0.3).is_err());
        let a = IntervalCredal::new(0.0, 0.5).unwrap();
        let b = IntervalCredal::new(0.5, 1.0).unwrap();
        assert_eq!(a.intersect(&b), Some(IntervalCredal::point(0.5).unwrap()));
        assert_eq!(a.hull(&b), IntervalCredal::whole());
        assert_eq!(IntervalCredal::new(0.0, 0.2).unwrap().intersect(&b), None);
        let round: IntervalCredal = serde_json::from_str("[0.1, 0.4]").unwrap();
        assert_eq!(round, IntervalCredal::new(0.1, 0.4).unwrap());
    }

    #[test]
    fn binary_embedding_round_trip() {
        let i = IntervalCredal::new(0.2, 0.7).unwrap();
        let s = i.to_credal_set().unwrap();
        assert_eq!(IntervalCredal::from_binary_set(&s).unwrap(), i);
        let degenerate = IntervalCredal::point(0.4).unwrap().to_credal_set().unwrap();
        assert_eq!(degenerate.len(), 1);
    }

    #[test]
    fn interval_perturbation_stays_within_scale() {
        let mut rng = crate::sampling::rng_for(3, 0);
        let base = IntervalCredal::new(0.02, 0.97).unwrap();
        for _ in 0..500 {
            let p = base.perturb(0.05, SetMetric::Interval, &mut rng).unwrap();
            assert!(hausdorff_interval(&base, &p) <= 0.05);
        }
    }
}
