//! Contraction diagnostics: Birkhoff coefficients, Monte Carlo checks of the
//! tilt bound on points and finite sets, and empirical modulus estimation.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::credal::{hausdorff_finite_hilbert, CredalSpace, SetMetric};
use crate::dist::{bayes_tilt, hilbert_distance, Likelihood, PositiveDist};
use crate::error::{check_dim, CredalError, Result};
use crate::rules::UpdateRule;
use crate::sampling::{random_positive_dist, rng_for};

/// Additive slack allowed on `after <= tau * before` before a trial counts
/// as a violation.
pub const VIOLATION_TOLERANCE: f64 = 1e-10;

/// `tanh(¼ ln(beta / alpha))`, the Birkhoff contraction coefficient of a
/// diagonal positive map with entries in `[alpha, beta]`.
pub fn birkhoff_tau(alpha: f64, beta: f64) -> Result<f64> {
    if !(alpha > 0.0) || !beta.is_finite() || beta < alpha {
        return Err(CredalError::Parameter(format!(
            "need 0 < alpha <= beta < inf, got alpha = {alpha}, beta = {beta}"
        )));
    }
    // Algebraically equal to the tanh form and exactly 0 when alpha == beta.
    let (a, b) = (alpha.sqrt(), beta.sqrt());
    Ok((b - a) / (b + a))
}

/// Coefficient of a single likelihood.
pub fn likelihood_tau(ell: &Likelihood) -> f64 {
    let (a, b) = (ell.alpha().sqrt(), ell.beta().sqrt());
    (b - a) / (b + a)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstCase {
    pub left: Vec<Vec<f64>>,
    pub right: Vec<Vec<f64>>,
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub before: f64,
    pub after: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContractionReport {
    pub tau_bound: f64,
    /// Largest `after / before` over trials with `before > 0`.
    pub max_observed_ratio: f64,
    pub trials: usize,
    /// Trials with `after > tau_bound * before + VIOLATION_TOLERANCE`.
    pub violations: usize,
    pub worst_case: Option<WorstCase>,
    #[serde(skip)]
    pub observations: Vec<Observation>,
}

impl ContractionReport {
    fn assemble<F>(tau_bound: f64, trials: Vec<(Observation, F)>) -> Self
    where
        F: FnOnce() -> (Vec<Vec<f64>>, Vec<Vec<f64>>),
    {
        let n = trials.len();
        let mut max_ratio = 0.0;
        let mut violations = 0;
        let mut worst: Option<WorstCase> = None;
        let mut observations = Vec::with_capacity(n);
        for (obs, pair) in trials {
            if obs.after > tau_bound * obs.before + VIOLATION_TOLERANCE {
                violations += 1;
            }
            let ratio = ratio(&obs);
            if worst.is_none() || ratio > max_ratio {
                max_ratio = ratio;
                let (left, right) = pair();
                worst = Some(WorstCase { left, right, before: obs.before, after: obs.after });
            }
            observations.push(obs);
        }
        Self {
            tau_bound,
            max_observed_ratio: max_ratio,
            trials: n,
            violations,
            worst_case: worst,
            observations,
        }
    }
}

fn ratio(obs: &Observation) -> f64 {
    if obs.before > 0.0 {
        obs.after / obs.before
    } else if obs.after > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn check_trials(trials: usize) -> Result<()> {
    if trials == 0 {
        Err(CredalError::Parameter("at least one trial is required".into()))
    } else {
        Ok(())
    }
}

/// Samples pairs of random interior distributions and compares their Hilbert
/// distance before and after the tilt by `ell` with the Birkhoff bound.
pub fn verify_point_contraction(ell: &Likelihood, trials: usize, seed: u64) -> Result<ContractionReport> {
    check_trials(trials)?;
    let tau = likelihood_tau(ell);
    let dim = ell.dim();
    let results = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, t as u64);
            let p = random_positive_dist(dim, &mut rng)?;
            let q = random_positive_dist(dim, &mut rng)?;
            let before = hilbert_distance(&p, &q)?;
            let after = hilbert_distance(&bayes_tilt(&p, ell)?, &bayes_tilt(&q, ell)?)?;
            Ok((Observation { before, after }, (p, q)))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ContractionReport::assemble(
        tau,
        results
            .into_iter()
            .map(|(obs, (p, q))| (obs, move || (vec![p.weights().to_vec()], vec![q.weights().to_vec()])))
            .collect(),
    ))
}

/// Image of a finite point set under `A ↦ ∪_k T_k[A]`.
pub fn tilt_union(points: &[PositiveDist], likelihoods: &[Likelihood]) -> Result<Vec<PositiveDist>> {
    let mut out = Vec::with_capacity(points.len() * likelihoods.len());
    for p in points {
        for ell in likelihoods {
            out.push(bayes_tilt(p, ell)?);
        }
    }
    Ok(out)
}

/// Samples pairs of finite point sets with between 1 and `max_set_size`
/// points and compares their Hilbert-Hausdorff distance before and after
/// [`tilt_union`] with `tau = max_k tau_k`.
pub fn verify_set_contraction(
    likelihoods: &[Likelihood],
    trials: usize,
    seed: u64,
    max_set_size: usize,
) -> Result<ContractionReport> {
    check_trials(trials)?;
    let first = likelihoods
        .first()
        .ok_or_else(|| CredalError::Parameter("at least one likelihood is required".into()))?;
    if max_set_size == 0 {
        return Err(CredalError::Parameter("set size must be at least 1".into()));
    }
    let dim = first.dim();
    for l in likelihoods {
        check_dim(dim, l.dim())?;
    }
    let tau = likelihoods.iter().map(likelihood_tau).fold(0.0, f64::max);
    let results = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_for(seed, t as u64);
            let a = random_point_set(dim, max_set_size, &mut rng)?;
            let b = random_point_set(dim, max_set_size, &mut rng)?;
            let before = hausdorff_finite_hilbert(&a, &b)?;
            let after = hausdorff_finite_hilbert(&tilt_union(&a, likelihoods)?, &tilt_union(&b, likelihoods)?)?;
            Ok((Observation { before, after }, (a, b)))
        })
        .collect::<Result<Vec<_>>>()?;
    let weights = |s: Vec<PositiveDist>| s.iter().map(|p| p.weights().to_vec()).collect::<Vec<_>>();
    Ok(ContractionReport::assemble(
        tau,
        results
            .into_iter()
            .map(|(obs, (a, b))| (obs, move || (weights(a), weights(b))))
            .collect(),
    ))
}

fn random_point_set(dim: usize, max_size: usize, rng: &mut ChaCha8Rng) -> Result<Vec<PositiveDist>> {
    use rand::Rng;
    let size = rng.random_range(1..=max_size);
    (0..size).map(|_| random_positive_dist(dim, rng)).collect()
}

/// Empirical modulus of continuity of a rule.
///
/// `psi_hat` is a lower estimate of the true supremum: it is the largest
/// output distance over the sampled pairs only. A value `psi_hat(t) >= t` is
/// a genuine counterexample to `psi(t) < t`; the converse is only evidence.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PsiEstimate {
    pub metric: SetMetric,
    pub t_grid: Vec<f64>,
    /// `psi_hat[b]` is the largest output distance over all sampled pairs
    /// whose input distance is at most `t_grid[b]`, so it is nondecreasing.
    pub psi_hat: Vec<f64>,
    pub pairs_per_bin: usize,
    /// Proposals drawn for each bin, including rejected ones.
    pub attempts: Vec<usize>,
    pub satisfies_psi_lt_t: bool,
}

impl PsiEstimate {
    pub fn ratios(&self) -> Vec<f64> {
        self.psi_hat.iter().zip(&self.t_grid).map(|(p, t)| p / t).collect()
    }
}

/// Proposals allowed per accepted pair before a bin is abandoned.
pub const PSI_RETRY_FACTOR: usize = 100;

/// Estimates `psi(t) = sup { d(f(P), f(Q)) : d(P, Q) <= t }` on `t_grid`.
///
/// For each bin, `sampler` draws a base set and a partner is proposed by
/// perturbing it at scale `t`; partners farther than `t` are rejected.
pub fn estimate_psi<R, F>(
    rule: &R,
    sampler: F,
    metric: SetMetric,
    t_grid: &[f64],
    pairs_per_bin: usize,
    seed: u64,
) -> Result<PsiEstimate>
where
    R: UpdateRule + ?Sized,
    F: Fn(&mut ChaCha8Rng) -> Result<R::Set>,
{
    if t_grid.is_empty() || t_grid[0] <= 0.0 || t_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(CredalError::Parameter("t grid must be nonempty, positive and increasing".into()));
    }
    if pairs_per_bin == 0 {
        return Err(CredalError::Parameter("pairs per bin must be at least 1".into()));
    }
    let budget = PSI_RETRY_FACTOR * pairs_per_bin;
    let mut observations: Vec<(f64, f64)> = Vec::new();
    let mut attempts = Vec::with_capacity(t_grid.len());
    for (bin, &t) in t_grid.iter().enumerate() {
        let mut accepted = 0;
        let mut tried = 0;
        while accepted < pairs_per_bin {
            if tried == budget {
                return Err(CredalError::Sampling { bin, t, attempts: tried });
            }
            let mut rng = rng_for(seed, ((bin as u64) << 32) | tried as u64);
            tried += 1;
            let p = sampler(&mut rng)?;
            let q = p.perturb(t, metric, &mut rng)?;
            let d_in = p.distance(&q, metric)?;
            if d_in > t {
                continue;
            }
            let d_out = rule.apply(&p)?.distance(&rule.apply(&q)?, metric)?;
            observations.push((d_in, d_out));
            accepted += 1;
        }
        attempts.push(tried);
    }
    let psi_hat: Vec<f64> = t_grid
        .iter()
        .map(|&t| {
            observations
                .iter()
                .filter(|(d_in, _)| *d_in <= t)
                .map(|(_, d_out)| *d_out)
                .fold(0.0, f64::max)
        })
        .collect();
    let satisfies = psi_hat.iter().zip(t_grid).all(|(p, t)| p < t);
    Ok(PsiEstimate {
        metric,
        t_grid: t_grid.to_vec(),
        psi_hat,
        pairs_per_bin,
        attempts,
        satisfies_psi_lt_t: satisfies,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::credal::IntervalCredal;
    use crate::rules::{AnchorContraction, BinaryEmbedding, DiscontinuousShift};
    use crate::sampling::random_credal_set;

    fn lik(v: &[f64]) -> Likelihood {
        Likelihood::new(v.to_vec()).unwrap()
    }

    #[test]
    fn tau_examples() {
        assert_eq!(birkhoff_tau(2.0, 2.0).unwrap(), 0.0);
        let e4 = 4f64.exp();
        assert!((birkhoff_tau(1.0, e4).unwrap() - 1f64.tanh()).abs() < 1e-15);
        assert!((birkhoff_tau(1.0, 9.0).unwrap() - 0.5).abs() < 1e-15);
        assert!((birkhoff_tau(1.0, 3.0).unwrap() - (0.25 * 3f64.ln()).tanh()).abs() < 1e-15);
        assert!(birkhoff_tau(0.0, 1.0).is_err());
        assert!(birkhoff_tau(2.0, 1.0).is_err());
        assert!(birkhoff_tau(1.0, f64::INFINITY).is_err());
    }

    #[test]
    fn tau_is_increasing_and_below_one() {
        let mut prev = -1.0;
        for k in 0..200 {
            let r = 1.0 + k as f64 * 0.5;
            let t = birkhoff_tau(1.0, r).unwrap();
            assert!(t > prev && t < 1.0);
            prev = t;
        }
    }

    #[test]
    fn tilt_is_a_hilbert_isometry() {
        // Coordinatewise scaling cancels in every log ratio, so the tilt
        // never shrinks Hilbert distances; only the identity bound holds.
        for ell in [lik(&[2.0, 2.0]), lik(&[1.0, 3.0]), lik(&[1.0, 10.0, 4.0, 2.0, 100.0])] {
            let r = verify_point_contraction(&ell, 500, 3).unwrap();
            for obs in &r.observations {
                assert!((obs.after - obs.before).abs() <= 1e-12 * obs.before.max(1.0));
            }
            assert!((r.max_observed_ratio - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_likelihood_has_zero_tau_and_unit_ratio() {
        let r = verify_point_contraction(&Likelihood::constant(3, 0.7).unwrap(), 100, 1).unwrap();
        assert_eq!(r.tau_bound, 0.0);
        assert_eq!(r.violations, 100);
        assert!(r.worst_case.is_some());
    }

    #[test]
    fn point_reports_are_deterministic() {
        let a = verify_point_contraction(&lik(&[1.0, 3.0]), 200, 9).unwrap();
        let b = verify_point_contraction(&lik(&[1.0, 3.0]), 200, 9).unwrap();
        assert_eq!(a, b);
        assert!(verify_point_contraction(&lik(&[1.0, 3.0]), 0, 9).is_err());
    }

    #[test]
    fn singleton_sets_reduce_to_the_point_case() {
        let ell = lik(&[1.0, 3.0, 2.0]);
        let set = verify_set_contraction(std::slice::from_ref(&ell), 200, 4, 1).unwrap();
        for obs in &set.observations {
            assert!((obs.after - obs.before).abs() <= 1e-12 * obs.before.max(1.0));
        }
        assert_eq!(set.tau_bound, likelihood_tau(&ell));
    }

    #[test]
    fn identical_sets_have_zero_distances() {
        let mut rng = rng_for(2, 0);
        let a: Vec<_> = (0..3).map(|_| random_positive_dist(4, &mut rng).unwrap()).collect();
        let ls = [lik(&[1.0, 3.0, 1.0, 2.0]), lik(&[2.0, 1.0, 1.0, 1.0])];
        let img = tilt_union(&a, &ls).unwrap();
        assert_eq!(hausdorff_finite_hilbert(&a, &a).unwrap(), 0.0);
        assert_eq!(hausdorff_finite_hilbert(&img, &img).unwrap(), 0.0);
    }

    #[test]
    fn set_tau_is_the_largest_coefficient() {
        let ls = [lik(&[1.0, 3.0]), lik(&[2.0, 1.0])];
        let r = verify_set_contraction(&ls, 50, 1, 3).unwrap();
        assert_eq!(r.tau_bound, birkhoff_tau(1.0, 3.0).unwrap());
        assert!(verify_set_contraction(&[], 5, 1, 3).is_err());
        assert!(verify_set_contraction(&ls, 5, 1, 0).is_err());
    }

    #[test]
    fn psi_for_anchor_is_below_the_lipschitz_line() {
        let gamma = 0.3;
        let rule = BinaryEmbedding::new(Arc::new(AnchorContraction::new(gamma, 0.6).unwrap()));
        let grid = [0.01, 0.02, 0.05, 0.1, 0.2];
        let est = estimate_psi(
            &rule,
            |rng| random_credal_set(2, 2, rng),
            SetMetric::TvHausdorff,
            &grid,
            40,
            17,
        )
        .unwrap();
        for (p, t) in est.psi_hat.iter().zip(&grid) {
            assert!(*p <= (1.0 - gamma) * t + 1e-9, "{p} > {}", (1.0 - gamma) * t);
        }
        assert!(est.psi_hat.windows(2).all(|w| w[0] <= w[1]));
        assert!(est.satisfies_psi_lt_t);
    }

    #[test]
    fn psi_for_the_shift_exceeds_small_t() {
        let delta = 0.1;
        let rule = DiscontinuousShift::new(delta).unwrap();
        let grid = [0.001, 0.01, 0.05];
        let est = estimate_psi(
            &rule,
            |_| IntervalCredal::new(0.3, 1.0 - delta),
            SetMetric::Interval,
            &grid,
            50,
            1,
        )
        .unwrap();
        assert!(est.psi_hat[0] >= delta - 1e-12);
        assert!(!est.satisfies_psi_lt_t);
    }

    #[test]
    fn psi_rejects_bad_grids() {
        let rule = DiscontinuousShift::new(0.1).unwrap();
        let sampler = |_: &mut ChaCha8Rng| IntervalCredal::new(0.1, 0.2);
        for grid in [vec![], vec![0.0, 0.1], vec![0.2, 0.1]] {
            assert!(estimate_psi(&rule, sampler, SetMetric::Interval, &grid, 1, 0).is_err());
        }
        assert!(estimate_psi(&rule, sampler, SetMetric::Interval, &[0.1], 0, 0).is_err());
    }
}
