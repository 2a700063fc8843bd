//! Dispatch from scenarios to the library, producing a trace table and a
//! JSON result for each kind.

use std::collections::BTreeMap;

use credal_core::contraction::{estimate_psi, verify_point_contraction, verify_set_contraction};
use credal_core::credal::{hausdorff_finite_hilbert, hausdorff_interval, hausdorff_tv, CredalSpace, SetSummary};
use credal_core::fixpoint::{fit_rate, orbit, sandwich_run, uniqueness_check, IterateConfig, OrbitTrace};
use credal_core::gaussian::{run_illustration, DataBatch, GaussianCredalSet};
use credal_core::rules::{continuity_probe, DiscontinuousShift, IntervalRule, UpdateRule};
use credal_core::sampling::{random_credal_set, rng_for};
use credal_core::{CredalSet, Dist, IntervalCredal, SetMetric};
use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::scenario::{
    default_metric, BuiltSet, ContractMode, ContractScenario, CounterexampleScenario, GaussianScenario,
    IterateScenario, PsiScenario, SamplerSpec, SandwichScenario, Scenario, SetSpec, StartsSpec,
    UniquenessScenario,
};

/// Rows of `trace.csv`; every field is already formatted.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub passed: bool,
    /// Named pass conditions; the run passes iff all hold.
    pub checks: BTreeMap<String, bool>,
    pub result: Value,
    pub notes: Vec<String>,
    pub trace: Table,
}

impl Outcome {
    fn new(checks: Vec<(&str, bool)>, result: Value, notes: Vec<String>, trace: Table) -> Self {
        let checks: BTreeMap<String, bool> = checks.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        Self { passed: checks.values().all(|v| *v), checks, result, notes, trace }
    }
}

fn num(x: f64) -> String {
    format!("{x:?}")
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn to_json<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report types serialize")
}

pub fn run_scenario(scenario: &Scenario) -> Result<Outcome> {
    match scenario {
        Scenario::Iterate(s) => run_iterate(s),
        Scenario::Contract(s) => run_contract(s),
        Scenario::Psi(s) => run_psi(s),
        Scenario::Counterexample(s) => run_counterexample(s),
        Scenario::Sandwich(s) => run_sandwich(s),
        Scenario::Gaussian(s) => run_gaussian(s),
        Scenario::Uniqueness(s) => run_uniqueness(s),
    }
}

fn interval_of(spec: &SetSpec, key: &str) -> Result<IntervalCredal> {
    match spec.build(key)? {
        BuiltSet::Interval(i) => Ok(i),
        BuiltSet::Credal(_) => Err(CliError::invalid(key, "expected an interval")),
    }
}

fn credal_of(spec: &SetSpec, key: &str) -> Result<CredalSet> {
    match spec.build(key)? {
        BuiltSet::Credal(c) => Ok(c),
        BuiltSet::Interval(_) => Err(CliError::invalid(key, "expected extreme points")),
    }
}

fn interval_orbit_table(trace: &OrbitTrace) -> Table {
    let mut t = Table::new(&["n", "lo", "hi", "d_prev", "d_fix", "d_limit"]);
    for s in &trace.steps {
        let (lo, hi) = match s.set {
            SetSummary::Interval { lo, hi } => (lo, hi),
            SetSummary::Extremes(_) => (f64::NAN, f64::NAN),
        };
        t.rows.push(vec![s.n.to_string(), num(lo), num(hi), opt(s.d_prev), num(s.d_fix), num(s.d_limit)]);
    }
    t
}

/// Orbit table for finitely generated sets. Besides the configured metric,
/// the step distance is recorded under both set metrics.
fn credal_orbit_table(trace: &OrbitTrace) -> Table {
    let mut t = Table::new(&["n", "extreme_count", "d_prev", "d_fix", "d_limit", "d_prev_tv", "d_prev_hilbert"]);
    let sets: Vec<Option<CredalSet>> = trace
        .steps
        .iter()
        .map(|s| match &s.set {
            SetSummary::Extremes(w) => w
                .iter()
                .map(|p| Dist::new(p.clone()))
                .collect::<credal_core::Result<Vec<_>>>()
                .and_then(CredalSet::from_points)
                .ok(),
            SetSummary::Interval { .. } => None,
        })
        .collect();
    for (i, s) in trace.steps.iter().enumerate() {
        let count = match &s.set {
            SetSummary::Extremes(w) => w.len(),
            SetSummary::Interval { .. } => 0,
        };
        let (tv, hilbert) = match (i.checked_sub(1).and_then(|j| sets[j].as_ref()), sets[i].as_ref()) {
            (Some(prev), Some(cur)) => (
                hausdorff_tv(prev, cur).ok(),
                prev.positive_extremes()
                    .and_then(|a| Ok((a, cur.positive_extremes()?)))
                    .and_then(|(a, b)| hausdorff_finite_hilbert(&a, &b))
                    .ok(),
            ),
            _ => (None, None),
        };
        t.rows.push(vec![
            s.n.to_string(),
            count.to_string(),
            opt(s.d_prev),
            num(s.d_fix),
            num(s.d_limit),
            opt(tv),
            opt(hilbert),
        ]);
    }
    t
}

fn run_iterate(s: &IterateScenario) -> Result<Outcome> {
    let start = s.start.build("start")?;
    let interval = matches!(start, BuiltSet::Interval(_));
    let cfg = IterateConfig { tol: s.tol, max_iter: s.max_iter, metric: default_metric(s.metric, interval) };
    let trace = match start {
        BuiltSet::Interval(start) => {
            let rule = s.rule.build_interval().map_err(|e| CliError::invalid("rule", e))?;
            let fixed = s.fixed_point.as_ref().map(|f| interval_of(f, "fixed_point")).transpose()?;
            orbit(rule.as_ref(), &start, &cfg, fixed.as_ref()).map_err(CliError::run("iterate"))?.trace
        }
        BuiltSet::Credal(start) => {
            let rule = s.rule.build_credal().map_err(|e| CliError::invalid("rule", e))?;
            let fixed = s.fixed_point.as_ref().map(|f| credal_of(f, "fixed_point")).transpose()?;
            orbit(rule.as_ref(), &start, &cfg, fixed.as_ref()).map_err(CliError::run("iterate"))?.trace
        }
    };
    let table = if interval { interval_orbit_table(&trace) } else { credal_orbit_table(&trace) };

    let mut checks = vec![("convergence_as_expected", trace.converged == s.expect_convergence)];
    let mut notes = Vec::new();
    let mut rate = Value::Null;
    if let Some(tau) = s.tau_bound {
        match fit_rate(&trace, tau) {
            Ok(fit) => {
                checks.push(("rate_bound", fit.bound_satisfied));
                rate = to_json(&fit);
            }
            Err(e) => {
                checks.push(("rate_bound", false));
                notes.push(format!("rate fit unavailable: {e}"));
            }
        }
    }
    if !s.expect_convergence {
        notes.push("this scenario expects the orbit not to converge".into());
    }
    let result = json!({ "orbit": to_json(&trace), "rate_fit": rate });
    Ok(Outcome::new(checks, result, notes, table))
}

fn run_contract(s: &ContractScenario) -> Result<Outcome> {
    let mut table = Table::new(&["trial", "likelihood", "before", "after", "ratio"]);
    let mut reports = Vec::new();
    let push_rows = |table: &mut Table, idx: Option<usize>, r: &credal_core::contraction::ContractionReport| {
        for (t, o) in r.observations.iter().enumerate() {
            let ratio = if o.before > 0.0 { Some(o.after / o.before) } else { None };
            table.rows.push(vec![
                t.to_string(),
                idx.map(|i| i.to_string()).unwrap_or_default(),
                num(o.before),
                num(o.after),
                opt(ratio),
            ]);
        }
    };
    match s.mode {
        ContractMode::Point => {
            for (i, ell) in s.likelihoods.iter().enumerate() {
                let r = verify_point_contraction(ell, s.trials, s.seed)
                    .map_err(CliError::run(format!("likelihood {i}")))?;
                push_rows(&mut table, Some(i), &r);
                reports.push(json!({ "likelihood": i, "report": to_json(&r) }));
            }
        }
        ContractMode::Set => {
            let r = verify_set_contraction(&s.likelihoods, s.trials, s.seed, s.max_set_size)
                .map_err(CliError::run("set contraction"))?;
            push_rows(&mut table, None, &r);
            reports.push(json!({ "likelihood": null, "report": to_json(&r) }));
        }
    }
    let violations: u64 = reports.iter().map(|r| r["report"]["violations"].as_u64().unwrap_or(0)).sum();
    let notes = vec![format!(
        "a violation is a trial with after > tau * before + {}",
        credal_core::contraction::VIOLATION_TOLERANCE
    )];
    Ok(Outcome::new(
        vec![("no_violations", violations == 0)],
        json!({ "reports": reports, "total_violations": violations }),
        notes,
        table,
    ))
}

fn run_psi(s: &PsiScenario) -> Result<Outcome> {
    let est = match &s.sampler {
        SamplerSpec::Fixed(SetSpec::Interval(base)) => {
            let rule = s.rule.build_interval().map_err(|e| CliError::invalid("rule", e))?;
            let metric = default_metric(s.metric, true);
            estimate_psi(rule.as_ref(), |_| Ok(*base), metric, &s.t_grid, s.pairs_per_bin, s.seed)
        }
        SamplerSpec::Fixed(spec) => {
            let base = credal_of(spec, "sampler.fixed")?;
            let rule = s.rule.build_credal().map_err(|e| CliError::invalid("rule", e))?;
            let metric = default_metric(s.metric, false);
            estimate_psi(rule.as_ref(), |_| Ok(base.clone()), metric, &s.t_grid, s.pairs_per_bin, s.seed)
        }
        SamplerSpec::Random { dim, points } => {
            let rule = s.rule.build_credal().map_err(|e| CliError::invalid("rule", e))?;
            let metric = default_metric(s.metric, false);
            let (dim, points) = (*dim, *points);
            estimate_psi(
                rule.as_ref(),
                |rng| random_credal_set(dim, points, rng),
                metric,
                &s.t_grid,
                s.pairs_per_bin,
                s.seed,
            )
        }
    }
    .map_err(CliError::run("psi estimation"))?;

    let mut table = Table::new(&["t", "psi_hat", "ratio", "attempts"]);
    for (((t, p), r), a) in est.t_grid.iter().zip(&est.psi_hat).zip(est.ratios()).zip(&est.attempts) {
        table.rows.push(vec![num(*t), num(*p), num(r), a.to_string()]);
    }
    let notes = vec![
        "psi_hat is a lower estimate of the true modulus: psi_hat(t) >= t disproves psi(t) < t, \
         while psi_hat(t) < t is evidence only"
            .to_string(),
    ];
    Ok(Outcome::new(vec![("psi_below_t", est.satisfies_psi_lt_t)], to_json(&est), notes, table))
}

#[derive(Debug, Serialize)]
struct Witness {
    n: usize,
    lo: f64,
    hi: f64,
    output_distance: f64,
}

fn run_counterexample(s: &CounterexampleScenario) -> Result<Outcome> {
    let rule = DiscontinuousShift::new(s.delta).map_err(|e| CliError::invalid("delta", e))?;
    let cfg = IterateConfig { tol: s.tol, max_iter: s.max_iter, metric: SetMetric::Interval };
    let trace = orbit(&rule, &s.start, &cfg, None).map_err(CliError::run("counterexample orbit"))?.trace;
    let min_d_fix = trace.steps.iter().map(|st| st.d_fix).fold(f64::INFINITY, f64::min);

    let edge = 1.0 - s.delta;
    let base = IntervalCredal::new(s.witness_lo, edge).map_err(|e| CliError::invalid("witness_lo", e))?;
    let image = rule.apply(&base).map_err(CliError::run("witness"))?;
    let mut witnesses = Vec::new();
    for &n in &s.witness_n {
        let hi = edge - 1.0 / n as f64;
        let i_n = IntervalCredal::new(s.witness_lo, hi).map_err(|e| CliError::invalid("witness_n", e))?;
        let d = hausdorff_interval(&rule.apply(&i_n).map_err(CliError::run("witness"))?, &image);
        witnesses.push(Witness { n, lo: s.witness_lo, hi, output_distance: d });
    }
    let probe = continuity_probe(&rule, &base, s.delta / 2.0, s.probe_trials, SetMetric::Interval, s.seed)
        .map_err(CliError::run("continuity probe"))?;

    let checks = vec![
        ("not_converged", !trace.converged),
        ("d_fix_stays_above_half_delta", min_d_fix >= s.delta / 2.0),
        ("witness_jump_at_least_delta", witnesses.iter().all(|w| w.output_distance >= s.delta - 1e-9)),
        ("probe_flags_discontinuity", probe.discontinuity_witness),
    ];
    let notes = vec!["non-convergence is the expected outcome for this kind".to_string()];
    let result = json!({
        "orbit": to_json(&trace),
        "min_d_fix": min_d_fix,
        "witnesses": to_json(&witnesses),
        "continuity_probe": to_json(&probe),
    });
    Ok(Outcome::new(checks, result, notes, interval_orbit_table(&trace)))
}

fn run_sandwich(s: &SandwichScenario) -> Result<Outcome> {
    let rules = s
        .rules
        .iter()
        .enumerate()
        .map(|(i, r)| r.build_interval().map_err(|e| CliError::invalid(&format!("rules[{i}]"), e)))
        .collect::<Result<Vec<IntervalRule>>>()?;
    let report = sandwich_run(&rules, &s.schedule, &s.start, s.tol, s.max_iter, s.seed)
        .map_err(CliError::run("sandwich"))?;
    let mut table = Table::new(&[
        "n", "rule", "lower_lo", "lower_hi", "composed_lo", "composed_hi", "upper_lo", "upper_hi",
    ]);
    for st in &report.steps {
        table.rows.push(vec![
            st.n.to_string(),
            st.rule.map(|r| r.to_string()).unwrap_or_default(),
            num(st.lower.lo()),
            num(st.lower.hi()),
            num(st.composed.lo()),
            num(st.composed.hi()),
            num(st.upper.lo()),
            num(st.upper.hi()),
        ]);
    }
    let ordered = report.upper_limit.includes(&report.composed_limit) && report.composed_limit.includes(&report.lower_limit);
    let mut notes = Vec::new();
    if !report.composed_converged {
        notes.push("the composed orbit did not settle within max_iter; its last iterate is reported".into());
    }
    Ok(Outcome::new(
        vec![("inclusion_every_step", report.inclusion_holds), ("limits_ordered", ordered)],
        to_json(&report),
        notes,
        table,
    ))
}

fn run_gaussian(s: &GaussianScenario) -> Result<Outcome> {
    let init = GaussianCredalSet::new(s.priors.clone()).map_err(|e| CliError::invalid("priors", e))?;
    let batch = DataBatch::generate(s.n, s.theta_star, s.seed).map_err(|e| CliError::invalid("n", e))?;
    let trace = run_illustration(&init, &batch, s.rounds, s.fresh_batches).map_err(CliError::run("gaussian"))?;

    let mut header = vec!["round".to_string(), "avg_sq_diff".to_string()];
    for j in 1..=s.priors.len() {
        header.push(format!("mu_{j}"));
        header.push(format!("tau2_{j}"));
    }
    let mut table = Table { header, rows: Vec::new() };
    for row in &trace.rows {
        let mut r = vec![row.round.to_string(), num(row.avg_sq_diff)];
        for p in &row.params {
            r.push(num(p.mu()));
            r.push(num(p.tau2()));
        }
        table.rows.push(r);
    }
    let decreasing = trace.rows.windows(2).all(|w| w[1].avg_sq_diff < w[0].avg_sq_diff);
    let last = trace.rows.last().map_or(f64::INFINITY, |r| r.avg_sq_diff);
    let mut notes = vec![format!("sample size n = {} (the illustration does not fix it)", s.n)];
    if s.fresh_batches {
        notes.push("fresh_batches draws new data every round, unlike the reused-batch illustration".into());
    }
    Ok(Outcome::new(
        vec![("strictly_decreasing_from_round_2", decreasing), ("final_below_target", last < s.target)],
        json!({ "batch": to_json(&batch), "trace": to_json(&trace) }),
        notes,
        table,
    ))
}

fn run_uniqueness(s: &UniquenessScenario) -> Result<Outcome> {
    let (interval, credal_starts, interval_starts) = match &s.starts {
        StartsSpec::Given(sets) => {
            let built = sets
                .iter()
                .enumerate()
                .map(|(i, set)| set.build(&format!("starts.given[{i}]")))
                .collect::<Result<Vec<_>>>()?;
            let mut c = Vec::new();
            let mut iv = Vec::new();
            for b in built {
                match b {
                    BuiltSet::Credal(x) => c.push(x),
                    BuiltSet::Interval(x) => iv.push(x),
                }
            }
            (c.is_empty(), c, iv)
        }
        StartsSpec::Random { count, dim, points } => {
            let c = (0..*count)
                .map(|i| random_credal_set(*dim, *points, &mut rng_for(s.seed, i as u64)))
                .collect::<credal_core::Result<Vec<_>>>()
                .map_err(CliError::run("random starts"))?;
            (false, c, Vec::new())
        }
    };
    let cfg = IterateConfig { tol: s.tol, max_iter: s.max_iter, metric: default_metric(s.metric, interval) };
    let report = if interval {
        let rule = s.rule.build_interval().map_err(|e| CliError::invalid("rule", e))?;
        uniqueness_check(rule.as_ref(), &interval_starts, &cfg)
    } else {
        let rule = s.rule.build_credal().map_err(|e| CliError::invalid("rule", e))?;
        uniqueness_check(rule.as_ref(), &credal_starts, &cfg)
    }
    .map_err(CliError::run("uniqueness"))?;

    let mut table = Table::new(&["start", "n", "d_prev", "d_fix"]);
    for (i, t) in report.traces.iter().enumerate() {
        for st in &t.steps {
            table.rows.push(vec![i.to_string(), st.n.to_string(), opt(st.d_prev), num(st.d_fix)]);
        }
    }
    let starts: Vec<SetSummary> = if interval {
        interval_starts.iter().map(|s| s.summary()).collect()
    } else {
        credal_starts.iter().map(|s| s.summary()).collect()
    };
    Ok(Outcome::new(
        vec![("limits_coincide", report.passed)],
        json!({ "starts": to_json(&starts), "report": to_json(&report), "threshold": 10.0 * s.tol }),
        Vec::new(),
        table,
    ))
}
