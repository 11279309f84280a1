//! The claim verifiers.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::bitspace::Point;
use crate::error::{LabError, Result};
use crate::harness::{
    build_tester, draw_from_support, run_deterministic, run_hybrid, trial_instance_seed, trial_sample_seed,
    Tester,
};
use crate::instances::{sample_no, sample_yes, ExperimentParams, Instance};
use crate::oracles::{truth_table, BooleanFunction, NoOracle};
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::{PairedDifference, Proportion};
use crate::verification::distance::{check_distance_feasible, distance_to_kjuntas};
use crate::verification::events::{event_frequencies_many, EventReport, EVENT_BOUNDS};
use crate::verification::exact::{exact_c32, ExactComparison};
use crate::verification::tv::{histogram, tv_from_histograms, tv_to_reference, uniform_law, Histogram};
use crate::verification::{Check, ClaimReport};

/// Random non-`J` flips probed per YES draw.
pub const C1_PROBES: usize = 1000;

/// Largest `n` at which the exhaustive dependence check runs.
pub const C1_EXACT_MAX_N: usize = 12;

/// Lower bound on the fraction of (1/3)-far NO functions.
pub const C2_BOUND: f64 = 12.0 / 13.0;

/// Allowed acceptance gap between `A'` and `A` on NO*.
pub const C33_BOUND: f64 = 1.0 / 8.0;

/// Allowed acceptance gap between YES and NO.
pub const GAP_BOUND: f64 = 1.0 / 4.0;

fn params_value(params: &ExperimentParams, extra: Value) -> Value {
    let mut v = json!({ "experiment": params });
    if let (Value::Object(base), Value::Object(extra)) = (&mut v, extra) {
        base.extend(extra);
    }
    v
}

fn build_all(names: &[String], params: &ExperimentParams, q: usize, seed: u64) -> Result<Vec<Box<dyn Tester>>> {
    names
        .iter()
        .map(|name| build_tester(name, params.n(), params.k(), q, seed))
        .collect()
}

fn as_refs(testers: &[Box<dyn Tester>]) -> Vec<&dyn Tester> {
    testers.iter().map(|t| t.as_ref()).collect()
}

/// Preconditions of the goodness argument: `q <= 2^{k/2-3}` and `m >= 2^k`.
pub fn claim2_regime(params: &ExperimentParams, q: usize) -> bool {
    let k = params.k() as f64;
    (q as f64) <= 2f64.powf(k / 2.0 - 3.0) && params.m() as f64 >= 2f64.powf(k)
}

fn claim2_warnings(params: &ExperimentParams, q: usize) -> Vec<String> {
    let mut w = params.warnings().to_vec();
    if !claim2_regime(params, q) {
        w.push(format!(
            "preconditions q <= 2^(k/2-3) and m >= 2^k fail at q={q}, k={}, m={}",
            params.k(),
            params.m()
        ));
    }
    w
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
struct C1Outcome {
    probe_pass: u64,
    exact_pass: u64,
    both_pass: u64,
}

fn c1_trial(f: &dyn BooleanFunction, instance: &Instance, probe_seed: u64) -> Result<(bool, Option<bool>)> {
    let n = instance.n();
    let outside = instance.planted_coords().complement();
    let mut rng = rng_from_seed(probe_seed);
    let mut probes_ok = true;
    if !outside.is_empty() {
        for _ in 0..C1_PROBES {
            let x = Point::random(n, &mut rng);
            let i = outside[rng.random_range(0..outside.len())];
            if f.eval(&x)? != f.eval(&x.flipped(i))? {
                probes_ok = false;
                break;
            }
        }
    }
    let exact = if n <= C1_EXACT_MAX_N {
        let table = truth_table(f)?;
        let ok = (0..table.len()).all(|x| outside.iter().all(|&i| table[x] == table[x ^ (1 << (n - 1 - i))]));
        Some(ok)
    } else {
        None
    };
    Ok((probes_ok, exact))
}

/// YES functions depend on `J` only.
pub fn verify_c1(params: &ExperimentParams, trials: u64, seed: u64) -> Result<ClaimReport> {
    verify_c1_with(params, trials, seed, &|inst: &Instance| Box::new(inst.phi().clone()))
}

/// [`verify_c1`] on functions derived from each YES draw by `wrap`; used for
/// mutation tests.
pub fn verify_c1_with(
    params: &ExperimentParams,
    trials: u64,
    seed: u64,
    wrap: &(dyn Fn(&Instance) -> Box<dyn BooleanFunction> + Sync),
) -> Result<ClaimReport> {
    let exact_used = params.n() <= C1_EXACT_MAX_N;
    let outcome = (0..trials)
        .into_par_iter()
        .map(|t| {
            let instance = sample_yes(params, trial_instance_seed(seed, t), false)?;
            let f = wrap(&instance);
            let (probes, exact) = c1_trial(f.as_ref(), &instance, derive_seed(seed, "c1-probe", t))?;
            let exact = exact.unwrap_or(true);
            Ok::<_, LabError>(C1Outcome {
                probe_pass: probes.into(),
                exact_pass: exact.into(),
                both_pass: (probes && exact).into(),
            })
        })
        .try_reduce(C1Outcome::default, |a, b| {
            Ok(C1Outcome {
                probe_pass: a.probe_pass + b.probe_pass,
                exact_pass: a.exact_pass + b.exact_pass,
                both_pass: a.both_pass + b.both_pass,
            })
        })?;
    let mut warnings = params.warnings().to_vec();
    let checks = if trials == 0 {
        warnings.push("no trials: vacuous pass".to_string());
        vec![Check::exact("no trials", true)]
    } else {
        let rate = |c: u64| Proportion::new(c, trials).mean();
        let mut checks = vec![Check::at_least("probe pass rate", rate(outcome.probe_pass), 0.0, 1.0)];
        if exact_used {
            checks.push(Check::at_least("truth-table pass rate", rate(outcome.exact_pass), 0.0, 1.0));
        }
        checks
    };
    Ok(ClaimReport::new(
        "c1",
        params_value(params, json!({ "probes": C1_PROBES, "seed": seed })),
        trials,
        params.regime_label(),
        warnings,
        checks,
        json!({ "counts": outcome, "exactCheck": exact_used }),
    ))
}

/// NO functions are (1/3)-far from every k-junta under their distribution.
pub fn verify_c2(params: &ExperimentParams, trials: u64, seed: u64) -> Result<ClaimReport> {
    verify_c2_with(params, trials, seed, &|s| {
        let inst = sample_no(params, s, false)?;
        Ok(inst.no_oracle().expect("NO instance").clone())
    })
}

/// [`verify_c2`] with a replacement NO sampler, called with each trial seed.
pub fn verify_c2_with(
    params: &ExperimentParams,
    trials: u64,
    seed: u64,
    sampler: &(dyn Fn(u64) -> Result<NoOracle> + Sync),
) -> Result<ClaimReport> {
    check_distance_feasible(params.n(), params.k(), params.m())?;
    let mislabelled: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let g = sampler(trial_instance_seed(seed, t))?;
            let r = distance_to_kjuntas(&g, g.support(), params.n(), params.k(), false)?;
            Ok(r.mislabelled)
        })
        .collect::<Result<_>>()?;
    let m = params.m() as u64;
    let far = mislabelled.iter().filter(|&&e| 3 * e >= m).count() as u64;
    let prop = Proportion::new(far, trials);
    let mut warnings = params.warnings().to_vec();
    let checks = if trials == 0 {
        warnings.push("no trials: vacuous pass".to_string());
        vec![Check::exact("no trials", true)]
    } else {
        vec![Check::at_least("fraction (1/3)-far", prop.mean(), prop.half_width(), C2_BOUND)]
    };
    let errors: Histogram<u64> = histogram(mislabelled.iter().copied());
    Ok(ClaimReport::new(
        "c2",
        params_value(params, json!({ "seed": seed })),
        trials,
        params.regime_label(),
        warnings,
        checks,
        json!({
            "far": far,
            "interval": prop.interval(),
            "mislabelledHistogram": errors,
            "farThreshold": "3 * mislabelled >= m",
        }),
    ))
}

fn alpha_index(labels: &[bool]) -> u64 {
    labels.iter().fold(0, |acc, &b| (acc << 1) | u64::from(b))
}

#[derive(Clone, Debug, Default)]
struct AlphaCounts {
    yes: Histogram<u64>,
    no: Histogram<u64>,
    no_distinct: Histogram<u64>,
    scattered: u64,
}

fn merge(a: &mut Histogram<u64>, b: Histogram<u64>) {
    for (k, c) in b {
        *a.entry(k).or_insert(0) += c;
    }
}

/// Label strings of scattered samples are uniform under YES* and NO*.
pub fn verify_c31_alpha_law(params: &ExperimentParams, q: usize, trials: u64, seed: u64) -> Result<ClaimReport> {
    if q == 0 || q > 16 {
        return Err(LabError::param(format!("alpha-law histograms need 1 <= q <= 16, got {q}")));
    }
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let yes = sample_yes(params, trial_instance_seed(seed, t), true)?;
            let no = sample_no(params, trial_instance_seed(seed, t), true)?;
            let samples = draw_from_support(yes.support(), q, trial_sample_seed(seed, t));
            let a_yes = alpha_index(&yes.phi().eval_all(&samples)?);
            let a_no = alpha_index(&no.phi().eval_all(&samples)?);
            let mut c = AlphaCounts::default();
            let mut distinct = samples.clone();
            distinct.sort_unstable();
            distinct.dedup();
            if distinct.len() == samples.len() {
                c.no_distinct.insert(a_no, 1);
            }
            if crate::oracles::is_scattered(&samples, yes.planted_coords()) {
                c.scattered = 1;
                c.yes.insert(a_yes, 1);
                c.no.insert(a_no, 1);
            }
            Ok::<_, LabError>(c)
        })
        .try_reduce(AlphaCounts::default, |mut a, b| {
            merge(&mut a.yes, b.yes);
            merge(&mut a.no, b.no);
            merge(&mut a.no_distinct, b.no_distinct);
            a.scattered += b.scattered;
            Ok(a)
        })?;
    let mut warnings = params.warnings().to_vec();
    if counts.scattered == 0 {
        warnings.push("no scattered draws: vacuous pass".to_string());
        return Ok(ClaimReport::new(
            "c31",
            params_value(params, json!({ "q": q, "seed": seed })),
            trials,
            params.regime_label(),
            warnings,
            vec![Check::exact("no scattered draws", true)],
            Value::Null,
        ));
    }
    let law = uniform_law(q);
    let between = tv_from_histograms(&counts.yes, &counts.no, derive_seed(seed, "c31-between", 0));
    let yes_ref = tv_to_reference(&counts.yes, &law, derive_seed(seed, "c31-yes", 0));
    let no_ref = tv_to_reference(&counts.no, &law, derive_seed(seed, "c31-no", 0));
    let no_distinct = tv_to_reference(&counts.no_distinct, &law, derive_seed(seed, "c31-no-distinct", 0));
    for est in [&between, &yes_ref, &no_ref, &no_distinct] {
        warnings.extend(est.warnings.iter().cloned());
    }
    let checks = vec![
        Check::at_most("TV(YES*, NO*) alpha | scattered", between.estimate, between.half_width, 0.0),
        Check::at_most("TV(YES*, uniform) alpha | scattered", yes_ref.estimate, yes_ref.half_width, 0.0),
        Check::at_most("TV(NO*, uniform) alpha | scattered", no_ref.estimate, no_ref.half_width, 0.0),
        Check::at_most("TV(NO*, uniform) alpha | distinct Y", no_distinct.estimate, no_distinct.half_width, 0.0),
    ];
    Ok(ClaimReport::new(
        "c31",
        params_value(params, json!({ "q": q, "seed": seed })),
        trials,
        params.regime_label(),
        warnings,
        checks,
        json!({
            "scattered": counts.scattered,
            "histYes": counts.yes,
            "histNo": counts.no,
            "tvBetween": between,
            "tvYesUniform": yes_ref,
            "tvNoUniform": no_ref,
            "tvNoDistinctUniform": no_distinct,
        }),
    ))
}

/// A tiny parameter point for the exhaustive `A` vs `A'` comparison.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ExactCase {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub q: usize,
}

/// The documented exhaustive grid.
pub const EXACT_GRID: [ExactCase; 3] = [
    ExactCase { n: 4, k: 2, m: 2, q: 1 },
    ExactCase { n: 4, k: 2, m: 3, q: 2 },
    ExactCase { n: 5, k: 2, m: 2, q: 2 },
];

#[derive(Clone, Debug, Serialize)]
struct AcceptPair {
    tester: String,
    trials: u64,
    yes: Proportion,
    hybrid: Proportion,
    yes_interval: (f64, f64),
    hybrid_interval: (f64, f64),
}

/// `A` on YES and `A'` on YES* accept equally often: Monte-Carlo at `params`
/// plus exhaustive enumeration on `exact_grid`.
pub fn verify_c32_equivalence(
    testers: &[String],
    params: &ExperimentParams,
    q: usize,
    trials: u64,
    seed: u64,
    exact_grid: &[ExactCase],
) -> Result<ClaimReport> {
    let built = build_all(testers, params, q, seed)?;
    let refs = as_refs(&built);
    let zero = || vec![(0u64, 0u64); refs.len()];
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let inst = sample_yes(params, trial_instance_seed(seed, t), true)?;
            let s = trial_sample_seed(seed, t);
            refs.iter()
                .map(|tester| {
                    let a = run_deterministic(*tester, &inst, s)?.verdict.accepted();
                    let h = run_hybrid(*tester, &inst, s)?.verdict.accepted();
                    Ok((u64::from(a), u64::from(h)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .try_reduce(zero, |a, b| Ok(a.iter().zip(&b).map(|(x, y)| (x.0 + y.0, x.1 + y.1)).collect()))?;

    let mut checks = Vec::new();
    let mut pairs = Vec::new();
    for (tester, &(a, h)) in refs.iter().zip(&counts) {
        let (pa, ph) = (Proportion::new(a, trials), Proportion::new(h, trials));
        let tolerance = pa.half_width() + ph.half_width();
        checks.push(Check::within(
            format!("{}: |acc(A, YES) - acc(A', YES*)| within CI overlap", tester.name()),
            (pa.mean() - ph.mean()).abs(),
            tolerance,
        ));
        pairs.push(AcceptPair {
            tester: tester.name().to_string(),
            trials,
            yes: pa,
            hybrid: ph,
            yes_interval: pa.interval(),
            hybrid_interval: ph.interval(),
        });
    }

    let mut exact: Vec<ExactComparison> = Vec::new();
    for case in exact_grid {
        for name in testers {
            let t = build_tester(name, case.n, case.k, case.q, seed)?;
            let r = exact_c32(t.as_ref(), case.n, case.k, case.m, case.q)?;
            checks.push(Check::exact(
                format!("{name}: exact equality at n={}, k={}, m={}, q={}", case.n, case.k, case.m, case.q),
                r.equal,
            ));
            exact.push(r);
        }
    }
    if checks.is_empty() {
        checks.push(Check::exact("no testers", true));
    }
    Ok(ClaimReport::new(
        "c32",
        params_value(params, json!({ "q": q, "testers": testers, "seed": seed, "exactGrid": exact_grid })),
        trials,
        params.regime_label(),
        params.warnings().to_vec(),
        checks,
        json!({ "monteCarlo": pairs, "exact": exact }),
    ))
}

#[derive(Clone, Debug, Serialize)]
struct GapRow {
    tester: String,
    difference: PairedDifference,
    #[serde(skip_serializing_if = "Option::is_none")]
    consistency_rejects: Option<u64>,
}

#[derive(Clone, Copy, Debug, Default)]
struct PairCounts {
    a_only: u64,
    b_only: u64,
    extra: u64,
}

fn add_pairs(a: Vec<PairCounts>, b: Vec<PairCounts>) -> Vec<PairCounts> {
    a.into_iter()
        .zip(b)
        .map(|(x, y)| PairCounts {
            a_only: x.a_only + y.a_only,
            b_only: x.b_only + y.b_only,
            extra: x.extra + y.extra,
        })
        .collect()
}

/// `A'` and `A` accept NO* instances with probabilities at most 1/8 apart.
pub fn verify_c33_gap(
    testers: &[String],
    params: &ExperimentParams,
    q: usize,
    trials: u64,
    seed: u64,
) -> Result<ClaimReport> {
    let built = build_all(testers, params, q, seed)?;
    let refs = as_refs(&built);
    let zero = || vec![PairCounts::default(); refs.len()];
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let inst = sample_no(params, trial_instance_seed(seed, t), true)?;
            let s = trial_sample_seed(seed, t);
            refs.iter()
                .map(|tester| {
                    let h = run_hybrid(*tester, &inst, s)?;
                    let a = run_deterministic(*tester, &inst, s)?.verdict.accepted();
                    let hacc = h.verdict.accepted();
                    Ok(PairCounts {
                        a_only: u64::from(hacc && !a),
                        b_only: u64::from(a && !hacc),
                        extra: u64::from(h.rejected_at_consistency),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .try_reduce(zero, |a, b| Ok(add_pairs(a, b)))?;
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (tester, c) in refs.iter().zip(&counts) {
        let d = PairedDifference::new(trials, c.a_only, c.b_only);
        checks.push(Check::at_most(
            format!("{}: |acc(A', NO*) - acc(A, NO*)|", tester.name()),
            d.mean.abs(),
            d.half_width,
            C33_BOUND,
        ));
        rows.push(GapRow {
            tester: tester.name().to_string(),
            difference: d,
            consistency_rejects: Some(c.extra),
        });
    }
    if checks.is_empty() {
        checks.push(Check::exact("no testers", true));
    }
    Ok(ClaimReport::new(
        "c33",
        params_value(params, json!({ "q": q, "testers": testers, "seed": seed })),
        trials,
        params.regime_label(),
        claim2_warnings(params, q),
        checks,
        json!({ "rows": rows }),
    ))
}

/// End to end: every tester accepts YES and NO with probabilities at most 1/4
/// apart at `q` queries.
pub fn verify_gap(testers: &[String], params: &ExperimentParams, q: usize, trials: u64, seed: u64) -> Result<ClaimReport> {
    let built = build_all(testers, params, q, seed)?;
    let refs = as_refs(&built);
    let zero = || vec![PairCounts::default(); refs.len()];
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| {
            let yes = sample_yes(params, trial_instance_seed(seed, t), false)?;
            let no = sample_no(params, trial_instance_seed(seed, t), false)?;
            let s = trial_sample_seed(seed, t);
            refs.iter()
                .map(|tester| {
                    let y = run_deterministic(*tester, &yes, s)?.verdict.accepted();
                    let n = run_deterministic(*tester, &no, s)?.verdict.accepted();
                    Ok(PairCounts {
                        a_only: u64::from(y && !n),
                        b_only: u64::from(n && !y),
                        extra: u64::from(y),
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .try_reduce(zero, |a, b| Ok(add_pairs(a, b)))?;
    let mut warnings = params.warnings().to_vec();
    if params.q_bound() < 4.0 {
        warnings.push(format!("q bound {:.4} is below 4", params.q_bound()));
    }
    if (q as f64) > params.q_bound() {
        warnings.push(format!("q={q} exceeds the query bound {:.4}", params.q_bound()));
    }
    let mut checks = Vec::new();
    let mut rows = Vec::new();
    for (tester, c) in refs.iter().zip(&counts) {
        let d = PairedDifference::new(trials, c.a_only, c.b_only);
        checks.push(Check::at_most(
            format!("{}: |acc(YES) - acc(NO)|", tester.name()),
            d.mean.abs(),
            d.half_width,
            GAP_BOUND,
        ));
        rows.push(GapRow {
            tester: tester.name().to_string(),
            difference: d,
            consistency_rejects: None,
        });
    }
    if checks.is_empty() {
        checks.push(Check::exact("no testers", true));
    }
    Ok(ClaimReport::new(
        "gap",
        params_value(params, json!({ "q": q, "qBound": params.q_bound(), "testers": testers, "seed": seed })),
        trials,
        params.regime_label(),
        warnings,
        checks,
        json!({ "rows": rows }),
    ))
}

/// Events E0, E1, E2 and goodness against their lower bounds, per tester.
pub fn verify_events(
    testers: &[String],
    params: &ExperimentParams,
    q: usize,
    trials: u64,
    seed: u64,
) -> Result<ClaimReport> {
    let built = build_all(testers, params, q, seed)?;
    let reports: Vec<EventReport> = event_frequencies_many(params, q, &as_refs(&built), trials, seed)?;
    let names = ["E0", "E1", "E2", "good"];
    let mut checks = Vec::new();
    for r in &reports {
        let freqs = r.frequencies();
        for i in 0..4 {
            checks.push(Check::at_least(
                format!("{}: freq{}", r.tester, names[i]),
                freqs[i],
                r.half_widths[i],
                EVENT_BOUNDS[i],
            ));
        }
        checks.push(Check::exact(
            format!("{}: freqGood <= min(freqE0, freqE1, freqE2)", r.tester),
            freqs[3] <= freqs[0].min(freqs[1]).min(freqs[2]),
        ));
        checks.push(Check::exact(
            format!("{}: good implies consistent", r.tester),
            r.good_but_inconsistent == 0,
        ));
    }
    if checks.is_empty() {
        checks.push(Check::exact("no testers", true));
    }
    Ok(ClaimReport::new(
        "events",
        params_value(params, json!({ "q": q, "testers": testers, "seed": seed })),
        trials,
        params.regime_label(),
        claim2_warnings(params, q),
        checks,
        json!({ "reports": reports }),
    ))
}
