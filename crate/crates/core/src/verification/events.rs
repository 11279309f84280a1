//! Frequencies of the events E0 (scattered), E1 (queries far from the unseen
//! support) and E2 (queries that share a section with a sample stay close to
//! it) over NO* draws.

use rayon::prelude::*;
use serde::Serialize;

use crate::bitspace::{CoordSet, Point, SupportSet};
use crate::error::{LabError, Result};
use crate::harness::{draw_from_support, trial_instance_seed, trial_sample_seed, Tester};
use crate::instances::{sample_no, ExperimentParams};
use crate::oracles::{is_consistent, is_scattered, BooleanFunction};
use crate::stats::Proportion;

/// Lower bounds for `(E0, E1, E2, good)`.
pub const EVENT_BOUNDS: [f64; 4] = [15.0 / 16.0, 31.0 / 32.0, 31.0 / 32.0, 7.0 / 8.0];

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EventReport {
    pub tester: String,
    pub q: usize,
    pub trials: u64,
    #[serde(rename = "freqE0")]
    pub freq_e0: f64,
    #[serde(rename = "freqE1")]
    pub freq_e1: f64,
    #[serde(rename = "freqE2")]
    pub freq_e2: f64,
    #[serde(rename = "freqGood")]
    pub freq_good: f64,
    /// 99% half-widths, in the order E0, E1, E2, good.
    pub half_widths: [f64; 4],
    #[serde(rename = "paperBounds")]
    pub paper_bounds: [f64; 4],
    /// Trials that were good but had an inconsistent `(Y, alpha, J)`.
    pub good_but_inconsistent: u64,
}

impl EventReport {
    fn from_counts(tester: &dyn Tester, counts: &EventCounts) -> Self {
        let props = [counts.e0, counts.e1, counts.e2, counts.good].map(|c| Proportion::new(c, counts.trials));
        EventReport {
            tester: tester.name().to_string(),
            q: tester.query_budget(),
            trials: counts.trials,
            freq_e0: props[0].mean(),
            freq_e1: props[1].mean(),
            freq_e2: props[2].mean(),
            freq_good: props[3].mean(),
            half_widths: props.map(|p| p.half_width()),
            paper_bounds: EVENT_BOUNDS,
            good_but_inconsistent: counts.good_but_inconsistent,
        }
    }

    pub fn frequencies(&self) -> [f64; 4] {
        [self.freq_e0, self.freq_e1, self.freq_e2, self.freq_good]
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
struct EventCounts {
    trials: u64,
    e0: u64,
    e1: u64,
    e2: u64,
    good: u64,
    good_but_inconsistent: u64,
}

impl EventCounts {
    fn add(mut self, o: EventCounts) -> Self {
        self.trials += o.trials;
        self.e0 += o.e0;
        self.e1 += o.e1;
        self.e2 += o.e2;
        self.good += o.good;
        self.good_but_inconsistent += o.good_but_inconsistent;
        self
    }
}

/// The three events for one `(Y, Z, J, S)`.
pub fn evaluate_events(
    samples: &[Point],
    queries: &[Point],
    coords: &CoordSet,
    support: &SupportSet,
    threshold: Option<usize>,
) -> (bool, bool, bool) {
    let e0 = is_scattered(samples, coords);
    let e1 = match threshold {
        None => true,
        Some(t) => support
            .points()
            .iter()
            .filter(|x| !samples.contains(x))
            .all(|x| queries.iter().all(|z| x.distance(z) > t)),
    };
    let close = |y: &Point, z: &Point| threshold.is_some_and(|t| y.distance(z) <= t);
    let e2 = queries.iter().all(|z| {
        let zj = coords.project_unchecked(z);
        samples
            .iter()
            .all(|y| coords.project_unchecked(y) != zj || close(y, z))
    });
    (e0, e1, e2)
}

fn trial_counts(
    testers: &[&dyn Tester],
    q: usize,
    params: &ExperimentParams,
    seed: u64,
    t: u64,
) -> Result<Vec<EventCounts>> {
    let instance = sample_no(params, trial_instance_seed(seed, t), true)?;
    let coords = instance.planted_coords();
    let samples = draw_from_support(instance.support(), q, trial_sample_seed(seed, t));
    let labels = instance.phi().eval_all(&samples)?;
    let consistent = is_consistent(&samples, &labels, coords)?;
    testers
        .iter()
        .map(|tester| {
            let queries = tester.choose_queries(&samples, &labels);
            if queries.len() != q {
                return Err(LabError::contract(format!(
                    "tester {} returned {} queries, budget is {q}",
                    tester.name(),
                    queries.len()
                )));
            }
            let (e0, e1, e2) = evaluate_events(&samples, &queries, coords, instance.support(), params.distance_threshold());
            let good = e0 && e1 && e2;
            Ok(EventCounts {
                trials: 1,
                e0: e0.into(),
                e1: e1.into(),
                e2: e2.into(),
                good: good.into(),
                good_but_inconsistent: (good && !consistent).into(),
            })
        })
        .collect()
}

/// Event frequencies for several testers. Every trial draws one NO* instance
/// and one `(Y, alpha)` and evaluates each tester's queries on it.
pub fn event_frequencies_many(
    params: &ExperimentParams,
    q: usize,
    testers: &[&dyn Tester],
    trials: u64,
    seed: u64,
) -> Result<Vec<EventReport>> {
    if q == 0 {
        return Err(LabError::param("event frequencies need q >= 1"));
    }
    if let Some(t) = testers.iter().find(|t| t.query_budget() != q) {
        return Err(LabError::param(format!(
            "tester {} has budget {}, expected q={q}",
            t.name(),
            t.query_budget()
        )));
    }
    let zero = || vec![EventCounts::default(); testers.len()];
    let counts = (0..trials)
        .into_par_iter()
        .map(|t| trial_counts(testers, q, params, seed, t))
        .try_reduce(zero, |a, b| Ok(a.into_iter().zip(b).map(|(x, y)| x.add(y)).collect()))?;
    Ok(testers
        .iter()
        .zip(&counts)
        .map(|(t, c)| EventReport::from_counts(*t, c))
        .collect())
}

pub fn event_frequencies(
    params: &ExperimentParams,
    q: usize,
    tester: &dyn Tester,
    trials: u64,
    seed: u64,
) -> Result<EventReport> {
    Ok(event_frequencies_many(params, q, &[tester], trials, seed)?.remove(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::testers::Constant;
    use crate::harness::build_tester;

    fn p(s: &str) -> Point {
        s.parse().unwrap()
    }

    #[test]
    fn identity_queries_satisfy_e2() {
        let coords = CoordSet::from_one_based(4, &[1]).unwrap();
        let support = SupportSet::new(4, vec![p("0000"), p("1111")]).unwrap();
        let ys = vec![p("0000")];
        let (e0, _, e2) = evaluate_events(&ys, &ys, &coords, &support, Some(1));
        assert!(e0 && e2);
        // Threshold 1: 1111 is at distance 4 from the query.
        assert!(evaluate_events(&ys, &ys, &coords, &support, Some(1)).1);
        assert!(!evaluate_events(&ys, &ys, &coords, &support, Some(4)).1);
    }

    #[test]
    fn e2_fails_for_far_query_in_sample_section() {
        let coords = CoordSet::from_one_based(4, &[1]).unwrap();
        let support = SupportSet::new(4, vec![p("0000")]).unwrap();
        let (_, _, e2) = evaluate_events(&[p("0000")], &[p("0111")], &coords, &support, Some(2));
        assert!(!e2);
        let (_, _, e2) = evaluate_events(&[p("0000")], &[p("1111")], &coords, &support, Some(2));
        assert!(e2);
    }

    #[test]
    fn good_is_bounded_by_each_event_and_implies_consistency() {
        let params = ExperimentParams::for_junta_class(40, 6)
            .unwrap()
            .with_override(64, 0.2)
            .unwrap();
        let testers: Vec<Box<dyn Tester>> = ["collision", "section-majority"]
            .iter()
            .map(|name| build_tester(name, 40, 6, 3, 5).unwrap())
            .collect();
        let refs: Vec<&dyn Tester> = testers.iter().map(|t| t.as_ref()).collect();
        for r in event_frequencies_many(&params, 3, &refs, 400, 9).unwrap() {
            let f = r.frequencies();
            assert!(f[3] <= f[0].min(f[1]).min(f[2]), "{r:?}");
            assert_eq!(r.good_but_inconsistent, 0);
        }
    }

    #[test]
    fn shared_and_single_runs_agree() {
        let params = ExperimentParams::for_junta_class(30, 4)
            .unwrap()
            .with_override(40, 0.25)
            .unwrap();
        let t = build_tester("section-majority", 30, 4, 2, 1).unwrap();
        let a = Constant::accept_all(2);
        let many = event_frequencies_many(&params, 2, &[&a, t.as_ref()], 300, 4).unwrap();
        assert_eq!(many[1], event_frequencies(&params, 2, t.as_ref(), 300, 4).unwrap());
    }

    #[test]
    fn q_zero_is_rejected() {
        let params = ExperimentParams::for_junta_class(12, 3).unwrap();
        assert!(event_frequencies(&params, 0, &Constant::accept_all(0), 10, 0).is_err());
    }
}
