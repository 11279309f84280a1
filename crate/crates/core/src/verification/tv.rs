//! Plug-in total variation estimates with percentile bootstrap intervals.

use std::collections::BTreeMap;

use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;
use serde::Serialize;

use crate::seed::{derive_seed, rng_from_seed, LabRng};

/// Bootstrap replicates used by the estimators here.
pub const BOOTSTRAP_REPLICATES: usize = 1000;

/// Two-sided level of the bootstrap interval.
pub const BOOTSTRAP_LEVEL: f64 = 0.99;

/// Counts of discretized samples. `BTreeMap` keeps every reduction and every
/// report in a fixed order.
pub type Histogram<K> = BTreeMap<K, u64>;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TvEstimate {
    pub estimate: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    /// `(ci_hi - ci_lo) / 2`.
    pub half_width: f64,
    pub trials: u64,
    pub distinct_keys: usize,
    pub replicates: usize,
    pub warnings: Vec<String>,
}

pub fn histogram<K: Ord + Clone>(keys: impl IntoIterator<Item = K>) -> Histogram<K> {
    let mut h = Histogram::new();
    for k in keys {
        *h.entry(k).or_insert(0) += 1;
    }
    h
}

fn total(h: &Histogram<impl Ord>) -> u64 {
    h.values().sum()
}

/// Half the L1 distance between the normalized histograms.
pub fn tv_between<K: Ord>(p: &Histogram<K>, q: &Histogram<K>) -> f64 {
    let (np, nq) = (total(p) as f64, total(q) as f64);
    let freq = |h: &Histogram<K>, k: &K, n: f64| h.get(k).map_or(0.0, |&c| c as f64 / n);
    let mut sum = 0.0;
    for (k, &c) in p {
        sum += (c as f64 / np - freq(q, k, nq)).abs();
    }
    for (k, &c) in q {
        if !p.contains_key(k) {
            sum += c as f64 / nq;
        }
    }
    (sum / 2.0).min(1.0)
}

/// Half the L1 distance between a histogram and an exact law.
pub fn tv_to_law<K: Ord>(h: &Histogram<K>, law: &BTreeMap<K, f64>) -> f64 {
    let n = total(h) as f64;
    let mut sum = 0.0;
    for (k, &p) in law {
        sum += (h.get(k).map_or(0.0, |&c| c as f64 / n) - p).abs();
    }
    for (k, &c) in h {
        if !law.contains_key(k) {
            sum += c as f64 / n;
        }
    }
    (sum / 2.0).min(1.0)
}

/// A multinomial resample of `h` with the same total, drawn as a chain of
/// conditional binomials.
fn resample<K: Ord + Clone>(h: &Histogram<K>, rng: &mut LabRng) -> Histogram<K> {
    let mut remaining = total(h);
    let mut mass = remaining as f64;
    let mut out = Histogram::new();
    for (k, &c) in h {
        if remaining == 0 {
            break;
        }
        let p = (c as f64 / mass).clamp(0.0, 1.0);
        let draw = if p >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, p).expect("valid binomial").sample(rng)
        };
        if draw > 0 {
            out.insert(k.clone(), draw);
        }
        remaining -= draw;
        mass -= c as f64;
    }
    out
}

fn percentile_interval(mut values: Vec<f64>) -> (f64, f64) {
    values.sort_by(f64::total_cmp);
    let tail = (1.0 - BOOTSTRAP_LEVEL) / 2.0;
    let at = |q: f64| {
        let idx = ((values.len() - 1) as f64 * q).round() as usize;
        values[idx]
    };
    (at(tail), at(1.0 - tail))
}

fn reliability_warnings(distinct: usize, trials: u64) -> Vec<String> {
    if distinct as u64 > trials / 10 {
        vec![format!(
            "{distinct} distinct keys for {trials} trials: plug-in TV is unreliable (want under trials/10)"
        )]
    } else {
        Vec::new()
    }
}

/// Plug-in TV between two histograms with a bootstrap CI.
///
/// The pair is put in a canonical order before resampling, so the result is
/// exactly symmetric in its arguments.
pub fn tv_from_histograms<K: Ord + Clone>(p: &Histogram<K>, q: &Histogram<K>, seed: u64) -> TvEstimate {
    let (a, b) = if (total(p), p.iter().collect::<Vec<_>>()) <= (total(q), q.iter().collect::<Vec<_>>()) {
        (p, q)
    } else {
        (q, p)
    };
    let estimate = tv_between(a, b);
    let mut rng = rng_from_seed(derive_seed(seed, "bootstrap", 0));
    let reps: Vec<f64> = (0..BOOTSTRAP_REPLICATES)
        .map(|_| {
            let ra = resample(a, &mut rng);
            let rb = resample(b, &mut rng);
            tv_between(&ra, &rb)
        })
        .collect();
    let (ci_lo, ci_hi) = percentile_interval(reps);
    let distinct = a.keys().chain(b.keys()).collect::<std::collections::BTreeSet<_>>().len();
    let trials = total(a).min(total(b));
    TvEstimate {
        estimate,
        ci_lo,
        ci_hi,
        half_width: (ci_hi - ci_lo) / 2.0,
        trials,
        distinct_keys: distinct,
        replicates: BOOTSTRAP_REPLICATES,
        warnings: reliability_warnings(distinct, trials),
    }
}

/// Plug-in TV between a histogram and an exact law, with a bootstrap CI over
/// the histogram only.
pub fn tv_to_reference<K: Ord + Clone>(h: &Histogram<K>, law: &BTreeMap<K, f64>, seed: u64) -> TvEstimate {
    let estimate = tv_to_law(h, law);
    let mut rng = rng_from_seed(derive_seed(seed, "bootstrap-ref", 0));
    let reps: Vec<f64> = (0..BOOTSTRAP_REPLICATES)
        .map(|_| tv_to_law(&resample(h, &mut rng), law))
        .collect();
    let (ci_lo, ci_hi) = percentile_interval(reps);
    let distinct = h.keys().chain(law.keys()).collect::<std::collections::BTreeSet<_>>().len();
    let trials = total(h);
    TvEstimate {
        estimate,
        ci_lo,
        ci_hi,
        half_width: (ci_hi - ci_lo) / 2.0,
        trials,
        distinct_keys: distinct,
        replicates: BOOTSTRAP_REPLICATES,
        warnings: reliability_warnings(distinct, trials),
    }
}

/// Estimate `||P - Q||_tv` from `trials` draws of each sampler.
///
/// Trial `t` hands both samplers the same seed, derived from `seed` and `t`.
/// Samplers that should be independent must derive their own streams from it
/// under distinct labels.
pub fn tv_estimate<S, K, P, Q, F>(sample_p: P, sample_q: Q, discretize: F, trials: u64, seed: u64) -> TvEstimate
where
    K: Ord + Clone + Send,
    P: Fn(u64) -> S + Sync,
    Q: Fn(u64) -> S + Sync,
    F: Fn(&S) -> K + Sync,
{
    let draw = |sampler: &(dyn Fn(u64) -> S + Sync)| -> Histogram<K> {
        (0..trials)
            .into_par_iter()
            .map(|t| {
                let mut h = Histogram::new();
                h.insert(discretize(&sampler(derive_seed(seed, "tv-trial", t))), 1);
                h
            })
            .reduce(Histogram::new, |mut a, b| {
                for (k, c) in b {
                    *a.entry(k).or_insert(0) += c;
                }
                a
            })
    };
    let hp = draw(&sample_p);
    let hq = draw(&sample_q);
    tv_from_histograms(&hp, &hq, seed)
}

/// Uniform law over `{0,1}^q`, keyed by the bit-string index.
pub fn uniform_law(q: usize) -> BTreeMap<u64, f64> {
    let size = 1u64 << q;
    (0..size).map(|i| (i, 1.0 / size as f64)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn bernoulli_sampler(p: f64) -> impl Fn(u64) -> bool + Sync {
        move |seed| rng_from_seed(derive_seed(seed, "bernoulli", (p * 1e9) as u64)).random_bool(p)
    }

    #[test]
    fn identical_samplers_give_zero() {
        let est = tv_estimate(bernoulli_sampler(0.5), bernoulli_sampler(0.5), |b: &bool| *b, 2000, 1);
        assert_eq!(est.estimate, 0.0);
        assert!(est.ci_lo <= est.estimate && est.estimate <= est.ci_hi);
    }

    #[test]
    fn disjoint_samplers_give_one() {
        let est = tv_estimate(|_| 0u8, |_| 1u8, |x: &u8| *x, 500, 2);
        assert_eq!(est.estimate, 1.0);
        assert_eq!(est.half_width, 0.0);
    }

    #[test]
    fn bernoulli_half_vs_three_quarters() {
        let est = tv_estimate(bernoulli_sampler(0.5), bernoulli_sampler(0.75), |b: &bool| *b, 20_000, 3);
        assert!((est.estimate - 0.25).abs() <= 3.0 * est.half_width, "{est:?}");
        assert!(est.half_width > 0.0 && est.half_width < 0.03);
    }

    #[test]
    fn many_keys_warn() {
        let est = tv_estimate(|s| s % 1000, |s| s % 997, |x: &u64| *x, 2000, 4);
        assert_eq!(est.warnings.len(), 1);
    }

    #[test]
    fn reference_law() {
        let h = histogram([0u64, 1, 2, 3, 0, 1, 2, 3]);
        let est = tv_to_reference(&h, &uniform_law(2), 0);
        assert_eq!(est.estimate, 0.0);
        let skew = histogram([0u64, 0, 0, 0]);
        assert!((tv_to_law(&skew, &uniform_law(2)) - 0.75).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn symmetric_and_bounded(a in prop::collection::vec(0u8..6, 1..200), b in prop::collection::vec(0u8..6, 1..200), seed in any::<u64>()) {
            let (ha, hb) = (histogram(a), histogram(b));
            let x = tv_from_histograms(&ha, &hb, seed);
            let y = tv_from_histograms(&hb, &ha, seed);
            prop_assert_eq!(&x, &y);
            prop_assert!((0.0..=1.0).contains(&x.estimate));
            prop_assert!(x.ci_lo >= 0.0 && x.ci_hi <= 1.0);
        }

        #[test]
        fn sampler_symmetry(p in 0.05f64..0.95, q in 0.05f64..0.95, seed in any::<u64>()) {
            let x = tv_estimate(bernoulli_sampler(p), bernoulli_sampler(q), |b: &bool| *b, 200, seed);
            let y = tv_estimate(bernoulli_sampler(q), bernoulli_sampler(p), |b: &bool| *b, 200, seed);
            prop_assert_eq!(x, y);
        }
    }
}
