//! Running non-adaptive testers against instances.
//!
//! [`run_deterministic`] is the plain two-phase algorithm `A`. [`run_hybrid`]
//! is `A'`: the same tester, except that the black-box answers come from a
//! fresh junta conditioned on the labelled samples and the planted `J`, and an
//! inconsistent `(Y, alpha, J)` is rejected outright.

pub mod testers;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitspace::{CoordSet, Point, SupportSet};
use crate::error::{LabError, Result};
use crate::instances::{sample_instance, ExperimentParams, Instance, InstanceKind};
use crate::oracles::{is_consistent, BooleanFunction, ConsistentJuntaOracle, KeyedBits, SectionBits};
use crate::seed::{derive_seed, rng_from_seed};
use crate::stats::Proportion;

pub use testers::{build_tester, reference_testers, Tester, REFERENCE_TESTERS};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Reject,
}

impl Verdict {
    pub fn accepted(self) -> bool {
        self == Verdict::Accept
    }

    fn from_bool(accept: bool) -> Self {
        if accept {
            Verdict::Accept
        } else {
            Verdict::Reject
        }
    }
}

/// Everything a tester saw in one run, plus its verdict.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    #[serde(rename = "y")]
    pub samples: Vec<Point>,
    #[serde(rename = "alpha", with = "bitstring")]
    pub labels: Vec<bool>,
    #[serde(rename = "z")]
    pub queries: Vec<Point>,
    /// Empty iff the run was rejected at the consistency check.
    #[serde(rename = "beta", with = "bitstring")]
    pub answers: Vec<bool>,
    pub verdict: Verdict,
    pub rejected_at_consistency: bool,
}

mod bitstring {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(bits: &[bool], s: S) -> Result<S::Ok, S::Error> {
        let text: String = bits.iter().map(|&b| if b { '1' } else { '0' }).collect();
        s.serialize_str(&text)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<bool>, D::Error> {
        String::deserialize(d)?
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(serde::de::Error::custom(format!("invalid bit {other:?}"))),
            })
            .collect()
    }
}

/// `q` i.i.d. uniform draws from the support, with their labels.
pub fn draw_samples(instance: &Instance, q: usize, seed: u64) -> Result<(Vec<Point>, Vec<bool>)> {
    let samples = draw_from_support(instance.support(), q, seed);
    let labels = instance.phi().eval_all(&samples)?;
    Ok((samples, labels))
}

/// `Y <- D^q` for `D` uniform over `support`.
pub fn draw_from_support(support: &SupportSet, q: usize, seed: u64) -> Vec<Point> {
    let mut rng = rng_from_seed(seed);
    (0..q)
        .map(|_| support.get(rng.random_range(0..support.len())).clone())
        .collect()
}

fn checked_queries(tester: &dyn Tester, samples: &[Point], labels: &[bool]) -> Result<Vec<Point>> {
    let queries = tester.choose_queries(samples, labels);
    if queries.len() != tester.query_budget() {
        return Err(LabError::contract(format!(
            "tester {} returned {} queries, budget is {}",
            tester.name(),
            queries.len(),
            tester.query_budget()
        )));
    }
    Ok(queries)
}

fn check_sample_count(tester: &dyn Tester, samples: &[Point]) -> Result<()> {
    if samples.len() != tester.query_budget() {
        return Err(LabError::contract(format!(
            "tester {} expects {} samples, got {}",
            tester.name(),
            tester.query_budget(),
            samples.len()
        )));
    }
    Ok(())
}

/// Algorithm `A` on given samples: `alpha = phi(Y)`, `Z = A1(Y, alpha)`,
/// `beta = phi(Z)`, output `A2(Y, alpha, beta)`.
pub fn run_deterministic_on(tester: &dyn Tester, phi: &dyn BooleanFunction, samples: Vec<Point>) -> Result<Transcript> {
    check_sample_count(tester, &samples)?;
    let labels = phi.eval_all(&samples)?;
    let queries = checked_queries(tester, &samples, &labels)?;
    let answers = phi.eval_all(&queries)?;
    let verdict = Verdict::from_bool(tester.decide(&samples, &labels, &answers));
    Ok(Transcript {
        samples,
        labels,
        queries,
        answers,
        verdict,
        rejected_at_consistency: false,
    })
}

/// Algorithm `A'` on given samples. `phi` is evaluated on the samples only;
/// the queries are answered by `h' <- JUNTA_{Y,alpha,J}` whose unpinned
/// sections read from `fresh`.
pub fn run_hybrid_on<B: SectionBits>(
    tester: &dyn Tester,
    phi: &dyn BooleanFunction,
    coords: &CoordSet,
    samples: Vec<Point>,
    fresh: B,
) -> Result<Transcript> {
    check_sample_count(tester, &samples)?;
    let labels = phi.eval_all(&samples)?;
    if !is_consistent(&samples, &labels, coords)? {
        let queries = checked_queries(tester, &samples, &labels)?;
        return Ok(Transcript {
            samples,
            labels,
            queries,
            answers: Vec::new(),
            verdict: Verdict::Reject,
            rejected_at_consistency: true,
        });
    }
    let queries = checked_queries(tester, &samples, &labels)?;
    let h = ConsistentJuntaOracle::with_bits(&samples, &labels, coords, fresh)?;
    let answers = h.eval_all(&queries)?;
    let verdict = Verdict::from_bool(tester.decide(&samples, &labels, &answers));
    Ok(Transcript {
        samples,
        labels,
        queries,
        answers,
        verdict,
        rejected_at_consistency: false,
    })
}

pub fn run_deterministic(tester: &dyn Tester, instance: &Instance, seed: u64) -> Result<Transcript> {
    let samples = draw_from_support(instance.support(), tester.query_budget(), seed);
    run_deterministic_on(tester, instance.phi(), samples)
}

/// Seed of the fresh junta bits used by [`run_hybrid`] for sample seed `seed`.
pub fn hybrid_junta_seed(seed: u64) -> u64 {
    derive_seed(seed, "hybrid-junta", 0)
}

/// Algorithm `A'` on a starred instance. Uses the same samples as
/// [`run_deterministic`] for the same seed.
pub fn run_hybrid(tester: &dyn Tester, instance: &Instance, seed: u64) -> Result<Transcript> {
    let coords = instance
        .hidden_coords()
        .ok_or_else(|| LabError::contract("the hybrid algorithm needs a starred instance (hidden J)"))?;
    let samples = draw_from_support(instance.support(), tester.query_budget(), seed);
    run_hybrid_on(
        tester,
        instance.phi(),
        coords,
        samples,
        KeyedBits::new(hybrid_junta_seed(seed)),
    )
}

/// Which instance distribution a trial draws from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Generator {
    #[serde(rename = "yes")]
    Yes,
    #[serde(rename = "no")]
    No,
    #[serde(rename = "yes*")]
    YesStar,
    #[serde(rename = "no*")]
    NoStar,
}

impl Generator {
    pub fn kind(self) -> InstanceKind {
        match self {
            Generator::Yes | Generator::YesStar => InstanceKind::Yes,
            Generator::No | Generator::NoStar => InstanceKind::No,
        }
    }

    pub fn starred(self) -> bool {
        matches!(self, Generator::YesStar | Generator::NoStar)
    }

    pub fn sample(self, params: &ExperimentParams, seed: u64) -> Result<Instance> {
        sample_instance(params, self.kind(), seed, self.starred())
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Generator::Yes => "yes",
            Generator::No => "no",
            Generator::YesStar => "yes*",
            Generator::NoStar => "no*",
        })
    }
}

impl FromStr for Generator {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "yes" => Ok(Generator::Yes),
            "no" => Ok(Generator::No),
            "yes*" | "yes-star" => Ok(Generator::YesStar),
            "no*" | "no-star" => Ok(Generator::NoStar),
            other => Err(LabError::param(format!("unknown generator {other:?}"))),
        }
    }
}

/// Seed of the instance drawn in trial `t`.
pub fn trial_instance_seed(master: u64, t: u64) -> u64 {
    derive_seed(master, "instance", t)
}

/// Seed of the samples drawn in trial `t`.
pub fn trial_sample_seed(master: u64, t: u64) -> u64 {
    derive_seed(master, "samples", t)
}

/// Run one trial: draw the trial's instance and run `A` or `A'` on it.
pub fn run_trial(
    tester: &dyn Tester,
    generator: Generator,
    hybrid: bool,
    params: &ExperimentParams,
    master: u64,
    t: u64,
) -> Result<Transcript> {
    let instance = generator.sample(params, trial_instance_seed(master, t))?;
    let seed = trial_sample_seed(master, t);
    if hybrid {
        run_hybrid(tester, &instance, seed)
    } else {
        run_deterministic(tester, &instance, seed)
    }
}

/// Monte-Carlo estimate of the acceptance probability.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AcceptanceEstimate {
    pub tester: String,
    pub generator: Generator,
    pub hybrid: bool,
    pub q: usize,
    pub trials: u64,
    pub accepts: u64,
    pub mean: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub seed: u64,
}

/// Column order of [`AcceptanceEstimate::csv_row`].
pub const ESTIMATE_CSV_HEADER: &str = "tester,generator,q,trials,mean,ci_lo,ci_hi,seed";

impl AcceptanceEstimate {
    pub fn from_counts(tester: &dyn Tester, generator: Generator, hybrid: bool, accepts: u64, trials: u64, seed: u64) -> Self {
        let prop = Proportion::new(accepts, trials);
        let (ci_lo, ci_hi) = prop.interval();
        AcceptanceEstimate {
            tester: tester.name().to_string(),
            generator,
            hybrid,
            q: tester.query_budget(),
            trials,
            accepts,
            mean: prop.mean(),
            ci_lo,
            ci_hi,
            seed,
        }
    }

    pub fn proportion(&self) -> Proportion {
        Proportion::new(self.accepts, self.trials)
    }

    pub fn half_width(&self) -> f64 {
        self.proportion().half_width()
    }

    /// One CSV row; hybrid runs are marked by a trailing `'` on the tester name.
    pub fn csv_row(&self) -> String {
        let tester = if self.hybrid {
            format!("{}'", self.tester)
        } else {
            self.tester.clone()
        };
        format!(
            "{},{},{},{},{},{},{},{}",
            tester, self.generator, self.q, self.trials, self.mean, self.ci_lo, self.ci_hi, self.seed
        )
    }
}

/// Expected acceptance of `A` (or `A'` when `hybrid`) over instances from
/// `generator`, with a fresh instance and fresh samples per trial.
pub fn estimate_acceptance(
    tester: &dyn Tester,
    generator: Generator,
    hybrid: bool,
    params: &ExperimentParams,
    trials: u64,
    seed: u64,
) -> Result<AcceptanceEstimate> {
    if trials == 0 {
        return Err(LabError::param("trials must be at least 1"));
    }
    if hybrid && !generator.starred() {
        return Err(LabError::contract(format!(
            "the hybrid algorithm needs a starred generator, got {generator}"
        )));
    }
    let accepts = (0..trials)
        .into_par_iter()
        .map(|t| run_trial(tester, generator, hybrid, params, seed, t).map(|tr| u64::from(tr.verdict.accepted())))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(AcceptanceEstimate::from_counts(tester, generator, hybrid, accepts, trials, seed))
}
