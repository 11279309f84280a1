//! Reference non-adaptive testers.
//!
//! Each tester here is a deterministic pair of maps: any randomness (the
//! coordinate guess, re-randomized bits) is derived from a seed fixed at
//! construction, so a constructed tester is one fixed algorithm `A`.

use crate::bitspace::{CoordSet, Point};
use crate::error::{LabError, Result};
use crate::oracles::is_consistent;
use crate::seed::{derive_seed, rng_from_seed};

/// A `q`-query non-adaptive tester: `q` samples, then `q` black-box queries
/// chosen from the labelled samples alone.
pub trait Tester: Send + Sync {
    fn name(&self) -> &str;

    /// The common number `q` of samples and queries.
    fn query_budget(&self) -> usize;

    /// `A1(Y, alpha)`. Must return exactly `query_budget()` points.
    fn choose_queries(&self, samples: &[Point], labels: &[bool]) -> Vec<Point>;

    /// `A2(Y, alpha, beta)`; `true` accepts.
    fn decide(&self, samples: &[Point], labels: &[bool], answers: &[bool]) -> bool;
}

/// Names accepted by [`build_tester`] for the shipped testers.
pub const REFERENCE_TESTERS: [&str; 4] = ["accept-all", "reject-all", "collision", "section-majority"];

/// Build a shipped tester for dimension `n`, arity guess `k` and budget `q`.
pub fn build_tester(name: &str, n: usize, k: usize, q: usize, seed: u64) -> Result<Box<dyn Tester>> {
    let tester_seed = derive_seed(seed, "tester", 0);
    Ok(match name {
        "accept-all" => Box::new(Constant::accept_all(q)),
        "reject-all" => Box::new(Constant::reject_all(q)),
        "collision" => Box::new(CollisionTester::new(n, k, q, tester_seed)?),
        "section-majority" => Box::new(SectionMajorityTester::new(n, k, q, tester_seed)?),
        "first-label" => Box::new(FirstLabelTester::new(q)),
        other => {
            return Err(LabError::param(format!(
                "unknown tester {other:?}; expected one of {:?} or \"first-label\"",
                REFERENCE_TESTERS
            )))
        }
    })
}

/// Every shipped tester, in [`REFERENCE_TESTERS`] order.
pub fn reference_testers(n: usize, k: usize, q: usize, seed: u64) -> Result<Vec<Box<dyn Tester>>> {
    REFERENCE_TESTERS
        .iter()
        .map(|name| build_tester(name, n, k, q, seed))
        .collect()
}

/// Accept-all or reject-all. Queries the samples back.
#[derive(Clone, Debug)]
pub struct Constant {
    q: usize,
    verdict: bool,
}

impl Constant {
    pub fn accept_all(q: usize) -> Self {
        Constant { q, verdict: true }
    }

    pub fn reject_all(q: usize) -> Self {
        Constant { q, verdict: false }
    }
}

impl Tester for Constant {
    fn name(&self) -> &str {
        if self.verdict {
            "accept-all"
        } else {
            "reject-all"
        }
    }

    fn query_budget(&self) -> usize {
        self.q
    }

    fn choose_queries(&self, samples: &[Point], _labels: &[bool]) -> Vec<Point> {
        samples.to_vec()
    }

    fn decide(&self, _: &[Point], _: &[bool], _: &[bool]) -> bool {
        self.verdict
    }
}

/// Rejects iff two samples agree on a guessed `k`-set of coordinates but carry
/// different labels.
#[derive(Clone, Debug)]
pub struct CollisionTester {
    q: usize,
    guess: CoordSet,
}

impl CollisionTester {
    pub fn new(n: usize, k: usize, q: usize, seed: u64) -> Result<Self> {
        Ok(CollisionTester {
            q,
            guess: CoordSet::random(n, k, &mut rng_from_seed(seed))?,
        })
    }

    pub fn guess(&self) -> &CoordSet {
        &self.guess
    }
}

impl Tester for CollisionTester {
    fn name(&self) -> &str {
        "collision"
    }

    fn query_budget(&self) -> usize {
        self.q
    }

    fn choose_queries(&self, samples: &[Point], _labels: &[bool]) -> Vec<Point> {
        samples.to_vec()
    }

    fn decide(&self, samples: &[Point], labels: &[bool], _answers: &[bool]) -> bool {
        // Dimensions were checked when the samples were labelled.
        is_consistent(samples, labels, &self.guess).unwrap_or(false)
    }
}

/// Queries each sample with the coordinates outside a guessed `k`-set
/// re-randomized, and accepts iff at least half the answers match the sample
/// labels.
#[derive(Clone, Debug)]
pub struct SectionMajorityTester {
    q: usize,
    guess: CoordSet,
    keep_mask: Point,
    seed: u64,
}

impl SectionMajorityTester {
    pub fn new(n: usize, k: usize, q: usize, seed: u64) -> Result<Self> {
        let guess = CoordSet::random(n, k, &mut rng_from_seed(derive_seed(seed, "guess", 0)))?;
        let mut keep_mask = Point::zeros(n);
        for &c in guess.coords() {
            keep_mask.set(c, true);
        }
        Ok(SectionMajorityTester {
            q,
            guess,
            keep_mask,
            seed,
        })
    }

    pub fn guess(&self) -> &CoordSet {
        &self.guess
    }
}

impl Tester for SectionMajorityTester {
    fn name(&self) -> &str {
        "section-majority"
    }

    fn query_budget(&self) -> usize {
        self.q
    }

    fn choose_queries(&self, samples: &[Point], _labels: &[bool]) -> Vec<Point> {
        samples
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let mut rng = rng_from_seed(derive_seed(self.seed, "rerandomize", i as u64));
                let noise = Point::random(y.len(), &mut rng);
                y.select(&noise, &self.keep_mask)
            })
            .collect()
    }

    fn decide(&self, _samples: &[Point], labels: &[bool], answers: &[bool]) -> bool {
        let agree = labels.iter().zip(answers).filter(|(a, b)| a == b).count();
        2 * agree >= labels.len()
    }
}

/// Accepts iff the first sample is labelled 1. Reads only `alpha`.
#[derive(Clone, Debug)]
pub struct FirstLabelTester {
    q: usize,
}

impl FirstLabelTester {
    pub fn new(q: usize) -> Self {
        FirstLabelTester { q }
    }
}

impl Tester for FirstLabelTester {
    fn name(&self) -> &str {
        "first-label"
    }

    fn query_budget(&self) -> usize {
        self.q
    }

    fn choose_queries(&self, samples: &[Point], _labels: &[bool]) -> Vec<Point> {
        samples.to_vec()
    }

    fn decide(&self, _: &[Point], labels: &[bool], _: &[bool]) -> bool {
        labels.first().copied().unwrap_or(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Point {
        s.parse().unwrap()
    }

    #[test]
    fn unknown_tester_name() {
        assert!(build_tester("oracle", 8, 2, 2, 0).is_err());
    }

    #[test]
    fn shipped_testers_return_q_queries() {
        let ys = vec![p("10101010"), p("00001111"), p("11110000")];
        for t in reference_testers(8, 3, 3, 4).unwrap() {
            assert_eq!(t.choose_queries(&ys, &[true, false, true]).len(), 3, "{}", t.name());
        }
    }

    #[test]
    fn collision_tester_rejects_conflicting_guess_collision() {
        let t = CollisionTester::new(4, 4, 2, 0).unwrap();
        // With the full coordinate set as guess, a collision means equal points.
        let ys = vec![p("0110"), p("0110")];
        assert!(!t.decide(&ys, &[true, false], &[]));
        assert!(t.decide(&ys, &[true, true], &[]));
    }

    #[test]
    fn section_majority_keeps_guessed_coordinates() {
        let t = SectionMajorityTester::new(64, 8, 2, 3).unwrap();
        let ys = vec![Point::zeros(64), p(&"1".repeat(64))];
        let zs = t.choose_queries(&ys, &[false, true]);
        for (y, z) in ys.iter().zip(&zs) {
            assert_eq!(t.guess().project_unchecked(y), t.guess().project_unchecked(z));
        }
        // Deterministic map.
        assert_eq!(zs, t.choose_queries(&ys, &[false, true]));
        assert!(t.decide(&ys, &[true, false], &[true, true]));
        assert!(!t.decide(&ys, &[true, false, true], &[false, true, false]));
    }
}
