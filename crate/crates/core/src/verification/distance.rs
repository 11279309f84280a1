//! Exact distance to the class of k-juntas under the uniform distribution on
//! a support set.

use itertools::Itertools;
use num_rational::Ratio;
use serde::{Serialize, Serializer};

use crate::bitspace::{CoordSet, SupportSet};
use crate::error::{LabError, Result};
use crate::oracles::BooleanFunction;

/// Largest `C(n,k) * (m + 2^k)` that [`distance_to_kjuntas`] will attempt.
pub const DISTANCE_BUDGET: u128 = 1_000_000;

/// Work estimate `C(n,k) * (m + 2^k)` of an exact distance computation, or
/// `None` on overflow.
pub fn distance_cost(n: usize, k: usize, m: usize) -> Option<u128> {
    let binom = binomial_u128(n, k)?;
    let sections = 1u128.checked_shl(u32::try_from(k).ok()?)?;
    binom.checked_mul(m as u128 + sections)
}

pub(crate) fn binomial_u128(n: usize, k: usize) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

/// Fail with a feasibility error when the exact distance is out of budget.
pub fn check_distance_feasible(n: usize, k: usize, m: usize) -> Result<()> {
    match distance_cost(n, k, m) {
        Some(cost) if cost <= DISTANCE_BUDGET => Ok(()),
        cost => Err(LabError::feasibility(format!(
            "exact distance to {k}-juntas on n={n}, m={m} needs C(n,k)·(m+2^k) = {} operations, budget is {DISTANCE_BUDGET}",
            cost.map_or_else(|| "overflow".to_string(), |c| c.to_string())
        ))),
    }
}

fn ratio_str<S: Serializer>(r: &Ratio<u64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PerJDistance {
    #[serde(rename = "J")]
    pub coords: CoordSet,
    #[serde(serialize_with = "ratio_str")]
    pub distance: Ratio<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistanceReport {
    #[serde(rename = "bestJ")]
    pub best_j: CoordSet,
    #[serde(serialize_with = "ratio_str")]
    pub distance: Ratio<u64>,
    /// Number of support points the best junta mislabels.
    pub mislabelled: u64,
    pub support_size: u64,
    #[serde(rename = "perJ", skip_serializing_if = "Option::is_none")]
    pub per_j: Option<Vec<PerJDistance>>,
}

impl DistanceReport {
    /// `distance >= 1/3`, decided on integers.
    pub fn is_third_far(&self) -> bool {
        3 * self.mislabelled >= self.support_size
    }

    pub fn distance_f64(&self) -> f64 {
        self.mislabelled as f64 / self.support_size as f64
    }
}

/// `dist_D(phi, k-juntas)` for `D` uniform over `support`.
///
/// For every `k`-set `J` the best junta labels each section by the majority
/// label of its support points, so its error is the sum over sections of the
/// minority count. Ties between `J`s go to the lexicographically first set.
pub fn distance_to_kjuntas(
    phi: &dyn BooleanFunction,
    support: &SupportSet,
    n: usize,
    k: usize,
    keep_per_j: bool,
) -> Result<DistanceReport> {
    if phi.dimension() != n || support.dimension() != n {
        return Err(LabError::Dimension {
            expected: n,
            got: if phi.dimension() != n { phi.dimension() } else { support.dimension() },
        });
    }
    if k == 0 || k > n {
        return Err(LabError::param(format!("need 1 <= k <= n, got n={n}, k={k}")));
    }
    let m = support.len();
    check_distance_feasible(n, k, m)?;
    let labels = phi.eval_all(support.points())?;

    let mut counts = vec![[0u32; 2]; 1 << k];
    let mut best: Option<(u64, CoordSet)> = None;
    let mut per_j = keep_per_j.then(Vec::new);
    for combo in (0..n).combinations(k) {
        counts.iter_mut().for_each(|c| *c = [0, 0]);
        for (y, &label) in support.points().iter().zip(&labels) {
            let idx = combo.iter().fold(0usize, |acc, &c| (acc << 1) | usize::from(y.get(c)));
            counts[idx][usize::from(label)] += 1;
        }
        let errors: u64 = counts.iter().map(|c| u64::from(c[0].min(c[1]))).sum();
        let coords = CoordSet::new(n, combo)?;
        if let Some(table) = per_j.as_mut() {
            table.push(PerJDistance {
                coords: coords.clone(),
                distance: Ratio::new(errors, m as u64),
            });
        }
        if best.as_ref().is_none_or(|(e, _)| errors < *e) {
            best = Some((errors, coords));
        }
    }
    let (mislabelled, best_j) = best.expect("at least one k-subset");
    Ok(DistanceReport {
        best_j,
        distance: Ratio::new(mislabelled, m as u64),
        mislabelled,
        support_size: m as u64,
        per_j,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitspace::{sample_support, Point};
    use crate::oracles::JuntaOracle;
    use crate::seed::{derive_seed, rng_from_seed};
    use proptest::prelude::*;
    use rand::Rng;

    struct Table {
        n: usize,
        bits: Vec<bool>,
    }

    impl BooleanFunction for Table {
        fn dimension(&self) -> usize {
            self.n
        }
        fn eval(&self, x: &Point) -> Result<bool> {
            Ok(self.bits[x.to_index().unwrap() as usize])
        }
    }

    struct Xor12;

    impl BooleanFunction for Xor12 {
        fn dimension(&self) -> usize {
            3
        }
        fn eval(&self, x: &Point) -> Result<bool> {
            Ok(x.get(0) ^ x.get(1))
        }
    }

    struct Constant(usize);

    impl BooleanFunction for Constant {
        fn dimension(&self) -> usize {
            self.0
        }
        fn eval(&self, _: &Point) -> Result<bool> {
            Ok(true)
        }
    }

    fn full_cube(n: usize) -> SupportSet {
        SupportSet::new(n, (0..1u64 << n).map(|i| Point::from_index(n, i)).collect()).unwrap()
    }

    #[test]
    fn xor_is_half_far_from_dictators() {
        let r = distance_to_kjuntas(&Xor12, &full_cube(3), 3, 1, true).unwrap();
        assert_eq!(r.distance, Ratio::new(1, 2));
        assert_eq!(r.per_j.unwrap().len(), 3);
        // Two coordinates suffice.
        assert_eq!(distance_to_kjuntas(&Xor12, &full_cube(3), 3, 2, false).unwrap().distance, Ratio::from_integer(0));
    }

    #[test]
    fn juntas_and_constants_are_at_distance_zero() {
        let s = sample_support(10, 200, 1).unwrap();
        let f = JuntaOracle::new(CoordSet::from_one_based(10, &[2, 7]).unwrap(), 3);
        let r = distance_to_kjuntas(&f, &s, 10, 2, false).unwrap();
        assert_eq!(r.mislabelled, 0);
        assert_eq!(r.best_j.one_based(), vec![2, 7]);
        assert_eq!(distance_to_kjuntas(&Constant(10), &s, 10, 3, false).unwrap().mislabelled, 0);
    }

    #[test]
    fn over_budget_is_a_feasibility_error() {
        let s = sample_support(20, 400, 2).unwrap();
        let err = distance_to_kjuntas(&Constant(20), &s, 20, 4, false).unwrap_err();
        assert!(matches!(err, LabError::Feasibility(_)));
    }

    #[test]
    fn far_is_decided_exactly() {
        let r = DistanceReport {
            best_j: CoordSet::full(1),
            distance: Ratio::new(1, 3),
            mislabelled: 1,
            support_size: 3,
            per_j: None,
        };
        assert!(r.is_third_far());
        assert!(!DistanceReport { mislabelled: 33, support_size: 100, ..r }.is_third_far());
    }

    // Enumerates every k-set and every truth table on it.
    fn naive_distance(f: &Table, support: &SupportSet, k: usize) -> u64 {
        let n = f.n;
        let mut best = u64::MAX;
        for combo in (0..n).combinations(k) {
            for table in 0u64..1 << (1 << k) {
                let errors = support
                    .points()
                    .iter()
                    .filter(|y| {
                        let idx = combo.iter().fold(0, |acc, &c| (acc << 1) | usize::from(y.get(c)));
                        ((table >> idx) & 1 == 1) != f.eval(y).unwrap()
                    })
                    .count() as u64;
                best = best.min(errors);
            }
        }
        best
    }

    proptest! {
        #[test]
        fn agrees_with_double_exhaustive_oracle(n in 2usize..=6, k in 1usize..=2, m_frac in 0.05f64..1.0, seed in any::<u64>()) {
            prop_assume!(k <= n);
            let mut rng = rng_from_seed(seed);
            let f = Table { n, bits: (0..1 << n).map(|_| rng.random()).collect() };
            let m = ((m_frac * (1u64 << n) as f64).ceil() as usize).max(1);
            let s = sample_support(n, m, derive_seed(seed, "s", 0)).unwrap();
            let r = distance_to_kjuntas(&f, &s, n, k, false).unwrap();
            prop_assert_eq!(r.mislabelled, naive_distance(&f, &s, k));
            prop_assert!(r.distance <= Ratio::new(1, 2));
        }
    }
}
