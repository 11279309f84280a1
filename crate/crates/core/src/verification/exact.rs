//! Exact acceptance probabilities of `A` on YES and `A'` on YES* at tiny
//! parameters.
//!
//! The enumeration runs over every `m`-subset `S`, every index sequence of the
//! samples, every `k`-set `J`, and the junta bits of the sections actually
//! touched: first the sections of `Y`, then the new sections of
//! `Z = A1(Y, alpha)`. With `tY` and `tZ` touched sections the branch has
//! weight `2^{2q - tY - tZ}` over the common denominator
//! `C(2^n, m) * m^q * C(n, k) * 2^{2q}`.

use std::collections::HashMap;

use itertools::Itertools;
use num_rational::Ratio;
use serde::Serialize;

use crate::bitspace::{CoordSet, Point, SectionKey, SupportSet};
use crate::error::{LabError, Result};
use crate::harness::{run_deterministic_on, run_hybrid_on, Tester};
use crate::oracles::{JuntaOracle, TableBits};
use crate::verification::distance::binomial_u128;

/// Largest number of enumeration leaves attempted.
pub const EXACT_BUDGET: u128 = 20_000_000;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ExactComparison {
    pub tester: String,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub q: usize,
    /// Acceptance probability of `A` on YES, as `"num/den"`.
    pub acc_yes: String,
    /// Acceptance probability of `A'` on YES*, as `"num/den"`.
    pub acc_hybrid: String,
    pub equal: bool,
    pub leaves: u128,
}

/// Upper bound on the leaves of the enumeration, or `None` on overflow.
pub fn exact_leaves(n: usize, k: usize, m: usize, q: usize) -> Option<u128> {
    let cube = 1usize.checked_shl(u32::try_from(n).ok()?).filter(|_| n < 64)?;
    let subsets = binomial_u128(cube, m)?;
    let seqs = (m as u128).checked_pow(u32::try_from(q).ok()?)?;
    let js = binomial_u128(n, k)?;
    let bits = 1u128.checked_shl(u32::try_from(2 * q).ok()?)?;
    subsets.checked_mul(seqs)?.checked_mul(js)?.checked_mul(bits)
}

fn ratio_string(r: &Ratio<u128>) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn distinct_sections(coords: &CoordSet, points: &[Point], exclude: &[SectionKey]) -> Vec<SectionKey> {
    let mut out: Vec<SectionKey> = Vec::new();
    for p in points {
        let z = coords.project_unchecked(p);
        if !exclude.contains(&z) && !out.contains(&z) {
            out.push(z);
        }
    }
    out
}

fn assign(sections: &[SectionKey], mask: u64) -> impl Iterator<Item = (SectionKey, bool)> + '_ {
    sections
        .iter()
        .enumerate()
        .map(move |(i, z)| (z.clone(), (mask >> i) & 1 == 1))
}

/// Exact acceptance of `A` on YES and of `A'` on YES*.
///
/// The YES side runs `A` against the full tabulated junta. The YES* side runs
/// `A'` against a junta tabulated on the sections of `Y` only, so evaluating
/// the true function on a query outside them would panic; its fresh bits are
/// the same enumerated bits of the new query sections.
pub fn exact_c32(tester: &dyn Tester, n: usize, k: usize, m: usize, q: usize) -> Result<ExactComparison> {
    if tester.query_budget() != q {
        return Err(LabError::param(format!(
            "tester budget {} does not match q={q}",
            tester.query_budget()
        )));
    }
    if k == 0 || k > n || m == 0 {
        return Err(LabError::param(format!("need 1 <= k <= n and m >= 1, got n={n}, k={k}, m={m}")));
    }
    let leaves = exact_leaves(n, k, m, q)
        .filter(|&l| l <= EXACT_BUDGET)
        .ok_or_else(|| {
            LabError::feasibility(format!(
                "exact enumeration at n={n}, k={k}, m={m}, q={q} exceeds {EXACT_BUDGET} leaves"
            ))
        })?;
    if (1u128 << n) < m as u128 {
        return Err(LabError::param(format!("m={m} exceeds 2^n")));
    }
    let full = 1u128 << (2 * q);
    let mut acc_yes: u128 = 0;
    let mut acc_hybrid: u128 = 0;
    let cube: Vec<Point> = (0..1u64 << n).map(|i| Point::from_index(n, i)).collect();
    let all_j: Vec<CoordSet> = (0..n)
        .combinations(k)
        .map(|c| CoordSet::new(n, c))
        .collect::<Result<_>>()?;

    for subset in (0..cube.len()).combinations(m) {
        let support = SupportSet::new(n, subset.iter().map(|&i| cube[i].clone()).collect())?;
        for idx in std::iter::repeat_n(0..m, q).multi_cartesian_product() {
            let samples: Vec<Point> = idx.iter().map(|&i| support.get(i).clone()).collect();
            for coords in &all_j {
                let y_sections = distinct_sections(coords, &samples, &[]);
                for y_mask in 0..1u64 << y_sections.len() {
                    let y_bits: HashMap<SectionKey, bool> = assign(&y_sections, y_mask).collect();
                    let f_y = JuntaOracle::with_bits(coords.clone(), TableBits::new(y_bits.clone()));
                    let labels: Vec<bool> = samples.iter().map(|y| y_bits[&coords.project_unchecked(y)]).collect();
                    let queries = tester.choose_queries(&samples, &labels);
                    let z_sections = distinct_sections(coords, &queries, &y_sections);
                    let weight = full >> (y_sections.len() + z_sections.len());
                    for z_mask in 0..1u64 << z_sections.len() {
                        let mut table = y_bits.clone();
                        table.extend(assign(&z_sections, z_mask));
                        let f = JuntaOracle::with_bits(coords.clone(), TableBits::new(table));
                        let fresh = TableBits::from_pairs(assign(&z_sections, z_mask));

                        let a = run_deterministic_on(tester, &f, samples.clone())?;
                        let h = run_hybrid_on(tester, &f_y, coords, samples.clone(), fresh)?;
                        if a.verdict.accepted() {
                            acc_yes += weight;
                        }
                        if h.verdict.accepted() {
                            acc_hybrid += weight;
                        }
                    }
                }
            }
        }
    }
    let denominator = binomial_u128(cube.len(), m).unwrap_or(0)
        * (m as u128).pow(q as u32)
        * all_j.len() as u128
        * full;
    let yes = Ratio::new(acc_yes, denominator);
    let hybrid = Ratio::new(acc_hybrid, denominator);
    Ok(ExactComparison {
        tester: tester.name().to_string(),
        n,
        k,
        m,
        q,
        acc_yes: ratio_string(&yes),
        acc_hybrid: ratio_string(&hybrid),
        equal: yes == hybrid,
        leaves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::build_tester;
    use crate::harness::testers::{Constant, FirstLabelTester};

    #[test]
    fn accept_all_is_exactly_one() {
        let r = exact_c32(&Constant::accept_all(1), 3, 1, 2, 1).unwrap();
        assert_eq!((r.acc_yes.as_str(), r.acc_hybrid.as_str()), ("1/1", "1/1"));
    }

    #[test]
    fn first_label_is_a_fair_coin() {
        let r = exact_c32(&FirstLabelTester::new(2), 3, 2, 2, 2).unwrap();
        assert_eq!(r.acc_yes, "1/2");
        assert!(r.equal);
    }

    #[test]
    fn collision_tester_matches_hand_count() {
        // n=2, k=1, m=2, q=2; the guess is a single coordinate. A rejects iff
        // the two samples differ, agree on the guess, and carry different
        // labels.
        let t = build_tester("collision", 2, 1, 2, 0).unwrap();
        let r = exact_c32(t.as_ref(), 2, 1, 2, 2).unwrap();
        assert!(r.equal);
        assert_ne!(r.acc_yes, "1/1");
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            exact_c32(&Constant::accept_all(2), 10, 2, 3, 2),
            Err(LabError::Feasibility(_))
        ));
    }
}
