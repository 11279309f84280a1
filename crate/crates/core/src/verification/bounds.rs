//! Closed-form Chernoff and birthday bounds against Monte-Carlo frequencies.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::seed::{derive_seed, rng_from_seed};
use crate::verification::{Check, ClaimReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Tail {
    /// `Pr[X > (1 + eta) mu]`.
    Upper,
    /// `Pr[X < (1 - eta) mu]`.
    Lower,
}

/// A sum of `m` independent Bernoulli(`p`) bits.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChernoffCase {
    pub m: u32,
    pub p: f64,
    pub eta: f64,
    pub tail: Tail,
}

impl ChernoffCase {
    pub fn mu(&self) -> f64 {
        self.m as f64 * self.p
    }

    /// The bound of the tail: `e^{-eta^2 mu/3}` for `0 < eta <= 1` and
    /// `e^{-eta mu/3}` for `eta > 1` on the upper tail; `e^{-eta^2 mu/2}` on
    /// the lower tail for `0 <= eta <= 1`. `eta = 0` gives 1.
    pub fn bound(&self) -> f64 {
        let mu = self.mu();
        match self.tail {
            Tail::Upper if self.eta > 1.0 => (-self.eta * mu / 3.0).exp(),
            Tail::Upper => (-self.eta * self.eta * mu / 3.0).exp(),
            Tail::Lower => (-self.eta * self.eta * mu / 2.0).exp(),
        }
    }

    pub fn event(&self, x: u32) -> bool {
        let x = f64::from(x);
        match self.tail {
            Tail::Upper => x > (1.0 + self.eta) * self.mu(),
            Tail::Lower => x < (1.0 - self.eta) * self.mu(),
        }
    }
}

/// `r` uniform draws with replacement from a set of size `universe`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BirthdayCase {
    pub r: u64,
    pub universe: u64,
}

impl BirthdayCase {
    /// `r^2 / (2 |X|)`.
    pub fn bound(&self) -> f64 {
        (self.r * self.r) as f64 / (2.0 * self.universe as f64)
    }

    /// `1 - prod_{i<r} (1 - i/|X|)`.
    pub fn exact(&self) -> f64 {
        let mut keep = 1.0;
        for i in 1..self.r {
            keep *= 1.0 - i as f64 / self.universe as f64;
        }
        (1.0 - keep).max(0.0)
    }
}

/// The documented Chernoff grid.
pub fn chernoff_grid() -> Vec<ChernoffCase> {
    let c = |m, p, eta, tail| ChernoffCase { m, p, eta, tail };
    vec![
        c(60, 0.5, 1.0, Tail::Upper),
        c(100, 0.5, 0.2, Tail::Upper),
        c(100, 0.5, 0.2, Tail::Lower),
        c(200, 0.1, 0.5, Tail::Upper),
        c(200, 0.1, 0.5, Tail::Lower),
        c(50, 0.3, 2.0, Tail::Upper),
        c(60, 0.5, 0.3, Tail::Lower),
        c(40, 0.5, 0.0, Tail::Upper),
    ]
}

/// The documented birthday grid.
pub fn birthday_grid() -> Vec<BirthdayCase> {
    [(2, 2), (8, 4096), (10, 100), (30, 365), (8, 64)]
        .into_iter()
        .map(|(r, universe)| BirthdayCase { r, universe })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundRow {
    pub kind: &'static str,
    pub case: serde_json::Value,
    pub bound: f64,
    pub empirical: f64,
    /// `sqrt(B(1-B)/T)` with `B` the bound clamped to `[0, 1]`.
    pub sigma: f64,
    /// `bound + 3 sigma - empirical`.
    pub margin: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exact: Option<f64>,
}

fn sigma(bound: f64, trials: u64) -> f64 {
    let b = bound.clamp(0.0, 1.0);
    (b * (1.0 - b) / trials as f64).sqrt()
}

fn chernoff_frequency(case: &ChernoffCase, trials: u64, seed: u64) -> f64 {
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, "chernoff", t));
            let x = (0..case.m).filter(|_| rng.random_bool(case.p)).count() as u32;
            u64::from(case.event(x))
        })
        .sum();
    hits as f64 / trials as f64
}

fn birthday_frequency(case: &BirthdayCase, trials: u64, seed: u64) -> f64 {
    let hits: u64 = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = rng_from_seed(derive_seed(seed, "birthday", t));
            let mut draws: Vec<u64> = (0..case.r).map(|_| rng.random_range(0..case.universe)).collect();
            draws.sort_unstable();
            u64::from(draws.windows(2).any(|w| w[0] == w[1]))
        })
        .sum();
    hits as f64 / trials as f64
}

/// Every row of the documented grids at `trials` Monte-Carlo draws each.
pub fn bound_rows(trials: u64, seed: u64) -> Vec<BoundRow> {
    let mut rows = Vec::new();
    for (i, case) in chernoff_grid().iter().enumerate() {
        let bound = case.bound();
        let empirical = chernoff_frequency(case, trials, derive_seed(seed, "chernoff-row", i as u64));
        let s = sigma(bound, trials);
        rows.push(BoundRow {
            kind: "chernoff",
            case: serde_json::to_value(case).expect("plain struct"),
            bound,
            empirical,
            sigma: s,
            margin: bound + 3.0 * s - empirical,
            exact: None,
        });
    }
    for (i, case) in birthday_grid().iter().enumerate() {
        let bound = case.bound();
        let empirical = birthday_frequency(case, trials, derive_seed(seed, "birthday-row", i as u64));
        let s = sigma(bound, trials);
        rows.push(BoundRow {
            kind: "birthday",
            case: serde_json::to_value(case).expect("plain struct"),
            bound,
            empirical,
            sigma: s,
            margin: bound + 3.0 * s - empirical,
            exact: Some(case.exact()),
        });
    }
    rows
}

/// Every bound must dominate its empirical frequency minus `3 sigma`.
pub fn bound_checks(trials: u64, seed: u64) -> ClaimReport {
    let rows = bound_rows(trials.max(1), seed);
    let mut checks: Vec<Check> = rows
        .iter()
        .map(|r| Check::at_most(format!("{} {}", r.kind, r.case), r.empirical, r.sigma, r.bound))
        .collect();
    for r in rows.iter().filter(|r| r.exact.is_some()) {
        let exact = r.exact.unwrap_or_default();
        checks.push(Check::at_most(format!("birthday exact {}", r.case), exact, 0.0, r.bound));
    }
    ClaimReport::new(
        "bounds",
        json!({ "trials": trials.max(1), "seed": seed }),
        trials.max(1),
        "closed form",
        Vec::new(),
        checks,
        json!({ "rows": rows }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_draws_from_two() {
        let c = BirthdayCase { r: 2, universe: 2 };
        assert_eq!(c.exact(), 0.5);
        assert_eq!(c.bound(), 1.0);
    }

    #[test]
    fn chernoff_forms() {
        let c = ChernoffCase { m: 60, p: 0.5, eta: 1.0, tail: Tail::Upper };
        assert!((c.bound() - (-10.0f64).exp()).abs() < 1e-15);
        let zero = ChernoffCase { eta: 0.0, ..c };
        assert_eq!(zero.bound(), 1.0);
        let big = ChernoffCase { m: 50, p: 0.3, eta: 2.0, tail: Tail::Upper };
        assert!((big.bound() - (-10.0f64).exp()).abs() < 1e-15);
        assert!(c.event(31 + 30) && !c.event(60));
    }

    #[test]
    fn exact_birthday_against_enumeration() {
        // 3 draws from 4: 4*3*2 of 64 sequences are collision-free.
        let c = BirthdayCase { r: 3, universe: 4 };
        assert!((c.exact() - (1.0 - 24.0 / 64.0)).abs() < 1e-15);
    }

    #[test]
    fn grid_passes_at_moderate_trials() {
        let r = bound_checks(20_000, 5);
        assert!(r.pass, "{}", r.summary_line());
        let again = bound_checks(20_000, 5);
        assert_eq!(r, again);
    }
}
