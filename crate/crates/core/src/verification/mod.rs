//! Empirical and exact checks of the properties of the construction.
//!
//! Every verifier returns a [`ClaimReport`]: a list of [`Check`]s, each
//! comparing a statistic with a bound. Statistical checks use the uniform
//! pass rule "bound minus (or plus) three CI half-widths".

pub mod bounds;
pub mod claims;
pub mod distance;
pub mod events;
pub mod exact;
pub mod suite;
pub mod tv;

use serde::Serialize;
use serde_json::Value;

pub use bounds::bound_checks;
pub use claims::{verify_c1, verify_c2, verify_c31_alpha_law, verify_c32_equivalence, verify_c33_gap, verify_gap};
pub use distance::{distance_to_kjuntas, DistanceReport};
pub use events::{event_frequencies, EventReport};
pub use tv::{tv_estimate, TvEstimate};

/// Number of CI half-widths allowed on the wrong side of a bound.
pub const CI_MULTIPLIER: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = ">=")]
    AtLeast,
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = "==")]
    Exact,
}

/// One comparison of a statistic against a bound.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    pub relation: Relation,
    pub bound: f64,
    /// CI half-width (or standard deviation, for the closed-form bounds).
    pub ci: f64,
    /// The value the statistic is actually compared with.
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    /// Passes iff `statistic >= bound - 3 ci`.
    pub fn at_least(name: impl Into<String>, statistic: f64, ci: f64, bound: f64) -> Self {
        let threshold = bound - CI_MULTIPLIER * ci;
        Check {
            name: name.into(),
            statistic,
            relation: Relation::AtLeast,
            bound,
            ci,
            threshold,
            pass: statistic >= threshold,
        }
    }

    /// Passes iff `statistic <= bound + 3 ci`.
    pub fn at_most(name: impl Into<String>, statistic: f64, ci: f64, bound: f64) -> Self {
        let threshold = bound + CI_MULTIPLIER * ci;
        Check {
            name: name.into(),
            statistic,
            relation: Relation::AtMost,
            bound,
            ci,
            threshold,
            pass: statistic <= threshold,
        }
    }

    /// Passes iff `statistic <= tolerance`, with no CI multiplier.
    pub fn within(name: impl Into<String>, statistic: f64, tolerance: f64) -> Self {
        Check {
            name: name.into(),
            statistic,
            relation: Relation::AtMost,
            bound: 0.0,
            ci: tolerance,
            threshold: tolerance,
            pass: statistic <= tolerance,
        }
    }

    /// An exact predicate; the statistic is 1 when it holds.
    pub fn exact(name: impl Into<String>, holds: bool) -> Self {
        Check {
            name: name.into(),
            statistic: f64::from(u8::from(holds)),
            relation: Relation::Exact,
            bound: 1.0,
            ci: 0.0,
            threshold: 1.0,
            pass: holds,
        }
    }

    /// Distance from the threshold on the passing side; negative on failure.
    pub fn margin(&self) -> f64 {
        match self.relation {
            Relation::AtLeast => self.statistic - self.threshold,
            Relation::AtMost => self.threshold - self.statistic,
            Relation::Exact if self.pass => 0.0,
            Relation::Exact => -1.0,
        }
    }
}

/// Machine-readable outcome of one verifier.
///
/// `statistic`, `bound`, `ci` and `threshold` are those of the binding check,
/// i.e. the one with the smallest margin.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimReport {
    pub claim: String,
    pub params: Value,
    pub trials: u64,
    pub statistic: f64,
    pub bound: f64,
    pub ci: f64,
    pub threshold: f64,
    pub relation: Relation,
    pub pass: bool,
    pub regime: String,
    pub warnings: Vec<String>,
    pub checks: Vec<Check>,
    pub details: Value,
}

impl ClaimReport {
    /// Panics if `checks` is empty.
    pub fn new(
        claim: &str,
        params: Value,
        trials: u64,
        regime: &str,
        warnings: Vec<String>,
        checks: Vec<Check>,
        details: Value,
    ) -> Self {
        let binding = checks
            .iter()
            .reduce(|best, c| if c.margin() < best.margin() { c } else { best })
            .expect("a report needs at least one check")
            .clone();
        ClaimReport {
            claim: claim.to_string(),
            params,
            trials,
            statistic: binding.statistic,
            bound: binding.bound,
            ci: binding.ci,
            threshold: binding.threshold,
            relation: binding.relation,
            pass: checks.iter().all(|c| c.pass),
            regime: regime.to_string(),
            warnings,
            checks,
            details,
        }
    }

    pub fn binding_check(&self) -> &Check {
        self.checks
            .iter()
            .reduce(|best, c| if c.margin() < best.margin() { c } else { best })
            .expect("reports always carry a check")
    }

    /// One human-readable line.
    pub fn summary_line(&self) -> String {
        let binding = self.binding_check();
        let rel = match self.relation {
            Relation::AtLeast => ">=",
            Relation::AtMost => "<=",
            Relation::Exact => "==",
        };
        format!(
            "{:<7} {}  {}: {:.6} {} {:.6} (bound {:.6}, ci ±{:.6})  trials={}  checks={}/{}  [{}]",
            self.claim,
            if self.pass { "PASS" } else { "FAIL" },
            binding.name,
            self.statistic,
            rel,
            self.threshold,
            self.bound,
            self.ci,
            self.trials,
            self.checks.iter().filter(|c| c.pass).count(),
            self.checks.len(),
            self.regime
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn pass_rule_uses_three_half_widths() {
        assert!(Check::at_least("a", 0.91, 0.01, 15.0 / 16.0).pass);
        assert!(!Check::at_least("a", 0.91, 0.001, 15.0 / 16.0).pass);
        assert!(Check::at_most("b", 0.13, 0.002, 0.125).pass);
        assert!(!Check::at_most("b", 0.14, 0.002, 0.125).pass);
        assert!(Check::at_least("c", 1.0, 0.0, 1.0).pass);
    }

    #[test]
    fn report_picks_binding_check() {
        let r = ClaimReport::new(
            "x",
            json!({}),
            10,
            "outside theorem regime",
            vec![],
            vec![Check::at_least("loose", 0.99, 0.0, 0.5), Check::at_least("tight", 0.9, 0.0, 0.89)],
            json!(null),
        );
        assert!(r.pass);
        assert_eq!(r.binding_check().name, "tight");
        assert_eq!(r.bound, 0.89);
        assert!(r.summary_line().starts_with("x       PASS  tight"));

        let failing = ClaimReport::new("y", json!({}), 1, "", vec![], vec![Check::exact("e", false)], json!(null));
        assert!(!failing.pass);
        assert!(failing.summary_line().contains("FAIL"));
    }
}
