//! Named claims, their desk-scale configurations, and dispatch.

use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{LabError, Result};
use crate::harness::REFERENCE_TESTERS;
use crate::instances::ExperimentParams;
use crate::verification::claims::{
    verify_c1, verify_c2, verify_c31_alpha_law, verify_c32_equivalence, verify_c33_gap, verify_events, verify_gap,
    EXACT_GRID,
};
use crate::verification::{bound_checks, ClaimReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Claim {
    C1,
    C2,
    C31,
    C32,
    C33,
    Events,
    Bounds,
    Gap,
}

impl Claim {
    pub const ALL: [Claim; 8] = [
        Claim::C1,
        Claim::C2,
        Claim::C31,
        Claim::C32,
        Claim::C33,
        Claim::Events,
        Claim::Bounds,
        Claim::Gap,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Claim::C1 => "c1",
            Claim::C2 => "c2",
            Claim::C31 => "c31",
            Claim::C32 => "c32",
            Claim::C33 => "c33",
            Claim::Events => "events",
            Claim::Bounds => "bounds",
            Claim::Gap => "gap",
        }
    }
}

impl fmt::Display for Claim {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Claim {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        Claim::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| LabError::param(format!("unknown claim {s:?}")))
    }
}

/// Everything one verifier run needs apart from the seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClaimConfig {
    pub params: ExperimentParams,
    pub q: usize,
    pub trials: u64,
    pub testers: Vec<String>,
}

/// `k = 12`, `m = 4096` override where the scattering and goodness
/// preconditions `q <= 2^{k/2-3} = 8` and `m >= 2^k` hold.
pub fn claim2_regime_params(lambda: f64) -> Result<ExperimentParams> {
    ExperimentParams::for_junta_class(256, 12)?.with_override(4096, lambda)
}

/// The desk preset: the parameters the acceptance suite runs at.
pub fn desk_config(claim: Claim) -> Result<ClaimConfig> {
    let testers: Vec<String> = REFERENCE_TESTERS.iter().map(|s| s.to_string()).collect();
    let cfg = |params, q, trials| ClaimConfig {
        params,
        q,
        trials,
        testers: testers.clone(),
    };
    Ok(match claim {
        Claim::C1 => cfg(ExperimentParams::for_junta_class(12, 3)?, 0, 100),
        Claim::C2 => cfg(ExperimentParams::for_junta_class(8, 2)?, 0, 200),
        Claim::C31 => cfg(ExperimentParams::for_junta_class(12, 3)?, 3, 100_000),
        Claim::C32 => cfg(ExperimentParams::for_junta_class(12, 3)?, 2, 10_000),
        Claim::C33 | Claim::Events => cfg(claim2_regime_params(3.0 / 16.0)?, 8, 10_000),
        Claim::Gap => {
            let params = claim2_regime_params(0.05)?;
            let q = params.q_budget();
            cfg(params, q, 10_000)
        }
        Claim::Bounds => cfg(ExperimentParams::for_junta_class(12, 3)?, 0, 100_000),
    })
}

pub fn run_claim(claim: Claim, cfg: &ClaimConfig, seed: u64) -> Result<ClaimReport> {
    let p = &cfg.params;
    match claim {
        Claim::C1 => verify_c1(p, cfg.trials, seed),
        Claim::C2 => verify_c2(p, cfg.trials, seed),
        Claim::C31 => verify_c31_alpha_law(p, cfg.q, cfg.trials, seed),
        Claim::C32 => verify_c32_equivalence(&cfg.testers, p, cfg.q, cfg.trials, seed, &EXACT_GRID),
        Claim::C33 => verify_c33_gap(&cfg.testers, p, cfg.q, cfg.trials, seed),
        Claim::Events => verify_events(&cfg.testers, p, cfg.q, cfg.trials, seed),
        Claim::Gap => verify_gap(&cfg.testers, p, cfg.q, cfg.trials, seed),
        Claim::Bounds => Ok(bound_checks(cfg.trials, seed)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn claim_names_round_trip() {
        for c in Claim::ALL {
            assert_eq!(c.name().parse::<Claim>().unwrap(), c);
        }
        assert!("c4".parse::<Claim>().is_err());
    }

    #[test]
    fn desk_regimes() {
        let gap = desk_config(Claim::Gap).unwrap();
        assert!(gap.params.q_bound() >= 4.0);
        assert_eq!(gap.q, 4);
        let ev = desk_config(Claim::Events).unwrap();
        assert_eq!(ev.params.distance_threshold(), Some(80));
        assert_eq!(desk_config(Claim::C2).unwrap().params.m(), 110);
    }
}
