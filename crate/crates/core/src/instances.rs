//! Experiment parameters and the YES / NO instance samplers.

use std::f64::consts::{LN_2, LOG2_E};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bitspace::{cube_holds, sample_coord_set, CoordSet, Point, SupportSet};
use crate::error::{LabError, Result};
use crate::oracles::{distance_threshold, BooleanFunction, JuntaOracle, NoOracle};
use crate::seed::{derive_seed, rng_from_seed};

/// The fixed distance parameter of the tester.
pub const EPSILON: f64 = 1.0 / 3.0;

/// Smallest `k` covered by the lower bound.
pub const THEOREM_MIN_K: usize = 10;

/// Base of both logarithms in the `n >= 15 + 2 log log |C|` side condition.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LogBase {
    #[default]
    Two,
    Natural,
}

impl FromStr for LogBase {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" | "two" => Ok(LogBase::Two),
            "e" | "natural" => Ok(LogBase::Natural),
            other => Err(LabError::param(format!("unknown log base {other:?}"))),
        }
    }
}

impl LogBase {
    /// `log log |C|` given `ln |C|`.
    pub fn log_log(self, ln_class_size: f64) -> f64 {
        match self {
            LogBase::Two => (ln_class_size * LOG2_E).log2(),
            LogBase::Natural => ln_class_size.ln(),
        }
    }
}

/// `2^{k/2} / (8 (1 + 2 lambda)^{k/2})`.
pub fn theorem_query_bound(k: usize, lambda: f64) -> f64 {
    (2.0 / (1.0 + 2.0 * lambda)).powf(k as f64 / 2.0) / 8.0
}

/// `sqrt((5 + ln ln |C| + k/2) / n)`.
pub fn theorem_lambda(n: usize, k: usize, ln_class_size: f64) -> f64 {
    ((5.0 + ln_class_size.ln() + k as f64 / 2.0) / n as f64).sqrt()
}

/// `ln C(n, k)`.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    let k = k.min(n - k);
    (0..k)
        .map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln())
        .sum()
}

/// `ln(C(n,k) * 2^{2^k})`, the log-size of the class of k-juntas as an upper
/// bound, floored at `2^k ln 2`.
pub fn junta_class_ln_size(n: usize, k: usize) -> f64 {
    let floor = 2f64.powi(k as i32) * LN_2;
    (ln_binomial(n, k) + floor).max(floor)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ManualOverride {
    pub m: usize,
    pub lambda: f64,
}

/// Everything the constructions depend on.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentParams {
    n: usize,
    k: usize,
    ln_class_size: f64,
    m: usize,
    lambda: f64,
    epsilon: f64,
    q_bound: f64,
    theorem_regime: bool,
    log_base: LogBase,
    #[serde(skip_serializing_if = "Option::is_none")]
    manual_override: Option<ManualOverride>,
    warnings: Vec<String>,
}

impl ExperimentParams {
    pub fn derive(n: usize, k: usize, ln_class_size: f64) -> Result<Self> {
        Self::derive_with_base(n, k, ln_class_size, LogBase::Two)
    }

    /// Parameters for the class of all k-juntas on n variables.
    pub fn for_junta_class(n: usize, k: usize) -> Result<Self> {
        if k == 0 || k > n {
            return Err(LabError::param(format!("need 1 <= k <= n, got n={n}, k={k}")));
        }
        Self::derive(n, k, junta_class_ln_size(n, k))
    }

    pub fn derive_with_base(n: usize, k: usize, ln_class_size: f64, log_base: LogBase) -> Result<Self> {
        if k == 0 || k > n {
            return Err(LabError::param(format!("need 1 <= k <= n, got n={n}, k={k}")));
        }
        if !ln_class_size.is_finite() || ln_class_size <= 1.0 {
            return Err(LabError::param(format!(
                "ln|C| must be a finite value > 1, got {ln_class_size}"
            )));
        }
        let m_real = (18.0 * ln_class_size).ceil();
        if m_real > usize::MAX as f64 || !cube_holds(n, m_real as usize) {
            return Err(LabError::param(format!(
                "m = ceil(18 ln|C|) = {m_real} exceeds 2^n for n={n}"
            )));
        }
        let lambda = theorem_lambda(n, k, ln_class_size);
        let mut params = ExperimentParams {
            n,
            k,
            ln_class_size,
            m: m_real as usize,
            lambda,
            epsilon: EPSILON,
            q_bound: theorem_query_bound(k, lambda),
            theorem_regime: false,
            log_base,
            manual_override: None,
            warnings: Vec::new(),
        };
        params.assess_regime();
        Ok(params)
    }

    /// Decouple `(m, lambda)` from the class size. The result is always
    /// labelled as outside the theorem regime.
    pub fn with_override(mut self, m: usize, lambda: f64) -> Result<Self> {
        if m == 0 || !cube_holds(self.n, m) {
            return Err(LabError::param(format!(
                "override m={m} must satisfy 1 <= m <= 2^n for n={}",
                self.n
            )));
        }
        if !lambda.is_finite() || lambda < 0.0 {
            return Err(LabError::param(format!("override lambda={lambda} must be >= 0")));
        }
        self.m = m;
        self.lambda = lambda;
        self.q_bound = theorem_query_bound(self.k, lambda);
        self.manual_override = Some(ManualOverride { m, lambda });
        self.assess_regime();
        Ok(self)
    }

    fn assess_regime(&mut self) {
        self.warnings.clear();
        let n_min = self.regime_min_n();
        let k_ok = self.k >= THEOREM_MIN_K;
        let n_ok = self.n as f64 >= n_min;
        if !k_ok {
            self.warnings
                .push(format!("outside theorem regime (k ≥ {THEOREM_MIN_K})"));
        }
        if !n_ok {
            self.warnings.push(format!(
                "outside theorem regime (n ≥ 15 + 2·log log|C| = {n_min:.4})"
            ));
        }
        let junta_floor = 2f64.powi(self.k as i32) * LN_2;
        if self.ln_class_size < junta_floor {
            self.warnings.push(format!(
                "ln|C| = {} is below 2^k ln 2 = {junta_floor}; C cannot contain all k-juntas",
                self.ln_class_size
            ));
        }
        if self.manual_override.is_some() {
            self.warnings
                .push("manual (m, lambda) override: outside theorem regime".to_string());
        }
        if self.lambda >= 0.5 {
            self.warnings.push(format!(
                "degenerate regime: lambda = {:.4} >= 0.5, the near-support branch of g never fires",
                self.lambda
            ));
        }
        self.theorem_regime = k_ok && n_ok && self.manual_override.is_none();
        for w in &self.warnings {
            log::debug!("{w}");
        }
    }

    /// `15 + 2 log log |C|`.
    pub fn regime_min_n(&self) -> f64 {
        15.0 + 2.0 * self.log_base.log_log(self.ln_class_size)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn ln_class_size(&self) -> f64 {
        self.ln_class_size
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The query bound as a real number.
    pub fn q_bound(&self) -> f64 {
        self.q_bound
    }

    /// `floor(q_bound)`, the largest query count the bound covers.
    pub fn q_budget(&self) -> usize {
        self.q_bound.max(0.0).floor() as usize
    }

    pub fn theorem_regime(&self) -> bool {
        self.theorem_regime
    }

    pub fn log_base(&self) -> LogBase {
        self.log_base
    }

    pub fn manual_override(&self) -> Option<ManualOverride> {
        self.manual_override
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// `floor((0.5 - lambda) n)`, or `None` when negative.
    pub fn distance_threshold(&self) -> Option<usize> {
        distance_threshold(self.n, self.lambda)
    }

    /// Short label used in reports.
    pub fn regime_label(&self) -> &'static str {
        if self.theorem_regime {
            "theorem regime"
        } else {
            "outside theorem regime"
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    Yes,
    No,
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            InstanceKind::Yes => "yes",
            InstanceKind::No => "no",
        })
    }
}

/// The function of an instance.
#[derive(Clone, Debug)]
pub enum Phi {
    Yes(JuntaOracle),
    No(NoOracle),
}

impl BooleanFunction for Phi {
    fn dimension(&self) -> usize {
        match self {
            Phi::Yes(f) => f.dimension(),
            Phi::No(g) => g.dimension(),
        }
    }

    #[inline]
    fn eval(&self, x: &Point) -> Result<bool> {
        match self {
            Phi::Yes(f) => f.eval(x),
            Phi::No(g) => g.eval(x),
        }
    }
}

/// All seeds consumed while sampling an instance.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeedRecord {
    pub master: u64,
    pub coords: u64,
    pub support: u64,
    /// The YES junta, or the background junta of a NO instance.
    pub junta: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<u64>,
}

impl SeedRecord {
    fn split(master: u64) -> Self {
        SeedRecord {
            master,
            coords: derive_seed(master, "coords", 0),
            support: derive_seed(master, "support", 0),
            junta: derive_seed(master, "junta", 0),
            gamma: None,
        }
    }
}

/// A pair `(phi, D)` with `D` uniform over `support`, plus the planted `J`.
#[derive(Clone, Debug)]
pub struct Instance {
    kind: InstanceKind,
    starred: bool,
    k: usize,
    lambda: f64,
    phi: Phi,
    support: Arc<SupportSet>,
    coords: CoordSet,
    seeds: SeedRecord,
}

// Steps 1-2 of both boxes: J and S come from the same seeds for YES and NO.
fn sample_common(params: &ExperimentParams, seeds: &SeedRecord) -> Result<(CoordSet, Arc<SupportSet>)> {
    let coords = sample_coord_set(params.n(), params.k(), seeds.coords)?;
    let support = SupportSet::random(params.n(), params.m(), &mut rng_from_seed(seeds.support))?;
    Ok((coords, Arc::new(support)))
}

fn sample_gamma(m: usize, seed: u64) -> Vec<bool> {
    let mut rng = rng_from_seed(seed);
    (0..m).map(|_| rng.random::<bool>()).collect()
}

/// A draw from YES (or YES* when `starred`).
pub fn sample_yes(params: &ExperimentParams, seed: u64, starred: bool) -> Result<Instance> {
    let seeds = SeedRecord::split(seed);
    let (coords, support) = sample_common(params, &seeds)?;
    Ok(Instance {
        kind: InstanceKind::Yes,
        starred,
        k: params.k(),
        lambda: params.lambda(),
        phi: Phi::Yes(JuntaOracle::new(coords.clone(), seeds.junta)),
        support,
        coords,
        seeds,
    })
}

/// A draw from NO (or NO* when `starred`).
pub fn sample_no(params: &ExperimentParams, seed: u64, starred: bool) -> Result<Instance> {
    let mut seeds = SeedRecord::split(seed);
    let gamma_seed = derive_seed(seed, "gamma", 0);
    seeds.gamma = Some(gamma_seed);
    let (coords, support) = sample_common(params, &seeds)?;
    let background = JuntaOracle::new(coords.clone(), seeds.junta);
    let gamma = sample_gamma(support.len(), gamma_seed);
    let g = NoOracle::new(
        support.clone(),
        coords.clone(),
        gamma,
        background,
        params.distance_threshold(),
    )?;
    Ok(Instance {
        kind: InstanceKind::No,
        starred,
        k: params.k(),
        lambda: params.lambda(),
        phi: Phi::No(g),
        support,
        coords,
        seeds,
    })
}

pub fn sample_instance(params: &ExperimentParams, kind: InstanceKind, seed: u64, starred: bool) -> Result<Instance> {
    match kind {
        InstanceKind::Yes => sample_yes(params, seed, starred),
        InstanceKind::No => sample_no(params, seed, starred),
    }
}

impl Instance {
    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn is_starred(&self) -> bool {
        self.starred
    }

    pub fn n(&self) -> usize {
        self.support.dimension()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.support.len()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn phi(&self) -> &Phi {
        &self.phi
    }

    pub fn support(&self) -> &SupportSet {
        &self.support
    }

    /// `J` as handed to the hybrid algorithm; present only for starred instances.
    pub fn hidden_coords(&self) -> Option<&CoordSet> {
        self.starred.then_some(&self.coords)
    }

    /// The planted `J`, regardless of starring. This is the experimenter's
    /// view, used by the verifiers; testers never see it.
    pub fn planted_coords(&self) -> &CoordSet {
        &self.coords
    }

    pub fn no_oracle(&self) -> Option<&NoOracle> {
        match &self.phi {
            Phi::No(g) => Some(g),
            Phi::Yes(_) => None,
        }
    }

    pub fn seeds(&self) -> &SeedRecord {
        &self.seeds
    }

    pub fn to_record(&self) -> InstanceRecord {
        InstanceRecord {
            kind: self.kind,
            starred: self.starred,
            n: self.n(),
            k: self.k,
            m: self.m(),
            lambda: self.lambda,
            seeds: self.seeds,
            support: self.support.points().to_vec(),
            hidden_j: self.hidden_coords().map(|j| j.to_string()),
            gamma: self
                .no_oracle()
                .map(|g| g.gamma().iter().map(|&b| u8::from(b)).collect()),
        }
    }

    /// Rebuild an instance from its serialized record. Functions come back
    /// from their seeds.
    pub fn from_record(record: &InstanceRecord) -> Result<Self> {
        let coords = sample_coord_set(record.n, record.k, record.seeds.coords)?;
        if let Some(hidden) = &record.hidden_j {
            if CoordSet::parse(record.n, hidden)? != coords {
                return Err(LabError::contract("hiddenJ does not match the coordinate seed"));
            }
        }
        if record.hidden_j.is_some() != record.starred {
            return Err(LabError::contract("hiddenJ must be present iff the instance is starred"));
        }
        let support = SupportSet::new(record.n, record.support.clone())?;
        if support.len() != record.m {
            return Err(LabError::contract(format!(
                "record declares m={} but lists {} distinct support points",
                record.m,
                support.len()
            )));
        }
        let support = Arc::new(support);
        let phi = match record.kind {
            InstanceKind::Yes => Phi::Yes(JuntaOracle::new(coords.clone(), record.seeds.junta)),
            InstanceKind::No => {
                let gamma = record
                    .gamma
                    .as_ref()
                    .ok_or_else(|| LabError::contract("NO record without gamma"))?
                    .iter()
                    .map(|&b| match b {
                        0 => Ok(false),
                        1 => Ok(true),
                        other => Err(LabError::contract(format!("gamma bit {other} is not 0/1"))),
                    })
                    .collect::<Result<Vec<_>>>()?;
                Phi::No(NoOracle::new(
                    support.clone(),
                    coords.clone(),
                    gamma,
                    JuntaOracle::new(coords.clone(), record.seeds.junta),
                    distance_threshold(record.n, record.lambda),
                )?)
            }
        };
        Ok(Instance {
            kind: record.kind,
            starred: record.starred,
            k: record.k,
            lambda: record.lambda,
            phi,
            support,
            coords,
            seeds: record.seeds,
        })
    }
}

/// JSON form of an instance. Juntas are stored as seeds only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub kind: InstanceKind,
    pub starred: bool,
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub lambda: f64,
    pub seeds: SeedRecord,
    pub support: Vec<Point>,
    #[serde(rename = "hiddenJ", default, skip_serializing_if = "Option::is_none")]
    pub hidden_j: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<Vec<u8>>,
}
