//! Lazily evaluated Boolean-function oracles.
//!
//! None of the oracles ever materializes a truth table. A junta's section bit
//! `b(z)` is a keyed hash of `(seed, z)`, so every oracle here is an immutable
//! value that can be evaluated from any thread in any order.

use std::collections::HashMap;
use std::sync::Arc;

use crate::bitspace::{CoordSet, Point, SectionKey, SupportSet};
use crate::error::{LabError, Result};
use crate::seed::keyed_hash;

/// A total function `{0,1}^n -> {0,1}`.
pub trait BooleanFunction: Send + Sync {
    fn dimension(&self) -> usize;

    fn eval(&self, x: &Point) -> Result<bool>;

    /// `phi(Y)`, the label string of a point sequence.
    fn eval_all(&self, xs: &[Point]) -> Result<Vec<bool>> {
        xs.iter().map(|x| self.eval(x)).collect()
    }
}

impl<T: BooleanFunction + ?Sized> BooleanFunction for &T {
    fn dimension(&self) -> usize {
        (**self).dimension()
    }

    fn eval(&self, x: &Point) -> Result<bool> {
        (**self).eval(x)
    }
}

#[inline]
fn check_dimension(expected: usize, x: &Point) -> Result<()> {
    if x.len() != expected {
        return Err(LabError::Dimension {
            expected,
            got: x.len(),
        });
    }
    Ok(())
}

/// Source of the per-section bits `b(z)` of a junta.
pub trait SectionBits: Send + Sync {
    fn bit(&self, section: &SectionKey) -> bool;
}

/// Section bits drawn from a keyed pseudorandom function of the section.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KeyedBits {
    key: u64,
}

impl KeyedBits {
    pub fn new(key: u64) -> Self {
        KeyedBits { key }
    }

    pub fn key(&self) -> u64 {
        self.key
    }
}

impl SectionBits for KeyedBits {
    #[inline]
    fn bit(&self, section: &SectionKey) -> bool {
        keyed_hash(self.key, section.bits().words(), section.len()) >> 63 == 1
    }
}

/// Explicitly tabulated section bits, used to enumerate junta randomness.
///
/// Panics when asked for a section that is not in the table: an exact
/// enumeration that reaches an unassigned section has a bookkeeping bug.
#[derive(Clone, Debug, Default)]
pub struct TableBits {
    table: HashMap<SectionKey, bool>,
}

impl TableBits {
    pub fn new(table: HashMap<SectionKey, bool>) -> Self {
        TableBits { table }
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (SectionKey, bool)>) -> Self {
        TableBits {
            table: pairs.into_iter().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }
}

impl SectionBits for TableBits {
    fn bit(&self, section: &SectionKey) -> bool {
        *self
            .table
            .get(section)
            .unwrap_or_else(|| panic!("section {section} has no assigned bit"))
    }
}

/// A junta over `J`: `f(x) = b(x_J)`.
#[derive(Clone, Debug)]
pub struct JuntaOracle<B = KeyedBits> {
    coords: CoordSet,
    bits: B,
}

impl JuntaOracle<KeyedBits> {
    /// A draw from the uniform distribution over juntas on `coords`.
    pub fn new(coords: CoordSet, seed: u64) -> Self {
        JuntaOracle {
            coords,
            bits: KeyedBits::new(seed),
        }
    }

    pub fn seed(&self) -> u64 {
        self.bits.key()
    }
}

impl<B: SectionBits> JuntaOracle<B> {
    pub fn with_bits(coords: CoordSet, bits: B) -> Self {
        JuntaOracle { coords, bits }
    }

    pub fn coords(&self) -> &CoordSet {
        &self.coords
    }

    pub fn section_bit(&self, section: &SectionKey) -> bool {
        self.bits.bit(section)
    }
}

impl<B: SectionBits> BooleanFunction for JuntaOracle<B> {
    fn dimension(&self) -> usize {
        self.coords.dimension()
    }

    #[inline]
    fn eval(&self, x: &Point) -> Result<bool> {
        check_dimension(self.coords.dimension(), x)?;
        Ok(self.bits.bit(&self.coords.project_unchecked(x)))
    }
}

/// `(Y, alpha, J)` is consistent when equal projections carry equal labels.
pub fn is_consistent(samples: &[Point], labels: &[bool], coords: &CoordSet) -> Result<bool> {
    if samples.len() != labels.len() {
        return Err(LabError::param(format!(
            "{} samples but {} labels",
            samples.len(),
            labels.len()
        )));
    }
    let mut seen: HashMap<SectionKey, bool> = HashMap::with_capacity(samples.len());
    for (y, &a) in samples.iter().zip(labels) {
        check_dimension(coords.dimension(), y)?;
        match seen.entry(coords.project_unchecked(y)) {
            std::collections::hash_map::Entry::Occupied(e) if *e.get() != a => return Ok(false),
            std::collections::hash_map::Entry::Occupied(_) => {}
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(a);
            }
        }
    }
    Ok(true)
}

/// `Y` is scattered by `J` when its projections are pairwise distinct.
///
/// Panics if a sample is shorter than the largest coordinate of `J`.
pub fn is_scattered(samples: &[Point], coords: &CoordSet) -> bool {
    let mut keys: Vec<SectionKey> = samples.iter().map(|y| coords.project_unchecked(y)).collect();
    keys.sort_unstable();
    keys.windows(2).all(|w| w[0] != w[1])
}

/// A uniform junta over `J` conditioned on agreeing with `(Y, alpha)`.
///
/// Sections hit by `Y` are pinned to the sample labels; every other section
/// takes its bit from `fresh`.
#[derive(Clone, Debug)]
pub struct ConsistentJuntaOracle<B = KeyedBits> {
    coords: CoordSet,
    pinned: HashMap<SectionKey, bool>,
    fresh: B,
}

/// Draw `h' <- JUNTA_{Y,alpha,J}` with seeded fresh bits.
pub fn make_consistent_junta(
    samples: &[Point],
    labels: &[bool],
    coords: &CoordSet,
    seed: u64,
) -> Result<ConsistentJuntaOracle> {
    ConsistentJuntaOracle::with_bits(samples, labels, coords, KeyedBits::new(seed))
}

impl<B: SectionBits> ConsistentJuntaOracle<B> {
    pub fn with_bits(samples: &[Point], labels: &[bool], coords: &CoordSet, fresh: B) -> Result<Self> {
        if !is_consistent(samples, labels, coords)? {
            return Err(LabError::contract(
                "cannot condition a junta on an inconsistent (Y, alpha, J)",
            ));
        }
        let pinned = samples
            .iter()
            .zip(labels)
            .map(|(y, &a)| (coords.project_unchecked(y), a))
            .collect();
        Ok(ConsistentJuntaOracle {
            coords: coords.clone(),
            pinned,
            fresh,
        })
    }

    pub fn coords(&self) -> &CoordSet {
        &self.coords
    }

    pub fn pinned(&self) -> &HashMap<SectionKey, bool> {
        &self.pinned
    }
}

impl<B: SectionBits> BooleanFunction for ConsistentJuntaOracle<B> {
    fn dimension(&self) -> usize {
        self.coords.dimension()
    }

    fn eval(&self, x: &Point) -> Result<bool> {
        check_dimension(self.coords.dimension(), x)?;
        let z = self.coords.project_unchecked(x);
        Ok(match self.pinned.get(&z) {
            Some(&a) => a,
            None => self.fresh.bit(&z),
        })
    }
}

/// Integer form of the closeness threshold `(0.5 - lambda) n`.
///
/// `None` when the threshold is negative, in which case no point is ever close
/// enough to a support point. A tolerance of `1e-9` absorbs representation
/// error so that e.g. `lambda = 0.2, n = 10` yields 3 rather than 2.
pub fn distance_threshold(n: usize, lambda: f64) -> Option<usize> {
    let t = (0.5 - lambda) * n as f64;
    if t < -1e-9 {
        None
    } else {
        Some((t + 1e-9).floor().max(0.0) as usize)
    }
}

/// Which branch of `g` produced a value.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoBranch {
    /// `x` is the support point with this lexicographic index.
    Support(usize),
    /// `x` is off the support but close to, and in the same section as, this support point.
    Near(usize),
    /// The background junta.
    Background,
}

/// The NO-distribution function `g`.
///
/// On the support it equals the random labelling `gamma`. Off the support it
/// copies the label of the lexicographically first support point sharing its
/// section within distance threshold, and otherwise falls back to the
/// background junta.
#[derive(Clone, Debug)]
pub struct NoOracle {
    support: Arc<SupportSet>,
    coords: CoordSet,
    gamma: Vec<bool>,
    background: JuntaOracle,
    threshold: Option<usize>,
    // Support indices per section, ascending, i.e. in lexicographic order.
    by_section: HashMap<SectionKey, Vec<u32>>,
}

impl NoOracle {
    pub fn new(
        support: Arc<SupportSet>,
        coords: CoordSet,
        gamma: Vec<bool>,
        background: JuntaOracle,
        threshold: Option<usize>,
    ) -> Result<Self> {
        let n = support.dimension();
        if coords.dimension() != n || background.dimension() != n {
            return Err(LabError::Dimension {
                expected: n,
                got: coords.dimension(),
            });
        }
        if gamma.len() != support.len() {
            return Err(LabError::param(format!(
                "gamma has {} bits for a support of size {}",
                gamma.len(),
                support.len()
            )));
        }
        let mut by_section: HashMap<SectionKey, Vec<u32>> = HashMap::new();
        for (i, y) in support.points().iter().enumerate() {
            by_section
                .entry(coords.project_unchecked(y))
                .or_default()
                .push(i as u32);
        }
        Ok(NoOracle {
            support,
            coords,
            gamma,
            background,
            threshold,
            by_section,
        })
    }

    pub fn support(&self) -> &Arc<SupportSet> {
        &self.support
    }

    pub fn coords(&self) -> &CoordSet {
        &self.coords
    }

    /// Labels of the support points in lexicographic order.
    pub fn gamma(&self) -> &[bool] {
        &self.gamma
    }

    pub fn background(&self) -> &JuntaOracle {
        &self.background
    }

    pub fn threshold(&self) -> Option<usize> {
        self.threshold
    }

    /// The branch of `g` that applies at `x`. Assumes `x` has the right dimension.
    pub fn branch(&self, x: &Point) -> NoBranch {
        if let Some(i) = self.support.index_of(x) {
            return NoBranch::Support(i);
        }
        if let Some(t) = self.threshold {
            if let Some(candidates) = self.by_section.get(&self.coords.project_unchecked(x)) {
                for &i in candidates {
                    if x.distance(self.support.get(i as usize)) <= t {
                        return NoBranch::Near(i as usize);
                    }
                }
            }
        }
        NoBranch::Background
    }
}

impl BooleanFunction for NoOracle {
    fn dimension(&self) -> usize {
        self.support.dimension()
    }

    fn eval(&self, x: &Point) -> Result<bool> {
        check_dimension(self.dimension(), x)?;
        Ok(match self.branch(x) {
            NoBranch::Support(i) | NoBranch::Near(i) => self.gamma[i],
            NoBranch::Background => self.background.eval(x)?,
        })
    }
}

/// Largest dimension for which truth tables are dumped.
pub const TRUTH_TABLE_MAX_N: usize = 20;

/// Full truth table in lexicographic point order.
pub fn truth_table(f: &dyn BooleanFunction) -> Result<Vec<bool>> {
    let n = f.dimension();
    if n > TRUTH_TABLE_MAX_N {
        return Err(LabError::Feasibility(format!(
            "truth table for n={n} exceeds the n <= {TRUTH_TABLE_MAX_N} limit"
        )));
    }
    (0..1u64 << n)
        .map(|i| f.eval(&Point::from_index(n, i)))
        .collect()
}

/// Truth table as a string of `0`/`1`, one character per point.
pub fn truth_table_string(f: &dyn BooleanFunction) -> Result<String> {
    Ok(truth_table(f)?
        .into_iter()
        .map(|b| if b { '1' } else { '0' })
        .collect())
}
