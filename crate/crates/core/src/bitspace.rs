//! Points of the Boolean cube, coordinate sets, projections and the basic
//! uniform samplers.
//!
//! A [`Point`] is a packed bit string. Coordinate 1 is the most significant bit
//! of the first word, so comparing the word vectors compares points
//! lexicographically. Coordinates are 1-based in every external format and
//! 0-based in the Rust API.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::RngCore;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use smallvec::SmallVec;

use crate::error::{LabError, Result};
use crate::seed::{rng_from_seed, LabRng};

pub(crate) type Words = SmallVec<[u64; 4]>;

#[inline]
fn word_count(len: usize) -> usize {
    len.div_ceil(64)
}

#[inline]
fn tail_mask(len: usize) -> u64 {
    match len % 64 {
        0 => u64::MAX,
        r => u64::MAX << (64 - r),
    }
}

/// A point of `{0,1}^n`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Point {
    // `len` first so the derived order only ever compares words of equal-length points.
    len: usize,
    words: Words,
}

impl Point {
    pub fn zeros(len: usize) -> Self {
        Point {
            len,
            words: SmallVec::from_elem(0, word_count(len)),
        }
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut p = Point::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            p.set(i, b);
        }
        p
    }

    /// The `index`-th point of `{0,1}^len` in lexicographic order.
    ///
    /// Panics if `len > 64` or `index >= 2^len`.
    pub fn from_index(len: usize, index: u64) -> Self {
        assert!(len <= 64, "from_index supports len <= 64");
        assert!(len == 64 || index < (1u64 << len), "index out of range");
        let mut p = Point::zeros(len);
        if len > 0 {
            p.words[0] = index << (64 - len);
        }
        p
    }

    /// Inverse of [`Point::from_index`]. `None` when `len > 64`.
    pub fn to_index(&self) -> Option<u64> {
        match self.len {
            0 => Some(0),
            1..=64 => Some(self.words[0] >> (64 - self.len)),
            _ => None,
        }
    }

    /// A uniformly random point.
    pub fn random<R: RngCore + ?Sized>(len: usize, rng: &mut R) -> Self {
        let mut words: Words = (0..word_count(len)).map(|_| rng.next_u64()).collect();
        if let Some(last) = words.last_mut() {
            *last &= tail_mask(len);
        }
        Point { len, words }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Bit at 0-based coordinate `i`.
    #[inline]
    pub fn get(&self, i: usize) -> bool {
        debug_assert!(i < self.len);
        (self.words[i / 64] >> (63 - i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, bit: bool) {
        debug_assert!(i < self.len);
        let mask = 1u64 << (63 - i % 64);
        if bit {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn flip(&mut self, i: usize) {
        debug_assert!(i < self.len);
        self.words[i / 64] ^= 1u64 << (63 - i % 64);
    }

    /// Copy with coordinate `i` flipped.
    pub fn flipped(&self, i: usize) -> Self {
        let mut p = self.clone();
        p.flip(i);
        p
    }

    /// Bitwise select: `mask ? self : other`, coordinate by coordinate.
    pub fn select(&self, other: &Point, mask: &Point) -> Point {
        debug_assert!(self.len == other.len && self.len == mask.len);
        let words = self
            .words
            .iter()
            .zip(other.words.iter())
            .zip(mask.words.iter())
            .map(|((a, b), m)| (a & m) | (b & !m))
            .collect();
        Point {
            len: self.len,
            words,
        }
    }

    #[inline]
    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn bits(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.len).map(move |i| self.get(i))
    }

    /// Hamming distance without the length check.
    #[inline]
    pub fn distance(&self, other: &Point) -> usize {
        debug_assert_eq!(self.len, other.len);
        self.words
            .iter()
            .zip(other.words.iter())
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: String = self.bits().map(|b| if b { '1' } else { '0' }).collect();
        f.write_str(&s)
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Point({self})")
    }
}

impl FromStr for Point {
    type Err = LabError;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(LabError::param(format!("invalid bit {other:?} in point"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Point::from_bits(&bits))
    }
}

impl Serialize for Point {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Hamming distance `|{i : x_i != y_i}|`.
pub fn hamming_distance(x: &Point, y: &Point) -> Result<usize> {
    if x.len() != y.len() {
        return Err(LabError::Dimension {
            expected: x.len(),
            got: y.len(),
        });
    }
    Ok(x.distance(y))
}

/// A set of coordinates of `[n]`, stored strictly increasing.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CoordSet {
    n: usize,
    coords: Vec<usize>,
}

impl CoordSet {
    /// Build from 0-based coordinates. Order is irrelevant; duplicates are an error.
    pub fn new(n: usize, mut coords: Vec<usize>) -> Result<Self> {
        coords.sort_unstable();
        if coords.windows(2).any(|w| w[0] == w[1]) {
            return Err(LabError::param("coordinate set has duplicate indices"));
        }
        if let Some(&max) = coords.last() {
            if max >= n {
                return Err(LabError::Dimension {
                    expected: n,
                    got: max + 1,
                });
            }
        }
        Ok(CoordSet { n, coords })
    }

    /// Build from 1-based coordinates, as written in external formats.
    pub fn from_one_based(n: usize, coords: &[usize]) -> Result<Self> {
        let zero_based = coords
            .iter()
            .map(|&c| {
                c.checked_sub(1)
                    .ok_or_else(|| LabError::param("coordinates are 1-based"))
            })
            .collect::<Result<Vec<_>>>()?;
        CoordSet::new(n, zero_based)
    }

    /// All of `[n]`.
    pub fn full(n: usize) -> Self {
        CoordSet {
            n,
            coords: (0..n).collect(),
        }
    }

    /// Parse the comma-separated 1-based form, e.g. `"1,3,4"`.
    pub fn parse(n: usize, s: &str) -> Result<Self> {
        let coords = s
            .split(',')
            .map(str::trim)
            .filter(|t| !t.is_empty())
            .map(|t| {
                t.parse::<usize>()
                    .map_err(|e| LabError::param(format!("bad coordinate {t:?}: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        CoordSet::from_one_based(n, &coords)
    }

    /// A uniformly random `k`-subset of `[n]`.
    pub fn random<R: RngCore + ?Sized>(n: usize, k: usize, rng: &mut R) -> Result<Self> {
        if k == 0 || k > n {
            return Err(LabError::param(format!(
                "coordinate set size k={k} must satisfy 1 <= k <= n={n}"
            )));
        }
        let mut coords = index::sample(rng, n, k).into_vec();
        coords.sort_unstable();
        Ok(CoordSet { n, coords })
    }

    /// Ambient dimension.
    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// 0-based coordinates in increasing order.
    pub fn coords(&self) -> &[usize] {
        &self.coords
    }

    pub fn contains(&self, coord: usize) -> bool {
        self.coords.binary_search(&coord).is_ok()
    }

    pub fn one_based(&self) -> Vec<usize> {
        self.coords.iter().map(|c| c + 1).collect()
    }

    /// Coordinates of `[n]` not in the set.
    pub fn complement(&self) -> Vec<usize> {
        (0..self.n).filter(|c| !self.contains(*c)).collect()
    }

    /// Projection without the range check.
    #[inline]
    pub fn project_unchecked(&self, x: &Point) -> SectionKey {
        let mut key = Point::zeros(self.coords.len());
        for (i, &c) in self.coords.iter().enumerate() {
            if x.get(c) {
                key.set(i, true);
            }
        }
        SectionKey(key)
    }
}

impl fmt::Display for CoordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.coords.iter().map(|c| (c + 1).to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for CoordSet {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl fmt::Debug for CoordSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CoordSet(n={}, {{{self}}})", self.n)
    }
}

/// The projection `x_J`, indexed by the coordinates of `J` in increasing order.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SectionKey(Point);

impl SectionKey {
    pub fn from_point(bits: Point) -> Self {
        SectionKey(bits)
    }

    pub fn bits(&self) -> &Point {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SectionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Debug for SectionKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SectionKey({})", self.0)
    }
}

/// `x_J`.
pub fn project(x: &Point, coords: &CoordSet) -> Result<SectionKey> {
    if let Some(&max) = coords.coords().last() {
        if max >= x.len() {
            return Err(LabError::Dimension {
                expected: max + 1,
                got: x.len(),
            });
        }
    }
    Ok(coords.project_unchecked(x))
}

pub fn sample_coord_set(n: usize, k: usize, seed: u64) -> Result<CoordSet> {
    CoordSet::random(n, k, &mut rng_from_seed(seed))
}

/// `m` distinct points of `{0,1}^n` in lexicographic order.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct SupportSet {
    n: usize,
    points: Vec<Point>,
}

/// Whether `{0,1}^n` has at least `m` points.
pub fn cube_holds(n: usize, m: usize) -> bool {
    n >= usize::BITS as usize - 1 || m <= (1usize << n)
}

impl SupportSet {
    pub fn new(n: usize, mut points: Vec<Point>) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| p.len() != n) {
            return Err(LabError::Dimension {
                expected: n,
                got: p.len(),
            });
        }
        points.sort_unstable();
        if points.windows(2).any(|w| w[0] == w[1]) {
            return Err(LabError::param("support contains duplicate points"));
        }
        Ok(SupportSet { n, points })
    }

    /// A uniformly random `m`-subset of `{0,1}^n`, by rejecting repeated draws.
    pub fn random(n: usize, m: usize, rng: &mut LabRng) -> Result<Self> {
        if m == 0 {
            return Err(LabError::param("support size m must be at least 1"));
        }
        if !cube_holds(n, m) {
            return Err(LabError::param(format!(
                "support size m={m} exceeds 2^n for n={n}"
            )));
        }
        // The first m draws are taken as a batch, deduplicated, and topped up one
        // draw at a time. The result is the set of the first m distinct values
        // of the draw sequence, exactly as with one-at-a-time rejection.
        let mut points: Vec<Point> = (0..m).map(|_| Point::random(n, rng)).collect();
        points.sort_unstable();
        points.dedup();
        while points.len() < m {
            let p = Point::random(n, rng);
            if let Err(pos) = points.binary_search(&p) {
                points.insert(pos, p);
            }
        }
        Ok(SupportSet { n, points })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points in lexicographic order.
    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn get(&self, i: usize) -> &Point {
        &self.points[i]
    }

    /// Position of `x` in the lexicographic order, if present.
    pub fn index_of(&self, x: &Point) -> Option<usize> {
        self.points.binary_search(x).ok()
    }

    pub fn contains(&self, x: &Point) -> bool {
        self.index_of(x).is_some()
    }
}

pub fn sample_support(n: usize, m: usize, seed: u64) -> Result<SupportSet> {
    SupportSet::random(n, m, &mut rng_from_seed(seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(s: &str) -> Point {
        s.parse().unwrap()
    }

    #[test]
    fn hamming_examples() {
        assert_eq!(hamming_distance(&p("0000"), &p("0000")).unwrap(), 0);
        assert_eq!(hamming_distance(&p("1010"), &p("0101")).unwrap(), 4);
        assert_eq!(hamming_distance(&p("10110"), &p("10011")).unwrap(), 2);
    }

    #[test]
    fn hamming_rejects_length_mismatch() {
        let err = hamming_distance(&p("000"), &p("0000")).unwrap_err();
        assert!(matches!(err, LabError::Dimension { .. }));
    }

    #[test]
    fn projection_examples() {
        let x = p("10110");
        let j13 = CoordSet::from_one_based(5, &[1, 3]).unwrap();
        let j25 = CoordSet::from_one_based(5, &[2, 5]).unwrap();
        assert_eq!(project(&x, &j13).unwrap().to_string(), "11");
        assert_eq!(project(&x, &j25).unwrap().to_string(), "00");
        assert_eq!(project(&x, &CoordSet::full(5)).unwrap().bits(), &x);
    }

    #[test]
    fn projection_out_of_range() {
        let j = CoordSet::from_one_based(8, &[1, 7]).unwrap();
        assert!(matches!(
            project(&p("10110"), &j),
            Err(LabError::Dimension { .. })
        ));
    }

    #[test]
    fn coord_set_formats() {
        let j = CoordSet::parse(10, "4, 1,9").unwrap();
        assert_eq!(j.coords(), &[0, 3, 8]);
        assert_eq!(j.to_string(), "1,4,9");
        assert!(CoordSet::parse(10, "0").is_err());
        assert!(CoordSet::parse(10, "11").is_err());
        assert!(CoordSet::parse(10, "2,2").is_err());
    }

    #[test]
    fn coord_set_sampling_edges() {
        assert_eq!(sample_coord_set(5, 5, 99).unwrap().one_based(), vec![1, 2, 3, 4, 5]);
        assert!(matches!(
            sample_coord_set(5, 6, 1),
            Err(LabError::Parameter(_))
        ));
    }

    #[test]
    fn coord_set_uniform_on_two_outcomes() {
        // Exact law: {1} and {2} each with probability 1/2.
        let trials = 20_000u64;
        let hits = (0..trials)
            .filter(|&s| sample_coord_set(2, 1, s).unwrap().one_based() == vec![1])
            .count();
        let freq = hits as f64 / trials as f64;
        let sigma = (0.25 / trials as f64).sqrt();
        assert!((freq - 0.5).abs() <= 3.0 * sigma, "freq = {freq}");
    }

    #[test]
    fn support_full_cube_and_errors() {
        let s = sample_support(2, 4, 5).unwrap();
        let got: Vec<String> = s.points().iter().map(|x| x.to_string()).collect();
        assert_eq!(got, vec!["00", "01", "10", "11"]);
        assert!(matches!(sample_support(2, 5, 5), Err(LabError::Parameter(_))));
    }

    #[test]
    fn support_is_sorted_distinct_and_reproducible() {
        let s = sample_support(8, 10, 17).unwrap();
        assert_eq!(s.len(), 10);
        assert!(s.points().windows(2).all(|w| w[0] < w[1]));
        assert_eq!(s, sample_support(8, 10, 17).unwrap());
    }

    #[test]
    fn lexicographic_order_matches_index_order() {
        for n in [3usize, 5, 12, 64] {
            let a = Point::from_index(n, 3);
            let b = Point::from_index(n, 5);
            assert!(a < b);
            assert_eq!(b.to_index(), Some(5));
        }
        // Coordinate 1 dominates.
        assert!(p("0111") < p("1000"));
        // Across a word boundary.
        let mut x = Point::zeros(70);
        let mut y = Point::zeros(70);
        x.set(69, true);
        y.set(3, true);
        assert!(x < y);
    }

    #[test]
    fn birthday_collision_rate_within_bound() {
        // r draws from a set of size N collide w.p. at most r^2/(2N).
        let (r, n_bits, trials) = (8usize, 8usize, 20_000u64);
        let size = 1usize << n_bits;
        let mut rng = rng_from_seed(3);
        let collisions = (0..trials)
            .filter(|_| {
                let mut draws: Vec<u64> = (0..r)
                    .map(|_| Point::random(n_bits, &mut rng).to_index().unwrap())
                    .collect();
                draws.sort_unstable();
                draws.dedup();
                draws.len() != r
            })
            .count();
        let freq = collisions as f64 / trials as f64;
        let bound = (r * r) as f64 / (2 * size) as f64;
        let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
        assert!(freq <= bound + 3.0 * sigma, "freq {freq} bound {bound}");
    }

    fn point_strategy(n: usize) -> impl Strategy<Value = Point> {
        proptest::collection::vec(any::<bool>(), n).prop_map(|b| Point::from_bits(&b))
    }

    proptest! {
        #[test]
        fn hamming_is_a_metric(
            (x, y, z) in (1usize..150).prop_flat_map(|n| (point_strategy(n), point_strategy(n), point_strategy(n)))
        ) {
            let dxy = hamming_distance(&x, &y).unwrap();
            prop_assert_eq!(dxy, hamming_distance(&y, &x).unwrap());
            prop_assert_eq!(dxy == 0, x == y);
            let dxz = hamming_distance(&x, &z).unwrap();
            let dzy = hamming_distance(&z, &y).unwrap();
            prop_assert!(dxy <= dxz + dzy);
        }

        #[test]
        fn distinct_projection_implies_positive_distance(
            (x, y, picks) in (2usize..100).prop_flat_map(|n| (
                point_strategy(n),
                point_strategy(n),
                proptest::collection::btree_set(0..n, 1..=n),
            ))
        ) {
            let j = CoordSet::new(x.len(), picks.into_iter().collect()).unwrap();
            if project(&x, &j).unwrap() != project(&y, &j).unwrap() {
                prop_assert!(hamming_distance(&x, &y).unwrap() >= 1);
            }
        }

        #[test]
        fn point_string_round_trip(x in (0usize..200).prop_flat_map(point_strategy)) {
            let back: Point = x.to_string().parse().unwrap();
            prop_assert_eq!(back, x);
        }
    }
}
