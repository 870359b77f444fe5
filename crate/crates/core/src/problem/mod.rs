//! Constellation partitioning problem: satellite bitmasks, the implicit
//! disjointness graph, coverage lookup and partition scoring.
//!
//! A group of satellites is a [`SatSet`], a bitmask where bit `b` stands for
//! satellite `b + 1`. Two groups are adjacent in the implicit graph exactly
//! when their masks do not intersect, so a k-clique is a set of k mutually
//! disjoint groups.

mod files;

use std::collections::HashMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::oracle::binomial_u128;

pub use files::{read_instance, write_coverage_csv, write_instance, COVERAGE_FILE, META_FILE};

/// Largest constellation representable by a [`SatSet`].
pub const MAX_SATS: usize = 64;

/// Efficacy range of the synthetic per-satellite coverage model.
pub const EFFICACY_RANGE: (f64, f64) = (0.3, 0.8);

/// Set of satellites encoded as a bitmask; bit 0 is satellite 1.
#[derive(Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SatSet(u64);

impl SatSet {
    pub const EMPTY: SatSet = SatSet(0);

    pub const fn from_bits(bits: u64) -> Self {
        SatSet(bits)
    }

    /// Builds a set from 1-based satellite numbers.
    pub fn from_sats<I: IntoIterator<Item = usize>>(sats: I) -> Self {
        let mut bits = 0u64;
        for s in sats {
            assert!((1..=MAX_SATS).contains(&s), "satellite {s} out of range");
            bits |= 1 << (s - 1);
        }
        SatSet(bits)
    }

    /// All satellites `1..=n`.
    pub fn full(n: usize) -> Self {
        assert!(n <= MAX_SATS);
        if n == MAX_SATS {
            SatSet(u64::MAX)
        } else {
            SatSet((1u64 << n) - 1)
        }
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    pub const fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub const fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub const fn contains(self, sat: usize) -> bool {
        sat >= 1 && sat <= MAX_SATS && self.0 & (1 << (sat - 1)) != 0
    }

    pub const fn with(self, sat: usize) -> Self {
        SatSet(self.0 | 1 << (sat - 1))
    }

    pub const fn without(self, sat: usize) -> Self {
        SatSet(self.0 & !(1 << (sat - 1)))
    }

    pub const fn union(self, other: SatSet) -> Self {
        SatSet(self.0 | other.0)
    }

    pub const fn intersection(self, other: SatSet) -> Self {
        SatSet(self.0 & other.0)
    }

    pub const fn difference(self, other: SatSet) -> Self {
        SatSet(self.0 & !other.0)
    }

    pub const fn is_disjoint(self, other: SatSet) -> bool {
        self.0 & other.0 == 0
    }

    pub const fn is_subset(self, other: SatSet) -> bool {
        self.0 & !other.0 == 0
    }

    /// True when no satellite numbered above `n` is present.
    pub const fn fits(self, n: usize) -> bool {
        n >= MAX_SATS || self.0 >> n == 0
    }

    /// Member satellites (1-based), ascending.
    pub fn sats(self) -> impl Iterator<Item = usize> {
        let mut rest = self.0;
        std::iter::from_fn(move || {
            if rest == 0 {
                None
            } else {
                let b = rest.trailing_zeros() as usize;
                rest &= rest - 1;
                Some(b + 1)
            }
        })
    }

    /// Right-to-left binary string of width `width`: the last character is
    /// satellite 1.
    pub fn to_bitstring(self, width: usize) -> String {
        let width = width.max(64 - self.0.leading_zeros() as usize);
        (0..width)
            .rev()
            .map(|b| if self.0 >> b & 1 == 1 { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Debug for SatSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "SatSet({self})")
    }
}

impl fmt::Display for SatSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, s) in self.sats().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("}")
    }
}

/// Edge predicate of the implicit graph.
pub fn edge_exists(a: SatSet, b: SatSet) -> bool {
    a.is_disjoint(b)
}

/// Parses a right-to-left bitstring (`"1001"` is satellites 1 and 4).
pub fn parse_satset(bitstring: &str) -> Result<SatSet> {
    let s = bitstring.trim();
    if s.len() > MAX_SATS {
        return Err(Error::domain(format!(
            "bitstring of length {} exceeds {MAX_SATS} satellites",
            s.len()
        )));
    }
    let mut bits = 0u64;
    for c in s.chars() {
        bits <<= 1;
        match c {
            '0' => {}
            '1' => bits |= 1,
            other => {
                return Err(Error::domain(format!(
                    "non-binary character {other:?} in bitstring {s:?}"
                )))
            }
        }
    }
    Ok(SatSet(bits))
}

pub fn format_satset(set: SatSet, n_sats: usize) -> String {
    set.to_bitstring(n_sats)
}

/// A candidate sub-constellation and its coverage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Vertex {
    pub sats: SatSet,
    pub weight: f64,
}

impl Vertex {
    pub fn new(sats: SatSet, weight: f64) -> Self {
        Vertex { sats, weight }
    }
}

/// Product-form coverage: each satellite independently covers the target a
/// fraction `c_s` of the time, so a group covers `1 - prod(1 - c_s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticCoverage {
    seed: u64,
    efficacies: Vec<f64>,
}

impl SyntheticCoverage {
    pub fn generate(n_sats: usize, seed: u64) -> Result<Self> {
        if n_sats == 0 || n_sats > MAX_SATS {
            return Err(Error::domain(format!(
                "n_sats must be in 1..={MAX_SATS}, got {n_sats}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = EFFICACY_RANGE;
        let efficacies = (0..n_sats).map(|_| rng.random_range(lo..hi)).collect();
        Ok(SyntheticCoverage { seed, efficacies })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Per-satellite efficacies, index 0 is satellite 1.
    pub fn efficacies(&self) -> &[f64] {
        &self.efficacies
    }

    pub fn coverage(&self, set: SatSet) -> f64 {
        let miss: f64 = set.sats().map(|s| 1.0 - self.efficacies[s - 1]).product();
        1.0 - miss
    }
}

/// Where group coverages come from.
#[derive(Debug, Clone)]
pub enum CoverageModel {
    /// Total model, every group can be scored.
    Synthetic(SyntheticCoverage),
    /// Explicit lookup table, optionally backed by a synthetic model for
    /// groups the table does not list.
    Table {
        entries: HashMap<SatSet, f64>,
        fallback: Option<SyntheticCoverage>,
    },
}

impl CoverageModel {
    pub fn lookup(&self, set: SatSet) -> Result<f64> {
        if set.is_empty() {
            return Ok(0.0);
        }
        match self {
            CoverageModel::Synthetic(m) => Ok(m.coverage(set)),
            CoverageModel::Table { entries, fallback } => match entries.get(&set) {
                Some(&w) => Ok(w),
                None => fallback
                    .as_ref()
                    .map(|m| m.coverage(set))
                    .ok_or(Error::Lookup(set)),
            },
        }
    }

    /// True when every group can be scored.
    pub fn is_total(&self) -> bool {
        match self {
            CoverageModel::Synthetic(_) => true,
            CoverageModel::Table { fallback, .. } => fallback.is_some(),
        }
    }

    pub fn synthetic(&self) -> Option<&SyntheticCoverage> {
        match self {
            CoverageModel::Synthetic(m) => Some(m),
            CoverageModel::Table { fallback, .. } => fallback.as_ref(),
        }
    }
}

/// One constellation to be split into `k_groups` sub-constellations.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pub n_sats: usize,
    pub k_groups: usize,
    pub min_group: usize,
    pub max_group: usize,
    pub coverage: CoverageModel,
}

pub const DEFAULT_MIN_GROUP: usize = 3;

impl ProblemInstance {
    pub fn new(
        n_sats: usize,
        k_groups: usize,
        min_group: usize,
        max_group: usize,
        coverage: CoverageModel,
    ) -> Result<Self> {
        if n_sats == 0 || n_sats > MAX_SATS {
            return Err(Error::domain(format!(
                "n_sats must be in 1..={MAX_SATS}, got {n_sats}"
            )));
        }
        if k_groups == 0 || k_groups > n_sats {
            return Err(Error::domain(format!(
                "k_groups must be in 1..={n_sats}, got {k_groups}"
            )));
        }
        if min_group == 0 || min_group > max_group || max_group > n_sats {
            return Err(Error::domain(format!(
                "group sizes must satisfy 1 <= min_group <= max_group <= n_sats, got {min_group}..{max_group} with n_sats {n_sats}"
            )));
        }
        if let CoverageModel::Table { entries, .. } = &coverage {
            for (&set, &w) in entries {
                if set.is_empty() || !set.fits(n_sats) {
                    return Err(Error::domain(format!(
                        "coverage table key {} is not a group of {n_sats} satellites",
                        set.to_bitstring(n_sats)
                    )));
                }
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::domain(format!("coverage {w} of {set} outside [0, 1]")));
                }
            }
        }
        if let Some(m) = coverage.synthetic() {
            if m.efficacies().len() != n_sats {
                return Err(Error::domain("synthetic model size differs from n_sats"));
            }
        }
        Ok(ProblemInstance {
            n_sats,
            k_groups,
            min_group,
            max_group,
            coverage,
        })
    }

    /// Instance backed by the synthetic coverage model.
    pub fn synthetic(
        n_sats: usize,
        k_groups: usize,
        min_group: usize,
        max_group: usize,
        seed: u64,
    ) -> Result<Self> {
        let model = SyntheticCoverage::generate(n_sats, seed)?;
        Self::new(n_sats, k_groups, min_group, max_group, CoverageModel::Synthetic(model))
    }

    /// Nine satellites, five candidate triples `A..E`, k = 3. Only two
    /// 3-cliques exist: `ABE` (mean 0.7467) and `ACD` (mean 0.56).
    /// `B = {4,6,7}` and `D = {2,7,9}` share satellite 7.
    pub fn nine_satellite_example() -> Self {
        let entries = NINE_SATELLITE_VERTICES
            .iter()
            .map(|&(_, sats, w)| (SatSet::from_sats(sats.iter().copied()), w))
            .collect();
        Self::new(
            9,
            3,
            3,
            3,
            CoverageModel::Table {
                entries,
                fallback: None,
            },
        )
        .expect("example instance is well-formed")
    }

    pub fn with_k(mut self, k_groups: usize) -> Result<Self> {
        if k_groups == 0 || k_groups > self.n_sats {
            return Err(Error::domain(format!(
                "k_groups must be in 1..={}, got {k_groups}",
                self.n_sats
            )));
        }
        self.k_groups = k_groups;
        Ok(self)
    }

    pub fn with_group_sizes(mut self, min_group: usize, max_group: usize) -> Result<Self> {
        if min_group == 0 || min_group > max_group || max_group > self.n_sats {
            return Err(Error::domain(format!(
                "invalid group size range {min_group}..{max_group}"
            )));
        }
        self.min_group = min_group;
        self.max_group = max_group;
        Ok(self)
    }

    pub fn all_sats(&self) -> SatSet {
        SatSet::full(self.n_sats)
    }

    pub fn coverage(&self, set: SatSet) -> Result<f64> {
        self.coverage.lookup(set)
    }

    /// Every group with `min_group..=max_group` members, ascending by mask.
    pub fn enumerate_vertices(&self) -> Result<Vec<Vertex>> {
        let mut sets = Vec::with_capacity(self.vertex_count() as usize);
        for size in self.min_group..=self.max_group {
            sets.extend(masks_of_size(self.n_sats, size));
        }
        sets.sort_unstable();
        sets.into_iter()
            .map(|s| self.coverage(s).map(|w| Vertex::new(s, w)))
            .collect()
    }

    /// Expected length of [`enumerate_vertices`](Self::enumerate_vertices).
    pub fn vertex_count(&self) -> u128 {
        (self.min_group..=self.max_group)
            .map(|g| binomial_u128(self.n_sats as u64, g as u64))
            .sum()
    }

    /// The candidate vertex universe: the full enumeration when coverage is
    /// total, otherwise the table's own entries within the size bounds.
    pub fn candidate_vertices(&self) -> Result<Vec<Vertex>> {
        match &self.coverage {
            CoverageModel::Table {
                entries,
                fallback: None,
            } => {
                let mut v: Vec<Vertex> = entries
                    .iter()
                    .filter(|(s, _)| (self.min_group..=self.max_group).contains(&s.len()))
                    .map(|(&s, &w)| Vertex::new(s, w))
                    .collect();
                v.sort_unstable_by_key(|v| v.sats);
                Ok(v)
            }
            _ => self.enumerate_vertices(),
        }
    }

    /// Mean coverage of the partition's groups.
    pub fn partition_coverage(&self, p: &Partition) -> Result<f64> {
        mean_coverage(&p.groups, |s| self.coverage(s))
    }

    pub fn partition_coverage_sum(&self, p: &Partition) -> Result<f64> {
        p.groups.iter().map(|&g| self.coverage(g)).sum()
    }
}

/// Labels, members and coverages of [`ProblemInstance::nine_satellite_example`].
pub const NINE_SATELLITE_VERTICES: [(&str, &[usize], f64); 5] = [
    ("A", &[1, 3, 5], 0.62),
    ("B", &[4, 6, 7], 0.63),
    ("C", &[4, 6, 8], 0.91),
    ("D", &[2, 7, 9], 0.15),
    ("E", &[2, 8, 9], 0.99),
];

pub(crate) fn mean_coverage(
    groups: &[SatSet],
    mut lookup: impl FnMut(SatSet) -> Result<f64>,
) -> Result<f64> {
    if groups.is_empty() {
        return Err(Error::domain("empty partition has no coverage"));
    }
    let mut sum = 0.0;
    for &g in groups {
        sum += lookup(g)?;
    }
    Ok(sum / groups.len() as f64)
}

/// All `size`-subsets of `n` satellites in ascending mask order.
pub fn masks_of_size(n: usize, size: usize) -> impl Iterator<Item = SatSet> {
    // Gosper's hack: next integer with the same popcount.
    let limit: u128 = 1u128 << n;
    let mut cur: u128 = if size == 0 || size > n {
        limit
    } else {
        (1u128 << size) - 1
    };
    let empty_once = size == 0;
    let mut yielded_empty = false;
    std::iter::from_fn(move || {
        if empty_once {
            if yielded_empty {
                return None;
            }
            yielded_empty = true;
            return Some(SatSet::EMPTY);
        }
        if cur >= limit {
            return None;
        }
        let out = SatSet(cur as u64);
        let c = cur & cur.wrapping_neg();
        let r = cur + c;
        cur = (((r ^ cur) >> 2) / c) | r;
        Some(out)
    })
}

/// A candidate assignment of satellites to groups.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Partition {
    pub groups: Vec<SatSet>,
}

/// Why a [`Partition`] is not a legal assignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PartitionDefect {
    WrongGroupCount { expected: usize, found: usize },
    EmptyGroup,
    Overlap(usize),
    Uncovered(usize),
    OutOfRange,
}

impl Partition {
    pub fn new(groups: Vec<SatSet>) -> Self {
        Partition { groups }
    }

    /// Groups sorted by ascending mask.
    pub fn canonical(mut self) -> Self {
        self.groups.sort_unstable();
        self
    }

    pub fn union(&self) -> SatSet {
        self.groups.iter().fold(SatSet::EMPTY, |acc, &g| acc.union(g))
    }

    /// Checks disjointness, coverage of all `n_sats` and the group count.
    pub fn check(&self, n_sats: usize, k_groups: usize) -> std::result::Result<(), PartitionDefect> {
        if self.groups.len() != k_groups {
            return Err(PartitionDefect::WrongGroupCount {
                expected: k_groups,
                found: self.groups.len(),
            });
        }
        let mut seen = SatSet::EMPTY;
        for &g in &self.groups {
            if g.is_empty() {
                return Err(PartitionDefect::EmptyGroup);
            }
            if !g.fits(n_sats) {
                return Err(PartitionDefect::OutOfRange);
            }
            if let Some(s) = g.intersection(seen).sats().next() {
                return Err(PartitionDefect::Overlap(s));
            }
            seen = seen.union(g);
        }
        match SatSet::full(n_sats).difference(seen).sats().next() {
            Some(s) => Err(PartitionDefect::Uncovered(s)),
            None => Ok(()),
        }
    }

    pub fn is_valid(&self, n_sats: usize, k_groups: usize) -> bool {
        self.check(n_sats, k_groups).is_ok()
    }

    /// One right-to-left bitstring per line.
    pub fn to_lines(&self, n_sats: usize) -> String {
        let mut out = String::new();
        for g in &self.groups {
            out.push_str(&g.to_bitstring(n_sats));
            out.push('\n');
        }
        out
    }

    pub fn parse_lines(text: &str) -> Result<Self> {
        let mut groups = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let g = parse_satset(line).map_err(|e| Error::format(i as u64 + 1, e.to_string()))?;
            groups.push(g);
        }
        Ok(Partition { groups })
    }
}
