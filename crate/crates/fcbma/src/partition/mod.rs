//! Set partitions of factor levels, encoded as restricted growth strings.
//!
//! A partition of the levels `{0, .., n-1}` is stored as a code vector where
//! `codes[i]` is the 1-based block index of level `i`. The canonical form is
//! the restricted growth string (RGS): blocks are numbered by order of first
//! occurrence, so `codes[0] == 1` and `codes[i] <= 1 + max(codes[..i])`.
//! `(1)(23)(45)` over five levels is `[1, 2, 2, 3, 3]`, printed as `12233`.

mod constraints;
mod space;
mod text;

pub use constraints::ConstraintSet;
pub use space::{PartitionIter, PartitionSpace};

use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

/// Hard cap on levels per factor; block codes are stored as `u8`.
pub const MAX_LEVELS: usize = 255;

/// Largest `n` for which `bell(n)` fits in a `u128`.
pub const BELL_MAX_N: usize = 39;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PartitionError {
    #[error("partition codes must be non-empty")]
    EmptyCodes,
    #[error("{n} levels exceeds the supported maximum of {MAX_LEVELS}")]
    TooManyLevels { n: usize },
    #[error("bell({n}) overflows exact 128-bit arithmetic (max n = {BELL_MAX_N})")]
    BellOverflow { n: usize },
    #[error("partition has {got} levels, expected {expected}")]
    LevelCountMismatch { expected: usize, got: usize },
    #[error("level index {level} out of range for {n} levels")]
    LevelOutOfRange { level: usize, n: usize },
    #[error("infeasible constraint set: {0}")]
    InfeasibleConstraints(String),
    #[error("cannot parse partition from {input:?}: {reason}")]
    ParseError { input: String, reason: String },
    #[error("partition {0} does not satisfy the space's constraints")]
    NotInSpace(String),
    #[error("space of {n} levels with {size} partitions is too large to enumerate")]
    EnumerationTooLarge { n: usize, size: u128 },
}

/// A canonical set partition of `n` factor levels.
///
/// Values of this type are always in restricted-growth form; construction
/// canonicalizes arbitrary block labelings.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Partition {
    codes: Vec<u8>,
}

impl Partition {
    /// Canonicalizes an arbitrary block labeling into the unique RGS
    /// denoting the same partition. Blocks are renumbered 1, 2, 3, .. by
    /// order of first occurrence; idempotent on already-canonical input.
    pub fn from_raw(raw: &[usize]) -> Result<Self, PartitionError> {
        if raw.is_empty() {
            return Err(PartitionError::EmptyCodes);
        }
        if raw.len() > MAX_LEVELS {
            return Err(PartitionError::TooManyLevels { n: raw.len() });
        }
        let mut seen: Vec<usize> = Vec::new();
        let mut codes = Vec::with_capacity(raw.len());
        for &r in raw {
            let block = match seen.iter().position(|&s| s == r) {
                Some(i) => i + 1,
                None => {
                    seen.push(r);
                    seen.len()
                }
            };
            codes.push(block as u8);
        }
        Ok(Partition { codes })
    }

    /// The finest partition: every level in its own block.
    pub fn identity(n: usize) -> Result<Self, PartitionError> {
        if n == 0 {
            return Err(PartitionError::EmptyCodes);
        }
        if n > MAX_LEVELS {
            return Err(PartitionError::TooManyLevels { n });
        }
        Ok(Partition {
            codes: (1..=n as u8).collect(),
        })
    }

    /// The coarsest partition: all levels merged into one block.
    pub fn single_block(n: usize) -> Result<Self, PartitionError> {
        if n == 0 {
            return Err(PartitionError::EmptyCodes);
        }
        if n > MAX_LEVELS {
            return Err(PartitionError::TooManyLevels { n });
        }
        Ok(Partition { codes: vec![1; n] })
    }

    pub(crate) fn from_canonical_codes(codes: Vec<u8>) -> Self {
        debug_assert!(is_rgs(&codes));
        Partition { codes }
    }

    pub fn n_levels(&self) -> usize {
        self.codes.len()
    }

    pub fn n_blocks(&self) -> usize {
        *self.codes.iter().max().expect("non-empty") as usize
    }

    /// 1-based block index of a 0-based level.
    pub fn block_of(&self, level: usize) -> usize {
        self.codes[level] as usize
    }

    pub fn codes(&self) -> &[u8] {
        &self.codes
    }

    pub fn same_block(&self, a: usize, b: usize) -> bool {
        self.codes[a] == self.codes[b]
    }

    /// Blocks as lists of 0-based level indices, in block order.
    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_blocks()];
        for (level, &c) in self.codes.iter().enumerate() {
            out[c as usize - 1].push(level);
        }
        out
    }

    /// True when every block is a run of adjacent levels.
    pub fn is_consecutive(&self) -> bool {
        // In an RGS, run-blocks show up as codes that only ever step by
        // staying or opening a new block, and never revisit an old one.
        for i in 1..self.codes.len() {
            let prev_max = self.codes[..i].iter().max().copied().unwrap();
            if self.codes[i] != self.codes[i - 1] && self.codes[i] != prev_max + 1 {
                return false;
            }
        }
        true
    }

    /// All distinct partitions reachable by moving exactly one level into a
    /// different existing block or into a new singleton block. The input
    /// itself is excluded and results are canonical, deduplicated and sorted.
    pub fn neighbors(&self) -> Vec<Partition> {
        let n = self.n_levels();
        let k = self.n_blocks() as u8;
        let mut block_size = vec![0usize; k as usize + 1];
        for &c in &self.codes {
            block_size[c as usize] += 1;
        }
        let mut out: Vec<Partition> = Vec::new();
        let mut raw: Vec<usize> = self.codes.iter().map(|&c| c as usize).collect();
        for level in 0..n {
            let orig = raw[level];
            for target in 1..=k + 1 {
                let target = target as usize;
                if target == orig {
                    continue;
                }
                // Moving a singleton to a fresh block is a no-op.
                if target == k as usize + 1 && block_size[orig] == 1 {
                    continue;
                }
                raw[level] = target;
                let q = Partition::from_raw(&raw).expect("same length");
                if q != *self {
                    out.push(q);
                }
            }
            raw[level] = orig;
        }
        out.sort_unstable();
        out.dedup();
        out
    }
}

impl fmt::Debug for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Partition({self})")
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.set_notation())
    }
}

impl FromStr for Partition {
    type Err = PartitionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        text::parse(s)
    }
}

impl Serialize for Partition {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        ser.serialize_str(&self.set_notation())
    }
}

impl<'de> Deserialize<'de> for Partition {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

pub(crate) fn is_rgs(codes: &[u8]) -> bool {
    if codes.first() != Some(&1) {
        return false;
    }
    let mut max = 1u8;
    for &c in &codes[1..] {
        if c == 0 || c > max + 1 {
            return false;
        }
        max = max.max(c);
    }
    true
}

/// Number of set partitions of an `n`-element set, computed exactly with the
/// Bell triangle recurrence. `bell(0) == 1` by the empty-set convention.
pub fn bell(n: usize) -> Result<u128, PartitionError> {
    if n > BELL_MAX_N {
        return Err(PartitionError::BellOverflow { n });
    }
    if n == 0 {
        return Ok(1);
    }
    let mut row: Vec<u128> = vec![1];
    for _ in 1..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for &v in &row {
            let last = *next.last().unwrap();
            next.push(
                last.checked_add(v)
                    .ok_or(PartitionError::BellOverflow { n })?,
            );
        }
        row = next;
    }
    Ok(*row.last().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(raw: &[usize]) -> Partition {
        Partition::from_raw(raw).unwrap()
    }

    #[test]
    fn canonicalize_renumbers_by_first_occurrence() {
        assert_eq!(
            p(&[1, 1, 1, 2, 1, 4, 5, 3, 6]).codes(),
            &[1, 1, 1, 2, 1, 3, 4, 5, 6]
        );
        assert_eq!(p(&[1, 2, 2, 3, 3]).codes(), &[1, 2, 2, 3, 3]);
        assert_eq!(p(&[2, 1, 1, 3, 2]).codes(), &[1, 2, 2, 3, 1]);
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let a = p(&[7, 7, 2, 9, 2]);
        let again = Partition::from_raw(&a.codes().iter().map(|&c| c as usize).collect::<Vec<_>>())
            .unwrap();
        assert_eq!(a, again);
    }

    #[test]
    fn empty_input_rejected() {
        assert_eq!(Partition::from_raw(&[]), Err(PartitionError::EmptyCodes));
    }

    #[test]
    fn bell_matches_known_sequence() {
        let expected: [u128; 11] = [1, 1, 2, 5, 15, 52, 203, 877, 4140, 21147, 115975];
        for (n, &want) in expected.iter().enumerate() {
            assert_eq!(bell(n).unwrap(), want, "bell({n})");
        }
        assert_eq!(bell(5).unwrap(), 52);
        assert_eq!(bell(9).unwrap(), 21147);
    }

    #[test]
    fn bell_overflow_is_signaled() {
        assert!(bell(BELL_MAX_N).is_ok());
        assert_eq!(
            bell(BELL_MAX_N + 1),
            Err(PartitionError::BellOverflow { n: BELL_MAX_N + 1 })
        );
    }

    #[test]
    fn neighbors_of_identity_5_match_all_single_moves() {
        let singles = Partition::identity(5).unwrap();
        let got: Vec<String> = singles.neighbors().iter().map(|q| q.graycode()).collect();
        let mut want = vec![
            "11234", "12134", "12314", "12341", "12234", "12324", "12342", "12334", "12343",
            "12344",
        ];
        want.sort_unstable();
        assert_eq!(got, want);
    }

    #[test]
    fn neighbors_of_single_block_split_each_level_out() {
        let merged = Partition::single_block(5).unwrap();
        let nb = merged.neighbors();
        assert_eq!(nb.len(), 5);
        for q in &nb {
            assert_eq!(q.n_blocks(), 2);
            let sizes: Vec<usize> = q.blocks().iter().map(Vec::len).collect();
            assert!(sizes.contains(&1) && sizes.contains(&4));
        }
    }

    #[test]
    fn neighbors_of_singleton_partition_is_empty() {
        assert!(Partition::single_block(1).unwrap().neighbors().is_empty());
    }

    #[test]
    fn neighbor_relation_is_symmetric_small() {
        // every q in neighbors(p) has p in neighbors(q), over all partitions of 5
        let space = PartitionSpace::unconstrained(5).unwrap();
        let all: Vec<Partition> = space.iter().collect();
        for a in &all {
            for b in a.neighbors() {
                assert!(
                    b.neighbors().contains(a),
                    "asymmetric neighbors: {a} vs {b}"
                );
            }
        }
    }

    #[test]
    fn consecutive_detection() {
        assert!(p(&[1, 1, 2, 2, 3]).is_consecutive());
        assert!(p(&[1, 2, 3, 4, 5]).is_consecutive());
        assert!(p(&[1, 1, 1, 1, 1]).is_consecutive());
        assert!(!p(&[1, 2, 1]).is_consecutive());
        assert!(!p(&[1, 2, 2, 3, 1]).is_consecutive());
    }
}
