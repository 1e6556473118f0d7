//! The space of admissible partitions of a factor's levels.

use super::{bell, is_rgs, ConstraintSet, Partition, PartitionError};
use rand::Rng;
use std::sync::OnceLock;

/// Node budget for counting a constrained space by traversal. Spaces whose
/// unconstrained bound exceeds this refuse to report an exact size.
const COUNT_NODE_CEILING: u128 = 200_000_000;

/// All partitions of `n` levels satisfying a [`ConstraintSet`].
///
/// Must-linked levels are contracted into super-levels up front, so
/// enumeration, counting, sampling and neighbor moves all operate on the
/// reduced space and only ever produce admissible partitions.
#[derive(Debug, Clone)]
pub struct PartitionSpace {
    n: usize,
    constraints: ConstraintSet,
    /// Super-levels (must-link groups plus singletons), ordered by smallest
    /// member; interval-closed in consecutive mode.
    groups: Vec<Vec<usize>>,
    group_of: Vec<usize>,
    /// Cannot-link pairs lifted to super-level indices, `a < b`.
    super_cannot: Vec<(usize, usize)>,
    size: OnceLock<Result<u128, PartitionError>>,
}

impl PartitionSpace {
    pub fn new(n: usize, constraints: ConstraintSet) -> Result<Self, PartitionError> {
        if n == 0 {
            return Err(PartitionError::EmptyCodes);
        }
        if n > super::MAX_LEVELS {
            return Err(PartitionError::TooManyLevels { n });
        }
        if let Some(max) = constraints.max_level_mentioned() {
            if max >= n {
                return Err(PartitionError::LevelOutOfRange { level: max, n });
            }
        }
        constraints.check_feasible()?;
        let groups = constraints.closed_groups(n);
        let mut group_of = vec![0usize; n];
        for (g, members) in groups.iter().enumerate() {
            for &m in members {
                group_of[m] = g;
            }
        }
        let mut super_cannot: Vec<(usize, usize)> = constraints
            .cannot_link()
            .iter()
            .map(|&(a, b)| {
                let (ga, gb) = (group_of[a], group_of[b]);
                (ga.min(gb), ga.max(gb))
            })
            .collect();
        super_cannot.sort_unstable();
        super_cannot.dedup();
        if super_cannot.iter().any(|&(a, b)| a == b) {
            // closed_groups + check_feasible should have caught this
            return Err(PartitionError::InfeasibleConstraints(
                "cannot-link pair inside a must-link group".into(),
            ));
        }
        Ok(PartitionSpace {
            n,
            constraints,
            groups,
            group_of,
            super_cannot,
            size: OnceLock::new(),
        })
    }

    pub fn unconstrained(n: usize) -> Result<Self, PartitionError> {
        Self::new(n, ConstraintSet::none())
    }

    pub fn n_levels(&self) -> usize {
        self.n
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    /// Number of super-levels after must-link contraction.
    pub fn n_super_levels(&self) -> usize {
        self.groups.len()
    }

    pub fn contains(&self, p: &Partition) -> bool {
        p.n_levels() == self.n && self.constraints.satisfied_by(p)
    }

    /// Exact count of admissible partitions, computed lazily and cached.
    ///
    /// Closed forms: `bell(m)` over the `m` super-levels when there are no
    /// cannot-link pairs, `2^(m-1)` in consecutive mode. Otherwise the space
    /// is counted by the same pruned traversal that enumeration uses.
    pub fn size(&self) -> Result<u128, PartitionError> {
        self.size.get_or_init(|| self.compute_size()).clone()
    }

    fn compute_size(&self) -> Result<u128, PartitionError> {
        let m = self.groups.len();
        if self.super_cannot.is_empty() {
            return if self.constraints.consecutive_only() {
                if m - 1 >= 127 {
                    Err(PartitionError::EnumerationTooLarge {
                        n: self.n,
                        size: u128::MAX,
                    })
                } else {
                    Ok(1u128 << (m - 1))
                }
            } else {
                bell(m)
            };
        }
        let bound = if self.constraints.consecutive_only() {
            1u128.checked_shl(m as u32 - 1).unwrap_or(u128::MAX)
        } else {
            bell(m).unwrap_or(u128::MAX)
        };
        if bound > COUNT_NODE_CEILING {
            return Err(PartitionError::EnumerationTooLarge {
                n: self.n,
                size: bound,
            });
        }
        Ok(self.iter().count() as u128)
    }

    /// Lexicographic enumeration of every admissible partition.
    pub fn iter(&self) -> PartitionIter<'_> {
        PartitionIter::new(self)
    }

    /// Uniform-ish random admissible partition: each super-level picks
    /// uniformly among its admissible block assignments, left to right.
    /// Deterministic for a fixed RNG stream.
    pub fn random(&self, rng: &mut impl Rng) -> Partition {
        let m = self.groups.len();
        let mut codes: Vec<u8> = vec![1];
        let mut max = 1u8;
        for i in 1..m {
            let mut cands: Vec<u8> = Vec::new();
            if self.constraints.consecutive_only() {
                if self.candidate_ok(&codes, i, codes[i - 1]) {
                    cands.push(codes[i - 1]);
                }
                cands.push(max + 1);
            } else {
                for c in 1..=max + 1 {
                    if self.candidate_ok(&codes, i, c) {
                        cands.push(c);
                    }
                }
            }
            let pick = cands[rng.random_range(0..cands.len())];
            codes.push(pick);
            max = max.max(pick);
        }
        self.expand(&codes)
    }

    /// Constraint-respecting neighborhood of `p`: single-move transitions on
    /// super-levels (a must-link group moves as a unit), filtered by
    /// cannot-link and consecutive restrictions. Sorted and deduplicated.
    pub fn neighbors(&self, p: &Partition) -> Result<Vec<Partition>, PartitionError> {
        if !self.contains(p) {
            return Err(PartitionError::NotInSpace(p.to_string()));
        }
        let sp = self.contract(p);
        let m = sp.len();
        let k = *sp.iter().max().unwrap();
        let mut block_size = vec![0usize; k as usize + 1];
        for &c in &sp {
            block_size[c as usize] += 1;
        }
        let mut out: Vec<Partition> = Vec::new();
        let mut raw: Vec<usize> = sp.iter().map(|&c| c as usize).collect();
        for g in 0..m {
            let orig = raw[g];
            for target in 1..=k as usize + 1 {
                if target == orig || (target == k as usize + 1 && block_size[orig] == 1) {
                    continue;
                }
                raw[g] = target;
                let cand = Partition::from_raw(&raw).expect("non-empty");
                raw[g] = orig;
                if cand.codes() == sp.as_slice() {
                    continue;
                }
                if self.constraints.consecutive_only() && !cand.is_consecutive() {
                    continue;
                }
                if self
                    .super_cannot
                    .iter()
                    .any(|&(a, b)| cand.same_block(a, b))
                {
                    continue;
                }
                out.push(self.expand(cand.codes()));
            }
        }
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// One uniformly chosen constraint-respecting neighbor, or `None` when
    /// `p` has no admissible neighbors (single-level factors).
    pub fn random_neighbor(
        &self,
        p: &Partition,
        rng: &mut impl Rng,
    ) -> Result<Option<Partition>, PartitionError> {
        let nb = self.neighbors(p)?;
        if nb.is_empty() {
            return Ok(None);
        }
        let i = rng.random_range(0..nb.len());
        Ok(Some(nb[i].clone()))
    }

    /// Projects an admissible partition onto super-level codes.
    pub(crate) fn contract(&self, p: &Partition) -> Vec<u8> {
        self.groups.iter().map(|g| p.codes()[g[0]]).collect()
    }

    /// Repairs an arbitrary partition into this space: must-link groups are
    /// merged onto their smallest member's block, then each violated
    /// cannot-link pair moves the later super-level to a fresh block, then
    /// consecutive mode re-cuts blocks at run boundaries.
    pub fn repair(&self, p: &Partition) -> Result<Partition, PartitionError> {
        if p.n_levels() != self.n {
            return Err(PartitionError::LevelCountMismatch {
                expected: self.n,
                got: p.n_levels(),
            });
        }
        let mut sp: Vec<usize> = self.groups.iter().map(|g| p.block_of(g[0])).collect();
        let mut next_fresh = sp.iter().max().copied().unwrap_or(0) + 1;
        loop {
            let mut violated = None;
            for &(a, b) in &self.super_cannot {
                if sp[a] == sp[b] {
                    violated = Some(b);
                    break;
                }
            }
            match violated {
                Some(b) => {
                    sp[b] = next_fresh;
                    next_fresh += 1;
                }
                None => break,
            }
        }
        if self.constraints.consecutive_only() {
            // re-cut at value changes so blocks become runs
            let mut run = Vec::with_capacity(sp.len());
            let mut block = 1usize;
            run.push(block);
            for i in 1..sp.len() {
                if sp[i] != sp[i - 1] {
                    block += 1;
                }
                run.push(block);
            }
            sp = run;
            // a re-cut can merge a cannot-linked pair only if the pair was
            // already equal, which the loop above cleared
            debug_assert!(self.super_cannot.iter().all(|&(a, b)| sp[a] != sp[b]));
        }
        let canon = Partition::from_raw(&sp)?;
        let out = self.expand(canon.codes());
        debug_assert!(self.contains(&out));
        Ok(out)
    }

    fn candidate_ok(&self, codes: &[u8], i: usize, c: u8) -> bool {
        self.super_cannot
            .iter()
            .all(|&(a, b)| b != i || codes[a] != c)
    }

    pub(crate) fn expand(&self, super_codes: &[u8]) -> Partition {
        let mut codes = vec![0u8; self.n];
        for (level, &g) in self.group_of.iter().enumerate() {
            codes[level] = super_codes[g];
        }
        debug_assert!(is_rgs(&codes), "expansion broke canonical form");
        Partition::from_canonical_codes(codes)
    }
}

/// Lazy lexicographic enumeration of a [`PartitionSpace`].
///
/// Single-consumer; to split work across threads, enumerate index ranges of
/// a materialized list instead.
pub struct PartitionIter<'a> {
    space: &'a PartitionSpace,
    codes: Vec<u8>,
    maxes: Vec<u8>,
    state: IterState,
}

enum IterState {
    Fresh,
    Running,
    Done,
}

impl<'a> PartitionIter<'a> {
    fn new(space: &'a PartitionSpace) -> Self {
        let m = space.groups.len();
        PartitionIter {
            space,
            codes: vec![0; m],
            maxes: vec![0; m],
            state: IterState::Fresh,
        }
    }

    /// Smallest valid candidate at `i` strictly greater than `after`
    /// (0 = no lower bound).
    fn next_candidate(&self, i: usize, after: u8) -> Option<u8> {
        let cap = self.maxes[i - 1] + 1;
        if self.space.constraints.consecutive_only() {
            let prev = self.codes[i - 1];
            if prev > after && self.space.candidate_ok(&self.codes, i, prev) {
                return Some(prev);
            }
            if cap > after && cap != prev {
                return Some(cap);
            }
            None
        } else {
            (after + 1..=cap).find(|&c| self.space.candidate_ok(&self.codes, i, c))
        }
    }

    /// Fills positions `from..` with minimal valid codes. A fresh block is
    /// always admissible, so this cannot dead-end.
    fn fill_min(&mut self, from: usize) {
        for i in from..self.codes.len() {
            if i == 0 {
                self.codes[0] = 1;
                self.maxes[0] = 1;
            } else {
                let c = self.next_candidate(i, 0).expect("fresh block admissible");
                self.codes[i] = c;
                self.maxes[i] = self.maxes[i - 1].max(c);
            }
        }
    }

    fn advance(&mut self) -> bool {
        let m = self.codes.len();
        for i in (1..m).rev() {
            if let Some(c) = self.next_candidate(i, self.codes[i]) {
                self.codes[i] = c;
                self.maxes[i] = self.maxes[i - 1].max(c);
                self.fill_min(i + 1);
                return true;
            }
        }
        false
    }
}

impl Iterator for PartitionIter<'_> {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        match self.state {
            IterState::Fresh => {
                self.fill_min(0);
                self.state = IterState::Running;
            }
            IterState::Running => {
                if !self.advance() {
                    self.state = IterState::Done;
                    return None;
                }
            }
            IterState::Done => return None,
        }
        Some(self.space.expand(&self.codes))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(n: usize, c: ConstraintSet) -> PartitionSpace {
        PartitionSpace::new(n, c).unwrap()
    }

    #[test]
    fn unconstrained_counts_match_bell() {
        for n in 1..=10 {
            let s = PartitionSpace::unconstrained(n).unwrap();
            assert_eq!(s.size().unwrap(), bell(n).unwrap(), "n = {n}");
            assert_eq!(s.iter().count() as u128, bell(n).unwrap());
        }
    }

    #[test]
    fn enumeration_order_and_bounds_for_five_levels() {
        let s = PartitionSpace::unconstrained(5).unwrap();
        let all: Vec<Partition> = s.iter().collect();
        assert_eq!(all.len(), 52);
        assert_eq!(all.first().unwrap().graycode(), "11111");
        assert_eq!(all.last().unwrap().graycode(), "12345");
        let mut sorted = all.clone();
        sorted.sort_unstable();
        assert_eq!(all, sorted, "lexicographic order");
        sorted.dedup();
        assert_eq!(sorted.len(), 52, "no duplicates");
    }

    #[test]
    fn cannot_link_count_matches_published_reduction() {
        let s = space(8, ConstraintSet::new([], [(2, 3)], false).unwrap());
        assert_eq!(s.size().unwrap(), 3263); // 4140 - 877
        assert!(s.iter().all(|p| !p.same_block(2, 3)));
    }

    #[test]
    fn must_link_count_contracts_to_bell_of_seven() {
        let s = space(8, ConstraintSet::new([(2, 3)], [], false).unwrap());
        assert_eq!(s.size().unwrap(), 877);
        assert!(s.iter().all(|p| p.same_block(2, 3)));
    }

    #[test]
    fn mixed_constraints_count() {
        let s = space(8, ConstraintSet::new([(1, 2)], [(3, 6)], false).unwrap());
        assert_eq!(s.size().unwrap(), 674);
    }

    #[test]
    fn consecutive_space_is_compositions() {
        let s = space(5, ConstraintSet::consecutive());
        assert_eq!(s.size().unwrap(), 16); // 2^(5-1)
        let all: Vec<Partition> = s.iter().collect();
        assert_eq!(all.len(), 16);
        assert!(all.iter().all(Partition::is_consecutive));
    }

    #[test]
    fn counts_match_brute_force_filter_up_to_eight() {
        let cases = [
            ConstraintSet::new([(0, 4)], [(1, 5), (2, 3)], false).unwrap(),
            ConstraintSet::new([(1, 2), (5, 6)], [(0, 7)], false).unwrap(),
            ConstraintSet::new([], [(0, 1)], true).unwrap(),
            ConstraintSet::new([(3, 4)], [], true).unwrap(),
        ];
        for c in cases {
            for n in 8..=8 {
                let s = space(n, c.clone());
                let brute = PartitionSpace::unconstrained(n)
                    .unwrap()
                    .iter()
                    .filter(|p| c.satisfied_by(p))
                    .count() as u128;
                assert_eq!(s.size().unwrap(), brute, "constraints {c:?}");
                assert_eq!(s.iter().count() as u128, brute);
            }
        }
    }

    #[test]
    fn random_partition_is_admissible_and_deterministic() {
        use rand::SeedableRng;
        let c = ConstraintSet::new([(0, 1)], [(2, 3)], false).unwrap();
        let s = space(6, c);
        for seed in 0..20 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = s.random(&mut rng);
            assert!(s.contains(&p));
            let mut rng2 = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            assert_eq!(p, s.random(&mut rng2), "determinism for seed {seed}");
        }
        let cons = space(5, ConstraintSet::consecutive());
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            assert!(cons.random(&mut rng).is_consecutive());
        }
    }

    #[test]
    fn unconstrained_neighbors_match_pure_neighbors() {
        let s = PartitionSpace::unconstrained(5).unwrap();
        for p in s.iter() {
            assert_eq!(s.neighbors(&p).unwrap(), p.neighbors());
        }
    }

    #[test]
    fn constrained_neighbors_stay_admissible_and_connect_linked_groups() {
        let c = ConstraintSet::new([(0, 1), (2, 3)], [], false).unwrap();
        let s = space(4, c);
        // (01)(23) and (0123) must be mutually reachable via group moves
        let split = Partition::from_raw(&[1, 1, 2, 2]).unwrap();
        let merged = Partition::from_raw(&[1, 1, 1, 1]).unwrap();
        let nb = s.neighbors(&split).unwrap();
        assert!(nb.contains(&merged));
        let nb2 = s.neighbors(&merged).unwrap();
        assert!(nb2.contains(&split));
        for q in nb.iter().chain(nb2.iter()) {
            assert!(s.contains(q));
        }
    }

    #[test]
    fn neighbors_rejects_foreign_partition() {
        let s = space(4, ConstraintSet::new([(0, 1)], [], false).unwrap());
        let bad = Partition::from_raw(&[1, 2, 3, 4]).unwrap();
        assert!(matches!(
            s.neighbors(&bad),
            Err(PartitionError::NotInSpace(_))
        ));
    }

    #[test]
    fn repair_enforces_all_constraint_kinds() {
        let c = ConstraintSet::new([(0, 1)], [(2, 3)], false).unwrap();
        let s = space(5, c);
        let broken = Partition::from_raw(&[1, 2, 3, 3, 1]).unwrap();
        let fixed = s.repair(&broken).unwrap();
        assert!(s.contains(&fixed));
        assert!(fixed.same_block(0, 1));
        assert!(!fixed.same_block(2, 3));

        let cons = space(6, ConstraintSet::consecutive());
        let zig = Partition::from_raw(&[1, 2, 1, 2, 3, 1]).unwrap();
        let fixed = cons.repair(&zig).unwrap();
        assert!(fixed.is_consecutive());
    }

    #[test]
    fn single_level_space_is_trivial() {
        let s = PartitionSpace::unconstrained(1).unwrap();
        assert_eq!(s.size().unwrap(), 1);
        let all: Vec<Partition> = s.iter().collect();
        assert_eq!(all.len(), 1);
        assert!(s.neighbors(&all[0]).unwrap().is_empty());
    }
}
