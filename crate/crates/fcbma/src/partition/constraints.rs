//! Pairwise and ordinal restrictions on admissible partitions.

use super::{Partition, PartitionError};
use serde::{Deserialize, Serialize};

/// Restrictions on which partitions of a factor are admissible.
///
/// `must_link` pairs are forced into the same block, `cannot_link` pairs into
/// different blocks, and `consecutive_only` restricts blocks to runs of
/// adjacent levels (ordinal collapsing). Feasibility is checked at
/// construction: after taking the transitive closure of `must_link` (and, in
/// consecutive mode, filling the index interval each linked group spans), no
/// `cannot_link` pair may end up linked.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintSet {
    must_link: Vec<(usize, usize)>,
    cannot_link: Vec<(usize, usize)>,
    consecutive_only: bool,
}

impl ConstraintSet {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn new(
        must_link: impl IntoIterator<Item = (usize, usize)>,
        cannot_link: impl IntoIterator<Item = (usize, usize)>,
        consecutive_only: bool,
    ) -> Result<Self, PartitionError> {
        let norm = |it: &mut Vec<(usize, usize)>| {
            for p in it.iter_mut() {
                if p.0 > p.1 {
                    *p = (p.1, p.0);
                }
            }
            it.sort_unstable();
            it.dedup();
        };
        let mut must: Vec<_> = must_link.into_iter().collect();
        let mut cannot: Vec<_> = cannot_link.into_iter().collect();
        norm(&mut must);
        norm(&mut cannot);
        for &(a, b) in must.iter().chain(cannot.iter()) {
            if a == b {
                return Err(PartitionError::InfeasibleConstraints(format!(
                    "pair ({a}, {a}) links a level with itself"
                )));
            }
            let _ = b;
        }
        let set = ConstraintSet {
            must_link: must,
            cannot_link: cannot,
            consecutive_only,
        };
        set.check_feasible()?;
        Ok(set)
    }

    pub fn consecutive() -> Self {
        ConstraintSet {
            consecutive_only: true,
            ..Default::default()
        }
    }

    pub fn is_empty(&self) -> bool {
        self.must_link.is_empty() && self.cannot_link.is_empty() && !self.consecutive_only
    }

    pub fn must_link(&self) -> &[(usize, usize)] {
        &self.must_link
    }

    pub fn cannot_link(&self) -> &[(usize, usize)] {
        &self.cannot_link
    }

    pub fn consecutive_only(&self) -> bool {
        self.consecutive_only
    }

    pub fn satisfied_by(&self, p: &Partition) -> bool {
        self.must_link.iter().all(|&(a, b)| p.same_block(a, b))
            && self.cannot_link.iter().all(|&(a, b)| !p.same_block(a, b))
            && (!self.consecutive_only || p.is_consecutive())
    }

    /// Largest level index mentioned by any pair, if any.
    pub(crate) fn max_level_mentioned(&self) -> Option<usize> {
        self.must_link
            .iter()
            .chain(self.cannot_link.iter())
            .map(|&(_, b)| b)
            .max()
    }

    pub(crate) fn check_feasible(&self) -> Result<(), PartitionError> {
        let n = self.max_level_mentioned().map_or(0, |m| m + 1);
        if n == 0 {
            return Ok(());
        }
        let groups = self.closed_groups(n);
        let mut group_of = vec![0usize; n];
        for (g, members) in groups.iter().enumerate() {
            for &m in members {
                group_of[m] = g;
            }
        }
        for &(a, b) in &self.cannot_link {
            if group_of[a] == group_of[b] {
                return Err(PartitionError::InfeasibleConstraints(format!(
                    "levels {} and {} are must-linked but also cannot-linked",
                    a + 1,
                    b + 1
                )));
            }
        }
        Ok(())
    }

    /// Groups of levels forced together, ordered by smallest member.
    ///
    /// In consecutive mode a linked pair drags in every level between it, so
    /// groups are closed to full index intervals before being returned.
    pub(crate) fn closed_groups(&self, n: usize) -> Vec<Vec<usize>> {
        let mut parent: Vec<usize> = (0..n).collect();
        fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        let union = |parent: &mut Vec<usize>, a: usize, b: usize| {
            let (ra, rb) = (find(parent, a), find(parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        };
        for &(a, b) in &self.must_link {
            union(&mut parent, a, b);
        }
        if self.consecutive_only {
            // Interval closure: repeat until no group spans a gap.
            loop {
                let mut changed = false;
                let mut lo = vec![usize::MAX; n];
                let mut hi = vec![0usize; n];
                for i in 0..n {
                    let r = find(&mut parent, i);
                    lo[r] = lo[r].min(i);
                    hi[r] = hi[r].max(i);
                }
                for i in 0..n {
                    let r = find(&mut parent, i);
                    for j in lo[r]..=hi[r] {
                        if find(&mut parent, j) != r {
                            union(&mut parent, r, j);
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
        }
        let mut groups: Vec<Vec<usize>> = Vec::new();
        let mut root_to_group: Vec<Option<usize>> = vec![None; n];
        for i in 0..n {
            let r = find(&mut parent, i);
            match root_to_group[r] {
                Some(g) => groups[g].push(i),
                None => {
                    root_to_group[r] = Some(groups.len());
                    groups.push(vec![i]);
                }
            }
        }
        groups
    }
}
