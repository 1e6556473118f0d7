//! A collapsing scheme: one partition per collapsible factor.

use crate::partition::Partition;
use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SchemeError {
    #[error("factor {0:?} appears twice in the scheme")]
    DuplicateFactor(String),
    #[error("scheme has no factor {0:?}")]
    MissingFactor(String),
}

/// One candidate model: an ordered assignment of a [`Partition`] to each
/// collapsible factor. Identifies a point in the product model space; two
/// schemes compare equal iff every factor carries the same canonical
/// partition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CollapsingScheme {
    entries: Vec<(String, Partition)>,
}

impl CollapsingScheme {
    pub fn new(
        entries: impl IntoIterator<Item = (String, Partition)>,
    ) -> Result<Self, SchemeError> {
        let entries: Vec<_> = entries.into_iter().collect();
        let mut seen = std::collections::HashSet::new();
        for (name, _) in &entries {
            if !seen.insert(name.clone()) {
                return Err(SchemeError::DuplicateFactor(name.clone()));
            }
        }
        Ok(CollapsingScheme { entries })
    }

    pub fn get(&self, factor: &str) -> Option<&Partition> {
        self.entries
            .iter()
            .find(|(name, _)| name == factor)
            .map(|(_, p)| p)
    }

    pub fn factors(&self) -> impl Iterator<Item = (&str, &Partition)> {
        self.entries.iter().map(|(n, p)| (n.as_str(), p))
    }

    pub fn partitions(&self) -> impl Iterator<Item = &Partition> {
        self.entries.iter().map(|(_, p)| p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Copy of this scheme with one factor's partition replaced.
    pub fn with_partition(&self, factor: &str, p: Partition) -> Result<Self, SchemeError> {
        let mut entries = self.entries.clone();
        let slot = entries
            .iter_mut()
            .find(|(name, _)| name == factor)
            .ok_or_else(|| SchemeError::MissingFactor(factor.to_string()))?;
        slot.1 = p;
        Ok(CollapsingScheme { entries })
    }

    /// Compact cache key: factor order is fixed by construction, so the
    /// concatenated graycodes identify the scheme.
    pub(crate) fn key(&self) -> Vec<u8> {
        let mut key = Vec::new();
        for (_, p) in &self.entries {
            key.extend_from_slice(p.codes());
            key.push(0);
        }
        key
    }
}

impl fmt::Display for CollapsingScheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, p) in &self.entries {
            if !first {
                f.write_str(" ")?;
            }
            write!(f, "{name}={p}")?;
            first = false;
        }
        Ok(())
    }
}
