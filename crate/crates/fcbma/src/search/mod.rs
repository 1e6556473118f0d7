//! Search over the product space of per-factor partitions.
//!
//! Three strategies share one objective (the BIC of a fitted GLM) and one
//! fit cache: exhaustive enumeration for small spaces, simulated annealing
//! and a genetic algorithm for large ones. Results carry every evaluated
//! scheme so that ensembles can be formed without refitting.

mod evaluator;
mod exhaustive;
mod ga;
mod sa;

pub use evaluator::Evaluator;
pub use exhaustive::{exhaustive_search, ExhaustiveConfig};
pub use ga::{ga_search, GAConfig};
pub use sa::{sa_search, SAConfig};

use crate::glm::{FittedModel, GlmError};
use crate::partition::{Partition, PartitionError, PartitionSpace};
use crate::scheme::CollapsingScheme;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error(
        "product space holds {size} schemes, over the exhaustive ceiling of {ceiling}; \
         use simulated annealing or the genetic algorithm"
    )]
    CeilingExceeded { size: u128, ceiling: u128 },
    #[error("search spaces do not match the template: {0}")]
    SpaceMismatch(String),
    #[error("no candidate model converged")]
    NoFeasibleModel,
}

/// The per-factor search space: either a full constrained partition space or
/// an explicit candidate list (used by staged pipelines that recombine the
/// best partitions found earlier).
#[derive(Debug, Clone)]
pub enum FactorSpace {
    Full(PartitionSpace),
    Candidates(Vec<Partition>),
}

impl FactorSpace {
    pub fn size(&self) -> Result<u128, PartitionError> {
        match self {
            FactorSpace::Full(s) => s.size(),
            FactorSpace::Candidates(c) => Ok(c.len() as u128),
        }
    }

    pub fn n_levels(&self) -> Option<usize> {
        match self {
            FactorSpace::Full(s) => Some(s.n_levels()),
            FactorSpace::Candidates(c) => c.first().map(Partition::n_levels),
        }
    }

    pub fn random(&self, rng: &mut impl Rng) -> Partition {
        match self {
            FactorSpace::Full(s) => s.random(rng),
            FactorSpace::Candidates(c) => c[rng.random_range(0..c.len())].clone(),
        }
    }

    /// One random single-move transition away from `current`, or `None`
    /// when the factor cannot move (one level, or a single candidate).
    pub fn random_move(&self, current: &Partition, rng: &mut impl Rng) -> Option<Partition> {
        match self {
            FactorSpace::Full(s) => s.random_neighbor(current, rng).ok().flatten(),
            FactorSpace::Candidates(c) => {
                let others: Vec<&Partition> = c.iter().filter(|p| *p != current).collect();
                if others.is_empty() {
                    None
                } else {
                    Some(others[rng.random_range(0..others.len())].clone())
                }
            }
        }
    }

    pub fn contains(&self, p: &Partition) -> bool {
        match self {
            FactorSpace::Full(s) => s.contains(p),
            FactorSpace::Candidates(c) => c.contains(p),
        }
    }

    fn movable(&self) -> bool {
        match self {
            FactorSpace::Full(s) => s.n_super_levels() > 1,
            FactorSpace::Candidates(c) => c.len() > 1,
        }
    }
}

/// Named per-factor spaces, aligned with the template's factor order.
#[derive(Debug, Clone)]
pub struct SchemeSpaces {
    factors: Vec<(String, FactorSpace)>,
}

impl SchemeSpaces {
    pub fn new(factors: Vec<(String, FactorSpace)>) -> Self {
        SchemeSpaces { factors }
    }

    /// Full constrained spaces for every factor of a template.
    pub fn from_template(template: &crate::glm::ModelTemplate) -> Result<Self, PartitionError> {
        let mut factors = Vec::with_capacity(template.factors.len());
        for spec in &template.factors {
            let space = PartitionSpace::new(spec.levels.len(), spec.constraints.clone())?;
            factors.push((spec.name.clone(), FactorSpace::Full(space)));
        }
        Ok(SchemeSpaces { factors })
    }

    pub fn factors(&self) -> &[(String, FactorSpace)] {
        &self.factors
    }

    pub fn get(&self, name: &str) -> Option<&FactorSpace> {
        self.factors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, s)| s)
    }

    pub fn product_size(&self) -> Result<u128, PartitionError> {
        let mut total: u128 = 1;
        for (_, space) in &self.factors {
            total = total.saturating_mul(space.size()?);
        }
        Ok(total)
    }

    pub fn random_scheme(&self, rng: &mut impl Rng) -> CollapsingScheme {
        CollapsingScheme::new(
            self.factors
                .iter()
                .map(|(name, space)| (name.clone(), space.random(rng))),
        )
        .expect("unique factor names")
    }

    pub(crate) fn contains(&self, scheme: &CollapsingScheme) -> bool {
        scheme.len() == self.factors.len()
            && self.factors.iter().all(|(name, space)| {
                scheme.get(name).is_some_and(|p| space.contains(p))
            })
    }

    pub(crate) fn movable_indices(&self) -> Vec<usize> {
        self.factors
            .iter()
            .enumerate()
            .filter_map(|(i, (_, s))| s.movable().then_some(i))
            .collect()
    }

    pub(crate) fn validate_against(
        &self,
        template: &crate::glm::ModelTemplate,
    ) -> Result<(), SearchError> {
        if self.factors.len() != template.factors.len() {
            return Err(SearchError::SpaceMismatch(format!(
                "{} spaces for {} template factors",
                self.factors.len(),
                template.factors.len()
            )));
        }
        for ((name, space), spec) in self.factors.iter().zip(&template.factors) {
            if name != &spec.name {
                return Err(SearchError::SpaceMismatch(format!(
                    "space {name:?} does not match template factor {:?}",
                    spec.name
                )));
            }
            if let Some(n) = space.n_levels() {
                if n != spec.levels.len() {
                    return Err(SearchError::SpaceMismatch(format!(
                        "space for {name:?} covers {n} levels, vocabulary has {}",
                        spec.levels.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// A point on the search diagnostics trace.
#[derive(Debug, Clone, Serialize)]
pub struct TracePoint {
    pub step: u64,
    pub restart: Option<u32>,
    pub temperature: Option<f64>,
    pub generation: Option<u32>,
    pub best_bic: f64,
    pub unique_fits: usize,
    pub evaluations: u64,
}

/// Structured progress record emitted on the sequential decision path.
#[derive(Debug, Clone, Serialize)]
pub struct ProgressEvent {
    pub phase: &'static str,
    pub step: u64,
    pub restart: Option<u32>,
    pub temperature: Option<f64>,
    pub generation: Option<u32>,
    pub best_bic: f64,
    pub unique_fits: usize,
    pub evaluations: u64,
}

/// Outcome of one search: the deduplicated fit cache, the best model and a
/// per-iteration diagnostics trace.
#[derive(Debug)]
pub struct SearchResult {
    /// Every evaluated scheme exactly once, in evaluation order; rejected
    /// candidates carry an infinite BIC.
    pub models: Vec<FittedModel>,
    best: Option<usize>,
    pub trace: Vec<TracePoint>,
    /// Objective evaluations including cache hits.
    pub evaluations: u64,
}

impl SearchResult {
    pub fn best(&self) -> Result<&FittedModel, SearchError> {
        self.best
            .map(|i| &self.models[i])
            .ok_or(SearchError::NoFeasibleModel)
    }

    pub fn n_visited(&self) -> usize {
        self.models.len()
    }

    /// Models sorted by ascending BIC, ties broken by scheme key for
    /// determinism. Rejected (non-finite) candidates sort last.
    pub fn ranked(&self) -> Vec<&FittedModel> {
        let mut idx: Vec<usize> = (0..self.models.len()).collect();
        idx.sort_by(|&a, &b| {
            let (ba, bb) = (self.models[a].bic, self.models[b].bic);
            ba.partial_cmp(&bb)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| self.models[a].scheme.key().cmp(&self.models[b].scheme.key()))
        });
        idx.into_iter().map(|i| &self.models[i]).collect()
    }

    /// Ranked models truncated by a cutoff rule.
    pub fn top_k(&self, cutoff: &Cutoff) -> Result<Vec<&FittedModel>, SearchError> {
        if self.models.is_empty() {
            return Err(SearchError::NoFeasibleModel);
        }
        let ranked = self.ranked();
        Ok(cutoff.apply(&ranked))
    }
}

/// Ensemble truncation rule applied to a BIC-ranked model list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule", content = "value")]
pub enum Cutoff {
    /// Keep the best `k` models.
    Count(usize),
    /// Keep the smallest prefix whose posterior mass reaches this fraction.
    MassFraction(f64),
    /// Occam's window: keep models whose posterior weight is within a factor
    /// `c` of the best model's weight.
    OccamWindow(f64),
}

impl Cutoff {
    pub(crate) fn apply<'a>(&self, ranked: &[&'a FittedModel]) -> Vec<&'a FittedModel> {
        let finite: Vec<&FittedModel> = ranked
            .iter()
            .copied()
            .filter(|m| m.bic.is_finite())
            .collect();
        if finite.is_empty() {
            return Vec::new();
        }
        match *self {
            Cutoff::Count(k) => finite.into_iter().take(k.max(1)).collect(),
            Cutoff::MassFraction(target) => {
                let weights = crate::bma::posterior_weights(
                    &finite.iter().map(|m| m.bic).collect::<Vec<_>>(),
                );
                let mut mass = 0.0;
                let mut keep = Vec::new();
                for (m, w) in finite.into_iter().zip(weights) {
                    keep.push(m);
                    mass += w;
                    if mass >= target {
                        break;
                    }
                }
                keep
            }
            Cutoff::OccamWindow(c) => {
                let best = finite[0].bic;
                let limit = 2.0 * c.max(1.0).ln();
                finite
                    .into_iter()
                    .take_while(|m| m.bic - best <= limit)
                    .collect()
            }
        }
    }
}
