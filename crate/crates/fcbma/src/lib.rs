//! Level-collapsing model search for frequency/severity GLMs.
//!
//! Categorical rating factors often carry more levels than the data can
//! support. This crate searches the space of set partitions of each factor's
//! levels — exhaustively where feasible, by simulated annealing or a genetic
//! algorithm where not — fitting a Poisson or Gamma GLM per candidate and
//! scoring it by BIC. The best models are blended by BIC-weighted model
//! averaging into ensemble predictions, level co-clustering summaries and
//! ranked reports.

pub mod bma;
pub mod data;
pub mod glm;
pub mod partition;
pub mod scheme;
pub mod search;

pub use bma::{posterior_weights, BmaError, Ensemble, SimilarityMatrix};
pub use data::{DataError, Dataset, DatasetBuilder, FactorColumn};
pub use glm::{apply_scheme, fit, CoefKey, DispersionConvention, Family, FittedModel, GlmError, ModelTemplate};
pub use partition::{bell, ConstraintSet, Partition, PartitionError, PartitionSpace};
pub use scheme::{CollapsingScheme, SchemeError};
pub use search::{
    exhaustive_search, ga_search, sa_search, Cutoff, ExhaustiveConfig, FactorSpace, GAConfig,
    SAConfig, SchemeSpaces, SearchError, SearchResult,
};
