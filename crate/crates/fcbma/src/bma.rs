//! BIC-weighted model averaging: posterior weights, averaged predictions,
//! and level co-clustering summaries.

use crate::data::Dataset;
use crate::glm::{FittedModel, GlmError};
use crate::search::{Cutoff, SearchError, SearchResult};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BmaError {
    #[error("ensemble needs at least one model with a finite BIC")]
    EmptyEnsemble,
    #[error("factor {0:?} is not collapsed by every ensemble member")]
    UnknownFactor(String),
    #[error(
        "coefficient averaging is refused: members use different reference blocks, so averaged \
         coefficients are not comparable and de-cluster the very levels the search merged; \
         average predictions instead"
    )]
    CoefficientAveragingRefused,
    #[error(transparent)]
    Glm(#[from] GlmError),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// Posterior model weights from BIC values under a flat model prior:
/// `w_k ∝ exp(-BIC_k / 2)`, computed with a min-shift for overflow safety.
/// Non-finite BICs (rejected candidates) receive weight zero.
pub fn posterior_weights(bics: &[f64]) -> Vec<f64> {
    let min = bics
        .iter()
        .copied()
        .filter(|b| b.is_finite())
        .fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return vec![0.0; bics.len()];
    }
    let raw: Vec<f64> = bics
        .iter()
        .map(|&b| {
            if b.is_finite() {
                (-(b - min) / 2.0).exp()
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// A ranked set of fitted models with normalized posterior weights.
#[derive(Debug, Clone)]
pub struct Ensemble {
    models: Vec<FittedModel>,
    weights: Vec<f64>,
}

impl Ensemble {
    /// Builds an ensemble from models, sorting by ascending BIC and
    /// normalizing weights over the members. Members with non-finite BIC
    /// are dropped.
    pub fn from_models(models: Vec<FittedModel>) -> Result<Self, BmaError> {
        let mut models: Vec<FittedModel> =
            models.into_iter().filter(|m| m.bic.is_finite()).collect();
        if models.is_empty() {
            return Err(BmaError::EmptyEnsemble);
        }
        models.sort_by(|a, b| {
            a.bic
                .partial_cmp(&b.bic)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.scheme.key().cmp(&b.scheme.key()))
        });
        let weights = posterior_weights(&models.iter().map(|m| m.bic).collect::<Vec<_>>());
        Ok(Ensemble { models, weights })
    }

    /// Ensemble of the search's ranked models truncated by `cutoff`;
    /// weights are renormalized over the kept members.
    pub fn from_search(result: &SearchResult, cutoff: &Cutoff) -> Result<Self, BmaError> {
        let kept = result.top_k(cutoff)?;
        Self::from_models(kept.into_iter().cloned().collect())
    }

    pub fn models(&self) -> &[FittedModel] {
        &self.models
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Weighted average of member predictions, row by row. Only predictions
    /// are averaged, never coefficients.
    pub fn averaged_prediction(&self, newdata: &Dataset) -> Result<Vec<f64>, BmaError> {
        let mut out = vec![0.0; newdata.n_rows()];
        for (model, &weight) in self.models.iter().zip(&self.weights) {
            let pred = model.predict(newdata)?;
            for (acc, p) in out.iter_mut().zip(pred) {
                *acc += weight * p;
            }
        }
        Ok(out)
    }

    /// Explicitly unsupported; see [`BmaError::CoefficientAveragingRefused`].
    pub fn averaged_coefficients(&self) -> Result<Vec<f64>, BmaError> {
        Err(BmaError::CoefficientAveragingRefused)
    }

    /// Posterior probability that each pair of the factor's levels shares a
    /// block, under the ensemble weights.
    pub fn coclustering(&self, factor: &str) -> Result<SimilarityMatrix, BmaError> {
        let spec = self.models[0]
            .template()
            .factor(factor)
            .ok_or_else(|| BmaError::UnknownFactor(factor.to_string()))?;
        let n = spec.levels.len();
        let mut matrix = vec![0.0; n * n];
        for (model, &weight) in self.models.iter().zip(&self.weights) {
            let p = model
                .scheme
                .get(factor)
                .ok_or_else(|| BmaError::UnknownFactor(factor.to_string()))?;
            for a in 0..n {
                for b in 0..n {
                    if p.same_block(a, b) {
                        matrix[a * n + b] += weight;
                    }
                }
            }
        }
        // exact unit diagonal regardless of weight rounding
        for a in 0..n {
            matrix[a * n + a] = 1.0;
        }
        Ok(SimilarityMatrix {
            factor: factor.to_string(),
            levels: spec.levels.clone(),
            values: matrix,
        })
    }

    /// Posterior probability that the factor stays in the model, i.e. the
    /// total weight of members that do not collapse it to a single block.
    pub fn averaged_occurrence(&self, factor: &str) -> Result<f64, BmaError> {
        if self.models[0].template().factor(factor).is_none() {
            return Err(BmaError::UnknownFactor(factor.to_string()));
        }
        let mut mass = 0.0;
        for (model, &weight) in self.models.iter().zip(&self.weights) {
            let p = model
                .scheme
                .get(factor)
                .ok_or_else(|| BmaError::UnknownFactor(factor.to_string()))?;
            if p.n_blocks() >= 2 {
                mass += weight;
            }
        }
        Ok(mass)
    }
}

/// Pairwise co-clustering probabilities of one factor's levels.
#[derive(Debug, Clone)]
pub struct SimilarityMatrix {
    pub factor: String,
    pub levels: Vec<String>,
    values: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn n_levels(&self) -> usize {
        self.levels.len()
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a * self.levels.len() + b]
    }

    /// Dense CSV: header row of level names, one row per level.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "level")?;
        for l in &self.levels {
            write!(w, ",{l}")?;
        }
        writeln!(w)?;
        for (a, l) in self.levels.iter().enumerate() {
            write!(w, "{l}")?;
            for b in 0..self.levels.len() {
                write!(w, ",{:.6}", self.get(a, b))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    /// Long format for external plotting: one `(level_a, level_b, prob)`
    /// record per pair.
    pub fn write_long<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "level_a,level_b,probability")?;
        for (a, la) in self.levels.iter().enumerate() {
            for (b, lb) in self.levels.iter().enumerate() {
                writeln!(w, "{la},{lb},{:.6}", self.get(a, b))?;
            }
        }
        Ok(())
    }
}
