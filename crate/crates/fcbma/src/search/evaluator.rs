//! Shared objective: fit cache keyed on canonical schemes.

use super::SearchError;
use crate::data::Dataset;
use crate::glm::{fit, FittedModel, GlmError, ModelTemplate};
use crate::scheme::CollapsingScheme;
use std::collections::HashMap;
use std::sync::Arc;

/// Fits schemes on demand and never refits a scheme it has seen.
///
/// Candidates whose design is rank-deficient (an empty block after
/// collapsing) are rejected: they enter the cache with an infinite BIC so
/// search layers rank them last without refitting. Any other fit error is a
/// hard failure.
pub struct Evaluator<'a> {
    data: &'a Dataset,
    template: Arc<ModelTemplate>,
    index: HashMap<Vec<u8>, usize>,
    models: Vec<FittedModel>,
    evaluations: u64,
}

impl<'a> Evaluator<'a> {
    pub fn new(data: &'a Dataset, template: &Arc<ModelTemplate>) -> Self {
        Evaluator {
            data,
            template: Arc::clone(template),
            index: HashMap::new(),
            models: Vec::new(),
            evaluations: 0,
        }
    }

    pub fn template(&self) -> &Arc<ModelTemplate> {
        &self.template
    }

    /// BIC of a scheme, fitting at most once.
    pub fn evaluate(&mut self, scheme: &CollapsingScheme) -> Result<f64, SearchError> {
        let idx = self.evaluate_index(scheme)?;
        Ok(self.models[idx].bic)
    }

    pub(super) fn evaluate_index(
        &mut self,
        scheme: &CollapsingScheme,
    ) -> Result<usize, SearchError> {
        self.evaluations += 1;
        let key = scheme.key();
        if let Some(&idx) = self.index.get(&key) {
            return Ok(idx);
        }
        let fitted = Self::fit_or_reject(self.data, &self.template, scheme)?;
        let idx = self.models.len();
        self.models.push(fitted);
        self.index.insert(key, idx);
        Ok(idx)
    }

    /// Inserts an externally computed fit (parallel batch evaluation).
    /// Counts one evaluation; duplicates are ignored.
    pub(super) fn insert(&mut self, fitted: FittedModel) -> usize {
        self.evaluations += 1;
        let key = fitted.scheme.key();
        if let Some(&idx) = self.index.get(&key) {
            return idx;
        }
        let idx = self.models.len();
        self.models.push(fitted);
        self.index.insert(key, idx);
        idx
    }

    pub(super) fn known(&self, scheme: &CollapsingScheme) -> Option<usize> {
        self.index.get(&scheme.key()).copied()
    }

    /// Evaluates a whole population: unseen schemes are fitted in parallel
    /// (in first-appearance order, so results are deterministic), then every
    /// scheme resolves to its cache index.
    pub(super) fn evaluate_batch(
        &mut self,
        schemes: &[CollapsingScheme],
    ) -> Result<Vec<usize>, SearchError> {
        use rayon::prelude::*;
        let mut unseen: Vec<&CollapsingScheme> = Vec::new();
        let mut pending: std::collections::HashSet<Vec<u8>> = std::collections::HashSet::new();
        for s in schemes {
            let key = s.key();
            if !self.index.contains_key(&key) && pending.insert(key) {
                unseen.push(s);
            }
        }
        let data = self.data;
        let template = Arc::clone(&self.template);
        let fits: Vec<Result<FittedModel, SearchError>> = unseen
            .par_iter()
            .map(|s| Self::fit_or_reject(data, &template, s))
            .collect();
        for fitted in fits {
            let fitted = fitted?;
            let key = fitted.scheme.key();
            let idx = self.models.len();
            self.models.push(fitted);
            self.index.insert(key, idx);
        }
        schemes
            .iter()
            .map(|s| {
                self.evaluations += 1;
                Ok(*self.index.get(&s.key()).expect("inserted above"))
            })
            .collect()
    }

    pub(super) fn fit_or_reject(
        data: &Dataset,
        template: &Arc<ModelTemplate>,
        scheme: &CollapsingScheme,
    ) -> Result<FittedModel, SearchError> {
        match fit(data, template, scheme) {
            Ok(m) => Ok(m),
            Err(GlmError::EmptyBlock { .. }) | Err(GlmError::RankDeficient { .. }) => {
                Ok(FittedModel::rejected(template, scheme))
            }
            Err(e) => Err(SearchError::Glm(e)),
        }
    }

    pub(super) fn bic(&self, idx: usize) -> f64 {
        self.models[idx].bic
    }

    pub fn n_unique(&self) -> usize {
        self.models.len()
    }

    pub fn evaluations(&self) -> u64 {
        self.evaluations
    }

    pub(super) fn best_index(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, m) in self.models.iter().enumerate() {
            if !m.bic.is_finite() {
                continue;
            }
            match best {
                None => best = Some(i),
                Some(b) if m.bic < self.models[b].bic => best = Some(i),
                _ => {}
            }
        }
        best
    }

    pub(super) fn into_parts(self) -> (Vec<FittedModel>, Option<usize>, u64) {
        let best = self.best_index();
        (self.models, best, self.evaluations)
    }
}
