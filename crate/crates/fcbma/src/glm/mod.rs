//! Exponential-family GLM fitting by IRLS, scored by full-likelihood BIC.
//!
//! Two families are supported, both with a log link: Poisson for claim
//! frequency (optionally offset by log exposure) and Gamma for claim
//! severity (optionally weighted, e.g. by claim counts). A fit applies a
//! [`CollapsingScheme`] to the template's factors, recodes levels to blocks
//! with reference-level dummy coding, and reports coefficients,
//! log-likelihood, deviance, dispersion and BIC.

mod design;
mod family;
mod irls;

pub use design::DesignView;

use crate::data::{DataError, Dataset};
use crate::partition::{ConstraintSet, Partition, PartitionError, PartitionSpace};
use crate::scheme::CollapsingScheme;
use serde::{Deserialize, Serialize};
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GlmError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Partition(#[from] PartitionError),
    #[error("scheme does not match template: {0}")]
    SchemeMismatch(String),
    #[error("invalid {family:?} response at row {row}: {value} ({reason})")]
    InvalidResponse {
        family: Family,
        row: usize,
        value: f64,
        reason: &'static str,
    },
    #[error("exposure must be positive: {value} at row {row}")]
    InvalidExposure { row: usize, value: f64 },
    #[error("negative prior weight {value} at row {row}")]
    InvalidWeight { row: usize, value: f64 },
    #[error("no rows with positive weight")]
    NoUsableRows,
    #[error("rank-deficient design: factor {factor:?} block {block} has no observations")]
    EmptyBlock { factor: String, block: usize },
    #[error("rank-deficient or separated design involving factor {factor:?}")]
    RankDeficient { factor: String },
    #[error("unseen level {level:?} for factor {factor:?}")]
    UnseenLevel { factor: String, level: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Poisson,
    Gamma,
}

/// How the Gamma dispersion entering the likelihood (and hence BIC) is
/// estimated. Poisson fits always use dispersion 1.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DispersionConvention {
    /// Mean deviance, `deviance / sum(weights)` — what `glm` software
    /// conventionally plugs into the Gamma log-likelihood.
    #[default]
    DevianceMle,
    /// Maximizer of the weighted Gamma log-likelihood at the fitted means.
    ProfiledMl,
    /// Pearson chi-square over residual degrees of freedom.
    Pearson,
}

/// A collapsible factor: column name, frozen level vocabulary and the
/// admissibility constraints on its partitions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorSpec {
    pub name: String,
    pub levels: Vec<String>,
    pub constraints: ConstraintSet,
}

/// Everything about a model that stays fixed while partitions vary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelTemplate {
    pub family: Family,
    /// Response column.
    pub response: String,
    /// Exposure column; its natural log becomes the offset.
    pub exposure: Option<String>,
    /// Prior-weight column (for severity: claim counts). Rows with zero
    /// weight are excluded from fitting.
    pub weight: Option<String>,
    pub factors: Vec<FactorSpec>,
    pub dispersion: DispersionConvention,
    pub max_iterations: usize,
    pub tolerance: f64,
}

impl ModelTemplate {
    pub fn new(family: Family, response: &str) -> Self {
        ModelTemplate {
            family,
            response: response.to_string(),
            exposure: None,
            weight: None,
            factors: Vec::new(),
            dispersion: DispersionConvention::default(),
            max_iterations: 50,
            tolerance: 1e-8,
        }
    }

    pub fn with_exposure(mut self, column: &str) -> Self {
        self.exposure = Some(column.to_string());
        self
    }

    pub fn with_weight(mut self, column: &str) -> Self {
        self.weight = Some(column.to_string());
        self
    }

    pub fn with_dispersion(mut self, convention: DispersionConvention) -> Self {
        self.dispersion = convention;
        self
    }

    /// Adds a collapsible factor whose vocabulary is taken from `data`.
    pub fn add_factor_from(
        mut self,
        data: &Dataset,
        name: &str,
        constraints: ConstraintSet,
    ) -> Result<Self, GlmError> {
        let col = data.factor(name)?;
        self.factors.push(FactorSpec {
            name: name.to_string(),
            levels: col.levels().to_vec(),
            constraints,
        });
        Ok(self)
    }

    pub fn add_factor(mut self, name: &str, levels: Vec<String>, constraints: ConstraintSet) -> Self {
        self.factors.push(FactorSpec {
            name: name.to_string(),
            levels,
            constraints,
        });
        self
    }

    pub fn factor(&self, name: &str) -> Option<&FactorSpec> {
        self.factors.iter().find(|f| f.name == name)
    }

    /// The uncollapsed scheme: every factor at its identity partition.
    pub fn identity_scheme(&self) -> CollapsingScheme {
        CollapsingScheme::new(self.factors.iter().map(|f| {
            (
                f.name.clone(),
                Partition::identity(f.levels.len()).expect("vocabulary non-empty"),
            )
        }))
        .expect("factor names unique")
    }

    /// The admissible partition space of each factor, in template order.
    pub fn spaces(&self) -> Result<Vec<PartitionSpace>, PartitionError> {
        self.factors
            .iter()
            .map(|f| PartitionSpace::new(f.levels.len(), f.constraints.clone()))
            .collect()
    }
}

/// A fitted GLM for one collapsing scheme.
#[derive(Debug, Clone)]
pub struct FittedModel {
    pub scheme: CollapsingScheme,
    template: Arc<ModelTemplate>,
    /// Intercept followed by block dummies in design-column order.
    pub beta: Vec<f64>,
    pub log_likelihood: f64,
    pub deviance: f64,
    /// Dispersion entering the likelihood (1 for Poisson).
    pub dispersion: f64,
    /// Pearson chi-square / (n - p), reported as a diagnostic only.
    pub pearson_dispersion: f64,
    pub bic: f64,
    /// Parameter count charged by BIC (coefficients, plus the Gamma
    /// dispersion when applicable).
    pub p: usize,
    pub n_obs: usize,
    pub converged: bool,
    pub iterations: usize,
}

/// Names a coefficient: the intercept, or a (factor, block) dummy.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CoefKey {
    Intercept,
    /// 1-based block index of the named factor (block 1 is the reference).
    Block { factor: String, block: usize },
}

impl std::fmt::Display for CoefKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CoefKey::Intercept => f.write_str("(Intercept)"),
            CoefKey::Block { factor, block } => write!(f, "{factor}[block {block}]"),
        }
    }
}

impl FittedModel {
    pub fn template(&self) -> &ModelTemplate {
        &self.template
    }

    /// Placeholder for a rejected candidate (rank-deficient design): worst
    /// possible objective, never predicts.
    pub(crate) fn rejected(template: &Arc<ModelTemplate>, scheme: &CollapsingScheme) -> Self {
        FittedModel {
            scheme: scheme.clone(),
            template: Arc::clone(template),
            beta: Vec::new(),
            log_likelihood: f64::NEG_INFINITY,
            deviance: f64::INFINITY,
            dispersion: f64::NAN,
            pearson_dispersion: f64::NAN,
            bic: f64::INFINITY,
            p: 0,
            n_obs: 0,
            converged: false,
            iterations: 0,
        }
    }

    /// Design-column labels aligned with `beta`.
    pub fn coefficient_labels(&self) -> Vec<CoefKey> {
        let mut labels = vec![CoefKey::Intercept];
        for spec in &self.template.factors {
            let p = self.scheme.get(&spec.name).expect("scheme validated");
            for block in 2..=p.n_blocks() {
                labels.push(CoefKey::Block {
                    factor: spec.name.clone(),
                    block,
                });
            }
        }
        labels
    }

    /// Expected responses on new data: `exp(linear predictor + offset)`.
    pub fn predict(&self, newdata: &Dataset) -> Result<Vec<f64>, GlmError> {
        let template = &self.template;
        let n = newdata.n_rows();
        let mut eta = vec![self.beta[0]; n];
        if let Some(expo) = &template.exposure {
            let e = newdata.numeric(expo)?;
            for (row, &v) in e.iter().enumerate() {
                if v <= 0.0 {
                    return Err(GlmError::InvalidExposure { row, value: v });
                }
                eta[row] += v.ln();
            }
        }
        let mut col = 1usize;
        for spec in &template.factors {
            let partition = self
                .scheme
                .get(&spec.name)
                .ok_or_else(|| GlmError::SchemeMismatch(format!("no partition for {}", spec.name)))?;
            let data_col = newdata.factor(&spec.name)?;
            // map the new data's vocabulary into the training vocabulary
            let mut remap = Vec::with_capacity(data_col.levels().len());
            for level in data_col.levels() {
                match spec.levels.iter().position(|l| l == level) {
                    Some(i) => remap.push(i),
                    None => {
                        // only an error if the level actually occurs
                        remap.push(usize::MAX);
                    }
                }
            }
            let k = partition.n_blocks();
            for (row, &code) in data_col.codes().iter().enumerate() {
                let train_idx = remap[code as usize];
                if train_idx == usize::MAX {
                    return Err(GlmError::UnseenLevel {
                        factor: spec.name.clone(),
                        level: data_col.level_name(code).to_string(),
                    });
                }
                let block = partition.block_of(train_idx);
                if block >= 2 {
                    eta[row] += self.beta[col + block - 2];
                }
            }
            col += k.saturating_sub(1);
        }
        Ok(eta.into_iter().map(f64::exp).collect())
    }
}

/// Recodes the template's factors by a scheme into a reference-coded design
/// view. Fully collapsed factors contribute no columns (the variable drops
/// out of the model).
pub fn apply_scheme(
    data: &Dataset,
    template: &ModelTemplate,
    scheme: &CollapsingScheme,
) -> Result<DesignView, GlmError> {
    design::build(data, template, scheme)
}

/// Fits the template under one collapsing scheme.
///
/// IRLS runs to a relative-deviance tolerance with step halving; a fit that
/// exhausts its iteration budget is returned with `converged == false` and an
/// infinite BIC so that search layers rank it last. Rank deficiency (an empty
/// block after collapsing) is an error naming the offending factor.
pub fn fit(
    data: &Dataset,
    template: &Arc<ModelTemplate>,
    scheme: &CollapsingScheme,
) -> Result<FittedModel, GlmError> {
    let design = design::build(data, template, scheme)?;
    design.check_full_rank()?;
    let out = irls::run(&design, template.family, template.max_iterations, template.tolerance)?;
    let n = design.n_rows_used();
    let (log_likelihood, dispersion) = family::likelihood(
        template.family,
        template.dispersion,
        design.response(),
        &out.mu,
        design.weights(),
        out.deviance,
        design.n_cols(),
    );
    let p = design.n_cols()
        + match template.family {
            Family::Poisson => 0,
            Family::Gamma => 1,
        };
    let bic = if out.converged {
        -2.0 * log_likelihood + (p as f64) * (n as f64).ln()
    } else {
        f64::INFINITY
    };
    let pearson = family::pearson_dispersion(
        template.family,
        design.response(),
        &out.mu,
        design.weights(),
        design.n_cols(),
    );
    Ok(FittedModel {
        scheme: scheme.clone(),
        template: Arc::clone(template),
        beta: out.beta,
        log_likelihood,
        deviance: out.deviance,
        dispersion,
        pearson_dispersion: pearson,
        bic,
        p,
        n_obs: n,
        converged: out.converged,
        iterations: out.iterations,
    })
}
