//! Exhaustive sweep of the full product space.

use super::{
    Evaluator, FactorSpace, ProgressEvent, SchemeSpaces, SearchError, SearchResult, TracePoint,
};
use crate::data::Dataset;
use crate::glm::ModelTemplate;
use crate::partition::Partition;
use crate::scheme::CollapsingScheme;
use rayon::prelude::*;
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct ExhaustiveConfig {
    /// Refuse to enumerate product spaces larger than this.
    pub ceiling: u128,
    /// Fits per parallel batch; also the trace granularity.
    pub batch_size: usize,
}

impl Default for ExhaustiveConfig {
    fn default() -> Self {
        ExhaustiveConfig {
            ceiling: 1_000_000,
            batch_size: 512,
        }
    }
}

/// Fits every scheme in the product space, in lexicographic order over the
/// per-factor enumerations. Deterministic; batches are evaluated in parallel
/// but recorded in enumeration order.
pub fn exhaustive_search(
    data: &Dataset,
    template: &Arc<ModelTemplate>,
    spaces: &SchemeSpaces,
    config: &ExhaustiveConfig,
    on_progress: &mut dyn FnMut(&ProgressEvent),
) -> Result<SearchResult, SearchError> {
    spaces.validate_against(template)?;
    let size = spaces.product_size()?;
    if size > config.ceiling {
        return Err(SearchError::CeilingExceeded {
            size,
            ceiling: config.ceiling,
        });
    }

    // materialize per-factor candidate lists
    let mut lists: Vec<(String, Vec<Partition>)> = Vec::with_capacity(spaces.factors().len());
    for (name, space) in spaces.factors() {
        let list = match space {
            FactorSpace::Full(s) => s.iter().collect(),
            FactorSpace::Candidates(c) => c.clone(),
        };
        if list.is_empty() {
            return Err(SearchError::SpaceMismatch(format!(
                "factor {name:?} has an empty candidate list"
            )));
        }
        lists.push((name.clone(), list));
    }

    let total = size as u64;
    let mut evaluator = Evaluator::new(data, template);
    let mut trace = Vec::new();
    let mut counter = vec![0usize; lists.len()];
    let mut produced: u64 = 0;
    let mut best_bic = f64::INFINITY;

    while produced < total {
        let batch_len = config.batch_size.min((total - produced) as usize);
        let mut batch: Vec<CollapsingScheme> = Vec::with_capacity(batch_len);
        for _ in 0..batch_len {
            let scheme = CollapsingScheme::new(
                lists
                    .iter()
                    .zip(&counter)
                    .map(|((name, list), &i)| (name.clone(), list[i].clone())),
            )
            .expect("unique factor names");
            batch.push(scheme);
            // odometer increment, last factor fastest
            for pos in (0..counter.len()).rev() {
                counter[pos] += 1;
                if counter[pos] < lists[pos].1.len() {
                    break;
                }
                counter[pos] = 0;
            }
        }
        let fits: Vec<_> = batch
            .par_iter()
            .map(|scheme| Evaluator::fit_or_reject(data, template, scheme))
            .collect();
        for fitted in fits {
            let fitted = fitted?;
            if fitted.bic < best_bic {
                best_bic = fitted.bic;
            }
            evaluator.insert(fitted);
        }
        produced += batch_len as u64;
        let point = TracePoint {
            step: produced,
            restart: None,
            temperature: None,
            generation: None,
            best_bic,
            unique_fits: evaluator.n_unique(),
            evaluations: evaluator.evaluations(),
        };
        on_progress(&ProgressEvent {
            phase: "exhaustive",
            step: produced,
            restart: None,
            temperature: None,
            generation: None,
            best_bic,
            unique_fits: evaluator.n_unique(),
            evaluations: evaluator.evaluations(),
        });
        trace.push(point);
    }

    let (models, best, evaluations) = evaluator.into_parts();
    Ok(SearchResult {
        models,
        best,
        trace,
        evaluations,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::{toy_dataset, toy_template};
    use super::*;
    use crate::partition::PartitionSpace;

    #[test]
    fn sweeps_the_whole_product_space_once() {
        let data = toy_dataset();
        let template = toy_template(&data);
        let spaces = SchemeSpaces::from_template(&template).unwrap();
        let result = exhaustive_search(
            &data,
            &template,
            &spaces,
            &ExhaustiveConfig::default(),
            &mut |_| {},
        )
        .unwrap();
        // bell(4) * bell(2) = 15 * 2
        assert_eq!(result.n_visited(), 30);
        let mut keys: Vec<Vec<u8>> = result.models.iter().map(|m| m.scheme.key()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), 30, "cache holds no duplicates");
        // the generating structure (f1 f2)(f3 f4), g collapsed, must win
        let best = result.best().unwrap();
        assert_eq!(best.scheme.get("f").unwrap().graycode(), "1122");
        assert_eq!(best.scheme.get("g").unwrap().graycode(), "11");
        let min = result
            .models
            .iter()
            .map(|m| m.bic)
            .fold(f64::INFINITY, f64::min);
        assert_eq!(best.bic, min);
    }

    #[test]
    fn ceiling_refusal_names_the_alternatives() {
        let data = toy_dataset();
        let template = toy_template(&data);
        let spaces = SchemeSpaces::from_template(&template).unwrap();
        let err = exhaustive_search(
            &data,
            &template,
            &spaces,
            &ExhaustiveConfig {
                ceiling: 10,
                batch_size: 8,
            },
            &mut |_| {},
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("ceiling"));
        assert!(msg.contains("annealing"));
    }

    #[test]
    fn single_level_factor_yields_single_scheme() {
        let data = crate::data::Dataset::builder()
            .numeric("y", vec![1.0, 2.0, 3.0])
            .factor("only", vec!["x".into(), "x".into(), "x".into()])
            .build()
            .unwrap();
        let template = std::sync::Arc::new(
            crate::glm::ModelTemplate::new(crate::glm::Family::Poisson, "y")
                .add_factor_from(&data, "only", crate::ConstraintSet::none())
                .unwrap(),
        );
        let spaces = SchemeSpaces::new(vec![(
            "only".to_string(),
            FactorSpace::Full(PartitionSpace::unconstrained(1).unwrap()),
        )]);
        let result = exhaustive_search(
            &data,
            &template,
            &spaces,
            &ExhaustiveConfig::default(),
            &mut |_| {},
        )
        .unwrap();
        assert_eq!(result.n_visited(), 1);
        assert_eq!(result.best().unwrap().scheme.get("only").unwrap().n_blocks(), 1);
    }
}
