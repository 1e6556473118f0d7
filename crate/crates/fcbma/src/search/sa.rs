//! Simulated annealing over collapsing schemes.
//!
//! One move picks a factor uniformly at random and applies a single-element
//! partition transition (constraint-respecting). Acceptance is Metropolis on
//! the BIC difference; the temperature decays geometrically and the whole
//! chain restarts from a fresh random scheme a configured number of times,
//! sharing one fit cache.

use super::{Evaluator, ProgressEvent, SchemeSpaces, SearchError, SearchResult, TracePoint};
use crate::data::Dataset;
use crate::glm::ModelTemplate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SAConfig {
    /// Starting temperature. `None` calibrates it so the median uphill move
    /// from a random walk is accepted with probability ~0.8.
    pub initial_temperature: Option<f64>,
    pub cooling_factor: f64,
    pub iterations_per_temperature: usize,
    pub min_temperature: f64,
    pub restarts: usize,
    pub seed: u64,
}

impl Default for SAConfig {
    fn default() -> Self {
        SAConfig {
            initial_temperature: None,
            cooling_factor: 0.95,
            iterations_per_temperature: 50,
            min_temperature: 1e-3,
            restarts: 20,
            seed: 0,
        }
    }
}

impl SAConfig {
    fn validate(&self) -> Result<(), SearchError> {
        if let Some(t) = self.initial_temperature {
            if !(t > 0.0) {
                return Err(SearchError::InvalidConfig(
                    "initial_temperature must be positive".into(),
                ));
            }
        }
        if !(self.cooling_factor > 0.0 && self.cooling_factor < 1.0) {
            return Err(SearchError::InvalidConfig(
                "cooling_factor must lie in (0, 1)".into(),
            ));
        }
        if self.iterations_per_temperature == 0 {
            return Err(SearchError::InvalidConfig(
                "iterations_per_temperature must be at least 1".into(),
            ));
        }
        if !(self.min_temperature > 0.0) {
            return Err(SearchError::InvalidConfig(
                "min_temperature must be positive".into(),
            ));
        }
        if self.restarts == 0 {
            return Err(SearchError::InvalidConfig(
                "restarts must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

pub fn sa_search(
    data: &Dataset,
    template: &Arc<ModelTemplate>,
    spaces: &SchemeSpaces,
    config: &SAConfig,
    on_progress: &mut dyn FnMut(&ProgressEvent),
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    spaces.validate_against(template)?;
    let movable = spaces.movable_indices();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut evaluator = Evaluator::new(data, template);
    let mut trace: Vec<TracePoint> = Vec::new();

    if movable.is_empty() {
        // nothing can move; the space is a single scheme
        let scheme = spaces.random_scheme(&mut rng);
        evaluator.evaluate(&scheme)?;
        let (models, best, evaluations) = evaluator.into_parts();
        return Ok(SearchResult {
            models,
            best,
            trace,
            evaluations,
        });
    }

    let t0 = match config.initial_temperature {
        Some(t) => t,
        None => calibrate_t0(&mut evaluator, spaces, &movable, &mut rng)?,
    };

    let mut step: u64 = 0;
    for restart in 0..config.restarts {
        let mut current = spaces.random_scheme(&mut rng);
        let mut current_bic = evaluator.evaluate(&current)?;
        let mut temperature = t0;
        while temperature > config.min_temperature {
            for _ in 0..config.iterations_per_temperature {
                step += 1;
                let f = movable[rng.random_range(0..movable.len())];
                let (name, space) = &spaces.factors()[f];
                let Some(moved) =
                    space.random_move(current.get(name).expect("factor in scheme"), &mut rng)
                else {
                    continue;
                };
                let candidate = current
                    .with_partition(name, moved)
                    .expect("factor names fixed");
                let candidate_bic = evaluator.evaluate(&candidate)?;
                if accept(current_bic, candidate_bic, temperature, &mut rng) {
                    current = candidate;
                    current_bic = candidate_bic;
                }
            }
            let best_bic = evaluator
                .best_index()
                .map_or(f64::INFINITY, |i| evaluator.bic(i));
            trace.push(TracePoint {
                step,
                restart: Some(restart as u32),
                temperature: Some(temperature),
                generation: None,
                best_bic,
                unique_fits: evaluator.n_unique(),
                evaluations: evaluator.evaluations(),
            });
            on_progress(&ProgressEvent {
                phase: "sa",
                step,
                restart: Some(restart as u32),
                temperature: Some(temperature),
                generation: None,
                best_bic,
                unique_fits: evaluator.n_unique(),
                evaluations: evaluator.evaluations(),
            });
            temperature *= config.cooling_factor;
        }
    }

    let (models, best, evaluations) = evaluator.into_parts();
    Ok(SearchResult {
        models,
        best,
        trace,
        evaluations,
    })
}

fn accept(current: f64, candidate: f64, temperature: f64, rng: &mut impl Rng) -> bool {
    if !candidate.is_finite() {
        return false;
    }
    if !current.is_finite() {
        return true;
    }
    let delta = candidate - current;
    delta < 0.0 || rng.random::<f64>() < (-delta / temperature).exp()
}

/// Random-walk calibration: the median uphill BIC move of 100 proposals is
/// accepted with probability ~0.8 at the returned temperature.
fn calibrate_t0(
    evaluator: &mut Evaluator,
    spaces: &SchemeSpaces,
    movable: &[usize],
    rng: &mut ChaCha8Rng,
) -> Result<f64, SearchError> {
    let mut current = spaces.random_scheme(rng);
    let mut current_bic = evaluator.evaluate(&current)?;
    let mut jumps: Vec<f64> = Vec::with_capacity(100);
    for _ in 0..100 {
        let f = movable[rng.random_range(0..movable.len())];
        let (name, space) = &spaces.factors()[f];
        let Some(moved) = space.random_move(current.get(name).expect("factor"), rng) else {
            continue;
        };
        let candidate = current.with_partition(name, moved).expect("factor names");
        let candidate_bic = evaluator.evaluate(&candidate)?;
        if candidate_bic.is_finite() && current_bic.is_finite() {
            let d = (candidate_bic - current_bic).abs();
            if d > 0.0 {
                jumps.push(d);
            }
        }
        if candidate_bic.is_finite() {
            current = candidate;
            current_bic = candidate_bic;
        }
    }
    if jumps.is_empty() {
        return Ok(1.0);
    }
    jumps.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let median = jumps[jumps.len() / 2];
    // exp(-median / t0) = 0.8
    Ok((median / (1.0_f64 / 0.8).ln()).max(1e-6))
}
