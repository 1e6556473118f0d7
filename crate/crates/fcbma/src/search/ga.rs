//! Genetic algorithm over concatenated partition graycodes.
//!
//! Individuals are collapsing schemes. Selection is tournament on BIC with
//! elitism; crossover swaps whole factor segments when several factors are
//! searched (breakpoints at factor boundaries) and a single within-string
//! point when only one factor is; offspring are canonicalized and repaired
//! into the feasible space. Mutation replaces one factor's partition with a
//! random single-move neighbor.

use super::{
    Evaluator, FactorSpace, ProgressEvent, SchemeSpaces, SearchError, SearchResult, TracePoint,
};
use crate::data::Dataset;
use crate::glm::ModelTemplate;
use crate::partition::Partition;
use crate::scheme::CollapsingScheme;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::sync::Arc;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct GAConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub elitism_count: usize,
    pub tournament_size: usize,
    pub seed: u64,
}

impl Default for GAConfig {
    fn default() -> Self {
        GAConfig {
            population_size: 40,
            generations: 80,
            crossover_rate: 0.9,
            mutation_rate: 0.3,
            elitism_count: 2,
            tournament_size: 3,
            seed: 0,
        }
    }
}

impl GAConfig {
    fn validate(&self) -> Result<(), SearchError> {
        if self.population_size < 4 {
            return Err(SearchError::InvalidConfig(
                "population_size must be at least 4".into(),
            ));
        }
        if self.generations == 0 {
            return Err(SearchError::InvalidConfig(
                "generations must be at least 1".into(),
            ));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(SearchError::InvalidConfig(format!(
                    "{name} must lie in [0, 1]"
                )));
            }
        }
        if self.elitism_count >= self.population_size {
            return Err(SearchError::InvalidConfig(
                "elitism_count must be below population_size".into(),
            ));
        }
        if self.tournament_size < 2 {
            return Err(SearchError::InvalidConfig(
                "tournament_size must be at least 2".into(),
            ));
        }
        Ok(())
    }
}

pub fn ga_search(
    data: &Dataset,
    template: &Arc<ModelTemplate>,
    spaces: &SchemeSpaces,
    config: &GAConfig,
    on_progress: &mut dyn FnMut(&ProgressEvent),
) -> Result<SearchResult, SearchError> {
    config.validate()?;
    spaces.validate_against(template)?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut evaluator = Evaluator::new(data, template);
    let mut trace = Vec::new();
    let movable = spaces.movable_indices();

    let mut population: Vec<CollapsingScheme> = (0..config.population_size)
        .map(|_| spaces.random_scheme(&mut rng))
        .collect();
    let mut fitness = evaluator.evaluate_batch(&population)?;

    for generation in 0..config.generations {
        // rank current population, best first
        let mut order: Vec<usize> = (0..population.len()).collect();
        order.sort_by(|&a, &b| {
            evaluator
                .bic(fitness[a])
                .partial_cmp(&evaluator.bic(fitness[b]))
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });

        let mut next: Vec<CollapsingScheme> = order
            .iter()
            .take(config.elitism_count)
            .map(|&i| population[i].clone())
            .collect();

        while next.len() < config.population_size {
            let pa = tournament(&population, &fitness, &evaluator, config.tournament_size, &mut rng);
            let pb = tournament(&population, &fitness, &evaluator, config.tournament_size, &mut rng);
            let (mut c1, mut c2) = if rng.random::<f64>() < config.crossover_rate {
                crossover(&population[pa], &population[pb], spaces, &mut rng)?
            } else {
                (population[pa].clone(), population[pb].clone())
            };
            if rng.random::<f64>() < config.mutation_rate {
                mutate(&mut c1, spaces, &movable, &mut rng);
            }
            if rng.random::<f64>() < config.mutation_rate {
                mutate(&mut c2, spaces, &movable, &mut rng);
            }
            next.push(c1);
            if next.len() < config.population_size {
                next.push(c2);
            }
        }

        population = next;
        fitness = evaluator.evaluate_batch(&population)?;

        let best_bic = evaluator
            .best_index()
            .map_or(f64::INFINITY, |i| evaluator.bic(i));
        trace.push(TracePoint {
            step: (generation + 1) as u64,
            restart: None,
            temperature: None,
            generation: Some(generation as u32),
            best_bic,
            unique_fits: evaluator.n_unique(),
            evaluations: evaluator.evaluations(),
        });
        on_progress(&ProgressEvent {
            phase: "ga",
            step: (generation + 1) as u64,
            restart: None,
            temperature: None,
            generation: Some(generation as u32),
            best_bic,
            unique_fits: evaluator.n_unique(),
            evaluations: evaluator.evaluations(),
        });
    }

    let (models, best, evaluations) = evaluator.into_parts();
    Ok(SearchResult {
        models,
        best,
        trace,
        evaluations,
    })
}

fn tournament(
    population: &[CollapsingScheme],
    fitness: &[usize],
    evaluator: &Evaluator,
    size: usize,
    rng: &mut impl Rng,
) -> usize {
    let mut winner = rng.random_range(0..population.len());
    for _ in 1..size {
        let challenger = rng.random_range(0..population.len());
        if evaluator.bic(fitness[challenger]) < evaluator.bic(fitness[winner]) {
            winner = challenger;
        }
    }
    winner
}

fn mutate(
    scheme: &mut CollapsingScheme,
    spaces: &SchemeSpaces,
    movable: &[usize],
    rng: &mut impl Rng,
) {
    if movable.is_empty() {
        return;
    }
    let f = movable[rng.random_range(0..movable.len())];
    let (name, space) = &spaces.factors()[f];
    if let Some(moved) = space.random_move(scheme.get(name).expect("factor"), rng) {
        *scheme = scheme.with_partition(name, moved).expect("factor names");
    }
}

fn crossover(
    a: &CollapsingScheme,
    b: &CollapsingScheme,
    spaces: &SchemeSpaces,
    rng: &mut impl Rng,
) -> Result<(CollapsingScheme, CollapsingScheme), SearchError> {
    let n_factors = spaces.factors().len();
    if n_factors >= 2 {
        // breakpoints only at factor boundaries
        let n_cuts = rng.random_range(1..n_factors);
        let cuts = rand::seq::index::sample(rng, n_factors - 1, n_cuts)
            .into_iter()
            .map(|i| i + 1)
            .collect::<Vec<usize>>();
        Ok(crossover_at_boundaries(a, b, spaces, &cuts))
    } else {
        let (name, space) = &spaces.factors()[0];
        match space {
            FactorSpace::Full(s) if s.n_levels() >= 2 => {
                let pa = a.get(name).expect("factor");
                let pb = b.get(name).expect("factor");
                let point = rng.random_range(1..s.n_levels());
                let (c1, c2) = crossover_single_point(pa, pb, point);
                let c1 = s.repair(&c1)?;
                let c2 = s.repair(&c2)?;
                Ok((
                    a.with_partition(name, c1).expect("factor names"),
                    b.with_partition(name, c2).expect("factor names"),
                ))
            }
            // a candidate list cannot be cut inside a string
            _ => Ok((a.clone(), b.clone())),
        }
    }
}

/// Swaps whole-factor segments between two schemes at the given boundary
/// positions (ascending, each in `1..n_factors`).
fn crossover_at_boundaries(
    a: &CollapsingScheme,
    b: &CollapsingScheme,
    spaces: &SchemeSpaces,
    cuts: &[usize],
) -> (CollapsingScheme, CollapsingScheme) {
    let mut sorted = cuts.to_vec();
    sorted.sort_unstable();
    let mut from_a = true;
    let mut c1 = Vec::new();
    let mut c2 = Vec::new();
    for (i, (name, _)) in spaces.factors().iter().enumerate() {
        if sorted.binary_search(&i).is_ok() {
            from_a = !from_a;
        }
        let (pa, pb) = (
            a.get(name).expect("factor").clone(),
            b.get(name).expect("factor").clone(),
        );
        if from_a {
            c1.push((name.clone(), pa));
            c2.push((name.clone(), pb));
        } else {
            c1.push((name.clone(), pb));
            c2.push((name.clone(), pa));
        }
    }
    (
        CollapsingScheme::new(c1).expect("unique factor names"),
        CollapsingScheme::new(c2).expect("unique factor names"),
    )
}

/// One-point crossover of two graycodes of equal length; the spliced tails
/// are canonicalized back to restricted growth form.
pub(crate) fn crossover_single_point(
    a: &Partition,
    b: &Partition,
    point: usize,
) -> (Partition, Partition) {
    let n = a.n_levels();
    debug_assert_eq!(n, b.n_levels());
    debug_assert!(point >= 1 && point < n);
    let splice = |head: &Partition, tail: &Partition| {
        let raw: Vec<usize> = head.codes()[..point]
            .iter()
            .chain(tail.codes()[point..].iter())
            .map(|&c| c as usize)
            .collect();
        Partition::from_raw(&raw).expect("non-empty")
    };
    (splice(a, b), splice(b, a))
}
