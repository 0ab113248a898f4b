//! Population-based baseline guided by k-uncertainty, in the style of
//! DiffChaser. The concrete choices (tournament selection, uniform crossover
//! mask, parent-replacement retention) are documented in `BASELINE.md`.

use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mutation::OperatorPool;
use crate::search::{check_seed, Budget, ModelPairOracle, Observation, TrialReport};
use crate::tensor::{ProbVector, Tensor};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneticConfig {
    pub population: usize,
    /// Rank compared against the top-1 probability.
    pub k: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    pub timeout_secs: f64,
    pub max_queries: Option<u64>,
    pub seed: u64,
}

impl Default for GeneticConfig {
    fn default() -> Self {
        GeneticConfig {
            population: 1000,
            k: 2,
            crossover_rate: 0.5,
            mutation_rate: 1.0,
            timeout_secs: 240.0,
            max_queries: Some(100_000),
            seed: 0,
        }
    }
}

impl GeneticConfig {
    pub fn validate(&self) -> Result<()> {
        if self.population < 2 {
            return Err(Error::Config("population must be at least 2".into()));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        for (name, rate) in [
            ("crossover_rate", self.crossover_rate),
            ("mutation_rate", self.mutation_rate),
        ] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} must lie in [0, 1]")));
            }
        }
        if !(self.timeout_secs > 0.0) {
            return Err(Error::Config("timeout_secs must be positive".into()));
        }
        Ok(())
    }
}

/// Top-1 probability minus the k-th highest probability.
pub fn k_uncertainty(out: &ProbVector, k: usize) -> Result<f64> {
    if k == 0 || k > out.classes() {
        return Err(Error::contract(format!(
            "k = {k} outside 1..={}",
            out.classes()
        )));
    }
    let mut sorted = out.probs().to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    Ok(sorted[0] - sorted[k - 1])
}

/// Smaller of the two models' k-uncertainties: low when the input is near
/// either model's decision boundary.
pub fn pair_uncertainty(obs: &Observation, k: usize) -> Result<f64> {
    Ok(k_uncertainty(&obs.original, k)?.min(k_uncertainty(&obs.compressed, k)?))
}

/// Takes each element from `a` or `b` with equal probability.
pub fn uniform_crossover<R: Rng + ?Sized>(a: &Tensor, b: &Tensor, rng: &mut R) -> Tensor {
    let mut child = a.clone();
    child.map_clamped(|values| {
        for (v, &other) in values.iter_mut().zip(b.data()) {
            if rng.random::<bool>() {
                *v = other;
            }
        }
    });
    child
}

struct Individual {
    input: Tensor,
    uncertainty: f64,
}

fn tournament<R: Rng + ?Sized>(population: &[Individual], rng: &mut R) -> usize {
    let a = rng.random_range(0..population.len());
    let b = rng.random_range(0..population.len());
    if population[b].uncertainty < population[a].uncertainty {
        b
    } else {
        a
    }
}

/// Runs the genetic baseline from `seed`. Query accounting matches
/// [`crate::search::run_trigger_search`]: one evaluated candidate is one query.
pub fn run_genetic_search(
    oracle: &mut ModelPairOracle<'_>,
    seed: &Tensor,
    pool: &mut OperatorPool,
    config: &GeneticConfig,
) -> Result<TrialReport> {
    config.validate()?;
    check_seed(oracle, seed)?;
    let timeout = Duration::from_secs_f64(config.timeout_secs);
    let budget = Budget::new(timeout, config.max_queries, oracle);
    let mut report = TrialReport::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    macro_rules! found {
        ($x:expr, $obs:expr) => {{
            report.success = true;
            report.trigger = Some($x);
            report.outputs = Some($obs);
            budget.finish(&mut report, oracle);
            return Ok(report);
        }};
    }

    let first = oracle.query(seed)?;
    if first.triggers() {
        found!(seed.clone(), first);
    }

    let mut population = Vec::with_capacity(config.population);
    while population.len() < config.population {
        if budget.exhausted(oracle) {
            budget.finish(&mut report, oracle);
            return Ok(report);
        }
        let op = pool.random_id(&mut rng);
        let x = pool.get(op).apply(seed, &mut rng);
        pool.get_mut(op).record_applied();
        let obs = oracle.query(&x)?;
        report.operator_trace.push(op);
        if obs.triggers() {
            found!(x, obs);
        }
        population.push(Individual {
            uncertainty: pair_uncertainty(&obs, config.k)?,
            input: x,
        });
    }

    loop {
        let mut offspring: Vec<(usize, Individual)> = Vec::with_capacity(population.len());
        for _ in 0..population.len() {
            if budget.exhausted(oracle) {
                budget.finish(&mut report, oracle);
                return Ok(report);
            }
            let a = tournament(&population, &mut rng);
            let b = tournament(&population, &mut rng);
            let mut child = if rng.random::<f64>() < config.crossover_rate {
                uniform_crossover(&population[a].input, &population[b].input, &mut rng)
            } else {
                population[a].input.clone()
            };
            if rng.random::<f64>() < config.mutation_rate {
                let op = pool.random_id(&mut rng);
                child = pool.get(op).apply(&child, &mut rng);
                pool.get_mut(op).record_applied();
                report.operator_trace.push(op);
            }
            let obs = oracle.query(&child)?;
            if obs.triggers() {
                report.iterations += 1;
                found!(child, obs);
            }
            offspring.push((
                a,
                Individual {
                    uncertainty: pair_uncertainty(&obs, config.k)?,
                    input: child,
                },
            ));
        }
        // A child replaces its first parent when it sits closer to a boundary.
        for (slot, child) in offspring {
            if child.uncertainty < population[slot].uncertainty {
                population[slot] = child;
            }
        }
        report.iterations += 1;
        report.fitness_trace.push(
            population
                .iter()
                .map(|i| i.uncertainty)
                .fold(f64::INFINITY, f64::min),
        );
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn k_uncertainty_examples() {
        assert!((k_uncertainty(&pv(&[0.6, 0.3, 0.1]), 2).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(k_uncertainty(&pv(&[0.25; 4]), 2).unwrap(), 0.0);
        assert_eq!(k_uncertainty(&pv(&[1.0, 0.0, 0.0]), 2).unwrap(), 1.0);
        assert_eq!(k_uncertainty(&pv(&[0.1, 0.3, 0.6]), 3).unwrap(), 0.5);
        assert!(matches!(
            k_uncertainty(&pv(&[0.5, 0.5]), 3),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn crossover_of_identical_parents_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = Tensor::new(vec![5], vec![0.1, 0.9, 0.3, 0.0, 1.0]).unwrap();
        for _ in 0..10 {
            assert_eq!(uniform_crossover(&x, &x, &mut rng), x);
        }
    }

    #[test]
    fn crossover_takes_elements_from_parents() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let a = Tensor::filled(vec![64], 0.0).unwrap();
        let b = Tensor::filled(vec![64], 1.0).unwrap();
        let c = uniform_crossover(&a, &b, &mut rng);
        let ones = c.data().iter().filter(|v| **v == 1.0).count();
        assert!(c.data().iter().all(|v| *v == 0.0 || *v == 1.0));
        assert!(ones > 10 && ones < 54);
    }

    #[test]
    fn config_validation() {
        assert!(GeneticConfig::default().validate().is_ok());
        let bad = GeneticConfig {
            population: 1,
            ..GeneticConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
