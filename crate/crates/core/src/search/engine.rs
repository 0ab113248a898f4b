use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::fitness::{distance, fitness, StateStore};
use super::oracle::{ModelPairOracle, Observation};
use super::select::select_operator;
use crate::error::{Error, Result};
use crate::mutation::OperatorPool;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Distance plus novelty fitness, Metropolis-Hastings operator selection.
    Full,
    /// Ablation: fitness is the bare distance, no state tracking.
    DistanceOnly,
    /// Ablation: operators drawn uniformly at random.
    RandomOps,
}

impl SearchMode {
    pub fn label(&self) -> &'static str {
        match self {
            SearchMode::Full => "full",
            SearchMode::DistanceOnly => "distance_only",
            SearchMode::RandomOps => "random_ops",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SearchConfig {
    /// Distance tolerance; the distance term of the fitness is scaled by `1 / delta`.
    pub delta: f64,
    /// Euclidean radius under which a state counts as already observed.
    pub nn_radius: f64,
    pub timeout_secs: f64,
    /// Cap on queries per search, including the initial seed check.
    pub max_queries: Option<u64>,
    pub mode: SearchMode,
    pub seed: u64,
    /// Optional L-infinity ball around the seed that mutated inputs are
    /// projected into. Off by default.
    pub linf_budget: Option<f64>,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            delta: 1e-3,
            nn_radius: 1e-2,
            timeout_secs: 240.0,
            max_queries: Some(100_000),
            mode: SearchMode::Full,
            seed: 0,
            linf_budget: None,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0) {
            return Err(Error::Config(format!("delta must be positive, got {}", self.delta)));
        }
        if !(self.nn_radius >= 0.0) {
            return Err(Error::Config(format!(
                "nn_radius must be non-negative, got {}",
                self.nn_radius
            )));
        }
        if !(self.timeout_secs > 0.0) {
            return Err(Error::Config("timeout_secs must be positive".into()));
        }
        if matches!(self.linf_budget, Some(b) if !(b >= 0.0)) {
            return Err(Error::Config("linf_budget must be non-negative".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

/// Outcome of one search from one seed.
#[derive(Debug, Clone)]
pub struct TrialReport {
    pub success: bool,
    pub trigger: Option<Tensor>,
    /// Model outputs on `trigger`.
    pub outputs: Option<Observation>,
    /// Queries issued, including the initial seed check.
    pub queries: u64,
    pub elapsed: Duration,
    pub iterations: u64,
    /// Operator id used in each iteration.
    pub operator_trace: Vec<usize>,
    /// Incumbent fitness after each iteration (best k-uncertainty per
    /// generation for the genetic engine).
    pub fitness_trace: Vec<f64>,
}

impl TrialReport {
    pub(crate) fn new() -> Self {
        TrialReport {
            success: false,
            trigger: None,
            outputs: None,
            queries: 0,
            elapsed: Duration::ZERO,
            iterations: 0,
            operator_trace: Vec::new(),
            fitness_trace: Vec::new(),
        }
    }
}

/// Budget tracking shared by both engines.
pub(crate) struct Budget {
    start: Instant,
    timeout: Duration,
    max_queries: Option<u64>,
    base_queries: u64,
}

impl Budget {
    pub(crate) fn new(timeout: Duration, max_queries: Option<u64>, oracle: &ModelPairOracle<'_>) -> Self {
        Budget {
            start: Instant::now(),
            timeout,
            max_queries,
            base_queries: oracle.queries(),
        }
    }

    pub(crate) fn used(&self, oracle: &ModelPairOracle<'_>) -> u64 {
        oracle.queries() - self.base_queries
    }

    pub(crate) fn exhausted(&self, oracle: &ModelPairOracle<'_>) -> bool {
        matches!(self.max_queries, Some(max) if self.used(oracle) >= max)
            || self.start.elapsed() >= self.timeout
    }

    pub(crate) fn finish(&self, report: &mut TrialReport, oracle: &ModelPairOracle<'_>) {
        report.queries = self.used(oracle);
        report.elapsed = self.start.elapsed();
    }
}

pub(crate) fn check_seed(oracle: &ModelPairOracle<'_>, seed: &Tensor) -> Result<()> {
    if seed.shape() != oracle.input_shape() {
        return Err(Error::contract(format!(
            "seed shape {:?} does not match model input {:?}",
            seed.shape(),
            oracle.input_shape()
        )));
    }
    Ok(())
}

fn project(x: &mut Tensor, seed: &Tensor, budget: Option<f64>) {
    if let Some(b) = budget {
        let center = seed.data();
        let mut i = 0;
        x.map_clamped(|values| {
            for v in values.iter_mut() {
                *v = v.clamp(center[i] - b, center[i] + b);
                i += 1;
            }
        });
    }
}

/// Searches for an input on which the two models' top-1 labels differ,
/// starting from `seed`, with a fresh state store.
///
/// `pool` counters are updated in place; pass [`OperatorPool::fresh`] for an
/// independent run.
pub fn run_trigger_search(
    oracle: &mut ModelPairOracle<'_>,
    seed: &Tensor,
    pool: &mut OperatorPool,
    config: &SearchConfig,
) -> Result<TrialReport> {
    let mut store = StateStore::new(config.nn_radius);
    run_trigger_search_with_store(oracle, seed, pool, config, &mut store)
}

/// As [`run_trigger_search`], but observed states accumulate in `store`,
/// which may carry states over from earlier searches.
pub fn run_trigger_search_with_store(
    oracle: &mut ModelPairOracle<'_>,
    seed: &Tensor,
    pool: &mut OperatorPool,
    config: &SearchConfig,
    store: &mut StateStore,
) -> Result<TrialReport> {
    config.validate()?;
    check_seed(oracle, seed)?;
    let budget = Budget::new(config.timeout(), config.max_queries, oracle);
    let mut report = TrialReport::new();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let score = |obs: &Observation, store: &mut StateStore| -> f64 {
        let d = distance(&obs.original, &obs.compressed);
        match config.mode {
            SearchMode::DistanceOnly => d,
            _ => fitness(d, store.observe(obs.state_point()), config.delta),
        }
    };

    let first = oracle.query(seed)?;
    if first.triggers() {
        report.success = true;
        report.trigger = Some(seed.clone());
        report.outputs = Some(first);
        budget.finish(&mut report, oracle);
        return Ok(report);
    }
    let mut best_input = seed.clone();
    let mut best_fitness = score(&first, store);

    let mut op = pool.random_id(&mut rng);
    while !budget.exhausted(oracle) {
        let mut x = pool.get(op).apply(&best_input, &mut rng);
        project(&mut x, seed, config.linf_budget);
        pool.get_mut(op).record_applied();
        let obs = oracle.query(&x)?;
        report.iterations += 1;
        report.operator_trace.push(op);

        if obs.triggers() {
            report.success = true;
            report.trigger = Some(x);
            report.outputs = Some(obs);
            report.fitness_trace.push(best_fitness);
            break;
        }
        let h = score(&obs, store);
        if h >= best_fitness {
            best_input = x;
            best_fitness = h;
            pool.get_mut(op).record_improved();
        }
        report.fitness_trace.push(best_fitness);

        op = match config.mode {
            SearchMode::RandomOps => pool.random_id(&mut rng),
            _ => select_operator(pool, op, &mut rng),
        };
    }
    budget.finish(&mut report, oracle);
    Ok(report)
}
