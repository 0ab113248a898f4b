//! Experiment driver: seed selection, per-seed trials across repetitions,
//! and the CSV/summary/histogram reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::format::load_model;
use crate::genetic::{run_genetic_search, GeneticConfig};
use crate::idx::LabeledDataset;
use crate::mutation::{MutationKind, OperatorPool};
use crate::nn::Classifier;
use crate::search::{run_trigger_search, ModelPairOracle, SearchConfig, TrialReport};
use crate::synthetic::{self, SyntheticConfig};
use crate::tensor::Tensor;

pub const TRIALS_FILE: &str = "trials.csv";
pub const SUMMARY_FILE: &str = "summary.toml";
pub const HISTOGRAM_FILE: &str = "histogram.csv";

const AGGREGATION_NOTE: &str =
    "pooled over all seeds and repetitions; time and query statistics cover successful trials only";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Trigger,
    Genetic,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case", deny_unknown_fields)]
pub enum DatasetSource {
    /// Test split of the seeded synthetic generator.
    Synthetic(SyntheticConfig),
    Idx { images: PathBuf, labels: PathBuf },
}

impl Default for DatasetSource {
    fn default() -> Self {
        DatasetSource::Synthetic(SyntheticConfig::default())
    }
}

impl DatasetSource {
    pub fn load(&self) -> Result<LabeledDataset> {
        match self {
            DatasetSource::Synthetic(cfg) => Ok(synthetic::generate(cfg)?.1),
            DatasetSource::Idx { images, labels } => LabeledDataset::load_idx(images, labels),
        }
    }
}

/// Everything needed to reproduce one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSpec {
    pub original: PathBuf,
    pub compressed: PathBuf,
    pub dataset: DatasetSource,
    pub seeds_per_class: usize,
    pub repetitions: usize,
    pub engine: Engine,
    pub search: SearchConfig,
    pub genetic: GeneticConfig,
    pub operators: Vec<MutationKind>,
    pub output_dir: PathBuf,
    /// Root of every per-trial random stream.
    pub experiment_seed: u64,
    /// Worker threads; 0 uses all available cores.
    pub threads: usize,
    /// When false, `time_ms` is left empty so reports are byte-reproducible.
    pub record_time: bool,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        ExperimentSpec {
            original: PathBuf::from("original"),
            compressed: PathBuf::from("compressed"),
            dataset: DatasetSource::default(),
            seeds_per_class: 50,
            repetitions: 5,
            engine: Engine::Trigger,
            search: SearchConfig::default(),
            genetic: GeneticConfig::default(),
            operators: MutationKind::default_pool(),
            output_dir: PathBuf::from("out"),
            experiment_seed: 0,
            threads: 0,
            record_time: true,
        }
    }
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_toml(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds_per_class == 0 {
            return Err(Error::Config("seeds_per_class must be positive".into()));
        }
        if self.repetitions == 0 {
            return Err(Error::Config("repetitions must be positive".into()));
        }
        if self.operators.is_empty() {
            return Err(Error::Config("operator list must not be empty".into()));
        }
        self.search.validate()?;
        self.genetic.validate()
    }

    pub fn engine_label(&self) -> String {
        match self.engine {
            Engine::Trigger => format!("trigger-{}", self.search.mode.label()),
            Engine::Genetic => "genetic".to_string(),
        }
    }
}

/// A verified non-triggering input chosen for a search.
#[derive(Debug, Clone, PartialEq)]
pub struct Seed {
    pub id: usize,
    /// Position in the source dataset.
    pub index: usize,
    pub label: usize,
    pub input: Tensor,
}

/// Draws `per_class` inputs from every class on which both models agree.
pub fn select_seeds(
    dataset: &LabeledDataset,
    original: &dyn Classifier,
    compressed: &dyn Classifier,
    per_class: usize,
    rng_seed: u64,
) -> Result<Vec<Seed>> {
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.classes];
    for (i, (x, &label)) in dataset.images.iter().zip(&dataset.labels).enumerate() {
        if original.predict(x)?.label() == compressed.predict(x)?.label() {
            by_class[label].push(i);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut seeds = Vec::with_capacity(per_class * dataset.classes);
    for (class, mut candidates) in by_class.into_iter().enumerate() {
        if candidates.len() < per_class {
            return Err(Error::InsufficientSeeds {
                class,
                available: candidates.len(),
                requested: per_class,
            });
        }
        candidates.shuffle(&mut rng);
        for &index in &candidates[..per_class] {
            seeds.push(Seed {
                id: seeds.len(),
                index,
                label: class,
                input: dataset.images[index].clone(),
            });
        }
    }
    Ok(seeds)
}

/// Per-trial stream seed derived from the experiment seed, seed id and
/// repetition (SplitMix64 finalizer over the combined words).
pub fn trial_seed(experiment_seed: u64, seed_id: usize, repetition: usize) -> u64 {
    let mut z = experiment_seed
        ^ (seed_id as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (repetition as u64).wrapping_mul(0xD1B5_4A32_D192_ED03);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// One row of `trials.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub seed_id: usize,
    pub repetition: usize,
    pub engine: String,
    pub success: bool,
    pub queries: u64,
    pub time_ms: Option<f64>,
    pub iterations: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub seed_id: usize,
    pub repetition: usize,
    pub message: String,
}

/// Aggregate metrics; time and query statistics over successful trials only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregates {
    pub trials: usize,
    pub successes: usize,
    pub success_rate: f64,
    pub mean_time_ms: Option<f64>,
    pub median_time_ms: Option<f64>,
    pub mean_queries: Option<f64>,
    pub median_queries: Option<f64>,
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Middle value; the average of the two middle values for even counts.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

impl Aggregates {
    pub fn from_records(records: &[TrialRecord]) -> Self {
        let ok: Vec<&TrialRecord> = records.iter().filter(|r| r.success).collect();
        let queries: Vec<f64> = ok.iter().map(|r| r.queries as f64).collect();
        let times: Vec<f64> = ok.iter().filter_map(|r| r.time_ms).collect();
        Aggregates {
            trials: records.len(),
            successes: ok.len(),
            success_rate: if records.is_empty() {
                0.0
            } else {
                ok.len() as f64 / records.len() as f64
            },
            mean_time_ms: mean(&times),
            median_time_ms: median(&times),
            mean_queries: mean(&queries),
            median_queries: median(&queries),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSummary {
    pub engine: String,
    pub aggregation: String,
    /// `"ok"`, or `"no successes"` when time/query aggregates are empty.
    pub status: String,
    pub aggregates: Aggregates,
    pub failures: Vec<TrialFailure>,
}

#[derive(Debug, Clone)]
pub struct BenchReport {
    pub records: Vec<TrialRecord>,
    pub reports: Vec<TrialReport>,
    pub failures: Vec<TrialFailure>,
    pub aggregates: Aggregates,
    pub engine: String,
}

impl BenchReport {
    pub fn summary(&self) -> BenchSummary {
        BenchSummary {
            engine: self.engine.clone(),
            aggregation: AGGREGATION_NOTE.to_string(),
            status: if self.aggregates.successes == 0 {
                "no successes".into()
            } else {
                "ok".into()
            },
            aggregates: self.aggregates.clone(),
            failures: self.failures.clone(),
        }
    }

    pub fn trials_csv(&self) -> Result<String> {
        trials_to_csv(&self.records)
    }

    pub fn histogram(&self) -> Histogram {
        Histogram::from_records(&self.records)
    }

    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, text: String| {
            let path = dir.join(name);
            fs::write(&path, text).map_err(|e| Error::io(path, e))
        };
        put(TRIALS_FILE, self.trials_csv()?)?;
        put(
            SUMMARY_FILE,
            toml::to_string_pretty(&self.summary()).map_err(|e| Error::Config(e.to_string()))?,
        )?;
        put(HISTOGRAM_FILE, self.histogram().to_table())
    }
}

pub fn trials_to_csv(records: &[TrialRecord]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Config(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn trials_from_csv(text: &str) -> Result<Vec<TrialRecord>> {
    csv::Reader::from_reader(text.as_bytes())
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

pub fn read_trials(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    trials_from_csv(&fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

fn run_trial(
    original: &dyn Classifier,
    compressed: &dyn Classifier,
    seed: &Seed,
    repetition: usize,
    spec: &ExperimentSpec,
    pool: &OperatorPool,
) -> Result<TrialReport> {
    let mut oracle = ModelPairOracle::new(original, compressed)?;
    let mut pool = pool.fresh();
    let stream = trial_seed(spec.experiment_seed, seed.id, repetition);
    match spec.engine {
        Engine::Trigger => {
            let config = SearchConfig {
                seed: stream,
                ..spec.search.clone()
            };
            run_trigger_search(&mut oracle, &seed.input, &mut pool, &config)
        }
        Engine::Genetic => {
            let config = GeneticConfig {
                seed: stream,
                ..spec.genetic.clone()
            };
            run_genetic_search(&mut oracle, &seed.input, &mut pool, &config)
        }
    }
}

/// Runs every seed for every repetition. Trials run in parallel; results are
/// ordered by `(repetition, seed_id)` regardless of scheduling.
pub fn run_benchmark(
    original: &dyn Classifier,
    compressed: &dyn Classifier,
    seeds: &[Seed],
    spec: &ExperimentSpec,
) -> Result<BenchReport> {
    spec.validate()?;
    let pool = OperatorPool::from_kinds(&spec.operators)?;
    let jobs: Vec<(usize, &Seed)> = (0..spec.repetitions)
        .flat_map(|rep| seeds.iter().map(move |s| (rep, s)))
        .collect();
    let execute = || -> Vec<(usize, &Seed, Result<TrialReport>)> {
        jobs.par_iter()
            .map(|&(rep, seed)| (rep, seed, run_trial(original, compressed, seed, rep, spec, &pool)))
            .collect()
    };
    let results = if spec.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(spec.threads)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?
            .install(execute)
    } else {
        execute()
    };

    let engine = spec.engine_label();
    let mut records = Vec::with_capacity(results.len());
    let mut reports = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (repetition, seed, result) in results {
        let report = result.unwrap_or_else(|e| {
            failures.push(TrialFailure {
                seed_id: seed.id,
                repetition,
                message: e.to_string(),
            });
            TrialReport::new()
        });
        records.push(TrialRecord {
            seed_id: seed.id,
            repetition,
            engine: engine.clone(),
            success: report.success,
            queries: report.queries,
            time_ms: spec
                .record_time
                .then(|| (report.elapsed.as_secs_f64() * 1e6).round() / 1e3),
            iterations: report.iterations,
        });
        reports.push(report);
    }
    let aggregates = Aggregates::from_records(&records);
    Ok(BenchReport {
        records,
        reports,
        failures,
        aggregates,
        engine,
    })
}

/// Loads models and dataset named by `spec`, selects seeds, runs the
/// benchmark and writes the reports into `spec.output_dir`.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<BenchReport> {
    spec.validate()?;
    let original = load_model(&spec.original)?;
    let compressed = load_model(&spec.compressed)?;
    let dataset = spec.dataset.load()?;
    let seeds = select_seeds(
        &dataset,
        &original,
        &compressed,
        spec.seeds_per_class,
        spec.experiment_seed,
    )?;
    let report = run_benchmark(&original, &compressed, &seeds, spec)?;
    report.write(&spec.output_dir)?;
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bucket {
    /// Inclusive bounds on the query count.
    pub lower: u64,
    pub upper: u64,
    pub count: usize,
}

/// Query counts of successful trials in power-of-two buckets.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub buckets: Vec<Bucket>,
    pub successes: usize,
    pub mean: Option<f64>,
    pub median: Option<f64>,
}

impl Histogram {
    pub fn from_queries(queries: &[u64]) -> Self {
        let as_f64: Vec<f64> = queries.iter().map(|&q| q as f64).collect();
        let bucket_of = |q: u64| q.max(1).ilog2();
        let buckets = match (
            queries.iter().map(|&q| bucket_of(q)).min(),
            queries.iter().map(|&q| bucket_of(q)).max(),
        ) {
            (Some(lo), Some(hi)) => (lo..=hi)
                .map(|b| Bucket {
                    lower: 1u64 << b,
                    upper: (1u64 << b) * 2 - 1,
                    count: queries.iter().filter(|&&q| bucket_of(q) == b).count(),
                })
                .collect(),
            _ => Vec::new(),
        };
        Histogram {
            buckets,
            successes: queries.len(),
            mean: mean(&as_f64),
            median: median(&as_f64),
        }
    }

    pub fn from_records(records: &[TrialRecord]) -> Self {
        let queries: Vec<u64> = records
            .iter()
            .filter(|r| r.success)
            .map(|r| r.queries)
            .collect();
        Self::from_queries(&queries)
    }

    /// Comment header with the statistics, then `lower,upper,count` rows.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        match (self.mean, self.median) {
            (Some(mean), Some(median)) => {
                let _ = writeln!(
                    out,
                    "# successes={} mean={mean} median={median}",
                    self.successes
                );
            }
            _ => out.push_str("# no successes\n"),
        }
        out.push_str("lower,upper,count\n");
        for b in &self.buckets {
            let _ = writeln!(out, "{},{},{}", b.lower, b.upper, b.count);
        }
        out
    }
}
