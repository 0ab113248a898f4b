//! Command-line front end. Exit codes: 0 success, 1 usage or configuration
//! error, 2 data or model error, 3 experiment-level failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use compdiff::bench::{
    read_trials, run_experiment, select_seeds, Aggregates, ExperimentSpec, Histogram, TRIALS_FILE,
};
use compdiff::compress::{prune_model, quantize_model};
use compdiff::format::{load_model, save_model};
use compdiff::idx::{save_idx_dataset, LabeledDataset};
use compdiff::mutation::OperatorPool;
use compdiff::nn::{accuracy, train_mlp, TrainConfig};
use compdiff::search::{run_trigger_search, ModelPairOracle, SearchConfig, SearchMode};
use compdiff::synthetic::{self, SyntheticConfig};
use compdiff::{Classifier, Error};

#[derive(Parser)]
#[command(name = "compdiff", version, about = "Find inputs where a model and its compressed variant disagree")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct DataArgs {
    /// IDX image file; the built-in synthetic dataset is used when omitted.
    #[arg(long, requires = "labels")]
    images: Option<PathBuf>,
    #[arg(long, requires = "images")]
    labels: Option<PathBuf>,
}

impl DataArgs {
    /// IDX files if given, else the synthetic train or test split.
    fn load(&self, train_split: bool) -> compdiff::Result<LabeledDataset> {
        match (&self.images, &self.labels) {
            (Some(i), Some(l)) => LabeledDataset::load_idx(i, l),
            _ => {
                let (train, test) = synthetic::generate(&SyntheticConfig::default())?;
                Ok(if train_split { train } else { test })
            }
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train a dense classifier and save it.
    Train {
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_delimiter = ',', default_value = "64")]
        hidden: Vec<usize>,
        #[arg(long, default_value_t = 5)]
        epochs: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 32)]
        batch: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Also write the synthetic train/test splits as IDX files here.
        #[arg(long)]
        dataset_out: Option<PathBuf>,
    },
    /// 8-bit affine quantization of every parameter tensor.
    Quantize {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Magnitude pruning of weight tensors.
    Prune {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        sparsity: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// List inputs on which both models agree, `per-class` from every class.
    SelectSeeds {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        compressed: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long, default_value_t = 50)]
        per_class: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Search from one dataset input.
    Fuzz {
        #[arg(long)]
        original: PathBuf,
        #[arg(long)]
        compressed: PathBuf,
        #[command(flatten)]
        data: DataArgs,
        #[arg(long)]
        index: usize,
        #[arg(long, value_enum, default_value = "full")]
        mode: ModeArg,
        #[arg(long, default_value_t = 100_000)]
        max_queries: u64,
        #[arg(long, default_value_t = 240.0)]
        timeout: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Run a benchmark described by a TOML experiment spec.
    Bench {
        /// Experiment spec; omit with --print-default to get a template.
        #[arg(long, required_unless_present = "print_default")]
        spec: Option<PathBuf>,
        #[arg(long)]
        print_default: bool,
    },
    /// Recompute aggregates from a trials CSV (or a directory holding one).
    Report {
        path: PathBuf,
    },
    /// Log2 histogram of query counts from a trials CSV.
    Histogram {
        path: PathBuf,
    },
}

#[derive(Clone, Copy, clap::ValueEnum)]
enum ModeArg {
    Full,
    DistanceOnly,
    RandomOps,
}

impl From<ModeArg> for SearchMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Full => SearchMode::Full,
            ModeArg::DistanceOnly => SearchMode::DistanceOnly,
            ModeArg::RandomOps => SearchMode::RandomOps,
        }
    }
}

enum Failure {
    Lib(Error),
    Experiment(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn trials_path(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(TRIALS_FILE)
    } else {
        path.to_path_buf()
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Train {
            data,
            out,
            hidden,
            epochs,
            lr,
            batch,
            seed,
            dataset_out,
        } => {
            let train = data.load(true)?;
            let config = TrainConfig {
                epochs,
                learning_rate: lr,
                batch_size: batch,
                seed,
            };
            let name = out
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "model".into());
            let trained = train_mlp(&train, &hidden, &config, &name)?;
            save_model(&trained.model, &out)?;
            println!("train_accuracy = {:.4}", trained.train_accuracy);
            if data.images.is_none() {
                let test = data.load(false)?;
                println!("test_accuracy = {:.4}", accuracy(&trained.model, &test)?);
            }
            if let Some(dir) = dataset_out {
                fs::create_dir_all(&dir).map_err(|e| Error::Io {
                    path: dir.clone(),
                    source: e,
                })?;
                let (train, test) = synthetic::generate(&SyntheticConfig::default())?;
                save_idx_dataset(&train, dir.join("train-images.idx"), dir.join("train-labels.idx"))?;
                save_idx_dataset(&test, dir.join("test-images.idx"), dir.join("test-labels.idx"))?;
            }
        }
        Command::Quantize { model, out } => {
            save_model(&quantize_model(&load_model(&model)?)?, &out)?;
        }
        Command::Prune {
            model,
            sparsity,
            out,
        } => {
            save_model(&prune_model(&load_model(&model)?, sparsity)?, &out)?;
        }
        Command::SelectSeeds {
            original,
            compressed,
            data,
            per_class,
            seed,
            out,
        } => {
            let f = load_model(&original)?;
            let g = load_model(&compressed)?;
            let seeds = select_seeds(&data.load(false)?, &f, &g, per_class, seed)?;
            let mut text = String::from("seed_id,index,label\n");
            for s in &seeds {
                text.push_str(&format!("{},{},{}\n", s.id, s.index, s.label));
            }
            match out {
                Some(path) => fs::write(&path, text).map_err(|e| Error::Io { path, source: e })?,
                None => print!("{text}"),
            }
        }
        Command::Fuzz {
            original,
            compressed,
            data,
            index,
            mode,
            max_queries,
            timeout,
            seed,
        } => {
            let f = load_model(&original)?;
            let g = load_model(&compressed)?;
            let dataset = data.load(false)?;
            let x = dataset.images.get(index).ok_or_else(|| {
                Error::Contract(format!("index {index} outside dataset of {}", dataset.len()))
            })?;
            let config = SearchConfig {
                mode: mode.into(),
                max_queries: Some(max_queries),
                timeout_secs: timeout,
                seed,
                ..SearchConfig::default()
            };
            let mut oracle = ModelPairOracle::new(&f, &g)?;
            let mut pool = OperatorPool::default_pool();
            let report = run_trigger_search(&mut oracle, x, &mut pool, &config)?;
            println!("success = {}", report.success);
            println!("queries = {}", report.queries);
            println!("elapsed_ms = {:.3}", report.elapsed.as_secs_f64() * 1e3);
            if let Some(trigger) = &report.trigger {
                println!("original_label = {}", f.predict(trigger)?.label());
                println!("compressed_label = {}", g.predict(trigger)?.label());
            }
        }
        Command::Bench {
            spec,
            print_default,
        } => {
            if print_default {
                print!("{}", ExperimentSpec::default().to_toml()?);
                return Ok(());
            }
            let spec = ExperimentSpec::load(spec.expect("clap enforces --spec"))?;
            let report = match run_experiment(&spec) {
                Ok(r) => r,
                Err(e @ Error::InsufficientSeeds { .. }) => {
                    return Err(Failure::Experiment(e.to_string()))
                }
                Err(e) => return Err(e.into()),
            };
            let a = &report.aggregates;
            println!(
                "{}: {}/{} successful, reports in {}",
                report.engine,
                a.successes,
                a.trials,
                spec.output_dir.display()
            );
            if !report.failures.is_empty() {
                return Err(Failure::Experiment(format!(
                    "{} trials failed, first: {}",
                    report.failures.len(),
                    report.failures[0].message
                )));
            }
        }
        Command::Report { path } => {
            let records = read_trials(trials_path(&path))?;
            let a = Aggregates::from_records(&records);
            print!(
                "{}",
                toml::to_string_pretty(&a).map_err(|e| Error::Config(e.to_string()))?
            );
        }
        Command::Histogram { path } => {
            print!("{}", Histogram::from_records(&read_trials(trials_path(&path))?).to_table());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Config(_) => 1,
                Error::InsufficientSeeds { .. } => 3,
                _ => 2,
            })
        }
        Err(Failure::Experiment(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
