//! End-to-end experiment driven by an `ExperimentSpec`: save models, select
//! seeds, run every trial, write trials.csv, summary.toml and histogram.csv.

use compdiff::bench::{read_trials, run_experiment, Aggregates, ExperimentSpec, TRIALS_FILE};
use compdiff::format::save_model;
use compdiff::synthetic::{ToyConfig, ToyPair};

fn main() -> compdiff::Result<()> {
    let dir = std::env::temp_dir().join("compdiff-bench");
    let pair = ToyPair::build(&ToyConfig::default())?;
    save_model(&pair.original, dir.join("original"))?;
    save_model(&pair.quantized, dir.join("quantized"))?;

    let mut spec = ExperimentSpec::from_toml(
        r#"
        seeds_per_class = 5
        repetitions = 2
        [search]
        max_queries = 20000
        "#,
    )?;
    spec.original = dir.join("original");
    spec.compressed = dir.join("quantized");
    spec.output_dir = dir.join("out");

    let report = run_experiment(&spec)?;
    print!("{}", report.histogram().to_table());

    // The summary is reproducible from the CSV alone.
    let records = read_trials(spec.output_dir.join(TRIALS_FILE))?;
    assert_eq!(Aggregates::from_records(&records), report.aggregates);
    println!(
        "{}: {}/{} trials succeeded, reports in {}",
        report.engine,
        report.aggregates.successes,
        report.aggregates.trials,
        spec.output_dir.display()
    );
    Ok(())
}
