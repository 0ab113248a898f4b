//! Compares the full search with its two ablations over the same seeds:
//! distance-only fitness, and uniformly random operator choice.

use compdiff::bench::{median, select_seeds, trial_seed};
use compdiff::mutation::OperatorPool;
use compdiff::search::{run_trigger_search, ModelPairOracle, SearchConfig, SearchMode};
use compdiff::synthetic::{ToyConfig, ToyPair};

fn main() -> compdiff::Result<()> {
    let pair = ToyPair::build(&ToyConfig::default())?;
    let seeds = select_seeds(&pair.test, &pair.original, &pair.quantized, 5, 0)?;
    for mode in [SearchMode::Full, SearchMode::DistanceOnly, SearchMode::RandomOps] {
        let mut queries = Vec::new();
        for seed in &seeds {
            let mut oracle = ModelPairOracle::new(&pair.original, &pair.quantized)?;
            let config = SearchConfig {
                mode,
                max_queries: Some(20_000),
                seed: trial_seed(0, seed.id, 0),
                ..SearchConfig::default()
            };
            let r = run_trigger_search(&mut oracle, &seed.input, &mut OperatorPool::default_pool(), &config)?;
            if r.success {
                queries.push(r.queries as f64);
            }
        }
        println!(
            "{:<14} {:>3}/{} found, median queries {:?}",
            mode.label(),
            queries.len(),
            seeds.len(),
            median(&queries)
        );
    }
    Ok(())
}
