//! The population-based baseline on the same seed as `trigger_search`, for a
//! side-by-side query count.

use compdiff::bench::select_seeds;
use compdiff::genetic::{run_genetic_search, GeneticConfig};
use compdiff::mutation::OperatorPool;
use compdiff::search::{run_trigger_search, ModelPairOracle, SearchConfig};
use compdiff::synthetic::{ToyConfig, ToyPair};

fn main() -> compdiff::Result<()> {
    let pair = ToyPair::build(&ToyConfig::default())?;
    let seeds = select_seeds(&pair.test, &pair.original, &pair.quantized, 1, 3)?;
    let seed = &seeds[4];

    let mut oracle = ModelPairOracle::new(&pair.original, &pair.quantized)?;
    let config = GeneticConfig {
        seed: 11,
        ..GeneticConfig::default()
    };
    let genetic = run_genetic_search(&mut oracle, &seed.input, &mut OperatorPool::default_pool(), &config)?;
    println!(
        "genetic: success={} queries={} generations={}",
        genetic.success, genetic.queries, genetic.iterations
    );
    if let (Some(first), Some(last)) = (genetic.fitness_trace.first(), genetic.fitness_trace.last()) {
        println!("best k-uncertainty {first:.4} -> {last:.4}");
    }

    let mut oracle = ModelPairOracle::new(&pair.original, &pair.quantized)?;
    let search = SearchConfig {
        seed: 11,
        ..SearchConfig::default()
    };
    let guided = run_trigger_search(&mut oracle, &seed.input, &mut OperatorPool::default_pool(), &search)?;
    println!("fitness-guided: success={} queries={}", guided.success, guided.queries);
    Ok(())
}
