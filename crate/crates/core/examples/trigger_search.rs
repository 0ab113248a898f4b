//! Runs one search from a seed the two models agree on and shows the input it
//! finds.

use compdiff::bench::select_seeds;
use compdiff::mutation::OperatorPool;
use compdiff::search::{run_trigger_search, ModelPairOracle, SearchConfig};
use compdiff::synthetic::{ToyConfig, ToyPair};
use compdiff::Classifier;

fn main() -> compdiff::Result<()> {
    let pair = ToyPair::build(&ToyConfig::default())?;
    let seeds = select_seeds(&pair.test, &pair.original, &pair.quantized, 1, 3)?;
    let seed = &seeds[4];

    let mut oracle = ModelPairOracle::new(&pair.original, &pair.quantized)?;
    let mut pool = OperatorPool::default_pool();
    let config = SearchConfig {
        seed: 11,
        ..SearchConfig::default()
    };
    let report = run_trigger_search(&mut oracle, &seed.input, &mut pool, &config)?;

    println!(
        "seed {} (label {}): success={} after {} queries",
        seed.index, seed.label, report.success, report.queries
    );
    if let Some(x) = &report.trigger {
        let f = pair.original.predict(x)?;
        let g = pair.quantized.predict(x)?;
        println!("original  -> {} ({:.4})", f.label(), f.top1().1);
        println!("quantized -> {} ({:.4})", g.label(), g.top1().1);
        let linf = x
            .data()
            .iter()
            .zip(seed.input.data())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        println!("L-inf distance from seed: {linf:.3}");
    }
    for op in pool.operators() {
        println!(
            "{:<22} applied {:>4} improved {:>4}",
            op.name(),
            op.applied(),
            op.improved()
        );
    }
    Ok(())
}
