//! Trains the synthetic-data MLP, quantizes it and saves both models.
//!
//! cargo run --release --example train_toy_pair [-- OUT_DIR]

use compdiff::format::{load_model, save_model};
use compdiff::synthetic::{ToyConfig, ToyPair};

fn main() -> compdiff::Result<()> {
    let out = std::env::args()
        .nth(1)
        .map(Into::into)
        .unwrap_or_else(|| std::env::temp_dir().join("compdiff-toy"));
    std::fs::create_dir_all(&out).map_err(|e| compdiff::Error::Io {
        path: out.clone(),
        source: e,
    })?;

    let pair = ToyPair::build(&ToyConfig::default())?;
    println!(
        "{}: {} parameters, train accuracy {:.4}, test accuracy {:.4}",
        pair.original.name(),
        pair.original.parameter_count(),
        pair.train_accuracy,
        pair.test_accuracy
    );

    save_model(&pair.original, out.join("original"))?;
    save_model(&pair.quantized, out.join("quantized"))?;
    // Loading gives back exactly what was saved.
    assert_eq!(load_model(out.join("quantized"))?, pair.quantized);
    println!("saved original and quantized models under {}", out.display());
    Ok(())
}
