//! Compresses a model two ways and measures how often the variants agree with
//! the original on the test split.

use compdiff::compress::{prune_model, quantize_model, QuantScheme};
use compdiff::model::ParamRole;
use compdiff::synthetic::{ToyConfig, ToyPair};
use compdiff::{Classifier, Model};

fn agreement(f: &Model, g: &Model, inputs: &[compdiff::Tensor]) -> compdiff::Result<f64> {
    let mut same = 0;
    for x in inputs {
        if f.predict(x)?.label() == g.predict(x)?.label() {
            same += 1;
        }
    }
    Ok(same as f64 / inputs.len() as f64)
}

fn main() -> compdiff::Result<()> {
    let pair = ToyPair::build(&ToyConfig::default())?;
    let test = &pair.test.images;

    let mut original = pair.original.clone();
    let mut worst = 0.0f64;
    original.map_params(|_, w| {
        let values: Vec<f64> = w.iter().map(|&v| v as f64).collect();
        if let Some(s) = QuantScheme::fit(&values) {
            for &v in &values {
                let err = (v - s.dequantize(s.quantize(v))).abs() / s.scale;
                worst = worst.max(err);
            }
        }
    })?;
    println!("worst quantization error: {worst:.4} x scale (bound 0.5)");

    let q = quantize_model(&pair.original)?;
    println!("{}: agreement {:.4}", q.name(), agreement(&pair.original, &q, test)?);

    for sparsity in [0.3, 0.6, 0.9] {
        let mut p = prune_model(&pair.original, sparsity)?;
        let mut zeros = 0;
        let mut total = 0;
        p.map_params(|role, w| {
            if role == ParamRole::Weights {
                zeros += w.iter().filter(|v| **v == 0.0).count();
                total += w.len();
            }
        })?;
        println!(
            "{}: {zeros}/{total} weights zeroed, agreement {:.4}",
            p.name(),
            agreement(&pair.original, &p, test)?
        );
    }
    Ok(())
}
