//! Post-training compression: per-tensor 8-bit affine quantization and
//! unstructured magnitude pruning.

use crate::error::{Error, Result};
use crate::model::{Model, ParamRole};

/// Asymmetric per-tensor affine mapping onto `u8`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuantScheme {
    pub scale: f64,
    pub zero_point: i32,
}

impl QuantScheme {
    pub const LEVELS: u32 = 255;

    /// Fits `[min, max]` of `values`. `None` for empty or constant tensors,
    /// which pass through unquantized.
    pub fn fit(values: &[f64]) -> Option<Self> {
        let (min, max) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        if !(max > min) {
            return None;
        }
        let scale = (max - min) / f64::from(Self::LEVELS);
        // Not clamped to the code range: tensors that exclude zero still map
        // min to code 0 and max to code 255.
        let zero_point = (-min / scale).round_ties_even() as i32;
        Some(QuantScheme { scale, zero_point })
    }

    pub fn quantize(&self, v: f64) -> u8 {
        ((v / self.scale).round_ties_even() + f64::from(self.zero_point))
            .clamp(0.0, f64::from(Self::LEVELS)) as u8
    }

    pub fn dequantize(&self, q: u8) -> f64 {
        f64::from(i32::from(q) - self.zero_point) * self.scale
    }
}

/// Replaces each value by `dequantize(quantize(v))`; constant tensors are
/// returned unchanged.
pub fn fake_quantize(values: &[f64]) -> Vec<f64> {
    match QuantScheme::fit(values) {
        Some(s) => values.iter().map(|&v| s.dequantize(s.quantize(v))).collect(),
        None => values.to_vec(),
    }
}

/// Simulated 8-bit quantization of every weight and bias tensor.
///
/// The result keeps float arithmetic; only the parameters carry the
/// quantization error.
pub fn quantize_model(model: &Model) -> Result<Model> {
    let mut out = model.clone();
    out.map_params(|_, values| {
        let wide: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
        for (dst, src) in values.iter_mut().zip(fake_quantize(&wide)) {
            *dst = src as f32;
        }
    })?;
    out.set_name(format!("{}-q8", model.name()));
    Ok(out)
}

/// Flat indices that magnitude pruning at `sparsity` zeroes, in pruning
/// order. Equal magnitudes are pruned lower index first.
pub fn prune_indices(values: &[f32], sparsity: f64) -> Result<Vec<usize>> {
    check_sparsity(sparsity)?;
    let count = (sparsity * values.len() as f64).floor() as usize;
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].abs().total_cmp(&values[b].abs()).then(a.cmp(&b)));
    order.truncate(count);
    Ok(order)
}

pub fn prune_tensor(values: &mut [f32], sparsity: f64) -> Result<()> {
    for i in prune_indices(values, sparsity)? {
        values[i] = 0.0;
    }
    Ok(())
}

/// Zeroes the `sparsity` fraction of smallest-magnitude weights in each
/// weight tensor. Biases are left alone.
pub fn prune_model(model: &Model, sparsity: f64) -> Result<Model> {
    check_sparsity(sparsity)?;
    let mut out = model.clone();
    out.map_params(|role, values| {
        if role == ParamRole::Weights {
            prune_tensor(values, sparsity).expect("sparsity checked above");
        }
    })?;
    out.set_name(format!("{}-p{:02}", model.name(), (sparsity * 100.0).round() as u32));
    Ok(out)
}

fn check_sparsity(sparsity: f64) -> Result<()> {
    if (0.0..1.0).contains(&sparsity) {
        Ok(())
    } else {
        Err(Error::contract(format!("sparsity {sparsity} outside [0, 1)")))
    }
}
