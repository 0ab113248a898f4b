//! Seeded synthetic image classes and an in-repo toy model pair, so every
//! experiment runs without external downloads.
//!
//! Each class owns a prototype made of a few Gaussian blobs at fixed
//! positions. Samples jitter blob centers and amplitudes and add pixel noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::compress::{prune_model, quantize_model};
use crate::error::Result;
use crate::idx::LabeledDataset;
use crate::model::Model;
use crate::nn::{accuracy, train_mlp, TrainConfig};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticConfig {
    pub classes: usize,
    /// Images are `side x side`, stored as `[1, side, side]`.
    pub side: usize,
    pub blobs_per_class: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    /// Maximum displacement of a blob center, in pixels.
    pub jitter: f64,
    pub noise: f64,
    pub seed: u64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            classes: 10,
            side: 10,
            blobs_per_class: 3,
            train_per_class: 200,
            test_per_class: 100,
            jitter: 1.0,
            noise: 0.05,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Blob {
    row: f64,
    col: f64,
    sigma: f64,
    amplitude: f64,
}

fn prototypes(config: &SyntheticConfig, rng: &mut ChaCha8Rng) -> Vec<Vec<Blob>> {
    let hi = (config.side as f64 - 1.0).max(0.0);
    (0..config.classes)
        .map(|_| {
            (0..config.blobs_per_class)
                .map(|_| Blob {
                    row: rng.random_range(0.0..=hi),
                    col: rng.random_range(0.0..=hi),
                    sigma: rng.random_range(0.9..1.8),
                    amplitude: rng.random_range(0.6..1.0),
                })
                .collect()
        })
        .collect()
}

fn render(config: &SyntheticConfig, blobs: &[Blob], rng: &mut ChaCha8Rng) -> Tensor {
    let side = config.side;
    let jittered: Vec<Blob> = blobs
        .iter()
        .map(|b| Blob {
            row: b.row + rng.random_range(-config.jitter..=config.jitter),
            col: b.col + rng.random_range(-config.jitter..=config.jitter),
            sigma: b.sigma,
            amplitude: b.amplitude * rng.random_range(0.75..1.1),
        })
        .collect();
    let noise = Normal::new(0.0, config.noise.max(0.0)).expect("finite noise level");
    let mut data = Vec::with_capacity(side * side);
    for r in 0..side {
        for c in 0..side {
            let v: f64 = jittered
                .iter()
                .map(|b| {
                    let d2 = (r as f64 - b.row).powi(2) + (c as f64 - b.col).powi(2);
                    b.amplitude * (-d2 / (2.0 * b.sigma * b.sigma)).exp()
                })
                .sum();
            data.push((v + noise.sample(rng)).clamp(0.0, 1.0));
        }
    }
    Tensor::new(vec![1, side, side], data).expect("side is positive")
}

/// Deterministic `(train, test)` split, classes interleaved.
pub fn generate(config: &SyntheticConfig) -> Result<(LabeledDataset, LabeledDataset)> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let protos = prototypes(config, &mut rng);
    let mut split = |per_class: usize| {
        let mut images = Vec::with_capacity(per_class * config.classes);
        let mut labels = Vec::with_capacity(per_class * config.classes);
        for _ in 0..per_class {
            for (class, blobs) in protos.iter().enumerate() {
                images.push(render(config, blobs, &mut rng));
                labels.push(class);
            }
        }
        LabeledDataset::new(images, labels, config.classes)
    };
    let train = split(config.train_per_class)?;
    let test = split(config.test_per_class)?;
    Ok((train, test))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToyConfig {
    pub data: SyntheticConfig,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub train_seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            data: SyntheticConfig::default(),
            hidden: vec![64],
            epochs: 5,
            learning_rate: 0.1,
            batch_size: 32,
            train_seed: 1,
        }
    }
}

impl ToyConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            seed: self.train_seed,
        }
    }
}

/// A trained synthetic-data MLP and its compressed variants.
#[derive(Debug, Clone)]
pub struct ToyPair {
    pub train: LabeledDataset,
    pub test: LabeledDataset,
    pub original: Model,
    pub quantized: Model,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
}

impl ToyPair {
    pub fn build(config: &ToyConfig) -> Result<Self> {
        let (train, test) = generate(&config.data)?;
        let trained = train_mlp(&train, &config.hidden, &config.train_config(), "toy-mlp")?;
        let test_accuracy = accuracy(&trained.model, &test)?;
        let quantized = quantize_model(&trained.model)?;
        Ok(ToyPair {
            train,
            test,
            original: trained.model,
            quantized,
            train_accuracy: trained.train_accuracy,
            test_accuracy,
        })
    }

    pub fn pruned(&self, sparsity: f64) -> Result<Model> {
        prune_model(&self.original, sparsity)
    }
}
