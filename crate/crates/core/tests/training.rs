mod common;

use compdiff::idx::LabeledDataset;
use compdiff::nn::{accuracy, loss_gradient, train_mlp, Mlp, Sample, TrainConfig};
use compdiff::synthetic::{generate, SyntheticConfig};
use compdiff::Tensor;
use rand::Rng;

fn batch(seed: u64, n: usize, features: usize, classes: usize) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut r = common::rng(seed);
    let xs = (0..n).map(|_| (0..features).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
    let ys = (0..n).map(|_| r.random_range(0..classes)).collect();
    (xs, ys)
}

#[test]
fn backprop_matches_central_differences() {
    let (xs, ys) = batch(4, 6, 5, 3);
    let samples: Vec<Sample<'_>> = xs.iter().map(Vec::as_slice).zip(ys.iter().copied()).collect();
    let mut mlp = Mlp::init(&[5], &[6, 4], 3, 8);
    // Non-zero biases so ReLU kinks are not all at the same place.
    let mut r = common::rng(12);
    for layer in &mut mlp.layers {
        for b in &mut layer.bias {
            *b = r.random_range(-0.2..0.2);
        }
    }
    let grads = mlp.loss_gradient(&samples).unwrap();
    let h = 1e-4;
    let mut worst: f64 = 0.0;
    for l in 0..mlp.layers.len() {
        for which in 0..2 {
            let n = if which == 0 { mlp.layers[l].weights.len() } else { mlp.layers[l].bias.len() };
            for i in 0..n {
                let mut plus = mlp.clone();
                let mut minus = mlp.clone();
                if which == 0 {
                    plus.layers[l].weights[i] += h;
                    minus.layers[l].weights[i] -= h;
                } else {
                    plus.layers[l].bias[i] += h;
                    minus.layers[l].bias[i] -= h;
                }
                let numeric = (plus.loss(&samples) - minus.loss(&samples)) / (2.0 * h);
                let analytic = if which == 0 { grads[l].weights[i] } else { grads[l].bias[i] };
                let rel = (numeric - analytic).abs() / numeric.abs().max(analytic.abs()).max(1e-8);
                worst = worst.max(rel);
            }
        }
    }
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn gradient_through_a_model_matches_mlp() {
    let (xs, ys) = batch(2, 4, 3, 2);
    let samples: Vec<Sample<'_>> = xs.iter().map(Vec::as_slice).zip(ys.iter().copied()).collect();
    let mlp = Mlp::init(&[3], &[4], 2, 1);
    let model = mlp.to_model("m");
    let from_model = loss_gradient(&model, &samples).unwrap();
    let direct = mlp.loss_gradient(&samples).unwrap();
    for (a, b) in from_model.iter().zip(&direct) {
        for (x, y) in a.weights.iter().zip(&b.weights) {
            // The model stores f32 weights.
            assert!((x - y).abs() < 1e-5);
        }
    }
}

fn separable(n: usize, seed: u64) -> LabeledDataset {
    let mut r = common::rng(seed);
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for i in 0..n {
        let label = i % 2;
        let centre = if label == 0 { 0.25 } else { 0.75 };
        let x = vec![centre + r.random_range(-0.2..0.2), r.random_range(0.0..1.0)];
        images.push(Tensor::new(vec![2], x).unwrap());
        labels.push(label);
    }
    LabeledDataset::new(images, labels, 2).unwrap()
}

#[test]
fn separable_two_class_problem_is_learned() {
    let ds = separable(200, 3);
    let cfg = TrainConfig { epochs: 50, learning_rate: 0.1, batch_size: 16, seed: 2 };
    let trained = train_mlp(&ds, &[8], &cfg, "sep").unwrap();
    assert!(trained.train_accuracy >= 0.99, "{}", trained.train_accuracy);
    assert_eq!(accuracy(&trained.model, &ds).unwrap(), trained.train_accuracy);
}

#[test]
fn zero_epochs_returns_the_initialization() {
    let ds = separable(20, 1);
    let cfg = TrainConfig { epochs: 0, seed: 77, ..TrainConfig::default() };
    let trained = train_mlp(&ds, &[5, 3], &cfg, "init").unwrap();
    assert_eq!(trained.model, Mlp::init(&[2], &[5, 3], 2, 77).to_model("init"));
}

#[test]
fn training_is_deterministic() {
    let ds = separable(60, 5);
    let cfg = TrainConfig { epochs: 3, ..TrainConfig::default() };
    let a = train_mlp(&ds, &[4], &cfg, "a").unwrap();
    let b = train_mlp(&ds, &[4], &cfg, "a").unwrap();
    assert_eq!(a.model, b.model);
}

#[test]
fn synthetic_ten_class_reaches_ninety_percent() {
    let (train, test) = generate(&SyntheticConfig::default()).unwrap();
    let cfg = TrainConfig { epochs: 5, ..TrainConfig::default() };
    let trained = train_mlp(&train, &[64], &cfg, "toy").unwrap();
    let acc = accuracy(&trained.model, &test).unwrap();
    assert!(acc >= 0.9, "test accuracy {acc}");
}

#[test]
fn bad_training_inputs_are_contract_errors() {
    let ds = separable(10, 1);
    let zero_batch = TrainConfig { batch_size: 0, ..TrainConfig::default() };
    assert!(train_mlp(&ds, &[4], &zero_batch, "x").is_err());
    assert!(train_mlp(&ds, &[0], &TrainConfig::default(), "x").is_err());
    let mlp = Mlp::init(&[2], &[3], 2, 0);
    assert!(mlp.loss_gradient(&[]).is_err());
    assert!(mlp.loss_gradient(&[(&[0.0, 0.0], 5)]).is_err());
}
