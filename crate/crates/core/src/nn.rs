//! Forward pass for [`Model`] and a small SGD trainer for dense networks.
//!
//! Parameters are stored as `f32`; every product and sum is accumulated in
//! `f64`. Training runs on an `f64` copy of the parameters ([`Mlp`]) and
//! rounds to `f32` once when the trained model is produced.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::idx::LabeledDataset;
use crate::model::{Layer, Model};
use crate::tensor::{ProbVector, Tensor};

/// Anything that maps an input tensor to a probability vector.
///
/// The search engines only see this interface, so compressed models are
/// treated as black boxes.
pub trait Classifier: Send + Sync {
    fn input_shape(&self) -> &[usize];
    fn predict(&self, x: &Tensor) -> Result<ProbVector>;
}

impl Classifier for Model {
    fn input_shape(&self) -> &[usize] {
        Model::input_shape(self)
    }

    fn predict(&self, x: &Tensor) -> Result<ProbVector> {
        predict(self, x)
    }
}

pub fn predict(model: &Model, x: &Tensor) -> Result<ProbVector> {
    if x.shape() != model.input_shape() {
        return Err(Error::contract(format!(
            "input shape {:?} does not match model input {:?}",
            x.shape(),
            model.input_shape()
        )));
    }
    let mut shape = x.shape().to_vec();
    let mut act = x.data().to_vec();
    for layer in model.layers() {
        act = match layer {
            Layer::Dense {
                inputs,
                outputs,
                weights,
                bias,
            } => dense_forward(*inputs, *outputs, weights, bias, &act),
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                weights,
                bias,
            } => conv2d_forward(
                ConvGeometry {
                    in_channels: *in_channels,
                    out_channels: *out_channels,
                    kernel_h: *kernel_h,
                    kernel_w: *kernel_w,
                    stride: *stride,
                    height: shape[1],
                    width: shape[2],
                },
                weights,
                bias,
                &act,
            ),
            Layer::Relu => act.into_iter().map(|v| v.max(0.0)).collect(),
            Layer::MaxPool2 => maxpool2_forward(&shape, &act),
            Layer::Flatten => act,
            Layer::Softmax => softmax(&act),
        };
        shape = layer
            .output_shape(&shape)
            .expect("model shapes are validated at construction");
    }
    ProbVector::new(act)
}

fn dense_forward(inputs: usize, outputs: usize, w: &[f32], b: &[f32], x: &[f64]) -> Vec<f64> {
    (0..outputs)
        .map(|o| {
            let row = &w[o * inputs..(o + 1) * inputs];
            row.iter()
                .zip(x)
                .fold(f64::from(b[o]), |acc, (&wi, &xi)| acc + f64::from(wi) * xi)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct ConvGeometry {
    in_channels: usize,
    out_channels: usize,
    kernel_h: usize,
    kernel_w: usize,
    stride: usize,
    height: usize,
    width: usize,
}

fn conv2d_forward(g: ConvGeometry, w: &[f32], b: &[f32], x: &[f64]) -> Vec<f64> {
    let out_h = (g.height - g.kernel_h) / g.stride + 1;
    let out_w = (g.width - g.kernel_w) / g.stride + 1;
    let mut out = Vec::with_capacity(g.out_channels * out_h * out_w);
    for oc in 0..g.out_channels {
        for oy in 0..out_h {
            for ox in 0..out_w {
                let mut acc = f64::from(b[oc]);
                for ic in 0..g.in_channels {
                    for ky in 0..g.kernel_h {
                        for kx in 0..g.kernel_w {
                            let wi = ((oc * g.in_channels + ic) * g.kernel_h + ky) * g.kernel_w + kx;
                            let y = oy * g.stride + ky;
                            let xx = ox * g.stride + kx;
                            acc += f64::from(w[wi]) * x[(ic * g.height + y) * g.width + xx];
                        }
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

fn maxpool2_forward(shape: &[usize], x: &[f64]) -> Vec<f64> {
    let (c, h, w) = (shape[0], shape[1], shape[2]);
    let (oh, ow) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let at = |dy: usize, dx: usize| x[(ch * h + 2 * oy + dy) * w + 2 * ox + dx];
                out.push(at(0, 0).max(at(0, 1)).max(at(1, 0)).max(at(1, 1)));
            }
        }
    }
    out
}

/// Softmax with max subtraction.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

/// Fraction of `dataset` samples whose top-1 label matches the ground truth.
pub fn accuracy(model: &dyn Classifier, dataset: &LabeledDataset) -> Result<f64> {
    if dataset.is_empty() {
        return Ok(0.0);
    }
    let mut correct = 0usize;
    for (x, &y) in dataset.images.iter().zip(&dataset.labels) {
        if model.predict(x)?.label() == y {
            correct += 1;
        }
    }
    Ok(correct as f64 / dataset.len() as f64)
}

/// One fully connected layer in training precision.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseParams {
    pub inputs: usize,
    pub outputs: usize,
    /// `[outputs, inputs]` row-major.
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl DenseParams {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        DenseParams {
            inputs,
            outputs,
            weights: vec![0.0; inputs * outputs],
            bias: vec![0.0; outputs],
        }
    }

    fn forward(&self, x: &[f64]) -> Vec<f64> {
        (0..self.outputs)
            .map(|o| {
                let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
                row.iter().zip(x).fold(self.bias[o], |acc, (w, v)| acc + w * v)
            })
            .collect()
    }
}

/// Dense ReLU network ending in softmax, with `f64` parameters.
///
/// Layer `i` is followed by ReLU for every `i` except the last.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub input_shape: Vec<usize>,
    pub layers: Vec<DenseParams>,
}

/// Gradients with the same layout as [`Mlp::layers`].
pub type Gradients = Vec<DenseParams>;

/// One training example: flattened input and class index.
pub type Sample<'a> = (&'a [f64], usize);

impl Mlp {
    /// He-uniform weights and zero biases drawn from a ChaCha8 stream.
    pub fn init(input_shape: &[usize], hidden: &[usize], classes: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self::init_with(input_shape, hidden, classes, &mut rng)
    }

    fn init_with<R: Rng + ?Sized>(
        input_shape: &[usize],
        hidden: &[usize],
        classes: usize,
        rng: &mut R,
    ) -> Self {
        let mut sizes = vec![input_shape.iter().product::<usize>()];
        sizes.extend_from_slice(hidden);
        sizes.push(classes);
        let layers = sizes
            .windows(2)
            .map(|pair| {
                let (inputs, outputs) = (pair[0], pair[1]);
                let bound = (6.0 / inputs as f64).sqrt();
                let mut layer = DenseParams::zeros(inputs, outputs);
                for w in &mut layer.weights {
                    *w = rng.random_range(-bound..bound);
                }
                layer
            })
            .collect();
        Mlp {
            input_shape: input_shape.to_vec(),
            layers,
        }
    }

    /// Recovers training parameters from a dense-only model of the shape
    /// `[flatten] (dense relu)* dense softmax`.
    pub fn from_model(model: &Model) -> Result<Self> {
        let mut layers = Vec::new();
        let body = match model.layers() {
            [Layer::Flatten, rest @ ..] => rest,
            all => all,
        };
        let mut expect_dense = true;
        for (i, layer) in body.iter().enumerate() {
            let last = i + 1 == body.len();
            match (layer, expect_dense) {
                (
                    Layer::Dense {
                        inputs,
                        outputs,
                        weights,
                        bias,
                    },
                    true,
                ) => {
                    layers.push(DenseParams {
                        inputs: *inputs,
                        outputs: *outputs,
                        weights: weights.iter().map(|&v| f64::from(v)).collect(),
                        bias: bias.iter().map(|&v| f64::from(v)).collect(),
                    });
                    expect_dense = false;
                }
                (Layer::Relu, false) if !last => expect_dense = true,
                (Layer::Softmax, false) if last => {}
                (other, _) => {
                    return Err(Error::Unsupported(format!(
                        "trainer handles dense/relu/softmax stacks only, found {} at position {i}",
                        other.kind()
                    )))
                }
            }
        }
        Ok(Mlp {
            input_shape: model.input_shape().to_vec(),
            layers,
        })
    }

    pub fn to_model(&self, name: impl Into<String>) -> Model {
        let mut layers = Vec::new();
        if self.input_shape.len() > 1 {
            layers.push(Layer::Flatten);
        }
        for (i, l) in self.layers.iter().enumerate() {
            layers.push(Layer::Dense {
                inputs: l.inputs,
                outputs: l.outputs,
                weights: l.weights.iter().map(|&v| v as f32).collect(),
                bias: l.bias.iter().map(|&v| v as f32).collect(),
            });
            layers.push(if i + 1 == self.layers.len() {
                Layer::Softmax
            } else {
                Layer::Relu
            });
        }
        Model::new(name, self.input_shape.clone(), layers).expect("mlp layout is consistent")
    }

    pub fn classes(&self) -> usize {
        self.layers.last().map_or(0, |l| l.outputs)
    }

    /// Pre-activations of every layer for one input.
    fn forward_trace(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = x.to_vec();
        for (i, layer) in self.layers.iter().enumerate() {
            let z = layer.forward(&act);
            if i + 1 < self.layers.len() {
                act = z.iter().map(|v| v.max(0.0)).collect();
            }
            pre.push(z);
        }
        pre
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        softmax(self.forward_trace(x).last().expect("at least one layer"))
    }

    /// Mean cross-entropy over `batch`.
    pub fn loss(&self, batch: &[Sample<'_>]) -> f64 {
        let total: f64 = batch
            .iter()
            .map(|&(x, y)| {
                let logits = self.forward_trace(x).pop().expect("at least one layer");
                let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + logits.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                lse - logits[y]
            })
            .sum();
        total / batch.len() as f64
    }

    /// Gradient of [`Mlp::loss`] by backpropagation.
    pub fn loss_gradient(&self, batch: &[Sample<'_>]) -> Result<Gradients> {
        if batch.is_empty() {
            return Err(Error::contract("gradient of an empty batch"));
        }
        let n_inputs = self.layers[0].inputs;
        let mut grads: Gradients = self
            .layers
            .iter()
            .map(|l| DenseParams::zeros(l.inputs, l.outputs))
            .collect();
        let scale = 1.0 / batch.len() as f64;
        for &(x, y) in batch {
            if x.len() != n_inputs {
                return Err(Error::contract(format!(
                    "sample has {} features, network expects {n_inputs}",
                    x.len()
                )));
            }
            if y >= self.classes() {
                return Err(Error::contract(format!("label {y} out of range")));
            }
            let pre = self.forward_trace(x);
            let mut delta = softmax(pre.last().expect("at least one layer"));
            delta[y] -= 1.0;
            for l in (0..self.layers.len()).rev() {
                let layer = &self.layers[l];
                let input: Vec<f64> = if l == 0 {
                    x.to_vec()
                } else {
                    pre[l - 1].iter().map(|v| v.max(0.0)).collect()
                };
                let g = &mut grads[l];
                for o in 0..layer.outputs {
                    let d = delta[o] * scale;
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, a) in row.iter_mut().zip(&input) {
                        *gw += d * a;
                    }
                }
                if l > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for o in 0..layer.outputs {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += w * delta[o];
                        }
                    }
                    for (p, z) in prev.iter_mut().zip(&pre[l - 1]) {
                        if *z <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        Ok(grads)
    }

    fn apply_gradients(&mut self, grads: &Gradients, learning_rate: f64) {
        for (layer, g) in self.layers.iter_mut().zip(grads) {
            for (w, d) in layer.weights.iter_mut().zip(&g.weights) {
                *w -= learning_rate * d;
            }
            for (b, d) in layer.bias.iter_mut().zip(&g.bias) {
                *b -= learning_rate * d;
            }
        }
    }
}

/// Gradient of the mean cross-entropy of a dense-only `model` over `batch`.
pub fn loss_gradient(model: &Model, batch: &[Sample<'_>]) -> Result<Gradients> {
    Mlp::from_model(model)?.loss_gradient(batch)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            learning_rate: 0.1,
            batch_size: 32,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub model: Model,
    pub train_accuracy: f64,
}

/// Mini-batch SGD on mean cross-entropy. Deterministic for a given seed:
/// initialization and per-epoch shuffles share one ChaCha8 stream.
pub fn train_mlp(
    dataset: &LabeledDataset,
    hidden: &[usize],
    config: &TrainConfig,
    name: &str,
) -> Result<TrainedModel> {
    let first = dataset
        .images
        .first()
        .ok_or_else(|| Error::contract("cannot train on an empty dataset"))?;
    if config.batch_size == 0 {
        return Err(Error::contract("batch size must be positive"));
    }
    if hidden.contains(&0) {
        return Err(Error::contract("hidden layer sizes must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut mlp = Mlp::init_with(first.shape(), hidden, dataset.classes, &mut rng);
    let samples: Vec<Sample<'_>> = dataset
        .images
        .iter()
        .map(Tensor::data)
        .zip(dataset.labels.iter().copied())
        .collect();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(config.batch_size) {
            let batch: Vec<Sample<'_>> = chunk.iter().map(|&i| samples[i]).collect();
            let grads = mlp.loss_gradient(&batch)?;
            mlp.apply_gradients(&grads, config.learning_rate);
        }
    }
    let model = mlp.to_model(name);
    let train_accuracy = accuracy(&model, dataset)?;
    Ok(TrainedModel {
        model,
        train_accuracy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symmetric_logits_give_uniform_output() {
        let m = Model::new(
            "sym",
            vec![2],
            vec![
                Layer::Dense {
                    inputs: 2,
                    outputs: 2,
                    weights: vec![1.0, 0.0, 0.0, 1.0],
                    bias: vec![0.0, 0.0],
                },
                Layer::Softmax,
            ],
        )
        .unwrap();
        let x = Tensor::new(vec![2], vec![0.3, 0.3]).unwrap();
        assert_eq!(predict(&m, &x).unwrap().probs(), &[0.5, 0.5]);
        let zero = Tensor::new(vec![2], vec![0.0, 0.0]).unwrap();
        assert_eq!(predict(&m, &zero).unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn conv_of_ones_is_nine() {
        let g = ConvGeometry {
            in_channels: 1,
            out_channels: 1,
            kernel_h: 3,
            kernel_w: 3,
            stride: 1,
            height: 4,
            width: 4,
        };
        let out = conv2d_forward(g, &[1.0; 9], &[0.0], &[1.0; 16]);
        assert_eq!(out, vec![9.0; 4]);
    }

    #[test]
    fn maxpool_picks_window_max() {
        let x: Vec<f64> = (0..16).map(f64::from).collect();
        assert_eq!(maxpool2_forward(&[1, 4, 4], &x), vec![5.0, 7.0, 13.0, 15.0]);
    }

    #[test]
    fn shape_mismatch_is_contract_error() {
        let m = Mlp::init(&[3], &[], 2, 1).to_model("m");
        let x = Tensor::new(vec![4], vec![0.0; 4]).unwrap();
        assert!(matches!(predict(&m, &x), Err(Error::Contract(_))));
    }

    #[test]
    fn softmax_is_stable_for_large_logits() {
        let p = softmax(&[1000.0, 1000.0, -1000.0]);
        assert_eq!(p, vec![0.5, 0.5, 0.0]);
    }

    #[test]
    fn zero_weight_bias_gradient_is_softmax_minus_onehot() {
        let mut mlp = Mlp::init(&[2], &[3], 4, 5);
        for l in &mut mlp.layers {
            l.weights.iter_mut().for_each(|w| *w = 0.0);
        }
        let x = [0.4, 0.9];
        let g = mlp.loss_gradient(&[(&x, 2)]).unwrap();
        let last = g.last().unwrap();
        assert_eq!(last.bias, vec![0.25, 0.25, -0.75, 0.25]);
        assert!(last.weights.iter().all(|&w| w == 0.0));
        // One sample per class: the output-bias gradient cancels.
        let batch: Vec<Sample<'_>> = (0..4).map(|c| (&x[..], c)).collect();
        let g = mlp.loss_gradient(&batch).unwrap();
        assert!(g.last().unwrap().bias.iter().all(|b| b.abs() < 1e-15));
    }

    #[test]
    fn duplicated_sample_gives_single_sample_gradient() {
        let mlp = Mlp::init(&[3], &[4], 3, 9);
        let x = [0.1, 0.5, 0.9];
        let single = mlp.loss_gradient(&[(&x, 1)]).unwrap();
        let double = mlp.loss_gradient(&[(&x, 1), (&x, 1)]).unwrap();
        for (a, b) in single.iter().zip(&double) {
            for (u, v) in a.weights.iter().chain(&a.bias).zip(b.weights.iter().chain(&b.bias)) {
                assert!((u - v).abs() <= 1e-15 * u.abs().max(1.0));
            }
        }
    }

    #[test]
    fn conv_models_are_not_trainable() {
        let m = Model::new(
            "cnn",
            vec![1, 3, 3],
            vec![
                Layer::Conv2d {
                    in_channels: 1,
                    out_channels: 2,
                    kernel_h: 3,
                    kernel_w: 3,
                    stride: 1,
                    weights: vec![0.0; 18],
                    bias: vec![0.0; 2],
                },
                Layer::Flatten,
                Layer::Softmax,
            ],
        )
        .unwrap();
        let x = [0.0; 9];
        assert!(matches!(loss_gradient(&m, &[(&x, 0)]), Err(Error::Unsupported(_))));
    }

    #[test]
    fn mlp_model_round_trip() {
        let mlp = Mlp::init(&[1, 2, 2], &[3], 2, 11);
        let model = mlp.to_model("m");
        assert_eq!(model.layers()[0], Layer::Flatten);
        let back = Mlp::from_model(&model).unwrap();
        assert_eq!(back.to_model("m"), model);
    }
}
