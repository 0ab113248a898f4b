#![allow(dead_code)]

use compdiff::model::Layer;
use compdiff::Model;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vec(rng: &mut ChaCha8Rng, n: usize, scale: f32) -> Vec<f32> {
    (0..n).map(|_| rng.random_range(-scale..scale)).collect()
}

pub fn dense(rng: &mut ChaCha8Rng, inputs: usize, outputs: usize) -> Layer {
    Layer::Dense {
        inputs,
        outputs,
        weights: random_vec(rng, inputs * outputs, 1.0),
        bias: random_vec(rng, outputs, 0.5),
    }
}

/// `[flatten] (dense relu)* dense softmax` over an input of `input_shape`.
pub fn random_mlp(seed: u64, input_shape: Vec<usize>, hidden: &[usize], classes: usize) -> Model {
    let mut r = rng(seed);
    let mut layers = Vec::new();
    if input_shape.len() > 1 {
        layers.push(Layer::Flatten);
    }
    let mut width: usize = input_shape.iter().product();
    for &h in hidden {
        layers.push(dense(&mut r, width, h));
        layers.push(Layer::Relu);
        width = h;
    }
    layers.push(dense(&mut r, width, classes));
    layers.push(Layer::Softmax);
    Model::new("random", input_shape, layers).unwrap()
}

/// conv -> relu -> maxpool -> flatten -> dense -> softmax.
pub fn random_cnn(seed: u64, channels: usize, side: usize, filters: usize, kernel: usize, classes: usize) -> Model {
    let mut r = rng(seed);
    let conv_side = side - kernel + 1;
    let pooled = conv_side / 2;
    let layers = vec![
        Layer::Conv2d {
            in_channels: channels,
            out_channels: filters,
            kernel_h: kernel,
            kernel_w: kernel,
            stride: 1,
            weights: random_vec(&mut r, filters * channels * kernel * kernel, 1.0),
            bias: random_vec(&mut r, filters, 0.5),
        },
        Layer::Relu,
        Layer::MaxPool2,
        Layer::Flatten,
        dense(&mut r, filters * pooled * pooled, classes),
        Layer::Softmax,
    ];
    Model::new("cnn", vec![channels, side, side], layers).unwrap()
}

/// Two linear softmax classifiers over `[4]` inputs. Class 0 wins for `f`
/// when `x0 + x1 > x2 + x3`; `g` carries an extra 0.1 bias on class 0, so
/// they disagree exactly on `-0.1 < x0 + x1 - x2 - x3 < 0`.
pub fn linear_pair() -> (Model, Model) {
    let layer = |bias0: f32| Layer::Dense {
        inputs: 4,
        outputs: 2,
        weights: vec![1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0],
        bias: vec![bias0, 0.0],
    };
    let f = Model::new("f", vec![4], vec![layer(0.0), Layer::Softmax]).unwrap();
    let g = Model::new("g", vec![4], vec![layer(0.1), Layer::Softmax]).unwrap();
    (f, g)
}

/// Same decision on both models, margin 0.5 from f's boundary.
pub fn linear_seed() -> compdiff::Tensor {
    compdiff::Tensor::new(vec![4], vec![0.6, 0.5, 0.3, 0.3]).unwrap()
}
