//! In-memory model graph: an ordered layer list carrying its own parameters.

use crate::error::{Error, ParseError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Layer {
    /// `weights` is `[outputs, inputs]` row-major.
    Dense {
        inputs: usize,
        outputs: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
    /// Valid padding. `weights` is `[out_channels, in_channels, kernel_h, kernel_w]`.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
        weights: Vec<f32>,
        bias: Vec<f32>,
    },
    Relu,
    /// 2x2 window, stride 2.
    MaxPool2,
    Flatten,
    Softmax,
}

/// Role of a parameter slice inside its layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    Weights,
    Bias,
}

impl Layer {
    pub fn kind(&self) -> &'static str {
        match self {
            Layer::Dense { .. } => "dense",
            Layer::Conv2d { .. } => "conv2d",
            Layer::Relu => "relu",
            Layer::MaxPool2 => "maxpool2",
            Layer::Flatten => "flatten",
            Layer::Softmax => "softmax",
        }
    }

    /// Analytic `(weights, bias)` lengths for parameterized layers.
    pub fn expected_param_counts(&self) -> Option<(usize, usize)> {
        match *self {
            Layer::Dense {
                inputs, outputs, ..
            } => Some((inputs * outputs, outputs)),
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                ..
            } => Some((out_channels * in_channels * kernel_h * kernel_w, out_channels)),
            _ => None,
        }
    }

    pub fn params(&self) -> Option<(&[f32], &[f32])> {
        match self {
            Layer::Dense { weights, bias, .. } | Layer::Conv2d { weights, bias, .. } => {
                Some((weights, bias))
            }
            _ => None,
        }
    }

    pub fn params_mut(&mut self) -> Option<(&mut Vec<f32>, &mut Vec<f32>)> {
        match self {
            Layer::Dense { weights, bias, .. } | Layer::Conv2d { weights, bias, .. } => {
                Some((weights, bias))
            }
            _ => None,
        }
    }

    /// Output shape of this layer for `input`, or a description of why it cannot apply.
    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>, String> {
        match *self {
            Layer::Dense {
                inputs, outputs, ..
            } => match input {
                [n] if *n == inputs => Ok(vec![outputs]),
                _ => Err(format!("dense expects [{inputs}], got {input:?}")),
            },
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                ..
            } => {
                if stride == 0 || kernel_h == 0 || kernel_w == 0 {
                    return Err("conv2d stride and kernel must be positive".into());
                }
                match input {
                    [c, h, w] if *c == in_channels && *h >= kernel_h && *w >= kernel_w => Ok(vec![
                        out_channels,
                        (h - kernel_h) / stride + 1,
                        (w - kernel_w) / stride + 1,
                    ]),
                    _ => Err(format!(
                        "conv2d expects [{in_channels}, >={kernel_h}, >={kernel_w}], got {input:?}"
                    )),
                }
            }
            Layer::Relu => Ok(input.to_vec()),
            Layer::MaxPool2 => match input {
                [c, h, w] if *h >= 2 && *w >= 2 => Ok(vec![*c, h / 2, w / 2]),
                _ => Err(format!("maxpool2 expects [c, >=2, >=2], got {input:?}")),
            },
            Layer::Flatten => Ok(vec![input.iter().product()]),
            Layer::Softmax => match input {
                [n] if *n >= 1 => Ok(vec![*n]),
                _ => Err(format!("softmax expects a vector, got {input:?}")),
            },
        }
    }
}

/// An executable classifier: input shape plus layers ending in softmax.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    name: String,
    input_shape: Vec<usize>,
    layers: Vec<Layer>,
    classes: usize,
}

impl Model {
    pub fn new(name: impl Into<String>, input_shape: Vec<usize>, layers: Vec<Layer>) -> Result<Self> {
        let classes = validate(&input_shape, &layers)?;
        Ok(Model {
            name: name.into(),
            input_shape,
            layers,
            classes,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn input_shape(&self) -> &[usize] {
        &self.input_shape
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn parameter_count(&self) -> usize {
        self.layers
            .iter()
            .filter_map(Layer::params)
            .map(|(w, b)| w.len() + b.len())
            .sum()
    }

    /// Rewrites every parameter slice in place. Shapes are fixed; the closure
    /// must keep values finite.
    pub fn map_params(&mut self, mut f: impl FnMut(ParamRole, &mut [f32])) -> Result<()> {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            if let Some((w, b)) = layer.params_mut() {
                f(ParamRole::Weights, w);
                f(ParamRole::Bias, b);
                if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
                    return Err(ParseError::NonFinite(i).into());
                }
            }
        }
        Ok(())
    }
}

/// Checks the shape chain and parameter lengths; returns the class count.
pub(crate) fn validate(input_shape: &[usize], layers: &[Layer]) -> Result<usize> {
    if input_shape.is_empty() || input_shape.contains(&0) {
        return Err(Error::contract(format!(
            "input shape {input_shape:?} must have positive extents"
        )));
    }
    match layers.last() {
        Some(Layer::Softmax) => {}
        _ => {
            return Err(ParseError::ShapeChain {
                layer: layers.len().saturating_sub(1),
                reason: "last layer must be softmax".into(),
            }
            .into())
        }
    }
    let mut shape = input_shape.to_vec();
    for (i, layer) in layers.iter().enumerate() {
        if matches!(layer, Layer::Softmax) && i + 1 != layers.len() {
            return Err(ParseError::ShapeChain {
                layer: i,
                reason: "softmax is only allowed as the last layer".into(),
            }
            .into());
        }
        if let (Some((ew, eb)), Some((w, b))) = (layer.expected_param_counts(), layer.params()) {
            for (slice, expected, found) in [("weights", ew, w.len()), ("bias", eb, b.len())] {
                if expected != found {
                    return Err(ParseError::ParameterCount {
                        layer: i,
                        slice,
                        expected,
                        found,
                    }
                    .into());
                }
            }
            if w.iter().chain(b).any(|v| !v.is_finite()) {
                return Err(ParseError::NonFinite(i).into());
            }
        }
        shape = layer
            .output_shape(&shape)
            .map_err(|reason| ParseError::ShapeChain { layer: i, reason })?;
    }
    Ok(shape[0])
}
