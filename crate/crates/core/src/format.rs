//! Model files: a TOML manifest (`<name>.manifest`) describing the layer list,
//! plus a blob (`<name>.weights`) of little-endian `f32` parameters
//! concatenated in manifest order.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, ParseError, Result};
use crate::model::{Layer, Model};

pub const MANIFEST_FORMAT: &str = "compdiff-model-v1";
pub const MANIFEST_EXTENSION: &str = "manifest";
pub const WEIGHTS_EXTENSION: &str = "weights";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slice {
    /// Offset into the blob, counted in `f32` elements.
    pub offset: usize,
    pub len: usize,
}

impl Slice {
    fn end(&self) -> usize {
        self.offset + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum LayerSpec {
    Dense {
        inputs: usize,
        outputs: usize,
        weights: Slice,
        bias: Slice,
    },
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel_h: usize,
        kernel_w: usize,
        stride: usize,
        weights: Slice,
        bias: Slice,
    },
    Relu,
    Maxpool2,
    Flatten,
    Softmax,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub format: String,
    pub name: String,
    pub input_shape: Vec<usize>,
    pub layers: Vec<LayerSpec>,
}

/// Splits a model into its manifest and weight blob.
pub fn encode(model: &Model) -> (ModelManifest, Vec<u8>) {
    let mut blob: Vec<f32> = Vec::with_capacity(model.parameter_count());
    let mut push = |values: &[f32]| {
        let slice = Slice {
            offset: blob.len(),
            len: values.len(),
        };
        blob.extend_from_slice(values);
        slice
    };
    let layers = model
        .layers()
        .iter()
        .map(|layer| match layer {
            Layer::Dense {
                inputs,
                outputs,
                weights,
                bias,
            } => LayerSpec::Dense {
                inputs: *inputs,
                outputs: *outputs,
                weights: push(weights),
                bias: push(bias),
            },
            Layer::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                weights,
                bias,
            } => LayerSpec::Conv2d {
                in_channels: *in_channels,
                out_channels: *out_channels,
                kernel_h: *kernel_h,
                kernel_w: *kernel_w,
                stride: *stride,
                weights: push(weights),
                bias: push(bias),
            },
            Layer::Relu => LayerSpec::Relu,
            Layer::MaxPool2 => LayerSpec::Maxpool2,
            Layer::Flatten => LayerSpec::Flatten,
            Layer::Softmax => LayerSpec::Softmax,
        })
        .collect();
    let manifest = ModelManifest {
        format: MANIFEST_FORMAT.to_string(),
        name: model.name().to_string(),
        input_shape: model.input_shape().to_vec(),
        layers,
    };
    let bytes = blob.iter().flat_map(|v| v.to_le_bytes()).collect();
    (manifest, bytes)
}

/// Rebuilds a model from a manifest and its weight blob.
pub fn decode(manifest: &ModelManifest, blob: &[u8]) -> Result<Model> {
    if manifest.format != MANIFEST_FORMAT {
        return Err(ParseError::BadMagic {
            expected: MANIFEST_FORMAT.into(),
            found: manifest.format.clone(),
        }
        .into());
    }
    if blob.len() % 4 != 0 {
        return Err(ParseError::MisalignedWeights(blob.len()).into());
    }
    let floats: Vec<f32> = blob
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();

    let needed = manifest
        .layers
        .iter()
        .flat_map(|l| match l {
            LayerSpec::Dense { weights, bias, .. } | LayerSpec::Conv2d { weights, bias, .. } => {
                vec![weights.end(), bias.end()]
            }
            _ => vec![],
        })
        .max()
        .unwrap_or(0);
    if needed > floats.len() {
        return Err(ParseError::TruncatedWeights {
            needed,
            available: floats.len(),
        }
        .into());
    }
    if needed < floats.len() {
        return Err(ParseError::TrailingWeights {
            extra: floats.len() - needed,
        }
        .into());
    }

    let take = |s: &Slice| floats[s.offset..s.end()].to_vec();
    let layers = manifest
        .layers
        .iter()
        .map(|spec| match spec {
            LayerSpec::Dense {
                inputs,
                outputs,
                weights,
                bias,
            } => Layer::Dense {
                inputs: *inputs,
                outputs: *outputs,
                weights: take(weights),
                bias: take(bias),
            },
            LayerSpec::Conv2d {
                in_channels,
                out_channels,
                kernel_h,
                kernel_w,
                stride,
                weights,
                bias,
            } => Layer::Conv2d {
                in_channels: *in_channels,
                out_channels: *out_channels,
                kernel_h: *kernel_h,
                kernel_w: *kernel_w,
                stride: *stride,
                weights: take(weights),
                bias: take(bias),
            },
            LayerSpec::Relu => Layer::Relu,
            LayerSpec::Maxpool2 => Layer::MaxPool2,
            LayerSpec::Flatten => Layer::Flatten,
            LayerSpec::Softmax => Layer::Softmax,
        })
        .collect();
    Model::new(manifest.name.clone(), manifest.input_shape.clone(), layers)
}

/// Resolves `<base>.manifest` and `<base>.weights`. `path` may name either
/// file or the shared stem.
pub fn model_paths(path: impl AsRef<Path>) -> (PathBuf, PathBuf) {
    let path = path.as_ref();
    let stem = match path.extension().and_then(|e| e.to_str()) {
        Some(MANIFEST_EXTENSION) | Some(WEIGHTS_EXTENSION) => path.with_extension(""),
        _ => path.to_path_buf(),
    };
    let with = |ext: &str| {
        let mut s = stem.clone().into_os_string();
        s.push(".");
        s.push(ext);
        PathBuf::from(s)
    };
    (with(MANIFEST_EXTENSION), with(WEIGHTS_EXTENSION))
}

pub fn save_model(model: &Model, path: impl AsRef<Path>) -> Result<()> {
    let (manifest_path, weights_path) = model_paths(path);
    let (manifest, blob) = encode(model);
    let text = toml::to_string_pretty(&manifest)
        .map_err(|e| Error::from(ParseError::Manifest(e.to_string())))?;
    if let Some(dir) = manifest_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(&manifest_path, text).map_err(|e| Error::io(&manifest_path, e))?;
    fs::write(&weights_path, blob).map_err(|e| Error::io(&weights_path, e))?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<Model> {
    let (manifest_path, weights_path) = model_paths(path);
    let text = fs::read_to_string(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let manifest = parse_manifest(&text)?;
    let blob = fs::read(&weights_path).map_err(|e| Error::io(&weights_path, e))?;
    decode(&manifest, &blob)
}

pub fn parse_manifest(text: &str) -> Result<ModelManifest> {
    toml::from_str(text).map_err(|e| ParseError::Manifest(e.to_string()).into())
}
