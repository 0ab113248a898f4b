//! Differential fuzzing of a classifier against its compressed variant.
//!
//! The crate searches for *triggering inputs*: inputs on which an original
//! model and its compressed counterpart disagree on the top-1 label. It ships
//! everything needed to run that search end to end at desk scale:
//!
//! - [`model`], [`format`], [`idx`]: model graphs, the manifest + weight blob
//!   file pair, and MNIST-style IDX datasets.
//! - [`nn`]: deterministic forward pass and a small dense-network trainer.
//! - [`compress`]: 8-bit affine quantization and magnitude pruning.
//! - [`mutation`]: input mutation operators with success counters.
//! - [`search`]: the fitness-guided search with Metropolis-Hastings operator
//!   selection, plus its two ablation modes.
//! - [`genetic`]: a population-based k-uncertainty baseline.
//! - [`bench`]: seed selection, experiment runs and reports.
//! - [`synthetic`]: seeded blob-image datasets and a trained toy model pair.
//!
//! Runnable walkthroughs live in the crate's `examples/` directory.

pub mod bench;
pub mod compress;
pub mod error;
pub mod format;
pub mod genetic;
pub mod idx;
pub mod model;
pub mod mutation;
pub mod nn;
pub mod search;
pub mod synthetic;
pub mod tensor;

pub use error::{Error, ParseError, Result};
pub use model::{Layer, Model};
pub use nn::Classifier;
pub use tensor::{ProbVector, Tensor};
