use crate::error::{Error, Result};
use crate::nn::Classifier;
use crate::tensor::{ProbVector, Tensor};

/// Both models' outputs on one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub original: ProbVector,
    pub compressed: ProbVector,
}

impl Observation {
    /// True when the two top-1 labels differ.
    pub fn triggers(&self) -> bool {
        self.original.label() != self.compressed.label()
    }

    /// Concatenation of both probability vectors: the approximated model state.
    pub fn state_point(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.original.classes() + self.compressed.classes());
        v.extend_from_slice(self.original.probs());
        v.extend_from_slice(self.compressed.probs());
        v
    }
}

/// Black-box access to an original/compressed model pair with query accounting.
///
/// One query feeds one input to both models.
pub struct ModelPairOracle<'a> {
    original: &'a dyn Classifier,
    compressed: &'a dyn Classifier,
    queries: u64,
}

impl<'a> ModelPairOracle<'a> {
    pub fn new(original: &'a dyn Classifier, compressed: &'a dyn Classifier) -> Result<Self> {
        if original.input_shape() != compressed.input_shape() {
            return Err(Error::contract(format!(
                "model input shapes differ: {:?} vs {:?}",
                original.input_shape(),
                compressed.input_shape()
            )));
        }
        Ok(ModelPairOracle {
            original,
            compressed,
            queries: 0,
        })
    }

    pub fn input_shape(&self) -> &[usize] {
        self.original.input_shape()
    }

    pub fn queries(&self) -> u64 {
        self.queries
    }

    pub fn query(&mut self, x: &Tensor) -> Result<Observation> {
        let original = self.original.predict(x)?;
        let compressed = self.compressed.predict(x)?;
        if original.classes() != compressed.classes() {
            return Err(Error::contract(format!(
                "models disagree on class count: {} vs {}",
                original.classes(),
                compressed.classes()
            )));
        }
        self.queries += 1;
        Ok(Observation {
            original,
            compressed,
        })
    }
}
