//! Dense tensors and classifier output vectors.

use crate::error::{Error, Result};

/// Tolerance on the sum of a probability vector.
pub const PROB_SUM_TOLERANCE: f64 = 1e-6;

/// Row-major dense tensor of finite `f64` values.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() || shape.iter().any(|&d| d == 0) {
            return Err(Error::contract(format!(
                "tensor shape {shape:?} must have positive extents"
            )));
        }
        let len: usize = shape.iter().product();
        if len != data.len() {
            return Err(Error::contract(format!(
                "shape {shape:?} holds {len} elements, data has {}",
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::contract(format!("non-finite element at {i}")));
        }
        Ok(Tensor { shape, data })
    }

    pub fn filled(shape: Vec<usize>, value: f64) -> Result<Self> {
        let len = shape.iter().product();
        Tensor::new(shape, vec![value; len])
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Applies `f` to the elements in place, then clamps them into `[0, 1]`.
    ///
    /// Non-finite results are mapped to 0 so the finiteness invariant survives
    /// arbitrary user mutations.
    pub fn map_clamped(&mut self, f: impl FnOnce(&mut [f64])) {
        f(&mut self.data);
        for v in &mut self.data {
            *v = if v.is_finite() { v.clamp(0.0, 1.0) } else { 0.0 };
        }
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
}

/// Normalized output of a classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::contract("probability vector is empty"));
        }
        if let Some(p) = probs
            .iter()
            .find(|p| !p.is_finite() || **p < 0.0 || **p > 1.0)
        {
            return Err(Error::contract(format!("probability {p} outside [0, 1]")));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::contract(format!("probabilities sum to {sum}")));
        }
        Ok(ProbVector(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn classes(&self) -> usize {
        self.0.len()
    }

    /// Index and value of the largest entry. Ties go to the lowest index.
    pub fn top1(&self) -> (usize, f64) {
        top1(&self.0).expect("ProbVector is never empty")
    }

    pub fn label(&self) -> usize {
        self.top1().0
    }
}

/// Argmax with lowest-index tie breaking over any slice of finite reals.
pub fn top1(values: &[f64]) -> Result<(usize, f64)> {
    let mut iter = values.iter().copied().enumerate();
    let first = iter
        .next()
        .ok_or_else(|| Error::contract("top1 of an empty vector"))?;
    Ok(iter.fold(first, |best, cur| if cur.1 > best.1 { cur } else { best }))
}

/// Euclidean distance between two equally long vectors.
pub fn l2_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::contract(format!(
            "l2_distance over lengths {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(squared_l2(a, b).sqrt())
}

pub(crate) fn squared_l2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
