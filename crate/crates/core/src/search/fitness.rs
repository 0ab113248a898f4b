//! Fitness of non-triggering inputs and the observed-state novelty store.

use crate::tensor::{squared_l2, ProbVector};

/// Absolute difference of the two top-1 probabilities.
///
/// Meaningful for non-triggering inputs, where both top-1 entries refer to
/// the same label.
pub fn distance(original: &ProbVector, compressed: &ProbVector) -> f64 {
    (original.top1().1 - compressed.top1().1).abs()
}

/// `distance / delta + novelty`. For `|D_a - D_b| >= delta` the distance term
/// decides the order; otherwise the novelty bit can.
pub fn fitness(distance: f64, novel: bool, delta: f64) -> f64 {
    distance / delta + if novel { 1.0 } else { 0.0 }
}

/// Previously observed model states (concatenated output pairs).
///
/// A point is novel when every stored point lies strictly farther than
/// `radius` in Euclidean distance. Lookups are an exact linear scan.
#[derive(Debug, Clone, PartialEq)]
pub struct StateStore {
    radius: f64,
    points: Vec<Vec<f64>>,
}

impl StateStore {
    pub fn new(radius: f64) -> Self {
        assert!(radius >= 0.0, "novelty radius must be non-negative");
        StateStore {
            radius,
            points: Vec::new(),
        }
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn nearest_distance(&self, point: &[f64]) -> Option<f64> {
        self.points
            .iter()
            .map(|p| squared_l2(p, point).sqrt())
            .min_by(f64::total_cmp)
    }

    pub fn is_novel(&self, point: &[f64]) -> bool {
        !self
            .points
            .iter()
            .any(|p| squared_l2(p, point).sqrt() <= self.radius)
    }

    /// Novelty test followed by insertion of `point`.
    pub fn observe(&mut self, point: Vec<f64>) -> bool {
        let novel = self.is_novel(&point);
        self.points.push(point);
        novel
    }
}
