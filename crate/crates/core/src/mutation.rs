//! Input mutation operators and the per-operator success counters that feed
//! operator selection.

use std::fmt;
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// A transformation of an input tensor.
///
/// Implementations write into `values` and may draw randomness only from
/// `rng`. The caller clamps the result back into `[0, 1]`.
pub trait Mutation: Send + Sync + fmt::Debug {
    fn name(&self) -> String;
    fn mutate(&self, values: &mut [f64], rng: &mut dyn RngCore);
}

/// Built-in image-level operators.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MutationKind {
    /// Moves `pixels` distinct elements by a random amount in `(0, amplitude]`
    /// with random sign.
    PixelPerturbation { pixels: usize, amplitude: f64 },
    /// Adds i.i.d. `N(0, sigma^2)` noise to every element.
    GaussianNoise { sigma: f64 },
    /// Adds one offset drawn uniformly from `[-delta, delta]` to every element.
    Brightness { delta: f64 },
    /// Scales around 0.5 by a factor drawn uniformly from `[1 - spread, 1 + spread]`.
    Contrast { spread: f64 },
}

impl MutationKind {
    pub fn default_pool() -> Vec<MutationKind> {
        vec![
            MutationKind::PixelPerturbation {
                pixels: 16,
                amplitude: 0.5,
            },
            MutationKind::GaussianNoise { sigma: 0.1 },
            MutationKind::Brightness { delta: 0.2 },
            MutationKind::Contrast { spread: 0.4 },
        ]
    }
}

impl Mutation for MutationKind {
    fn name(&self) -> String {
        match self {
            MutationKind::PixelPerturbation { pixels, amplitude } => {
                format!("pixel(k={pixels},a={amplitude})")
            }
            MutationKind::GaussianNoise { sigma } => format!("noise(s={sigma})"),
            MutationKind::Brightness { delta } => format!("brightness(d={delta})"),
            MutationKind::Contrast { spread } => format!("contrast(c={spread})"),
        }
    }

    fn mutate(&self, values: &mut [f64], rng: &mut dyn RngCore) {
        match *self {
            MutationKind::PixelPerturbation { pixels, amplitude } => {
                let k = pixels.min(values.len());
                for i in index::sample(rng, values.len(), k) {
                    // 1 - u lies in (0, 1], so every chosen pixel moves.
                    let magnitude = amplitude * (1.0 - rng.random::<f64>());
                    let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
                    values[i] += sign * magnitude;
                }
            }
            MutationKind::GaussianNoise { sigma } => {
                if sigma > 0.0 {
                    let normal = Normal::new(0.0, sigma).expect("positive sigma");
                    for v in values.iter_mut() {
                        *v += normal.sample(rng);
                    }
                }
            }
            MutationKind::Brightness { delta } => {
                if delta > 0.0 {
                    let shift = rng.random_range(-delta..=delta);
                    values.iter_mut().for_each(|v| *v += shift);
                }
            }
            MutationKind::Contrast { spread } => {
                if spread > 0.0 {
                    let factor = rng.random_range(1.0 - spread..=1.0 + spread);
                    values.iter_mut().for_each(|v| *v = 0.5 + factor * (*v - 0.5));
                }
            }
        }
    }
}

/// A pooled operator with its selection statistics.
#[derive(Debug, Clone)]
pub struct MutationOperator {
    id: usize,
    mutation: Arc<dyn Mutation>,
    applied: u64,
    improved: u64,
}

impl MutationOperator {
    pub fn id(&self) -> usize {
        self.id
    }

    pub fn name(&self) -> String {
        self.mutation.name()
    }

    /// Times this operator was applied.
    pub fn applied(&self) -> u64 {
        self.applied
    }

    /// Applications after which the mutated input replaced the incumbent.
    pub fn improved(&self) -> u64 {
        self.improved
    }

    /// Success ratio `improved / applied`; 0 for an operator never applied.
    pub fn ranking(&self) -> f64 {
        if self.applied == 0 {
            0.0
        } else {
            self.improved as f64 / self.applied as f64
        }
    }

    pub fn record_applied(&mut self) {
        self.applied += 1;
    }

    pub fn record_improved(&mut self) {
        assert!(
            self.improved < self.applied,
            "operator {} improved more often than applied",
            self.id
        );
        self.improved += 1;
    }

    /// Returns a mutated copy of `x`, clamped into `[0, 1]`.
    pub fn apply(&self, x: &Tensor, rng: &mut dyn RngCore) -> Tensor {
        let mut out = x.clone();
        out.map_clamped(|values| self.mutation.mutate(values, rng));
        out
    }
}

/// Ordered, non-empty operator list. Operator ids equal their positions.
#[derive(Debug, Clone)]
pub struct OperatorPool {
    ops: Vec<MutationOperator>,
}

impl OperatorPool {
    pub fn new(mutations: Vec<Arc<dyn Mutation>>) -> Result<Self> {
        if mutations.is_empty() {
            return Err(Error::contract("operator pool must not be empty"));
        }
        Ok(OperatorPool {
            ops: mutations
                .into_iter()
                .enumerate()
                .map(|(id, mutation)| MutationOperator {
                    id,
                    mutation,
                    applied: 0,
                    improved: 0,
                })
                .collect(),
        })
    }

    pub fn from_kinds(kinds: &[MutationKind]) -> Result<Self> {
        Self::new(
            kinds
                .iter()
                .map(|k| Arc::new(k.clone()) as Arc<dyn Mutation>)
                .collect(),
        )
    }

    pub fn default_pool() -> Self {
        Self::from_kinds(&MutationKind::default_pool()).expect("default pool is non-empty")
    }

    /// Appends an operator and returns its id.
    pub fn register(&mut self, mutation: Arc<dyn Mutation>) -> usize {
        let id = self.ops.len();
        self.ops.push(MutationOperator {
            id,
            mutation,
            applied: 0,
            improved: 0,
        });
        id
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    /// Multiplicative inverse of the pool size.
    pub fn p(&self) -> f64 {
        1.0 / self.ops.len() as f64
    }

    pub fn get(&self, id: usize) -> &MutationOperator {
        &self.ops[id]
    }

    pub fn get_mut(&mut self, id: usize) -> &mut MutationOperator {
        &mut self.ops[id]
    }

    pub fn operators(&self) -> &[MutationOperator] {
        &self.ops
    }

    pub fn random_id<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.ops.len())
    }

    /// Copy with every counter reset to zero.
    pub fn fresh(&self) -> Self {
        OperatorPool {
            ops: self
                .ops
                .iter()
                .map(|op| MutationOperator {
                    applied: 0,
                    improved: 0,
                    ..op.clone()
                })
                .collect(),
        }
    }
}
