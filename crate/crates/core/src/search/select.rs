//! Metropolis-Hastings selection of the next mutation operator.
//!
//! Operators are ranked by their success ratio, best first. A candidate is
//! drawn uniformly and accepted with probability `min(1, (1 - p)^(k_new - k_prev))`
//! where `k` is the rank and `p = 1 / |pool|`; drawing repeats until a
//! candidate is accepted.

use rand::Rng;

use crate::mutation::OperatorPool;

pub fn acceptance_probability(p: f64, rank_delta: i64) -> f64 {
    let exponent = i32::try_from(rank_delta).unwrap_or(if rank_delta < 0 { i32::MIN } else { i32::MAX });
    (1.0 - p).powi(exponent).min(1.0)
}

/// Operator ids sorted by ranking value, descending. Equal rankings keep
/// pool order.
pub fn rank_order(pool: &OperatorPool) -> Vec<usize> {
    let mut ids: Vec<usize> = (0..pool.len()).collect();
    ids.sort_by(|&a, &b| pool.get(b).ranking().total_cmp(&pool.get(a).ranking()));
    ids
}

/// Frozen ranks for one selection step.
#[derive(Debug, Clone)]
pub struct Ranking {
    order: Vec<usize>,
    rank_of: Vec<usize>,
    p: f64,
}

/// One proposal of the accept/reject loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Proposal {
    pub candidate: usize,
    pub rank_delta: i64,
    pub probability: f64,
    pub accepted: bool,
}

impl Ranking {
    pub fn of(pool: &OperatorPool) -> Self {
        let order = rank_order(pool);
        let mut rank_of = vec![0; order.len()];
        for (rank, &id) in order.iter().enumerate() {
            rank_of[id] = rank;
        }
        Ranking {
            order,
            rank_of,
            p: pool.p(),
        }
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    pub fn rank(&self, id: usize) -> usize {
        self.rank_of[id]
    }

    /// Draws a uniformly random candidate and decides acceptance given the
    /// previously used operator.
    pub fn propose<R: Rng + ?Sized>(&self, previous: usize, rng: &mut R) -> Proposal {
        let candidate = self.order[rng.random_range(0..self.order.len())];
        let rank_delta = self.rank(candidate) as i64 - self.rank(previous) as i64;
        let probability = acceptance_probability(self.p, rank_delta);
        let accepted = rng.random::<f64>() < probability;
        Proposal {
            candidate,
            rank_delta,
            probability,
            accepted,
        }
    }

    pub fn select<R: Rng + ?Sized>(&self, previous: usize, rng: &mut R) -> usize {
        loop {
            let proposal = self.propose(previous, rng);
            if proposal.accepted {
                return proposal.candidate;
            }
        }
    }
}

/// Picks the operator for the next iteration given the one just used.
pub fn select_operator<R: Rng + ?Sized>(pool: &OperatorPool, previous: usize, rng: &mut R) -> usize {
    assert!(previous < pool.len(), "previous operator {previous} not in pool");
    Ranking::of(pool).select(previous, rng)
}
