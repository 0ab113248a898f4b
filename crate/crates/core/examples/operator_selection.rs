//! Shows how the Metropolis-Hastings selector favors operators with a better
//! improvement rate, given fixed counters.

use std::sync::Arc;

use compdiff::mutation::{Mutation, OperatorPool};
use compdiff::search::{acceptance_probability, select_operator, Ranking};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug)]
struct Noop(&'static str);

impl Mutation for Noop {
    fn name(&self) -> String {
        self.0.to_string()
    }
    fn mutate(&self, _: &mut [f64], _: &mut dyn RngCore) {}
}

fn main() -> compdiff::Result<()> {
    let names = ["a", "b", "c", "d"];
    let mut pool = OperatorPool::new(
        names
            .iter()
            .map(|n| Arc::new(Noop(n)) as Arc<dyn Mutation>)
            .collect(),
    )?;
    // Improvement rates 0.1, 0.4, 0.2, 0.3.
    for (id, improved) in [1, 4, 2, 3].into_iter().enumerate() {
        for i in 0..10 {
            pool.get_mut(id).record_applied();
            if i < improved {
                pool.get_mut(id).record_improved();
            }
        }
    }

    let ranking = Ranking::of(&pool);
    println!("rank order (best first): {:?}", ranking.order());
    for dk in 0..4 {
        println!(
            "moving {dk} ranks down is accepted with p = {:.4}",
            acceptance_probability(pool.p(), dk)
        );
    }

    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut counts = [0usize; 4];
    let mut current = ranking.order()[0];
    for _ in 0..100_000 {
        current = select_operator(&pool, current, &mut rng);
        counts[current] += 1;
    }
    for (id, n) in counts.iter().enumerate() {
        println!("{} selected {:>6} times", names[id], n);
    }
    Ok(())
}
