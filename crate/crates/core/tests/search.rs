mod common;

use std::sync::atomic::{AtomicU64, Ordering};

use compdiff::mutation::OperatorPool;
use compdiff::search::{
    distance, fitness, run_trigger_search, run_trigger_search_with_store, ModelPairOracle,
    SearchConfig, SearchMode, StateStore,
};
use compdiff::{Classifier, Error, Model, ProbVector, Result, Tensor};
use proptest::prelude::*;

struct Counting<'a> {
    inner: &'a Model,
    calls: AtomicU64,
}

impl Classifier for Counting<'_> {
    fn input_shape(&self) -> &[usize] {
        self.inner.input_shape()
    }
    fn predict(&self, x: &Tensor) -> Result<ProbVector> {
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.inner.predict(x)
    }
}

fn config(mode: SearchMode, max_queries: u64, seed: u64) -> SearchConfig {
    SearchConfig {
        mode,
        max_queries: Some(max_queries),
        seed,
        ..SearchConfig::default()
    }
}

#[test]
fn identical_models_never_deviate() {
    let (f, _) = common::linear_pair();
    for mode in [SearchMode::Full, SearchMode::DistanceOnly, SearchMode::RandomOps] {
        let mut oracle = ModelPairOracle::new(&f, &f).unwrap();
        let r = run_trigger_search(&mut oracle, &common::linear_seed(), &mut OperatorPool::default_pool(), &config(mode, 400, 1)).unwrap();
        assert!(!r.success);
        assert!(r.trigger.is_none());
        assert_eq!(r.queries, 400);
        assert_eq!(r.iterations, 399);
    }
}

#[test]
fn linear_pair_is_separated() {
    let (f, g) = common::linear_pair();
    for seed in 0..10 {
        for mode in [SearchMode::Full, SearchMode::DistanceOnly, SearchMode::RandomOps] {
            let mut oracle = ModelPairOracle::new(&f, &g).unwrap();
            let r = run_trigger_search(&mut oracle, &common::linear_seed(), &mut OperatorPool::default_pool(), &config(mode, 20_000, seed)).unwrap();
            assert!(r.success, "{mode:?} seed {seed}");
            let x = r.trigger.unwrap();
            let margin = x.data()[0] + x.data()[1] - x.data()[2] - x.data()[3];
            assert!(margin > -0.1 - 1e-6 && margin < 1e-6, "margin {margin}");
        }
    }
}

#[test]
fn returned_trigger_reverifies() {
    let (f, g) = common::linear_pair();
    let mut oracle = ModelPairOracle::new(&f, &g).unwrap();
    let r = run_trigger_search(&mut oracle, &common::linear_seed(), &mut OperatorPool::default_pool(), &config(SearchMode::Full, 20_000, 5)).unwrap();
    let x = r.trigger.unwrap();
    let (pf, pg) = (f.predict(&x).unwrap(), g.predict(&x).unwrap());
    assert_ne!(pf.label(), pg.label());
    let outputs = r.outputs.unwrap();
    assert_eq!(outputs.original, pf);
    assert_eq!(outputs.compressed, pg);
}

#[test]
fn every_query_costs_one_call_per_model() {
    let (f, g) = common::linear_pair();
    let cf = Counting { inner: &f, calls: AtomicU64::new(0) };
    let cg = Counting { inner: &g, calls: AtomicU64::new(0) };
    for (seed, cap) in [(3, 20_000), (4, 7)] {
        let before = cf.calls.load(Ordering::Relaxed);
        let mut oracle = ModelPairOracle::new(&cf, &cg).unwrap();
        let r = run_trigger_search(&mut oracle, &common::linear_seed(), &mut OperatorPool::default_pool(), &config(SearchMode::Full, cap, seed)).unwrap();
        let used = cf.calls.load(Ordering::Relaxed) - before;
        assert_eq!(r.queries, used);
        assert_eq!(r.queries, r.iterations + 1);
        assert_eq!(r.operator_trace.len() as u64, r.iterations);
        assert!(r.queries <= cap);
    }
    assert_eq!(cf.calls.load(Ordering::Relaxed), cg.calls.load(Ordering::Relaxed));
}

#[test]
fn triggering_seed_returns_after_one_query() {
    let (f, g) = common::linear_pair();
    let x = Tensor::new(vec![4], vec![0.5, 0.5, 0.5, 0.55]).unwrap();
    let mut oracle = ModelPairOracle::new(&f, &g).unwrap();
    let r = run_trigger_search(&mut oracle, &x, &mut OperatorPool::default_pool(), &SearchConfig::default()).unwrap();
    assert!(r.success);
    assert_eq!(r.queries, 1);
    assert_eq!(r.trigger.unwrap(), x);
}

#[test]
fn incumbent_fitness_never_decreases() {
    let (f, _) = common::linear_pair();
    let (_, g) = common::linear_pair();
    let pair = compdiff::synthetic::ToyPair::build(&Default::default()).unwrap();
    for (a, b, x) in [
        (&f, &g, common::linear_seed()),
        (&pair.original, &pair.quantized, pair.test.images[0].clone()),
    ] {
        for mode in [SearchMode::Full, SearchMode::DistanceOnly, SearchMode::RandomOps] {
            let mut oracle = ModelPairOracle::new(a, b).unwrap();
            let r = run_trigger_search(&mut oracle, &x, &mut OperatorPool::default_pool(), &config(mode, 3000, 2)).unwrap();
            assert!(r.fitness_trace.windows(2).all(|w| w[0] <= w[1]), "{mode:?}");
        }
    }
}

#[test]
fn runs_are_bit_reproducible() {
    let pair = compdiff::synthetic::ToyPair::build(&Default::default()).unwrap();
    let x = &pair.test.images[3];
    let run = || {
        let mut oracle = ModelPairOracle::new(&pair.original, &pair.quantized).unwrap();
        let mut pool = OperatorPool::default_pool();
        let r = run_trigger_search(&mut oracle, x, &mut pool, &config(SearchMode::Full, 5000, 99)).unwrap();
        let counters: Vec<(u64, u64)> = pool.operators().iter().map(|o| (o.applied(), o.improved())).collect();
        (r.success, r.queries, r.trigger, r.operator_trace, r.fitness_trace, counters)
    };
    assert_eq!(run(), run());
}

#[test]
fn store_records_each_non_triggering_state() {
    let (f, _) = common::linear_pair();
    let mut oracle = ModelPairOracle::new(&f, &f).unwrap();
    let mut store = StateStore::new(1e-2);
    let r = run_trigger_search_with_store(&mut oracle, &common::linear_seed(), &mut OperatorPool::default_pool(), &config(SearchMode::Full, 50, 0), &mut store).unwrap();
    assert_eq!(store.len() as u64, r.queries);

    // States persist into a later search on the same store.
    let mut oracle = ModelPairOracle::new(&f, &f).unwrap();
    run_trigger_search_with_store(&mut oracle, &common::linear_seed(), &mut OperatorPool::default_pool(), &config(SearchMode::Full, 30, 1), &mut store).unwrap();
    assert_eq!(store.len(), 80);

    let mut empty = StateStore::new(1e-2);
    let mut oracle = ModelPairOracle::new(&f, &f).unwrap();
    run_trigger_search_with_store(&mut oracle, &common::linear_seed(), &mut OperatorPool::default_pool(), &config(SearchMode::DistanceOnly, 50, 0), &mut empty).unwrap();
    assert!(empty.is_empty());
}

#[test]
fn linf_budget_is_respected() {
    let (f, g) = common::linear_pair();
    let seed = Tensor::new(vec![4], vec![0.55, 0.5, 0.3, 0.3]).unwrap();
    let cfg = SearchConfig {
        linf_budget: Some(0.2),
        ..config(SearchMode::Full, 20_000, 4)
    };
    let mut oracle = ModelPairOracle::new(&f, &g).unwrap();
    let r = run_trigger_search(&mut oracle, &seed, &mut OperatorPool::default_pool(), &cfg).unwrap();
    let x = r.trigger.expect("band is reachable inside the ball");
    for (v, c) in x.data().iter().zip(seed.data()) {
        assert!((v - c).abs() <= 0.2 + 1e-12);
    }
}

#[test]
fn timeout_stops_an_uncapped_search() {
    let (f, _) = common::linear_pair();
    let mut oracle = ModelPairOracle::new(&f, &f).unwrap();
    let cfg = SearchConfig {
        timeout_secs: 0.05,
        max_queries: None,
        ..SearchConfig::default()
    };
    let r = run_trigger_search(&mut oracle, &common::linear_seed(), &mut OperatorPool::default_pool(), &cfg).unwrap();
    assert!(!r.success);
    assert!(r.elapsed.as_secs_f64() < 5.0);
}

#[test]
fn bad_inputs_are_rejected() {
    let (f, g) = common::linear_pair();
    let mut oracle = ModelPairOracle::new(&f, &g).unwrap();
    let wrong = Tensor::filled(vec![3], 0.5).unwrap();
    assert!(matches!(
        run_trigger_search(&mut oracle, &wrong, &mut OperatorPool::default_pool(), &SearchConfig::default()),
        Err(Error::Contract(_))
    ));
    let bad = SearchConfig { delta: 0.0, ..SearchConfig::default() };
    assert!(run_trigger_search(&mut oracle, &common::linear_seed(), &mut OperatorPool::default_pool(), &bad).is_err());
    let other = common::random_mlp(0, vec![5], &[], 2);
    assert!(ModelPairOracle::new(&f, &other).is_err());
}

#[test]
fn fitness_examples() {
    assert!((fitness(0.2, true, 1e-3) - 201.0).abs() < 1e-12);
    assert_eq!(fitness(0.0, false, 1e-3), 0.0);
    assert!(fitness(0.3, true, 1e-3) > fitness(0.3, false, 1e-3));
    let a = ProbVector::new(vec![0.7, 0.3]).unwrap();
    let b = ProbVector::new(vec![0.4, 0.6]).unwrap();
    assert!((distance(&a, &b) - 0.1).abs() < 1e-12);
}

proptest! {
    #[test]
    fn distance_gap_of_delta_dominates_novelty(
        da in 0.0f64..1.0,
        gap in 1e-3f64..1.0,
        na in any::<bool>(),
        nb in any::<bool>(),
    ) {
        let db = da + gap;
        prop_assume!(db <= 1.0 && db - da >= 1e-3);
        let (ha, hb) = (fitness(da, na, 1e-3), fitness(db, nb, 1e-3));
        prop_assert!(hb >= ha);
        if db - da > 1e-3 + 1e-12 {
            prop_assert!(hb > ha);
        }
    }
}
