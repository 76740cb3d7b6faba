mod common;

use missbench_core::missingness::MetropolisWalker;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Largest connected component of a 100-node configuration-model graph,
/// relabelled densely.
fn test_graph() -> missbench_core::Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let degrees: Vec<usize> = (0..100).map(|_| rng.random_range(1..=8)).collect();
    let mut degrees = degrees;
    if degrees.iter().sum::<usize>() % 2 == 1 {
        degrees[0] += 1;
    }
    let g = common::configuration_model(&degrees, &mut rng);
    let giant = g.connected_components().into_iter().max_by_key(Vec::len).unwrap();
    let index: std::collections::HashMap<usize, usize> = giant.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let edges: Vec<(usize, usize)> = g
        .edges()
        .filter(|e| index.contains_key(&e.u()))
        .map(|e| (index[&e.u()], index[&e.v()]))
        .collect();
    missbench_core::Graph::from_edges(giant.len(), edges).unwrap()
}

#[test]
fn metropolis_walk_is_uniform_on_nodes() {
    let g = test_graph();
    let n = g.node_count();
    assert!(n >= 90, "giant component has {n} nodes");
    // 10^4 independent chains of 100 steps each, started uniformly, so the
    // recorded end states are independent draws from the step-100 law.
    let chains = 10_000;
    let steps = 100;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut counts = vec![0usize; n];
    for _ in 0..chains {
        let mut w = MetropolisWalker::new(&g, rng.random_range(0..n), 1.0);
        for _ in 0..steps {
            w.step(&mut rng);
        }
        counts[w.current()] += 1;
    }
    let expected = chains as f64 / n as f64;
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((n - 1) as f64).unwrap().inverse_cdf(0.99);
    assert!(chi2 < critical, "chi2 {chi2:.1} >= {critical:.1}");

    // a plain random walk run the same way drifts towards degree-proportional
    // visits and must fail the same test
    let mut counts = vec![0usize; n];
    for _ in 0..chains {
        let mut v = rng.random_range(0..n);
        for _ in 0..steps {
            let nb = g.neighbors(v);
            v = nb[rng.random_range(0..nb.len())];
        }
        counts[v] += 1;
    }
    let chi2: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    assert!(chi2 > critical, "simple walk chi2 {chi2:.1}");
}
