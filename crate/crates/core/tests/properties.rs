use consensus_lab::chain::{build_chain, Backend};
use consensus_lab::dgr::{self, DgrParams};
use consensus_lab::graph::{self, parse_graph, write_graph, Graph};
use consensus_lab::process::{estimate, EstimateConfig, InitMode, StrategyState};
use proptest::prelude::*;

/// Connected graph: a random spanning tree plus a random subset of the other pairs.
fn connected_graph(max_n: usize) -> impl Strategy<Value = Graph> {
    (2..=max_n)
        .prop_flat_map(|n| {
            let parents: Vec<_> = (1..n).map(|v| 0..v).collect();
            (Just(n), parents, proptest::collection::vec(any::<bool>(), n * n))
        })
        .prop_map(|(n, parents, extra)| {
            let mut edges: Vec<(usize, usize)> = parents.iter().enumerate().map(|(i, &u)| (u, i + 1)).collect();
            for u in 0..n {
                for v in u + 1..n {
                    if extra[u * n + v] && !edges.contains(&(u, v)) {
                        edges.push((u, v));
                    }
                }
            }
            Graph::new(n, edges).unwrap()
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn write_then_parse_is_identity(g in connected_graph(12)) {
        let text = write_graph(&g);
        let back = parse_graph(&text).unwrap();
        prop_assert_eq!(write_graph(&back), text);
        prop_assert_eq!(back, g);
    }

    #[test]
    fn spider_edge_counts(n in 3usize..60, frac in 0.0f64..1.0) {
        let r = 1 + ((n - 3) as f64 * frac) as usize;
        let c = n - r;
        let want = c * (c - 1) / 2 + r;
        prop_assert_eq!(graph::make_sundew(n, r).unwrap().edge_count(), want);
        prop_assert_eq!(graph::make_lollipop(n, r).unwrap().edge_count(), want);
        prop_assert_eq!(graph::make_sundew(n, r).unwrap().leaves().len(), if c == 2 && r == 1 { 2 } else { r });
    }

    #[test]
    fn regular_families(n in 3usize..40) {
        prop_assert_eq!(graph::make_complete(n).unwrap().regular_degree(), Some(n - 1));
        prop_assert_eq!(graph::make_cycle(n).unwrap().regular_degree(), Some(2));
    }

    #[test]
    fn chain_rows_are_stochastic(g in connected_graph(5), m in 1u32..=3, p in 0.0f64..=1.0) {
        let chain = build_chain(&g, m, p).unwrap();
        for s in 0..chain.state_count() {
            let sum: f64 = chain.row(s).iter().map(|&(_, w)| w).sum();
            prop_assert!((sum - 1.0).abs() < 1e-12);
        }
        let absorbing = chain.absorbing_states();
        prop_assert_eq!(absorbing.len(), m as usize);
        for s in absorbing {
            prop_assert!(chain.codec().unwrap().decode(s).consensus().is_some());
        }
    }

    #[test]
    fn winner_law_is_graph_free(g in connected_graph(5), m in 1u32..=3, p in 0.0f64..=1.0) {
        let chain = build_chain(&g, m, p).unwrap();
        let init = chain.init_distribution(&InitMode::Uniform).unwrap();
        let w = chain.solve(Backend::Auto).unwrap().absorption_distribution(&init).unwrap();
        let f = dgr::survivor_distribution(g.vertex_count(), m, p).unwrap();
        for (a, b) in w.iter().zip(&f) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn survivor_law_sums_to_one(n in 1usize..300, m in 1u32..25, p in 0.0f64..=1.0) {
        let f = dgr::survivor_distribution(n, m, p).unwrap();
        prop_assert!(f.iter().all(|&x| (0.0..=1.0 + 1e-12).contains(&x)));
        prop_assert!((f.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn delayed_walk_recurrence_holds(
        gammas in proptest::collection::vec(0.05f64..=1.0, 1..300),
        p in 0.0f64..0.999,
    ) {
        let n = gammas.len() + 1;
        let params = DgrParams::new(n, p, gammas).unwrap();
        let times = dgr::expected_times(&params).unwrap();
        prop_assert!(dgr::recurrence_residual(&params, &times) <= 1e-9);
        prop_assert!(dgr::recurrence_residual(&params, &dgr::expected_time_solve(&params)) <= 1e-9);
        prop_assert_eq!(times[0], 0.0);
        prop_assert_eq!(times[n], 0.0);
        let mut prev = 0.0;
        for k in 0..=n {
            let r = dgr::ruin_probability(&params, k).unwrap();
            prop_assert!(r >= prev - 1e-15 && r <= 1.0 + 1e-15);
            prev = r;
        }
    }

    #[test]
    fn random_symmetric_delays_are_monotone(half in proptest::collection::vec(0.05f64..=1.0, 1..20), odd in any::<bool>()) {
        let mut gammas = half.clone();
        if odd {
            gammas.push(0.05 + 0.95 * half[0]);
        }
        gammas.extend(half.iter().rev());
        let n = gammas.len() + 1;
        let report = dgr::symmetric_sum_scan(n, &gammas, &dgr::lambda_grid(0.01)).unwrap();
        prop_assert!(report.is_monotone(), "{:?}", report.violations);
    }

    #[test]
    fn coarse_grain_thresholds(strategies in proptest::collection::vec(1u32..=5, 1..20), l in 1u32..5) {
        let s = StrategyState::new(strategies.clone(), 5).unwrap();
        let c = s.coarse_grain(l).unwrap();
        for (a, b) in strategies.iter().zip(c.strategies()) {
            prop_assert_eq!(*b, if *a <= l { 1 } else { 2 });
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn estimates_ignore_worker_count(g in connected_graph(7), p in 0.0f64..=1.0, seed in any::<u64>()) {
        let base = EstimateConfig::new(p, 3, 300, seed);
        let one = estimate(&g, &base.clone().with_workers(1)).unwrap();
        let three = estimate(&g, &base.with_workers(3)).unwrap();
        prop_assert_eq!(one, three);
    }
}
