mod common;

use consensus_lab::chain::{build_chain, AbsorbingChain, Backend};
use consensus_lab::dgr::{self, CompleteInit, DgrParams};
use consensus_lab::experiments::family;
use consensus_lab::graph::{make_complete, parse_graph, Graph};
use consensus_lab::process::{InitMode, StrategyState};

use common::{birth_death_times, close, forward_iteration, nonempty_init, uniform_init};

fn exact(graph: &Graph, m: u32, p: f64, init: &InitMode, backend: Backend) -> (Vec<f64>, f64) {
    let chain = build_chain(graph, m, p).unwrap();
    let dist = chain.init_distribution(init).unwrap();
    let sol = chain.solve(backend).unwrap();
    (sol.absorption_distribution(&dist).unwrap(), sol.expected_time(&dist).unwrap())
}

#[test]
fn chain_matches_forward_iteration() {
    let graphs = [
        family("complete", 3, None).unwrap(),
        family("path", 4, None).unwrap(),
        family("star", 4, None).unwrap(),
        family("cycle", 4, None).unwrap(),
        family("sundew", 5, Some(2)).unwrap(),
    ];
    for named in &graphs {
        let g = &named.graph;
        let n = g.vertex_count();
        for m in [2, 3] {
            for p in [0.0, 0.3, 0.5, 1.0] {
                for (mode, init) in [
                    (InitMode::Uniform, uniform_init(n, m)),
                    (InitMode::ConditionedNonempty, nonempty_init(n, m)),
                ] {
                    let (want_w, want_t) = forward_iteration(n, g.edges(), m, p, &init);
                    for backend in [Backend::Dense, Backend::Iterative] {
                        let (w, t) = exact(g, m, p, &mode, backend);
                        assert!(close(t, want_t, 1e-10), "{} m={m} p={p}: {t} vs {want_t}", named.name);
                        for (a, b) in w.iter().zip(&want_w) {
                            assert!((a - b).abs() < 1e-10, "{} m={m} p={p}: {w:?} vs {want_w:?}", named.name);
                        }
                    }
                }
            }
        }
    }
}

#[test]
fn k4_golden_file() {
    let text = include_str!("data/k4.edges");
    let g = parse_graph(text).unwrap();
    assert_eq!(g, make_complete(4).unwrap());
    let (w, t) = exact(&g, 2, 0.5, &InitMode::Uniform, Backend::Auto);
    assert!((t - 5.375).abs() < 1e-12, "{t}");
    assert!((w[0] - 0.5).abs() < 1e-12);
}

#[test]
fn complete_graph_formula_matches_birth_death_elimination() {
    for n in [2, 3, 7, 20, 40] {
        let gammas = dgr::complete_graph_gammas(n).unwrap();
        for p in [0.0, 0.15, 0.4, 0.5, 0.5 + 1e-7, 0.7, 0.95] {
            let down: Vec<f64> = gammas.iter().map(|g| p * g).collect();
            let up: Vec<f64> = gammas.iter().map(|g| (1.0 - p) * g).collect();
            let want = birth_death_times(&down, &up);
            for k in 0..=n {
                let got = dgr::complete_graph_expected_consensus_time(n, p, CompleteInit::Fixed(k)).unwrap();
                assert!(close(got, want[k], 1e-9), "n={n} p={p} k={k}: {got} vs {}", want[k]);
            }
        }
    }
}

#[test]
fn ruin_probability_ignores_delays() {
    let n = 9;
    for p in [0.0, 0.2, 0.5, 0.7] {
        let params = DgrParams::classical(n, p).unwrap();
        let slow: Vec<f64> = (1..n).map(|k| 0.1 + 0.8 * ((k * 7) % 5) as f64 / 5.0).collect();
        let delayed = DgrParams::new(n, p, slow.clone()).unwrap();
        let pad = |v: Vec<f64>| [vec![0.0], v, vec![0.0]].concat();
        let down = pad(slow.iter().map(|g| p * g).collect());
        let up = pad(slow.iter().map(|g| (1.0 - p) * g).collect());
        let chain = AbsorbingChain::birth_death(&down, &up).unwrap();
        let sol = chain.solve(Backend::Dense).unwrap();
        for k in 0..=n {
            let a = dgr::ruin_probability(&params, k).unwrap();
            let b = dgr::ruin_probability(&delayed, k).unwrap();
            assert_eq!(a, b);
            assert!((sol.absorption[k][1] - a).abs() < 1e-12, "p={p} k={k}");
        }
    }
}

#[test]
fn solver_is_continuous_through_lambda_one() {
    let gammas: Vec<f64> = (1..40).map(|k| 0.2 + (k % 4) as f64 * 0.2).collect();
    let at = |lambda: f64| dgr::expected_times(&DgrParams::new(40, lambda / (1.0 + lambda), gammas.clone()).unwrap()).unwrap();
    let (lo, mid, hi) = (at(1.0 - 1e-6), at(1.0), at(1.0 + 1e-6));
    for k in 1..40 {
        assert!(close(lo[k], hi[k], 1e-3));
        assert!(close(lo[k], mid[k], 1e-3));
    }
    for lambda in [1.0 - 1.001e-3, 1.0 + 1.001e-3] {
        let params = DgrParams::new(40, lambda / (1.0 + lambda), gammas.clone()).unwrap();
        let closed = dgr::expected_times(&params).unwrap();
        let solved = dgr::expected_time_solve(&params);
        for k in 1..40 {
            assert!(close(closed[k], solved[k], 1e-9), "lambda={lambda} k={k}");
        }
    }
}

#[test]
fn complete_graph_time_increases_on_lower_half() {
    for n in 2..=50 {
        let mut prev = 0.0;
        for i in 0..=50 {
            let t = dgr::complete_graph_expected_consensus_time(n, i as f64 / 100.0, CompleteInit::Binomial).unwrap();
            assert!(t >= prev - 1e-9 * prev, "n={n} p={}", i as f64 / 100.0);
            prev = t;
        }
    }
    for n in 2..=8 {
        let g = make_complete(n).unwrap();
        let mut prev = 0.0;
        for i in 0..=5 {
            let (_, t) = exact(&g, 2, i as f64 / 10.0, &InitMode::Uniform, Backend::Auto);
            assert!(t >= prev - 1e-12);
            prev = t;
        }
    }
}

#[test]
fn p_zero_lowest_strategy_law() {
    for (fam, n) in [("path", 5), ("star", 6), ("complete", 4)] {
        let g = family(fam, n, None).unwrap().graph;
        for m in [2, 3] {
            let (w, _) = exact(&g, m, 0.0, &InitMode::Uniform, Backend::Auto);
            let want = 1.0 - ((m - 1) as f64 / m as f64).powi(n as i32);
            assert!((w[0] - want).abs() < 1e-12);
        }
    }
}

#[test]
fn relabelling_with_complementary_p() {
    let graphs = [
        family("complete", 3, None).unwrap().graph,
        family("path", 4, None).unwrap().graph,
        family("star", 4, None).unwrap().graph,
        family("cycle", 4, None).unwrap().graph,
    ];
    for g in &graphs {
        for m in [2, 3] {
            for p in [0.0, 0.2, 0.35] {
                let a = build_chain(g, m, p).unwrap();
                let b = build_chain(g, m, 1.0 - p).unwrap();
                let (sa, sb) = (a.solve(Backend::Dense).unwrap(), b.solve(Backend::Dense).unwrap());
                let codec = a.codec().unwrap();
                for s in 0..a.state_count() {
                    let flipped: Vec<u32> = codec.decode(s).strategies().iter().map(|&x| m + 1 - x).collect();
                    let t = codec.encode(&StrategyState::new(flipped, m).unwrap());
                    assert!(close(sa.times[s], sb.times[t], 1e-12));
                    for l in 0..m as usize {
                        assert!((sa.absorption[s][l] - sb.absorption[t][m as usize - 1 - l]).abs() < 1e-12);
                    }
                }
            }
        }
    }
}

#[test]
fn coarse_grained_chain_matches_class_law() {
    let g = make_complete(3).unwrap();
    for p in [0.0, 0.25, 0.5, 0.9] {
        let (full, _) = exact(&g, 3, p, &InitMode::Uniform, Backend::Dense);
        let coarse = build_chain(&g, 2, p).unwrap();
        let codec = coarse.codec().unwrap();
        for l in [1u32, 2] {
            let low = l as f64 / 3.0;
            let init: Vec<f64> = (0..coarse.state_count())
                .map(|s| {
                    codec
                        .decode(s)
                        .strategies()
                        .iter()
                        .map(|&x| if x == 1 { low } else { 1.0 - low })
                        .product()
                })
                .collect();
            let two = coarse.solve(Backend::Dense).unwrap().absorption_distribution(&init).unwrap();
            let class: f64 = full[..l as usize].iter().sum();
            assert!((two[0] - class).abs() < 1e-12, "p={p} l={l}");
        }
    }
}

#[test]
fn survivor_law_on_other_connected_graphs() {
    for (fam, n, r) in [("sundew", 5, Some(2)), ("lollipop", 5, Some(2)), ("cycle", 5, None)] {
        let g = family(fam, n, r).unwrap().graph;
        for m in [2, 3] {
            for p in [0.1, 0.45, 0.8] {
                let (w, _) = exact(&g, m, p, &InitMode::Uniform, Backend::Auto);
                let f = dgr::survivor_distribution(n, m, p).unwrap();
                for (a, b) in w.iter().zip(&f) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }
}
