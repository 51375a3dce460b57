//! Library results checked against independent brute-force computations.

use std::sync::Arc;

use influence_core::engine::{run, GameParams, OpinionId, RunOptions};
use influence_core::graph::{Graph, NeighborhoodTable};
use influence_core::metrics::{components_per_opinion, summarize_run};
use influence_core::scenarios::{apply_committed, init_random_uniform};
use influence_core::seeds::rng_from_seed;
use proptest::prelude::*;

const INF: usize = usize::MAX / 2;

/// All-pairs hop distances by Floyd-Warshall over the edge list.
fn all_pairs(graph: &Graph) -> Vec<Vec<usize>> {
    let n = graph.len();
    let mut d = vec![vec![INF; n]; n];
    for (v, row) in d.iter_mut().enumerate() {
        row[v] = 0;
    }
    for (u, v) in graph.edges() {
        d[u][v] = 1;
        d[v][u] = 1;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

fn check_balls(graph: &Graph, max_radius: usize) {
    let d = all_pairs(graph);
    for radius in 1..=max_radius {
        let table = NeighborhoodTable::build(graph, radius).unwrap();
        for (u, row) in d.iter().enumerate() {
            let mut want: Vec<usize> = (0..graph.len()).filter(|&v| v != u && row[v] <= radius).collect();
            let mut got = table.ball(u).to_vec();
            want.sort_unstable();
            got.sort_unstable();
            assert_eq!(got, want, "ball({u}, {radius})");
            assert_eq!(graph.k_ball(u, radius).unwrap().len(), want.len());
        }
    }
}

fn union_find_components(graph: &Graph, opinions: &[OpinionId], k: usize) -> Vec<usize> {
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut parent: Vec<usize> = (0..graph.len()).collect();
    for (u, v) in graph.edges() {
        if opinions[u] == opinions[v] {
            let (a, b) = (find(&mut parent, u), find(&mut parent, v));
            parent[a] = b;
        }
    }
    let mut counts = vec![0; k];
    for v in 0..graph.len() {
        if find(&mut parent, v) == v {
            counts[opinions[v].index()] += 1;
        }
    }
    counts
}

#[test]
fn lattice_balls_match_floyd_warshall() {
    check_balls(&Graph::lattice2d_pbc(6, 7).unwrap(), 5);
    check_balls(&Graph::lattice2d_pbc(3, 3).unwrap(), 2);
}

#[test]
fn ba_balls_match_floyd_warshall() {
    let g = Graph::barabasi_albert(60, 3, &mut rng_from_seed(5)).unwrap();
    check_balls(&g, 3);
}

#[test]
fn lattice_diameter_is_half_sides() {
    for (r, c) in [(3, 3), (4, 5), (6, 7), (8, 8)] {
        let g = Graph::lattice2d_pbc(r, c).unwrap();
        let d = all_pairs(&g);
        let brute = d.iter().flatten().copied().max().unwrap();
        assert_eq!(brute, r / 2 + c / 2);
        assert_eq!(g.diameter(), brute);
    }
}

#[test]
fn ba_edge_count_degree_and_determinism() {
    for (n, m) in [(10, 1), (100, 2), (1000, 4)] {
        let a = Graph::barabasi_albert(n, m, &mut rng_from_seed(77)).unwrap();
        let b = Graph::barabasi_albert(n, m, &mut rng_from_seed(77)).unwrap();
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        assert_eq!(a.edge_count(), m * (m - 1) / 2 + (n - m) * m);
        assert!((0..n).all(|v| a.degree(v) >= m));
        let degree_sum: usize = (0..n).map(|v| a.degree(v)).sum();
        assert_eq!(degree_sum, 2 * a.edge_count());
        assert!(a.diameter() < n, "connected");
    }
}

#[test]
fn ba_hubs_emerge() {
    let g = Graph::barabasi_albert(1000, 4, &mut rng_from_seed(1)).unwrap();
    let max = (0..1000).map(|v| g.degree(v)).max().unwrap();
    // A lattice-like graph would top out near the mean degree of 8.
    assert!(max > 40, "max degree {max}");
}

#[test]
fn incremental_summary_matches_rewound_trajectory() {
    let graph = Arc::new(Graph::lattice2d_pbc(5, 5).unwrap());
    for seed in 0..20 {
        let params = GameParams {
            rounds: 3_000,
            ..GameParams::default()
        };
        let assignment = init_random_uniform(25, 2, &mut rng_from_seed(seed + 100)).unwrap();
        let agents = apply_committed(&assignment, None, &params);
        let options = RunOptions {
            record_trajectory: true,
            ..RunOptions::default()
        };
        let out = run(Arc::clone(&graph), params, agents, seed, &options).unwrap();
        assert_eq!(out.trajectory.len(), 3_000);
        assert_eq!(summarize_run(seed, &out.trajectory, &out.state), out.summary);
    }
}

proptest! {
    #[test]
    fn components_match_union_find(rows in 3usize..9, cols in 3usize..9, k in 2usize..5, seed: u64) {
        let g = Graph::lattice2d_pbc(rows, cols).unwrap();
        let ops = init_random_uniform(g.len(), k, &mut rng_from_seed(seed)).unwrap();
        prop_assert_eq!(components_per_opinion(&g, &ops, k), union_find_components(&g, &ops, k));
    }

    #[test]
    fn ba_components_match_union_find(n in 8usize..80, m in 1usize..4, seed: u64) {
        let g = Graph::barabasi_albert(n, m, &mut rng_from_seed(seed)).unwrap();
        let ops = init_random_uniform(n, 3, &mut rng_from_seed(!seed)).unwrap();
        prop_assert_eq!(components_per_opinion(&g, &ops, 3), union_find_components(&g, &ops, 3));
    }

    #[test]
    fn neighbourhoods_are_symmetric(n in 6usize..60, m in 1usize..4, radius in 1usize..4, seed: u64) {
        let g = Graph::barabasi_albert(n, m, &mut rng_from_seed(seed)).unwrap();
        let t = NeighborhoodTable::build(&g, radius).unwrap();
        for u in 0..n {
            prop_assert!(!t.contains(u, u));
            for &v in t.ball(u) {
                prop_assert!(t.contains(v, u));
            }
        }
    }
}
