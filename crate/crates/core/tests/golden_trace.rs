//! Frozen interaction trace on a 4x4 lattice. Any change to the random
//! stream layout, the listener draw or the acceptance rule shows up here.

use std::sync::Arc;

use influence_core::engine::{run, Attribution, GameParams, InteractionRecord, RunOptions};
use influence_core::graph::Graph;
use influence_core::scenarios::{apply_committed, init_fractions};
use influence_core::seeds::rng_from_seed;

const SEED: u64 = 2024;

fn trace() -> Vec<InteractionRecord> {
    let graph = Graph::lattice2d_pbc(4, 4).unwrap();
    let params = GameParams {
        rounds: 24,
        ..GameParams::default()
    };
    let assignment = init_fractions(16, &[0.5, 0.5], &mut rng_from_seed(SEED ^ 1)).unwrap();
    let agents = apply_committed(&assignment, None, &params);
    let options = RunOptions {
        record_trajectory: true,
        ..RunOptions::default()
    };
    run(Arc::new(graph), params, agents, SEED, &options).unwrap().trajectory
}

fn line(r: &InteractionRecord) -> String {
    let tag = match r.attribution {
        Attribution::SameOpinion => "same",
        Attribution::Homophily => "homophily",
        Attribution::Influence => "influence",
        Attribution::Rejected => "rejected",
    };
    format!(
        "{} {}->{} {}/{} offer={} dI={} p={:.6} {}",
        r.round,
        r.speaker,
        r.listener,
        r.speaker_opinion,
        r.listener_opinion_before,
        r.offer,
        r.delta_i,
        r.p_accept,
        tag
    )
}

const GOLDEN: &str = "\
1 8->9 1/0 offer=0 dI=9 p=0.999877 homophily\n\
2 6->7 0/0 offer=0 dI=-1 p=0.268941 same\n\
3 4->7 0/0 offer=0 dI=-1 p=0.268941 same\n\
4 7->4 0/0 offer=0 dI=-1 p=0.268941 same\n\
5 8->12 1/0 offer=1 dI=10 p=0.999955 influence\n\
6 10->6 1/0 offer=0 dI=9 p=0.999877 homophily\n\
7 8->4 1/0 offer=0 dI=-1 p=0.268941 rejected\n\
8 12->0 1/0 offer=0 dI=-1 p=0.268941 rejected\n\
9 4->5 0/1 offer=0 dI=-11 p=0.000017 rejected\n\
10 2->1 1/1 offer=0 dI=-1 p=0.268941 same\n\
11 0->1 0/1 offer=0 dI=-11 p=0.000017 rejected\n\
12 5->1 1/1 offer=0 dI=-1 p=0.268941 same\n\
13 15->11 1/0 offer=0 dI=9 p=0.999877 homophily\n\
14 15->11 1/1 offer=0 dI=-1 p=0.268941 same\n\
15 11->15 1/1 offer=0 dI=-1 p=0.268941 same\n\
16 3->7 0/0 offer=0 dI=-1 p=0.268941 same\n\
17 0->12 0/1 offer=0 dI=-11 p=0.000017 rejected\n\
18 14->15 1/1 offer=0 dI=-1 p=0.268941 same\n\
19 14->2 1/1 offer=0 dI=-1 p=0.268941 same\n\
20 9->13 1/1 offer=0 dI=-1 p=0.268941 same\n\
21 1->13 1/1 offer=0 dI=-1 p=0.268941 same\n\
22 10->9 1/1 offer=0 dI=-1 p=0.268941 same\n\
23 7->4 0/0 offer=0 dI=-1 p=0.268941 same\n\
24 1->0 1/0 offer=0 dI=-1 p=0.268941 rejected";

#[test]
fn trace_matches_golden() {
    let got: Vec<String> = trace().iter().map(line).collect();
    let want: Vec<&str> = GOLDEN.lines().collect();
    assert_eq!(got, want);
}

#[test]
fn trace_is_stable_across_reruns() {
    assert_eq!(trace(), trace());
}
