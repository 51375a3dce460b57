#![allow(clippy::field_reassign_with_default)]

use super::*;
use crate::seeds::rng_from_seed;
use approx::assert_abs_diff_eq;
use proptest::prelude::*;

const A: OpinionId = OpinionId::A;
const B: OpinionId = OpinionId::B;

fn agent(opinion: OpinionId) -> AgentState {
    AgentState {
        opinion,
        budget: 0.0,
        change_cost: 1.0,
        committed: false,
    }
}

fn lattice_state(side: usize, opinions: &[OpinionId], params: GameParams) -> GameState {
    let graph = Arc::new(Graph::lattice2d_pbc(side, side).unwrap());
    GameState::prepare(graph, params, opinions.iter().copied().map(agent).collect()).unwrap()
}

/// 5x5 lattice, everything `fill` except the listed overrides.
fn five_by_five(fill: OpinionId, set: &[(NodeId, OpinionId)], params: GameParams) -> GameState {
    let mut ops = vec![fill; 25];
    for &(v, o) in set {
        ops[v] = o;
    }
    lattice_state(5, &ops, params)
}

#[test]
fn forecast_examples() {
    assert_eq!(forecast(A, A, 0.0, 10.0), 10.0);
    assert_eq!(forecast(A, B, 3.0, 10.0), 3.0);
    assert_eq!(forecast(A, A, 2.5, 10.0), 12.5);
}

#[test]
fn acceptance_examples() {
    assert_eq!(acceptance_probability(0.0, false), 0.5);
    assert_abs_diff_eq!(
        acceptance_probability(10.0, false),
        0.999_954_602_131_297_6,
        epsilon = 1e-12
    );
    assert_eq!(acceptance_probability(1e6, true), 0.0);
    assert_eq!(acceptance_probability(-3.0, true), 0.0);
}

#[test]
fn opinion_labels() {
    assert_eq!(OpinionId::parse("A"), Some(A));
    assert_eq!(OpinionId::parse("e"), Some(OpinionId(4)));
    assert_eq!(OpinionId::parse("3"), Some(OpinionId(3)));
    assert_eq!(OpinionId::parse("99"), None);
    assert_eq!(OpinionId(2).letter(), 'C');
}

// On the 5x5 lattice node 12 has neighbors 7, 11, 13, 17.

#[test]
fn majority_counts_self() {
    let s = five_by_five(B, &[(12, A), (7, A), (11, A)], GameParams::default());
    assert_eq!(s.local_majority(12, None), A);
}

#[test]
fn majority_with_hypothetical_neighbor() {
    let s = five_by_five(B, &[(12, A)], GameParams::default());
    assert_eq!(s.local_majority(12, Some((7, A))), B);
    // An override outside the ball changes nothing.
    assert_eq!(s.local_majority(12, Some((0, A))), B);
}

#[test]
fn majority_tie_goes_to_own_opinion() {
    let ops: Vec<_> = (0..25).map(|_| OpinionId(0)).collect();
    let mut s = lattice_state(5, &ops, GameParams::with_opinions(5));
    for (v, o) in [(7, 1), (11, 2), (13, 3), (17, 4)] {
        s.agents[v].opinion = OpinionId(o);
    }
    assert_eq!(s.local_majority(12, None), OpinionId(0));
    // Without the agent in the tie the lowest id wins.
    s.agents[7].opinion = OpinionId(3);
    s.agents[12].opinion = OpinionId(1);
    // counts: 1 (self), 2, 3, 3, 4 -> opinion 3 leads.
    assert_eq!(s.local_majority(12, None), OpinionId(3));
    s.agents[11].opinion = OpinionId(3);
    s.agents[13].opinion = OpinionId(4);
    // 3 and 4 tie at two each; self holds 1.
    assert_eq!(s.local_majority(12, None), OpinionId(3));
}

#[test]
fn plurality_rule() {
    assert_eq!(plurality(&[2, 2], B), B);
    assert_eq!(plurality(&[2, 2, 1], OpinionId(2)), A);
    assert_eq!(plurality(&[1, 3, 3], A), B);
}

#[test]
fn no_offer_between_agreeing_agents() {
    let s = five_by_five(A, &[], GameParams::default());
    assert_eq!(s.speaker_offer(12, 7), 0.0);
}

#[test]
fn no_offer_from_hopeless_minority() {
    let s = five_by_five(B, &[(12, A)], GameParams::default());
    assert_eq!(s.speaker_offer(12, 7), 0.0);
}

#[test]
fn offer_when_listener_tips_speaker() {
    // 3x3 lattice: node 4 has neighbors 1, 3, 5, 7.
    let mut ops = vec![B; 9];
    ops[4] = A;
    ops[3] = A;
    let s = lattice_state(3, &ops, GameParams::default());
    assert_eq!(s.local_majority(4, None), B);
    assert_eq!(s.speaker_offer(4, 1), 1.0);
}

#[test]
fn offer_uses_speaker_opinion_amount() {
    let mut params = GameParams::default();
    params.offer_amounts = vec![7.0, 1.0];
    let s = five_by_five(B, &[(12, A), (11, A)], params);
    assert_eq!(s.speaker_offer(12, 7), 7.0);
}

#[test]
fn no_offer_when_speaker_already_leads() {
    let s = five_by_five(A, &[(7, B), (13, B)], GameParams::default());
    assert_eq!(s.speaker_offer(12, 7), 0.0);
}

#[test]
fn listener_outside_knowledge_ball_gets_nothing() {
    let mut params = GameParams::default();
    params.influence_radius = 2;
    let s = five_by_five(B, &[(12, A), (11, A)], params);
    // Node 2 is two steps from 12: inside the influence ball only.
    assert!(s.influence_ball(12).contains(&2));
    assert!(!s.knowledge_ball(12).contains(&2));
    assert_eq!(s.speaker_offer(12, 2), 0.0);
}

#[test]
fn delta_same_opinion_cancels() {
    let mut s = five_by_five(A, &[], GameParams::default());
    s.agents[7].change_cost = 0.0;
    assert_eq!(s.delta_i(12, 7, 0.0), 0.0);
}

// Node 7 has neighbors 2, 6, 8, 12.

fn with_baseline(baseline: BaselineVariant) -> GameParams {
    GameParams {
        baseline,
        ..GameParams::default()
    }
}

#[test]
fn delta_when_flip_tips_listener() {
    let s = five_by_five(B, &[(12, A), (6, A)], with_baseline(BaselineVariant::AsWritten));
    assert_eq!(s.delta_i(12, 7, 1.0), 10.0);
    let s = five_by_five(
        B,
        &[(12, A), (6, A)],
        with_baseline(BaselineVariant::ListenerOwnOpinion),
    );
    assert_eq!(s.delta_i(12, 7, 1.0), 0.0);
}

#[test]
fn delta_when_majority_already_speakers() {
    let s = five_by_five(A, &[(7, B)], with_baseline(BaselineVariant::AsWritten));
    assert_eq!(s.delta_i(12, 7, 0.0), -1.0);
    let s = five_by_five(A, &[(7, B)], with_baseline(BaselineVariant::ListenerOwnOpinion));
    assert_eq!(s.delta_i(12, 7, 0.0), 9.0);
}

#[test]
fn delta_in_own_majority_is_strongly_negative() {
    // Listener 7 (B) sits in a B neighborhood; converting cannot tip it.
    let s = five_by_five(B, &[(12, A)], with_baseline(BaselineVariant::ListenerOwnOpinion));
    assert_eq!(s.delta_i(12, 7, 0.0), -11.0);
    let s = five_by_five(B, &[(12, A)], with_baseline(BaselineVariant::AsWritten));
    assert_eq!(s.delta_i(12, 7, 0.0), -1.0);
}

#[test]
fn homogeneous_interior_only_meets_allies() {
    let mut s = lattice_state(9, &[A; 81], GameParams::default());
    let mut rng = rng_from_seed(5);
    for _ in 0..500 {
        let r = s.step(&mut rng).unwrap();
        assert_eq!(r.attribution, Attribution::SameOpinion);
        assert_eq!(r.offer, 0.0);
    }
    assert_eq!(s.counts(), &[81, 0]);
}

#[test]
fn committed_listener_never_accepts() {
    let mut s = five_by_five(A, &[(7, B)], GameParams::default());
    s.agents[7].committed = true;
    for u in [0.0, 0.3, 0.999] {
        let r = s.interact(12, 7, u);
        assert!(!r.accepted);
        assert_eq!(r.p_accept, 0.0);
    }
    assert_eq!(s.opinion(7), B);
}

#[test]
fn accepted_offer_moves_opinion_and_budget() {
    let mut s = five_by_five(B, &[(12, A), (11, A)], GameParams::default());
    let r = s.interact(12, 7, 0.0);
    assert!(r.accepted);
    assert_eq!(r.offer, 1.0);
    assert_eq!(r.attribution, Attribution::Influence);
    assert_eq!(s.opinion(7), A);
    assert_eq!(s.agents()[7].budget, 1.0);
    assert_eq!(s.agents()[12].budget, 0.0);
    assert_eq!(s.counts(), &[3, 22]);
    assert_eq!(s.round(), 1);
    s.check_invariants().unwrap();
}

#[test]
fn debit_speaker_conserves_budget() {
    let mut params = GameParams::default();
    params.debit_speaker = true;
    let mut s = five_by_five(B, &[(12, A), (11, A)], params);
    s.interact(12, 7, 0.0);
    assert_eq!(s.agents()[12].budget, -1.0);
    assert_eq!(s.agents().iter().map(|a| a.budget).sum::<f64>(), 0.0);
    s.check_invariants().unwrap();
}

#[test]
fn rejected_interaction_changes_nothing() {
    let mut s = five_by_five(B, &[(12, A)], GameParams::default());
    let before = s.agents().to_vec();
    let r = s.interact(12, 7, 0.9999);
    assert!(!r.accepted);
    assert_eq!(r.attribution, Attribution::Rejected);
    assert_eq!(s.agents(), &before[..]);
}

#[test]
fn homophily_flip_is_unpaid() {
    // Listener 7 surrounded by A; speaker cannot change its own (A) majority.
    let mut s = five_by_five(A, &[(7, B)], GameParams::default());
    let r = s.interact(12, 7, 0.0);
    assert_eq!(r.offer, 0.0);
    assert_eq!(r.attribution, Attribution::Homophily);
    assert_eq!(s.opinion(7), A);
}

#[test]
fn step_after_last_round_fails() {
    let mut params = GameParams::default();
    params.rounds = 3;
    let mut s = five_by_five(B, &[(12, A)], params);
    let mut rng = rng_from_seed(1);
    for _ in 0..3 {
        s.step(&mut rng).unwrap();
    }
    assert_eq!(s.step(&mut rng), Err(EngineError::GameOver(3)));
}

#[test]
fn settlement_pays_majority() {
    let ops: Vec<_> = (0..900).map(|i| if i < 600 { A } else { B }).collect();
    let mut s = lattice_state(30, &ops, GameParams::default());
    let budgets = s.settle_rewards();
    assert!(budgets[..600].iter().all(|&b| b == 10.0));
    assert!(budgets[600..].iter().all(|&b| b == 0.0));
    // Idempotent.
    assert_eq!(s.settle_rewards(), budgets);
}

#[test]
fn settlement_tie_pays_nobody() {
    let ops: Vec<_> = (0..900).map(|i| if i % 2 == 0 { A } else { B }).collect();
    let mut s = lattice_state(30, &ops, GameParams::default());
    assert!(s.settle_rewards().iter().all(|&b| b == 0.0));
}

#[test]
fn settlement_on_consensus_pays_everyone() {
    let mut s = lattice_state(30, &[B; 900], GameParams::default());
    assert!(s.settle_rewards().iter().all(|&b| b == 10.0));
}

#[test]
fn param_validation() {
    let mut p = GameParams::default();
    p.knowledge_radius = 0;
    assert!(matches!(p.validate(), Err(EngineError::InvalidParam { field, .. }) if field == "r_k"));
    let mut p = GameParams::default();
    p.offer_amounts = vec![1.0];
    assert!(p.validate().is_err());
    let mut p = GameParams::default();
    p.rounds = 0;
    assert!(p.validate().is_err());
    let mut p = GameParams::default();
    p.reward = -1.0;
    assert!(p.validate().is_err());
}

#[test]
fn state_rejects_foreign_opinions() {
    let graph = Arc::new(Graph::lattice2d_pbc(3, 3).unwrap());
    let mut agents = vec![agent(A); 9];
    agents[4].opinion = OpinionId(2);
    assert!(matches!(
        GameState::prepare(graph, GameParams::default(), agents),
        Err(EngineError::OpinionOutOfRange { node: 4, .. })
    ));
}

fn arbitrary_state(seed: u64, k: usize, debit: bool, committed_a: bool) -> GameState {
    let mut rng = rng_from_seed(seed);
    let mut params = GameParams::with_opinions(k);
    params.debit_speaker = debit;
    params.offer_amounts = (0..k).map(|i| (i + 1) as f64).collect();
    params.rounds = 2_000;
    let agents = (0..36)
        .map(|_| {
            let o = OpinionId(rand::Rng::gen_range(&mut rng, 0..k) as u8);
            AgentState {
                opinion: o,
                budget: 0.0,
                change_cost: 1.0,
                committed: committed_a && o == A,
            }
        })
        .collect();
    GameState::prepare(Arc::new(Graph::lattice2d_pbc(6, 6).unwrap()), params, agents).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn bookkeeping_holds_along_trajectories(seed in any::<u64>(), k in 2usize..5, debit in any::<bool>()) {
        let mut s = arbitrary_state(seed, k, debit, false);
        let mut rng = rng_from_seed(seed ^ 1);
        let mut accepted_offers = 0.0;
        while !s.is_finished() {
            let before = s.opinions();
            let r = s.step(&mut rng).unwrap();
            if r.accepted {
                accepted_offers += r.offer;
            }
            let after = s.opinions();
            for v in 0..before.len() {
                if before[v] != after[v] {
                    prop_assert!(r.accepted && v == r.listener);
                }
            }
            prop_assert!((0.0..=1.0).contains(&r.p_accept));
            if r.offer > 0.0 {
                prop_assert_ne!(r.speaker_opinion, r.listener_opinion_before);
            }
            prop_assert!(s.check_invariants().is_ok());
        }
        let total: f64 = s.agents().iter().map(|a| a.budget).sum();
        let expected = if debit { 0.0 } else { accepted_offers };
        prop_assert!((total - expected).abs() < 1e-9);
    }

    #[test]
    fn committed_agents_hold(seed in any::<u64>()) {
        let mut s = arbitrary_state(seed, 3, false, true);
        let pinned: Vec<_> = (0..36).filter(|&v| s.agents()[v].committed).collect();
        let mut rng = rng_from_seed(seed);
        while !s.is_finished() {
            s.step(&mut rng).unwrap();
        }
        for v in pinned {
            prop_assert_eq!(s.opinion(v), A);
        }
    }

    #[test]
    fn acceptance_is_monotone(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let (plo, phi) = (acceptance_probability(lo, false), acceptance_probability(hi, false));
        prop_assert!(plo <= phi);
        prop_assert!((0.0..=1.0).contains(&plo) && (0.0..=1.0).contains(&phi));
    }
}
