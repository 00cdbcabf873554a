use std::f64::consts::{PI, TAU};

use proptest::prelude::*;
use softflock::control::{delta, u_beta, worst_agent, UBetaParams};
use softflock::model::{advance_using, mean_heading, neighbors, step, AgentState, AveragingRule, ModelParams, NeighborSearch, SwarmState};

fn angular_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

fn arb_swarm(max_n: usize, heading_hi: f64) -> impl Strategy<Value = SwarmState> {
    let agent = (-5.0f64..5.0, -5.0f64..5.0, 0.0..heading_hi).prop_map(|(x, y, h)| AgentState::new(x, y, h));
    prop::collection::vec(agent, 1..=max_n).prop_map(SwarmState::new)
}

/// Straight loop over explicit unit vectors, independent of `mean_heading`.
fn summed_vector_angle(headings: &[f64]) -> f64 {
    let mut x = 0.0;
    let mut y = 0.0;
    for h in headings {
        x += h.cos();
        y += h.sin();
    }
    let mut a = y.atan2(x);
    if a < 0.0 {
        a += TAU;
    }
    a
}

proptest! {
    #[test]
    fn neighborhoods_are_reflexive_and_symmetric(s in arb_swarm(12, TAU), r in 0.0f64..6.0) {
        let p = ModelParams::new(s.n(), 0.0, r);
        let sets: Vec<Vec<usize>> = (1..=s.n()).map(|i| neighbors(&s, &p, i).unwrap()).collect();
        for i in 1..=s.n() {
            prop_assert!(sets[i - 1].contains(&i));
            for &j in &sets[i - 1] {
                prop_assert!(sets[j - 1].contains(&i));
            }
        }
    }

    #[test]
    fn vector_mean_matches_explicit_sum(hs in prop::collection::vec(0.0f64..TAU, 1..=8)) {
        match mean_heading(&hs, AveragingRule::VectorSum) {
            Ok(m) => prop_assert!(angular_gap(m, summed_vector_angle(&hs)) < 1e-12),
            Err(_) => {
                let (x, y) = hs.iter().fold((0.0, 0.0), |(x, y), h| (x + h.cos(), y + h.sin()));
                prop_assert!(x.hypot(y) <= 1e-12);
            }
        }
    }

    #[test]
    fn vector_mean_ignores_order_and_full_turns(
        hs in prop::collection::vec(0.0f64..TAU, 1..=8),
        rot in 0usize..8,
        bump in 0usize..8,
    ) {
        let base = mean_heading(&hs, AveragingRule::VectorSum);
        prop_assume!(base.is_ok());
        let base = base.unwrap();
        let mut perm = hs.clone();
        perm.reverse();
        perm.rotate_left(rot % hs.len());
        prop_assert!(angular_gap(mean_heading(&perm, AveragingRule::VectorSum).unwrap(), base) < 1e-12);
        let mut turned = hs.clone();
        turned[bump % hs.len()] += TAU;
        prop_assert!(angular_gap(mean_heading(&turned, AveragingRule::VectorSum).unwrap(), base) < 1e-12);
    }

    #[test]
    fn identical_headings_average_to_themselves(h in 0.0f64..TAU, k in 1usize..9) {
        let hs = vec![h; k];
        prop_assert!(angular_gap(mean_heading(&hs, AveragingRule::VectorSum).unwrap(), h) < 1e-12);
        prop_assert!(angular_gap(mean_heading(&hs, AveragingRule::ScalarMean).unwrap(), h) < 1e-12);
    }

    #[test]
    fn step_is_bit_deterministic(s in arb_swarm(10, TAU), v in 0.0f64..0.5, r in 0.0f64..4.0) {
        let p = ModelParams::new(s.n(), v, r);
        prop_assert_eq!(step(&s, &p, None), step(&s, &p, None));
    }

    #[test]
    fn grid_and_scan_steps_agree(s in arb_swarm(40, TAU), v in 0.0f64..0.5, r in 0.05f64..4.0) {
        let p = ModelParams::new(s.n(), v, r);
        prop_assert_eq!(
            advance_using(&s, &p, NeighborSearch::Grid),
            advance_using(&s, &p, NeighborSearch::Naive)
        );
    }

    #[test]
    fn headings_stay_in_controlled_interval(s in arb_swarm(10, PI), beta in 0.01f64..3.13, r in 0.0f64..6.0) {
        let p = ModelParams::new(s.n(), 0.03, r);
        let floor = s.headings().fold(f64::INFINITY, f64::min);
        let cmd = u_beta(&s, UBetaParams::new(beta).unwrap()).unwrap();
        prop_assert!(cmd.shill_heading > floor && cmd.shill_heading <= PI);
        let next = step(&s, &p, Some(&cmd));
        prop_assert!(next.degenerate.is_empty());
        for h in next.state.headings() {
            prop_assert!(h >= floor - 1e-12, "{h} < {floor}");
            prop_assert!(h < PI);
        }
    }

    #[test]
    fn worst_heading_invariant_under_translation_and_permutation(
        s in arb_swarm(10, PI),
        dx in -100.0f64..100.0,
        dy in -100.0f64..100.0,
        rot in 0usize..10,
    ) {
        let w = s.agents[worst_agent(&s).unwrap() - 1].heading;
        let mut moved = s.clone();
        for a in &mut moved.agents {
            a.position[0] += dx;
            a.position[1] += dy;
        }
        prop_assert_eq!(worst_agent(&moved).unwrap(), worst_agent(&s).unwrap());
        let mut perm = s.clone();
        perm.agents.rotate_left(rot % s.n());
        prop_assert_eq!(perm.agents[worst_agent(&perm).unwrap() - 1].heading, w);
    }

    #[test]
    fn u_beta_never_lets_delta_grow(s in arb_swarm(8, PI), beta in 0.05f64..3.09, v in 0.0f64..0.2, r in 0.1f64..3.0) {
        prop_assume!(s.n() >= 2);
        let p = ModelParams::new(s.n(), v, r);
        let b = UBetaParams::new(beta).unwrap();
        let mut state = s;
        let mut last = delta(&state).unwrap();
        for _ in 0..200 {
            let cmd = u_beta(&state, b).unwrap();
            let out = step(&state, &p, Some(&cmd));
            prop_assert!(out.degenerate.is_empty());
            state = out.state;
            prop_assert!(state.headings().all(|h| h < PI));
            let d = delta(&state).unwrap();
            prop_assert!(d <= last + 1e-12);
            last = d;
        }
    }
}

#[test]
fn synchronized_flock_translates_rigidly() {
    let theta = 2.3;
    let s = SwarmState::new((0..5).map(|i| AgentState::new(i as f64 * 0.4, 0.1, theta)).collect());
    let p = ModelParams::new(5, 0.07, 1.0);
    let next = step(&s, &p, None).state;
    for (a, b) in next.agents.iter().zip(&s.agents) {
        assert!(angular_gap(a.heading, theta) < 1e-15);
        assert!((a.position[0] - b.position[0] - 0.07 * theta.cos()).abs() < 1e-15);
        assert!((a.position[1] - b.position[1] - 0.07 * theta.sin()).abs() < 1e-15);
    }
}
