//! Convergence bounds for the `u_beta` law and post-hoc run certification.
//!
//! `eta(k)` is the worst-case gain of the time-`t` worst agent's heading after
//! `k` ticks. Its base case takes the weaker of the `β` and `ε` pulls on an
//! agent surrounded by `n - 1` agents sharing its heading; later terms drop
//! the shill and average against `n - 1` lagging neighbors. `η(n)` is the
//! guaranteed decrease of `Δ` over any `n`-tick window that starts with
//! `Δ ≥ ε`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::control::{delta, UBetaParams};
use crate::error::{Error, Result};
use crate::model::{mean_heading, neighbors_naive, AveragingRule, ModelParams, SwarmState};

/// Slack on `Δ(t+1) ≤ Δ(t)`.
pub const MONOTONE_TOLERANCE: f64 = 1e-12;
/// Slack on `Δ(t+n) ≤ Δ(t) - η(n)`.
pub const WINDOW_TOLERANCE: f64 = 1e-9;

fn gain(alpha: f64, m: f64) -> f64 {
    (alpha.sin() / (m + alpha.cos())).atan()
}

fn check_params(n: usize, beta: f64, epsilon: f64) -> Result<()> {
    if n < 2 {
        return Err(Error::ContractViolation(format!("eta needs n >= 2, got {n}")));
    }
    if !(beta > 0.0 && beta < PI) {
        return Err(Error::ContractViolation(format!("beta must lie in (0, pi), got {beta}")));
    }
    if !(epsilon > 0.0 && epsilon < PI) {
        return Err(Error::ContractViolation(format!("epsilon must lie in (0, pi), got {epsilon}")));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EtaTable {
    pub n: usize,
    pub beta: f64,
    pub epsilon: f64,
    /// `η(1) … η(n)`.
    pub values: Vec<f64>,
}

impl EtaTable {
    pub fn get(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.values.get(i)).copied()
    }

    pub fn last(&self) -> f64 {
        self.values[self.values.len() - 1]
    }
}

pub fn eta_table(n: usize, beta: f64, epsilon: f64) -> Result<EtaTable> {
    check_params(n, beta, epsilon)?;
    let m = n as f64;
    let mut values = Vec::with_capacity(n);
    values.push(gain(beta, m).min(gain(epsilon, m)));
    for k in 1..n {
        values.push(gain(values[k - 1], m - 1.0));
    }
    Ok(EtaTable { n, beta, epsilon, values })
}

pub fn eta(k: usize, n: usize, beta: f64, epsilon: f64) -> Result<f64> {
    if k == 0 || k > n {
        return Err(Error::ContractViolation(format!("eta index {k} out of range 1..={n}")));
    }
    Ok(eta_table(n, beta, epsilon)?.values[k - 1])
}

/// `η(n)`, the guaranteed decrease of `Δ` over `n` ticks.
pub fn delta_bound(n: usize, beta: f64, epsilon: f64) -> Result<f64> {
    check_bound(eta_table(n, beta, epsilon)?.last(), epsilon)
}

fn check_bound(eta_n: f64, epsilon: f64) -> Result<f64> {
    if eta_n > 0.0 && eta_n < epsilon {
        Ok(eta_n)
    } else {
        Err(Error::BoundAnomaly { eta_n, epsilon })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceCertificate {
    pub monotone_ok: bool,
    pub lemma2_ok: bool,
    pub degenerate_events: u64,
    pub final_delta: f64,
    pub sync_time: Option<u64>,
    pub epsilon_used: f64,
    pub delta_bound_used: f64,
    pub monotone_tolerance: f64,
    pub window_tolerance: f64,
}

impl ConvergenceCertificate {
    /// Both verdicts hold and no agent ever hit a degenerate sum.
    pub fn passed(&self) -> bool {
        self.monotone_ok && self.lemma2_ok && self.degenerate_events == 0
    }
}

/// Streaming certifier: feed consecutive snapshots, then [`finish`].
///
/// Each snapshot must carry the shill exactly as it acted on that tick.
///
/// [`finish`]: Certifier::finish
pub struct Certifier {
    n: usize,
    r: f64,
    rule: AveragingRule,
    epsilon: f64,
    bound: f64,
    sync_tolerance: f64,
    deltas: Vec<f64>,
    sync_time: Option<u64>,
    degenerate: u64,
    last: Option<SwarmState>,
}

impl Certifier {
    pub fn new(params: &ModelParams, ubeta: UBetaParams, epsilon: f64, sync_tolerance: f64) -> Result<Self> {
        let bound = delta_bound(params.n, ubeta.beta(), epsilon)?;
        if !(sync_tolerance.is_finite() && sync_tolerance > 0.0) {
            return Err(Error::ContractViolation(format!("sync tolerance must be positive, got {sync_tolerance}")));
        }
        Ok(Self {
            n: params.n,
            r: params.r,
            rule: params.averaging_rule,
            epsilon,
            bound,
            sync_tolerance,
            deltas: Vec::new(),
            sync_time: None,
            degenerate: 0,
            last: None,
        })
    }

    pub fn delta_bound(&self) -> f64 {
        self.bound
    }

    pub fn push(&mut self, state: &SwarmState) -> Result<()> {
        if state.n() != self.n {
            return Err(Error::Trajectory(format!("snapshot has {} agents, expected {}", state.n(), self.n)));
        }
        if let Some(prev) = &self.last {
            if state.t != prev.t + 1 {
                return Err(Error::Trajectory(format!("tick {} follows tick {}", state.t, prev.t)));
            }
            self.degenerate += count_degenerate(prev, self.r, self.rule);
        }
        let d = delta(state)?;
        if d < self.sync_tolerance && self.sync_time.is_none() {
            self.sync_time = Some(state.t);
        }
        self.deltas.push(d);
        self.last = Some(state.clone());
        Ok(())
    }

    pub fn finish(self) -> Result<ConvergenceCertificate> {
        let needed = self.n + 1;
        if self.deltas.len() < needed {
            return Err(Error::InsufficientWindow { needed, got: self.deltas.len() });
        }
        let d = &self.deltas;
        let monotone_ok = d.windows(2).all(|w| w[1] <= w[0] + MONOTONE_TOLERANCE);
        let windows_ok = d
            .iter()
            .zip(&d[self.n..])
            .filter(|(start, _)| **start >= self.epsilon)
            .all(|(start, end)| *end <= start - self.bound + WINDOW_TOLERANCE);
        Ok(ConvergenceCertificate {
            monotone_ok,
            lemma2_ok: monotone_ok && windows_ok,
            degenerate_events: self.degenerate,
            final_delta: d[d.len() - 1],
            sync_time: self.sync_time,
            epsilon_used: self.epsilon,
            delta_bound_used: self.bound,
            monotone_tolerance: MONOTONE_TOLERANCE,
            window_tolerance: WINDOW_TOLERANCE,
        })
    }
}

fn count_degenerate(state: &SwarmState, r: f64, rule: AveragingRule) -> u64 {
    let mut headings = Vec::new();
    (1..=state.n())
        .filter(|&i| {
            headings.clear();
            headings.extend(neighbors_naive(state, r, i).into_iter().filter_map(|j| state.slot(j)).map(|a| a.heading));
            matches!(mean_heading(&headings, rule), Err(Error::DegenerateSum { .. }))
        })
        .count() as u64
}

/// Certifies a completed `u_beta` trajectory of consecutive ticks.
pub fn certify_run(
    trajectory: &[SwarmState],
    params: &ModelParams,
    ubeta: UBetaParams,
    epsilon: f64,
    sync_tolerance: f64,
) -> Result<ConvergenceCertificate> {
    let mut certifier = Certifier::new(params, ubeta, epsilon, sync_tolerance)?;
    if trajectory.len() < params.n + 1 {
        return Err(Error::InsufficientWindow { needed: params.n + 1, got: trajectory.len() });
    }
    for state in trajectory {
        certifier.push(state)?;
    }
    certifier.finish()
}

/// Debug view: for `k = 1..=n`, how many agents sit strictly between the
/// time-`start` worst heading and that heading plus `bound` at tick
/// `start + k`. Stops early at the end of the trajectory.
pub fn lagging_counts(trajectory: &[SwarmState], start: usize, bound: f64) -> Vec<usize> {
    let Some(origin) = trajectory.get(start) else { return Vec::new() };
    let floor = origin.headings().fold(f64::INFINITY, f64::min);
    trajectory[start + 1..]
        .iter()
        .take(origin.n())
        .map(|s| s.headings().filter(|&h| floor < h && h < floor + bound).count())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AgentState;
    use proptest::prelude::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn eta_examples() {
        let e1 = eta(1, 2, FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!((e1 - 0.5f64.atan()).abs() < 1e-15);
        assert!((e1 - 0.463_647_609_000_806_1).abs() < 1e-15);
        let e2 = eta(2, 2, FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!((e2 - e1 / 2.0).abs() < 1e-15);
        // epsilon term wins the min
        let e = eta(1, 3, FRAC_PI_2, 0.1).unwrap();
        let eps_term = (0.1f64.sin() / (3.0 + 0.1f64.cos())).atan();
        assert_eq!(e, eps_term);
        assert!(eps_term < (1.0f64 / 3.0).atan());
        assert!((e - 0.024_984_365_229_898_59).abs() < 1e-15);
    }

    #[test]
    fn eta_rejects_bad_params() {
        assert!(eta(0, 3, 1.0, 0.1).is_err());
        assert!(eta(4, 3, 1.0, 0.1).is_err());
        assert!(eta(1, 1, 1.0, 0.1).is_err());
        assert!(eta(1, 3, 0.0, 0.1).is_err());
        assert!(eta(1, 3, 1.0, PI).is_err());
    }

    #[test]
    fn delta_bound_examples() {
        let d = delta_bound(2, FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!((d - 0.231_823_804_500_403_06).abs() < 1e-15);
        let d10 = delta_bound(10, FRAC_PI_2, FRAC_PI_2).unwrap();
        assert!(d10 > 0.0 && d10 < 0.1f64.atan());
        assert!(matches!(check_bound(0.2, 0.1), Err(Error::BoundAnomaly { .. })));
        assert!(matches!(check_bound(0.0, 0.1), Err(Error::BoundAnomaly { .. })));
    }

    fn synthetic(n: usize, deltas: &[f64]) -> Vec<SwarmState> {
        deltas
            .iter()
            .enumerate()
            .map(|(t, d)| {
                let agents = (0..n).map(|i| AgentState::new(100.0 * i as f64, 0.0, PI - d)).collect();
                SwarmState { t: t as u64, agents, shill: None }
            })
            .collect()
    }

    #[test]
    fn constant_delta_fails_window_check() {
        let eps = 0.2;
        let traj = synthetic(2, &[eps; 6]);
        let cert = certify_run(&traj, &ModelParams::new(2, 0.0, 1.0), UBetaParams::new(1.0).unwrap(), eps, 1e-3).unwrap();
        assert!(cert.monotone_ok);
        assert!(!cert.lemma2_ok);
        assert_eq!(cert.sync_time, None);
        assert!((cert.final_delta - eps).abs() < 1e-15);
    }

    #[test]
    fn increasing_delta_fails_monotonicity() {
        let traj = synthetic(2, &[1.0, 0.5, 0.6, 0.1, 0.0005]);
        let cert = certify_run(&traj, &ModelParams::new(2, 0.0, 1.0), UBetaParams::new(1.0).unwrap(), 0.01, 1e-3).unwrap();
        assert!(!cert.monotone_ok);
        assert!(!cert.lemma2_ok);
        assert_eq!(cert.sync_time, Some(4));
    }

    #[test]
    fn short_trajectory_is_rejected() {
        let traj = synthetic(3, &[1.0, 0.5, 0.2]);
        let err = certify_run(&traj, &ModelParams::new(3, 0.0, 1.0), UBetaParams::new(1.0).unwrap(), 0.01, 1e-3);
        assert!(matches!(err, Err(Error::InsufficientWindow { needed: 4, got: 3 })));
    }

    #[test]
    fn gaps_in_ticks_are_rejected() {
        let mut traj = synthetic(2, &[1.0, 0.5, 0.2, 0.1]);
        traj[2].t = 7;
        let err = certify_run(&traj, &ModelParams::new(2, 0.0, 1.0), UBetaParams::new(1.0).unwrap(), 0.01, 1e-3);
        assert!(matches!(err, Err(Error::Trajectory(_))));
    }

    #[test]
    fn lagging_counts_window() {
        let traj = synthetic(2, &[1.0, 0.95, 0.5, 0.4]);
        assert_eq!(lagging_counts(&traj, 0, 0.1), vec![2, 0]);
        assert!(lagging_counts(&traj, 9, 0.1).is_empty());
    }

    proptest! {
        #[test]
        fn eta_table_strictly_decreasing(n in 2usize..40, beta in 0.01f64..3.13, eps in 0.001f64..3.13) {
            let t = eta_table(n, beta, eps).unwrap();
            prop_assert!(t.values[0] < FRAC_PI_2);
            prop_assert!(t.last() > 0.0);
            for w in t.values.windows(2) {
                prop_assert!(w[1] < w[0]);
            }
        }

        #[test]
        fn eta1_nondecreasing_in_epsilon_on_rising_branch(n in 2usize..40, beta in 0.01f64..3.13, a in 0.0f64..1.0, b in 0.0f64..1.0) {
            let top = (-1.0 / n as f64).acos();
            let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
            let (lo, hi) = (1e-6 + lo * (top - 1e-6), 1e-6 + hi * (top - 1e-6));
            prop_assert!(eta(1, n, beta, lo).unwrap() <= eta(1, n, beta, hi).unwrap());
        }

        #[test]
        fn delta_bound_below_epsilon(n in 2usize..40, beta in 0.01f64..3.13, eps in 0.001f64..3.13) {
            let d = delta_bound(n, beta, eps).unwrap();
            prop_assert!(d > 0.0 && d < eps && d < FRAC_PI_2);
        }
    }
}
