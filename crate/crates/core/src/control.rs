//! Shill command generation.
//!
//! The objective direction is `π`. The scenario the guarantee covers keeps
//! every ordinary heading in `[0, π)`; [`worst_agent`], [`delta`] and
//! [`u_beta`] reject any state outside it.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::angle;
use crate::error::{Error, Result};
use crate::model::{ModelParams, ShillConstraint, SwarmState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommandSource {
    UBeta,
    Manual,
    None,
}

/// Where the shill sits and which way it points for one tick.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ControlCommand {
    pub shill_position: [f64; 2],
    pub shill_heading: f64,
    pub source: CommandSource,
}

impl ControlCommand {
    pub fn new(shill_position: [f64; 2], shill_heading: f64, source: CommandSource) -> Self {
        Self { shill_position, shill_heading, source }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct UBetaParams {
    beta: f64,
}

impl UBetaParams {
    pub fn new(beta: f64) -> Result<Self> {
        if beta > 0.0 && beta < PI {
            Ok(Self { beta })
        } else {
            Err(Error::ContractViolation(format!("beta must lie in (0, pi), got {beta}")))
        }
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Smallest ordinary-agent slot attaining the minimum heading.
pub fn worst_agent(state: &SwarmState) -> Result<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, agent) in state.agents.iter().enumerate() {
        let heading = agent.heading;
        if !angle::in_upper_half_open(heading) {
            return Err(Error::ScenarioViolation { tick: state.t, agent: i + 1, heading });
        }
        if best.is_none_or(|(_, h)| heading < h) {
            best = Some((i + 1, heading));
        }
    }
    best.map(|(i, _)| i)
        .ok_or_else(|| Error::ContractViolation("worst_agent needs at least one agent".into()))
}

/// Distance from the worst heading to the objective: `π - min θ_i`.
pub fn delta(state: &SwarmState) -> Result<f64> {
    let s = worst_agent(state)?;
    Ok(PI - state.agents[s - 1].heading)
}

/// Puts the shill on the worst agent, pointing `β` beyond it, capped at `π`.
pub fn u_beta(state: &SwarmState, params: UBetaParams) -> Result<ControlCommand> {
    let s = worst_agent(state)?;
    let worst = &state.agents[s - 1];
    let heading = if worst.heading <= PI - params.beta { worst.heading + params.beta } else { PI };
    Ok(ControlCommand::new(worst.position, heading, CommandSource::UBeta))
}

/// Sanitizes a human-issued command before it is queued for the next tick.
///
/// Under [`ShillConstraint::KinematicallyConstrained`] the displacement from
/// the shill's current position is clamped to length `v`. A shill that does
/// not exist yet is placed where requested.
pub fn validate_manual(raw: &ControlCommand, state: &SwarmState, params: &ModelParams) -> Result<ControlCommand> {
    if raw.source != CommandSource::Manual {
        return Err(Error::InvalidCommand(format!("expected a manual command, got {:?}", raw.source)));
    }
    let [x, y] = raw.shill_position;
    if !(x.is_finite() && y.is_finite() && raw.shill_heading.is_finite()) {
        return Err(Error::InvalidCommand("position and heading must be finite".into()));
    }
    let mut position = raw.shill_position;
    if let (ShillConstraint::KinematicallyConstrained, Some(prev)) = (params.shill_constraint, &state.shill) {
        let dx = x - prev.position[0];
        let dy = y - prev.position[1];
        let len = dx.hypot(dy);
        if len > params.v {
            let scale = params.v / len;
            position = [prev.position[0] + dx * scale, prev.position[1] + dy * scale];
        }
    }
    Ok(ControlCommand::new(position, angle::normalize(raw.shill_heading), CommandSource::Manual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{step, AgentState};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, TAU};

    fn with_headings(hs: &[f64]) -> SwarmState {
        SwarmState::new(hs.iter().enumerate().map(|(i, &h)| AgentState::new(i as f64, -(i as f64), h)).collect())
    }

    #[test]
    fn worst_agent_examples() {
        assert_eq!(worst_agent(&with_headings(&[0.5, 0.2, 0.9])).unwrap(), 2);
        assert_eq!(worst_agent(&with_headings(&[0.2, 0.2])).unwrap(), 1);
        assert_eq!(worst_agent(&with_headings(&[0.0])).unwrap(), 1);
    }

    #[test]
    fn worst_agent_rejects_out_of_scenario() {
        let err = worst_agent(&with_headings(&[0.1, PI])).unwrap_err();
        assert!(matches!(err, Error::ScenarioViolation { agent: 2, .. }), "{err}");
        assert!(worst_agent(&with_headings(&[4.0])).is_err());
    }

    #[test]
    fn u_beta_branches() {
        let b = UBetaParams::new(FRAC_PI_2).unwrap();
        let s = with_headings(&[1.0, 0.3]);
        let cmd = u_beta(&s, b).unwrap();
        assert!((cmd.shill_heading - (0.3 + FRAC_PI_2)).abs() < 1e-15);
        assert_eq!(cmd.shill_position, s.agents[1].position);
        assert_eq!(cmd.source, CommandSource::UBeta);

        let cmd = u_beta(&with_headings(&[3.0]), b).unwrap();
        assert_eq!(cmd.shill_heading, PI);

        // the boundary belongs to the first branch
        let cmd = u_beta(&with_headings(&[FRAC_PI_2]), b).unwrap();
        assert_eq!(cmd.shill_heading, FRAC_PI_2 + FRAC_PI_2);
    }

    #[test]
    fn beta_range_is_open() {
        assert!(UBetaParams::new(0.0).is_err());
        assert!(UBetaParams::new(PI).is_err());
        assert!(UBetaParams::new(f64::NAN).is_err());
        assert!(UBetaParams::new(1e-9).is_ok());
    }

    #[test]
    fn delta_examples() {
        let d = delta(&with_headings(&[FRAC_PI_4, FRAC_PI_2])).unwrap();
        assert!((d - 3.0 * FRAC_PI_4).abs() < 1e-15);
        let d = delta(&with_headings(&[PI - 1e-9])).unwrap();
        assert!((d - 1e-9).abs() < 1e-15);
        assert_eq!(delta(&with_headings(&[0.0, 0.0, 0.0])).unwrap(), PI);
    }

    #[test]
    fn validate_manual_normalizes_and_clamps() {
        let s = with_headings(&[0.0]);
        let p = ModelParams::new(1, 0.03, 1.0);
        let raw = ControlCommand::new([5.0, 6.0], 7.0, CommandSource::Manual);
        let ok = validate_manual(&raw, &s, &p).unwrap();
        assert!((ok.shill_heading - (7.0 - TAU)).abs() < 1e-15);
        assert_eq!(ok.shill_position, [5.0, 6.0]);

        let tied = p.clone().with_constraint(ShillConstraint::KinematicallyConstrained);
        let mut s = s;
        s.shill = Some(AgentState::new(1.0, 1.0, 0.0));
        let raw = ControlCommand::new([1.6, 1.8], 0.0, CommandSource::Manual);
        let ok = validate_manual(&raw, &s, &tied).unwrap();
        let dx = ok.shill_position[0] - 1.0;
        let dy = ok.shill_position[1] - 1.0;
        assert!((dx.hypot(dy) - 0.03).abs() < 1e-15);
        assert!((dx / dy - 0.6 / 0.8).abs() < 1e-12);
    }

    #[test]
    fn validate_manual_rejects_bad_input() {
        let s = with_headings(&[0.0]);
        let p = ModelParams::new(1, 0.03, 1.0);
        let raw = ControlCommand::new([f64::INFINITY, 0.0], 0.0, CommandSource::Manual);
        assert!(matches!(validate_manual(&raw, &s, &p), Err(Error::InvalidCommand(_))));
        let raw = ControlCommand::new([0.0, 0.0], f64::NAN, CommandSource::Manual);
        assert!(matches!(validate_manual(&raw, &s, &p), Err(Error::InvalidCommand(_))));
        let raw = ControlCommand::new([0.0, 0.0], 0.0, CommandSource::UBeta);
        assert!(matches!(validate_manual(&raw, &s, &p), Err(Error::InvalidCommand(_))));
    }

    #[test]
    fn u_beta_keeps_headings_below_pi() {
        let b = UBetaParams::new(2.5).unwrap();
        let p = ModelParams::new(3, 0.05, 1.0);
        let mut s = with_headings(&[0.0, 0.0, 3.1]);
        for _ in 0..200 {
            let before = delta(&s).unwrap();
            let cmd = u_beta(&s, b).unwrap();
            assert!(cmd.shill_heading > PI - before && cmd.shill_heading <= PI);
            s = step(&s, &p, Some(&cmd)).state;
            assert!(delta(&s).unwrap() <= before + 1e-12);
        }
    }
}
