//! Synchronous discrete-time Vicsek dynamics with an optional shill.
//!
//! Agent slots are numbered the way the control literature numbers them:
//! slot `0` is the shill, slots `1..=n` are the ordinary agents.

use serde::{Deserialize, Serialize};

use crate::angle;
use crate::control::{CommandSource, ControlCommand};
use crate::error::{Error, Result};
use crate::grid::NeighborGrid;

/// Vector sums with magnitude at or below this are treated as degenerate.
pub const ZERO_SUM_EPSILON: f64 = 1e-12;

/// Above this many ordinary agents `advance` switches to the grid search.
pub const GRID_THRESHOLD: usize = 96;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub position: [f64; 2],
    pub heading: f64,
}

impl AgentState {
    pub fn new(x: f64, y: f64, heading: f64) -> Self {
        Self { position: [x, y], heading: angle::normalize(heading) }
    }

    fn is_finite(&self) -> bool {
        self.position[0].is_finite() && self.position[1].is_finite() && self.heading.is_finite()
    }

    fn moved(&self, speed: f64, heading: f64) -> Self {
        Self {
            position: [
                self.position[0] + speed * heading.cos(),
                self.position[1] + speed * heading.sin(),
            ],
            heading,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AveragingRule {
    /// Angle of the summed unit velocity vectors.
    #[default]
    VectorSum,
    /// Arithmetic mean of the stored angle values, no wraparound handling.
    ScalarMean,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShillConstraint {
    /// The shill is placed wherever the command says.
    #[default]
    Unconstrained,
    /// The shill moves like an ordinary agent: `x0(t+1) = x0(t) + v0(t+1)`.
    KinematicallyConstrained,
}

pub(crate) fn default_speed() -> f64 {
    0.03
}

pub(crate) fn default_radius() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub n: usize,
    #[serde(default = "default_speed")]
    pub v: f64,
    #[serde(default = "default_radius")]
    pub r: f64,
    #[serde(default)]
    pub averaging_rule: AveragingRule,
    #[serde(default)]
    pub shill_constraint: ShillConstraint,
}

impl ModelParams {
    pub fn new(n: usize, v: f64, r: f64) -> Self {
        Self {
            n,
            v,
            r,
            averaging_rule: AveragingRule::VectorSum,
            shill_constraint: ShillConstraint::Unconstrained,
        }
    }

    pub fn with_rule(mut self, rule: AveragingRule) -> Self {
        self.averaging_rule = rule;
        self
    }

    pub fn with_constraint(mut self, constraint: ShillConstraint) -> Self {
        self.shill_constraint = constraint;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::Config("n must be at least 1".into()));
        }
        if !(self.v.is_finite() && self.v >= 0.0) {
            return Err(Error::Config(format!("speed v must be finite and >= 0, got {}", self.v)));
        }
        if !(self.r.is_finite() && self.r >= 0.0) {
            return Err(Error::Config(format!("radius r must be finite and >= 0, got {}", self.r)));
        }
        Ok(())
    }
}

/// Full simulation snapshot at tick `t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SwarmState {
    pub t: u64,
    pub agents: Vec<AgentState>,
    pub shill: Option<AgentState>,
}

impl SwarmState {
    pub fn new(agents: Vec<AgentState>) -> Self {
        Self { t: 0, agents, shill: None }
    }

    pub fn n(&self) -> usize {
        self.agents.len()
    }

    /// Agent in slot `index` (`0` is the shill).
    pub fn slot(&self, index: usize) -> Option<&AgentState> {
        match index {
            0 => self.shill.as_ref(),
            i => self.agents.get(i - 1),
        }
    }

    pub fn headings(&self) -> impl Iterator<Item = f64> + '_ {
        self.agents.iter().map(|a| a.heading)
    }

    pub(crate) fn check_well_formed(&self, params: &ModelParams) -> Result<()> {
        if self.agents.len() != params.n {
            return Err(Error::ContractViolation(format!(
                "state has {} agents, model expects {}",
                self.agents.len(),
                params.n
            )));
        }
        if let Some((i, _)) = self
            .agents
            .iter()
            .chain(self.shill.iter())
            .enumerate()
            .find(|(_, a)| !a.is_finite())
        {
            return Err(Error::ContractViolation(format!("non-finite state in slot {}", (i + 1) % (self.n() + 1))));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn within_radius(a: &[f64; 2], b: &[f64; 2], r: f64) -> bool {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    dx * dx + dy * dy <= r * r
}

/// Every slot within distance `r` of ordinary agent `i` (inclusive), the
/// agent itself included, in ascending slot order.
pub fn neighbors(state: &SwarmState, params: &ModelParams, i: usize) -> Result<Vec<usize>> {
    if i == 0 || i > state.n() {
        return Err(Error::ContractViolation(format!(
            "agent index {i} out of range 1..={}",
            state.n()
        )));
    }
    Ok(neighbors_naive(state, params.r, i))
}

pub(crate) fn neighbors_naive(state: &SwarmState, r: f64, i: usize) -> Vec<usize> {
    let center = &state.agents[i - 1].position;
    let mut out = Vec::new();
    if let Some(shill) = &state.shill {
        if within_radius(&shill.position, center, r) {
            out.push(0);
        }
    }
    out.extend(
        state
            .agents
            .iter()
            .enumerate()
            .filter(|(_, a)| within_radius(&a.position, center, r))
            .map(|(j, _)| j + 1),
    );
    out
}

/// Average heading of a nonempty list of angles under `rule`.
///
/// Under [`AveragingRule::VectorSum`] a summed vector of magnitude at most
/// [`ZERO_SUM_EPSILON`] yields [`Error::DegenerateSum`].
pub fn mean_heading(headings: &[f64], rule: AveragingRule) -> Result<f64> {
    if headings.is_empty() {
        return Err(Error::ContractViolation("mean_heading of an empty list".into()));
    }
    if headings.iter().any(|h| !h.is_finite()) {
        return Err(Error::ContractViolation("mean_heading of a non-finite angle".into()));
    }
    match rule {
        AveragingRule::VectorSum => {
            let (sx, sy) = headings
                .iter()
                .fold((0.0, 0.0), |(sx, sy), h| (sx + h.cos(), sy + h.sin()));
            resolve_vector_sum(sx, sy)
        }
        AveragingRule::ScalarMean => {
            let sum: f64 = headings.iter().sum();
            Ok(angle::normalize(sum / headings.len() as f64))
        }
    }
}

fn resolve_vector_sum(sx: f64, sy: f64) -> Result<f64> {
    let magnitude = sx.hypot(sy);
    if magnitude <= ZERO_SUM_EPSILON {
        Err(Error::DegenerateSum { magnitude })
    } else {
        Ok(angle::vector_angle(sx, sy))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepOutcome {
    pub state: SwarmState,
    /// Ordinary agents (slots `1..=n`) whose neighbor sum was degenerate this
    /// tick; each kept its previous heading.
    pub degenerate: Vec<usize>,
}

/// Installs `command` as the shill for the current tick.
///
/// `None` keeps whatever shill the state already carries. A command whose
/// source is [`CommandSource::None`] removes the shill.
pub fn apply_command(state: &SwarmState, command: Option<&ControlCommand>) -> SwarmState {
    let mut next = state.clone();
    if let Some(cmd) = command {
        next.shill = match cmd.source {
            CommandSource::None => None,
            _ => Some(AgentState::new(cmd.shill_position[0], cmd.shill_position[1], cmd.shill_heading)),
        };
    }
    next
}

/// How `advance` finds neighborhoods. Every choice yields identical sets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum NeighborSearch {
    /// Grid above [`GRID_THRESHOLD`] agents, scan otherwise.
    #[default]
    Auto,
    Naive,
    Grid,
}

/// Advances a snapshot whose shill (if any) is already in place by one tick.
pub fn advance(state: &SwarmState, params: &ModelParams) -> StepOutcome {
    advance_using(state, params, NeighborSearch::Auto)
}

pub fn advance_using(state: &SwarmState, params: &ModelParams, search: NeighborSearch) -> StepOutcome {
    let n = state.n();
    let grid = match search {
        NeighborSearch::Naive => None,
        NeighborSearch::Grid => NeighborGrid::build(state, params.r),
        NeighborSearch::Auto if n > GRID_THRESHOLD => NeighborGrid::build(state, params.r),
        NeighborSearch::Auto => None,
    };

    let mut headings = Vec::with_capacity(n + 1);
    let mut degenerate = Vec::new();
    let mut agents = Vec::with_capacity(n);
    for i in 1..=n {
        let slots = match &grid {
            Some(grid) => grid.neighbors(state, i, params.r),
            None => neighbors_naive(state, params.r, i),
        };
        headings.clear();
        headings.extend(slots.iter().map(|&j| state.slot(j).map_or(0.0, |a| a.heading)));
        let current = &state.agents[i - 1];
        let heading = match mean_heading(&headings, params.averaging_rule) {
            Ok(h) => h,
            Err(_) => {
                tracing::debug!(tick = state.t, agent = i, "degenerate heading sum, holding heading");
                degenerate.push(i);
                current.heading
            }
        };
        agents.push(current.moved(params.v, heading));
    }

    let shill = state.shill.map(|s| match params.shill_constraint {
        ShillConstraint::KinematicallyConstrained => s.moved(params.v, s.heading),
        ShillConstraint::Unconstrained => s,
    });

    StepOutcome { state: SwarmState { t: state.t + 1, agents, shill }, degenerate }
}

/// One full tick: apply `command` to the shill, then advance every ordinary
/// agent synchronously from the time-`t` snapshot.
pub fn step(state: &SwarmState, params: &ModelParams, command: Option<&ControlCommand>) -> StepOutcome {
    advance(&apply_command(state, command), params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI};

    fn line(xs: &[f64]) -> SwarmState {
        SwarmState::new(xs.iter().map(|&x| AgentState::new(x, 0.0, 0.0)).collect())
    }

    #[test]
    fn neighbors_inclusive_radius() {
        let s = line(&[0.0, 1.0, 3.0]);
        let p = ModelParams::new(3, 0.0, 1.5);
        assert_eq!(neighbors(&s, &p, 1).unwrap(), vec![1, 2]);
        let p = ModelParams::new(3, 0.0, 1.0);
        assert_eq!(neighbors(&s, &p, 1).unwrap(), vec![1, 2]);
        assert_eq!(neighbors(&s, &p, 3).unwrap(), vec![3]);
    }

    #[test]
    fn neighbors_single_agent_radius_zero() {
        let s = line(&[4.0]);
        assert_eq!(neighbors(&s, &ModelParams::new(1, 0.0, 0.0), 1).unwrap(), vec![1]);
    }

    #[test]
    fn neighbors_sees_colocated_shill() {
        let mut s = line(&[0.0, 5.0]);
        s.shill = Some(AgentState::new(5.0, 0.0, 1.0));
        let p = ModelParams::new(2, 0.0, 0.0);
        assert_eq!(neighbors(&s, &p, 2).unwrap(), vec![0, 2]);
        assert_eq!(neighbors(&s, &p, 1).unwrap(), vec![1]);
    }

    #[test]
    fn neighbors_rejects_bad_index() {
        let s = line(&[0.0]);
        let p = ModelParams::new(1, 0.0, 1.0);
        assert!(matches!(neighbors(&s, &p, 0), Err(Error::ContractViolation(_))));
        assert!(matches!(neighbors(&s, &p, 2), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn mean_heading_examples() {
        let m = mean_heading(&[0.0, FRAC_PI_2], AveragingRule::VectorSum).unwrap();
        assert!((m - FRAC_PI_4).abs() < 1e-15);
        for theta in [0.0, 1.0, 3.0, 5.5] {
            let m = mean_heading(&[theta; 3], AveragingRule::VectorSum).unwrap();
            assert!((m - theta).abs() < 1e-14, "{theta} -> {m}");
            let m = mean_heading(&[theta; 3], AveragingRule::ScalarMean).unwrap();
            assert!((m - theta).abs() < 1e-14);
        }
        let m = mean_heading(&[5.0 * FRAC_PI_3, 0.0, FRAC_PI_3], AveragingRule::VectorSum).unwrap();
        assert!(m < 1e-15 || (2.0 * PI - m) < 1e-15, "{m}");
    }

    #[test]
    fn mean_heading_degenerate_and_empty() {
        assert!(matches!(
            mean_heading(&[0.0, PI], AveragingRule::VectorSum),
            Err(Error::DegenerateSum { .. })
        ));
        assert!(matches!(mean_heading(&[], AveragingRule::VectorSum), Err(Error::ContractViolation(_))));
        assert!(matches!(
            mean_heading(&[f64::NAN], AveragingRule::ScalarMean),
            Err(Error::ContractViolation(_))
        ));
        // the scalar rule has no cancellation
        let m = mean_heading(&[0.0, PI], AveragingRule::ScalarMean).unwrap();
        assert!((m - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn step_with_colocated_shill_bisects() {
        let s = SwarmState::new(vec![AgentState::new(0.0, 0.0, 0.0)]);
        let cmd = ControlCommand::new([0.0, 0.0], FRAC_PI_2, CommandSource::Manual);
        let out = step(&s, &ModelParams::new(1, 0.0, 1.0), Some(&cmd));
        assert!((out.state.agents[0].heading - FRAC_PI_4).abs() < 1e-15);
        assert_eq!(out.state.t, 1);
        assert!(out.degenerate.is_empty());
    }

    #[test]
    fn step_position_uses_new_heading() {
        let s = SwarmState::new(vec![AgentState::new(0.0, 0.0, 0.0)]);
        let cmd = ControlCommand::new([0.0, 0.0], FRAC_PI_2, CommandSource::Manual);
        let out = step(&s, &ModelParams::new(1, 1.0, 1.0), Some(&cmd));
        let a = out.state.agents[0];
        assert!((a.position[0] - FRAC_PI_4.cos()).abs() < 1e-15);
        assert!((a.position[1] - FRAC_PI_4.sin()).abs() < 1e-15);
    }

    #[test]
    fn step_degenerate_holds_heading() {
        let s = SwarmState::new(vec![AgentState::new(0.0, 0.0, 0.0), AgentState::new(0.5, 0.0, PI)]);
        let out = step(&s, &ModelParams::new(2, 0.1, 1.0), None);
        assert_eq!(out.degenerate, vec![1, 2]);
        assert_eq!(out.state.agents[0].heading, 0.0);
        assert_eq!(out.state.agents[1].heading, PI);
        assert!((out.state.agents[0].position[0] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn shill_motion_depends_on_constraint() {
        let s = SwarmState::new(vec![AgentState::new(10.0, 0.0, 0.0)]);
        let cmd = ControlCommand::new([0.0, 0.0], FRAC_PI_2, CommandSource::Manual);
        let free = step(&s, &ModelParams::new(1, 0.5, 1.0), Some(&cmd));
        assert_eq!(free.state.shill.unwrap().position, [0.0, 0.0]);
        let tied = ModelParams::new(1, 0.5, 1.0).with_constraint(ShillConstraint::KinematicallyConstrained);
        let moved = step(&s, &tied, Some(&cmd)).state.shill.unwrap();
        assert!(moved.position[0].abs() < 1e-15);
        assert!((moved.position[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn none_source_removes_shill() {
        let mut s = line(&[0.0]);
        s.shill = Some(AgentState::new(0.0, 0.0, 1.0));
        let cmd = ControlCommand::new([0.0, 0.0], 0.0, CommandSource::None);
        assert!(apply_command(&s, Some(&cmd)).shill.is_none());
        assert!(apply_command(&s, None).shill.is_some());
    }
}
