use std::sync::atomic::{AtomicU64, Ordering};

use crate::control::{u_beta, validate_manual, CommandSource, ControlCommand, UBetaParams};
use crate::error::Error;
use crate::harness::{ControlMode, RunConfig};
use crate::live::protocol::{ClientMessage, ModeName, ServerMessage, StateFrame};
use crate::model::{advance, apply_command, SwarmState};
use crate::scenario::generate_scenario;

pub const DEFAULT_TICK_RATE: f64 = 20.0;

static NEXT_SESSION: AtomicU64 = AtomicU64::new(1);

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Mode {
    Paused,
    Running { tick_rate: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ControlSource {
    ManualShill,
    UBetaAutopilot,
    NoShill,
}

struct Live {
    config: RunConfig,
    state: SwarmState,
    source: ControlSource,
    beta: Option<UBetaParams>,
    pending: Option<ControlCommand>,
    synced: bool,
}

/// One steering session. Owns the authoritative swarm state; every inbound
/// frame and every tick goes through `&mut self`, so ordering is whatever
/// order the caller feeds it in.
pub struct Session {
    id: String,
    mode: Mode,
    live: Option<Live>,
}

impl Default for Session {
    fn default() -> Self {
        Self::new()
    }
}

impl Session {
    pub fn new() -> Self {
        Self::with_id(format!("s{}", NEXT_SESSION.fetch_add(1, Ordering::Relaxed)))
    }

    pub fn with_id(id: impl Into<String>) -> Self {
        Self { id: id.into(), mode: Mode::Paused, live: None }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn control_source(&self) -> Option<ControlSource> {
        self.live.as_ref().map(|l| l.source)
    }

    pub fn state(&self) -> Option<&SwarmState> {
        self.live.as_ref().map(|l| &l.state)
    }

    pub fn pending_command(&self) -> Option<&ControlCommand> {
        self.live.as_ref().and_then(|l| l.pending.as_ref())
    }

    /// Handles one raw text frame. Malformed input yields an error frame and
    /// leaves the session untouched.
    pub fn handle_text(&mut self, text: &str) -> Vec<ServerMessage> {
        match ClientMessage::parse(text) {
            Ok(msg) => self.handle(msg),
            Err(e) => vec![ServerMessage::error(e.code, e.detail)],
        }
    }

    pub fn handle(&mut self, msg: ClientMessage) -> Vec<ServerMessage> {
        match msg {
            ClientMessage::Init { config } => self.init(*config),
            ClientMessage::SetShill { x, y, heading } => self.set_shill(x, y, heading),
            ClientMessage::SetMode { mode, tick_rate } => self.set_mode(mode, tick_rate),
            ClientMessage::Step { count } => self.step_paused(count),
            ClientMessage::Autopilot { on, beta } => self.autopilot(on, beta),
        }
    }

    fn ack(&self) -> ServerMessage {
        ServerMessage::Ack { session_id: None, state: None }
    }

    fn init(&mut self, config: RunConfig) -> Vec<ServerMessage> {
        let mut check = config.clone();
        if check.control == ControlMode::Manual {
            check.control = ControlMode::None;
        }
        if let Err(e) = check.validate() {
            return vec![ServerMessage::error("config", e.to_string())];
        }
        let state = match generate_scenario(&config.scenario) {
            Ok(s) => s,
            Err(e) => return vec![ServerMessage::error("config", e.to_string())],
        };
        let (source, beta) = match config.control {
            ControlMode::None => (ControlSource::NoShill, None),
            ControlMode::Manual => (ControlSource::ManualShill, None),
            ControlMode::UBeta { beta } => (ControlSource::UBetaAutopilot, UBetaParams::new(beta).ok()),
        };
        tracing::info!(
            session = %self.id,
            constraint = ?config.model.shill_constraint,
            control = ?source,
            "session initialized"
        );
        let frame = StateFrame::from_state(&state);
        self.live = Some(Live { config, state, source, beta, pending: None, synced: false });
        self.mode = Mode::Paused;
        vec![ServerMessage::Ack { session_id: Some(self.id.clone()), state: Some(frame) }]
    }

    fn set_shill(&mut self, x: f64, y: f64, heading: f64) -> Vec<ServerMessage> {
        let Some(live) = self.live.as_mut() else {
            return vec![ServerMessage::error("no_session", "send init first")];
        };
        match live.source {
            ControlSource::NoShill => return vec![ServerMessage::error("no_shill", "this session has no shill")],
            ControlSource::UBetaAutopilot => {
                return vec![ServerMessage::error("autopilot_active", "turn the autopilot off to steer by hand")]
            }
            ControlSource::ManualShill => {}
        }
        let raw = ControlCommand::new([x, y], heading, CommandSource::Manual);
        match validate_manual(&raw, &live.state, &live.config.model) {
            Ok(cmd) => {
                live.pending = Some(cmd);
                vec![self.ack()]
            }
            Err(e) => vec![ServerMessage::error("invalid_command", e.to_string())],
        }
    }

    fn set_mode(&mut self, mode: ModeName, tick_rate: Option<f64>) -> Vec<ServerMessage> {
        if self.live.is_none() {
            return vec![ServerMessage::error("no_session", "send init first")];
        }
        self.mode = match mode {
            ModeName::Paused => Mode::Paused,
            ModeName::Running => {
                let rate = tick_rate.unwrap_or(DEFAULT_TICK_RATE);
                if !(rate.is_finite() && rate > 0.0 && rate <= 1000.0) {
                    return vec![ServerMessage::error("invalid_tick_rate", format!("tick_rate {rate} outside (0, 1000]"))];
                }
                Mode::Running { tick_rate: rate }
            }
        };
        vec![self.ack()]
    }

    fn step_paused(&mut self, count: u64) -> Vec<ServerMessage> {
        if self.live.is_none() {
            return vec![ServerMessage::error("no_session", "send init first")];
        }
        if self.mode != Mode::Paused {
            return vec![ServerMessage::error("not_paused", "step is only accepted while paused")];
        }
        let mut out = Vec::new();
        for _ in 0..count {
            let frames = self.tick();
            let failed = frames.iter().any(|f| matches!(f, ServerMessage::Error { .. }));
            out.extend(frames);
            if failed {
                break;
            }
        }
        out
    }

    fn autopilot(&mut self, on: bool, beta: Option<f64>) -> Vec<ServerMessage> {
        let Some(live) = self.live.as_mut() else {
            return vec![ServerMessage::error("no_session", "send init first")];
        };
        if on {
            let params = match beta.map(UBetaParams::new).transpose() {
                Ok(Some(p)) => p,
                Ok(None) => match live.beta {
                    Some(p) => p,
                    None => return vec![ServerMessage::error("missing_beta", "autopilot needs beta")],
                },
                Err(e) => return vec![ServerMessage::error("invalid_beta", e.to_string())],
            };
            live.beta = Some(params);
            live.source = ControlSource::UBetaAutopilot;
            live.pending = None;
        } else if live.source == ControlSource::UBetaAutopilot {
            live.source = ControlSource::ManualShill;
        }
        vec![self.ack()]
    }

    /// Executes exactly one tick and returns the frames it produced.
    pub fn tick(&mut self) -> Vec<ServerMessage> {
        let Some(live) = self.live.as_mut() else {
            return vec![ServerMessage::error("no_session", "send init first")];
        };
        let command = match live.source {
            ControlSource::NoShill => None,
            ControlSource::ManualShill => live.pending.take(),
            ControlSource::UBetaAutopilot => {
                let params = live.beta.expect("autopilot always has beta");
                match u_beta(&live.state, params) {
                    Ok(cmd) => Some(cmd),
                    Err(e @ Error::ScenarioViolation { .. }) => {
                        self.mode = Mode::Paused;
                        return vec![ServerMessage::error("scenario_violation", e.to_string())];
                    }
                    Err(e) => return vec![ServerMessage::error("internal", e.to_string())],
                }
            }
        };
        let acting = apply_command(&live.state, command.as_ref());
        let outcome = advance(&acting, &live.config.model);
        for agent in &outcome.degenerate {
            tracing::warn!(session = %self.id, tick = acting.t, agent, "degenerate heading sum");
        }
        live.state = outcome.state;
        let frame = StateFrame::from_state(&live.state);
        let mut out = Vec::with_capacity(2);
        let synced_now = frame.delta.is_some_and(|d| d < live.config.sync_tolerance) && !live.synced;
        if synced_now {
            live.synced = true;
        }
        let tick = frame.tick;
        out.push(ServerMessage::State(frame));
        if synced_now {
            out.push(ServerMessage::Sync { tick });
        }
        out
    }
}
