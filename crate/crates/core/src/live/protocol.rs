//! Wire format of the session protocol, version 1.
//!
//! Every frame is one JSON object carrying `"v": 1` and a `"type"` tag.
//! See `docs/protocol.md` for the message catalogue.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::harness::RunConfig;
use crate::model::{AgentState, SwarmState};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Paused,
    Running,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ClientMessage {
    Init { config: Box<RunConfig> },
    SetShill { x: f64, y: f64, heading: f64 },
    SetMode { mode: ModeName, #[serde(default)] tick_rate: Option<f64> },
    Step { count: u64 },
    Autopilot { on: bool, #[serde(default)] beta: Option<f64> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProtocolError {
    pub code: &'static str,
    pub detail: String,
}

impl ClientMessage {
    /// Parses one inbound text frame, checking the schema version first.
    pub fn parse(text: &str) -> Result<Self, ProtocolError> {
        let mut value: Value = serde_json::from_str(text)
            .map_err(|e| ProtocolError { code: "malformed", detail: e.to_string() })?;
        let obj = value
            .as_object_mut()
            .ok_or_else(|| ProtocolError { code: "malformed", detail: "frame is not a JSON object".into() })?;
        match obj.remove("v").as_ref().and_then(Value::as_u64) {
            Some(v) if v == u64::from(PROTOCOL_VERSION) => {}
            other => {
                return Err(ProtocolError {
                    code: "unsupported_version",
                    detail: format!("expected v = {PROTOCOL_VERSION}, got {other:?}"),
                })
            }
        }
        serde_json::from_value(value).map_err(|e| ProtocolError { code: "malformed", detail: e.to_string() })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AgentFrame {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl From<&AgentState> for AgentFrame {
    fn from(a: &AgentState) -> Self {
        Self { x: a.position[0], y: a.position[1], heading: a.heading }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StateFrame {
    pub tick: u64,
    pub agents: Vec<AgentFrame>,
    pub shill: Option<AgentFrame>,
    /// `null` when some heading lies outside `[0, π)`.
    pub delta: Option<f64>,
}

impl StateFrame {
    pub fn from_state(state: &SwarmState) -> Self {
        Self {
            tick: state.t,
            agents: state.agents.iter().map(AgentFrame::from).collect(),
            shill: state.shill.as_ref().map(AgentFrame::from),
            delta: crate::control::delta(state).ok(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ServerMessage {
    Ack {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        session_id: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<StateFrame>,
    },
    State(StateFrame),
    Sync {
        tick: u64,
    },
    Error {
        code: String,
        detail: String,
    },
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    v: u32,
    #[serde(flatten)]
    body: T,
}

impl ServerMessage {
    pub fn error(code: &str, detail: impl Into<String>) -> Self {
        Self::Error { code: code.to_string(), detail: detail.into() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(&Envelope { v: PROTOCOL_VERSION, body: self }).expect("server frames always serialize")
    }

    pub fn from_json(text: &str) -> serde_json::Result<Self> {
        let env: Envelope<Self> = serde_json::from_str(text)?;
        Ok(env.body)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_versioned_frames() {
        let m = ClientMessage::parse(r#"{"v":1,"type":"set_shill","x":1.0,"y":2.0,"heading":3.0}"#).unwrap();
        assert_eq!(m, ClientMessage::SetShill { x: 1.0, y: 2.0, heading: 3.0 });
        let m = ClientMessage::parse(r#"{"v":1,"type":"set_mode","mode":"running","tick_rate":5}"#).unwrap();
        assert_eq!(m, ClientMessage::SetMode { mode: ModeName::Running, tick_rate: Some(5.0) });
    }

    #[test]
    fn rejects_bad_frames() {
        assert_eq!(ClientMessage::parse("{").unwrap_err().code, "malformed");
        assert_eq!(ClientMessage::parse("[]").unwrap_err().code, "malformed");
        assert_eq!(ClientMessage::parse(r#"{"type":"step","count":1}"#).unwrap_err().code, "unsupported_version");
        assert_eq!(ClientMessage::parse(r#"{"v":2,"type":"step","count":1}"#).unwrap_err().code, "unsupported_version");
        assert_eq!(ClientMessage::parse(r#"{"v":1,"type":"fly"}"#).unwrap_err().code, "malformed");
    }

    #[test]
    fn server_frames_carry_version_and_tag() {
        let text = ServerMessage::Sync { tick: 9 }.to_json();
        assert_eq!(text, r#"{"v":1,"type":"sync","tick":9}"#);
        let back = ServerMessage::from_json(&text).unwrap();
        assert_eq!(back, ServerMessage::Sync { tick: 9 });
        let frame = StateFrame { tick: 1, agents: vec![], shill: None, delta: None };
        let text = ServerMessage::State(frame.clone()).to_json();
        assert!(text.starts_with(r#"{"v":1,"type":"state","tick":1"#), "{text}");
        assert_eq!(ServerMessage::from_json(&text).unwrap(), ServerMessage::State(frame));
    }
}
