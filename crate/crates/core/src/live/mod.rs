//! Real-time steering sessions.
//!
//! [`session::Session`] is the whole protocol as a synchronous state machine;
//! [`server`] only moves JSON text frames between a websocket and a session.

pub mod protocol;
pub mod server;
pub mod session;

pub use protocol::{ClientMessage, ServerMessage, StateFrame, PROTOCOL_VERSION};
pub use server::{router, serve, serve_listener, ServeOptions};
pub use session::{ControlSource, Mode, Session};
