//! HTTP + websocket front for [`Session`].
//!
//! `GET /ws` upgrades to a session socket. Everything else is served from the
//! UI asset directory when one is configured, or a placeholder page.

use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::PathBuf;
use std::time::Duration;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::response::{Html, IntoResponse};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};
use tokio::time::Instant;
use tower_http::services::ServeDir;

use super::session::{Mode, Session};

/// Outbound frames buffered per client before the oldest are dropped.
pub const OUTBOUND_CAPACITY: usize = 1024;
const INBOUND_CAPACITY: usize = 256;

const PLACEHOLDER: &str = "<!doctype html><title>softflock</title>\
<p>No UI assets configured. Start with <code>serve --assets &lt;dir&gt;</code>, \
or connect a client to <code>/ws</code> (protocol v1).</p>";

#[derive(Clone, Debug)]
pub struct ServeOptions {
    pub bind: IpAddr,
    pub port: u16,
    pub assets: Option<PathBuf>,
}

impl ServeOptions {
    pub fn new(port: u16) -> Self {
        Self { bind: IpAddr::V4(Ipv4Addr::LOCALHOST), port, assets: None }
    }
}

pub fn router(assets: Option<PathBuf>) -> Router {
    let app = Router::new().route("/ws", get(upgrade));
    match assets {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app.fallback(|| async { Html(PLACEHOLDER) }),
    }
}

pub async fn serve(opts: ServeOptions) -> std::io::Result<()> {
    let listener = TcpListener::bind(SocketAddr::new(opts.bind, opts.port)).await?;
    tracing::info!(addr = %listener.local_addr()?, "serving");
    serve_listener(listener, opts.assets).await
}

pub async fn serve_listener(listener: TcpListener, assets: Option<PathBuf>) -> std::io::Result<()> {
    axum::serve(listener, router(assets)).await
}

async fn upgrade(ws: WebSocketUpgrade) -> impl IntoResponse {
    ws.on_upgrade(handle_socket)
}

async fn handle_socket(socket: WebSocket) {
    let (mut sink, mut stream) = socket.split();
    let (out_tx, mut out_rx) = broadcast::channel::<String>(OUTBOUND_CAPACITY);
    let (in_tx, in_rx) = mpsc::channel::<String>(INBOUND_CAPACITY);

    let writer = tokio::spawn(async move {
        loop {
            match out_rx.recv().await {
                Ok(text) => {
                    if sink.send(Message::Text(text.into())).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(skipped)) => {
                    tracing::debug!(skipped, "client lagging, dropped oldest frames");
                }
                Err(broadcast::error::RecvError::Closed) => break,
            }
        }
    });
    let executor = tokio::spawn(run_session(Session::new(), in_rx, out_tx));

    while let Some(Ok(msg)) = stream.next().await {
        match msg {
            Message::Text(text) => {
                if in_tx.send(text.to_string()).await.is_err() {
                    break;
                }
            }
            Message::Close(_) => break,
            _ => {}
        }
    }
    drop(in_tx);
    let _ = executor.await;
    let _ = writer.await;
}

/// Session executor: the only owner of the session. Inbound frames arrive in
/// order through `inbox`; ticks fire on a deadline while running.
async fn run_session(mut session: Session, mut inbox: mpsc::Receiver<String>, out: broadcast::Sender<String>) {
    let publish = |frames: Vec<super::ServerMessage>| {
        for f in frames {
            // no receiver only means the client is gone
            let _ = out.send(f.to_json());
        }
    };
    let mut next_tick: Option<Instant> = None;
    loop {
        let deadline = next_tick;
        tokio::select! {
            msg = inbox.recv() => match msg {
                Some(text) => publish(session.handle_text(&text)),
                None => break,
            },
            _ = tokio::time::sleep_until(deadline.unwrap_or_else(Instant::now)), if deadline.is_some() => {
                publish(session.tick());
                next_tick = deadline.map(|d| d + period(session.mode()).unwrap_or_default());
            }
        }
        next_tick = match (session.mode(), next_tick) {
            (Mode::Paused, _) => None,
            (Mode::Running { .. }, Some(t)) => Some(t),
            (mode @ Mode::Running { .. }, None) => Some(Instant::now() + period(mode).unwrap_or_default()),
        };
    }
    tracing::info!(session = session.id(), "session closed");
}

fn period(mode: Mode) -> Option<Duration> {
    match mode {
        Mode::Running { tick_rate } => Some(Duration::from_secs_f64(1.0 / tick_rate)),
        Mode::Paused => None,
    }
}
