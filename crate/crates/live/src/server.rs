//! Axum WebSocket endpoint around a session running on its own thread.

use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::response::IntoResponse;
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc};

use reflex_core::harness::Scenario;

use crate::protocol::{parse_client_message, ClientMessage, ErrorFrame, SchemaError};
use crate::session::Session;

#[derive(Clone, Debug)]
pub struct LiveConfig {
    pub rate_hz: f64,
    /// Frames buffered per client before the oldest are dropped.
    pub broadcast_capacity: usize,
    /// Client messages queued between ticks.
    pub mailbox_capacity: usize,
}

impl Default for LiveConfig {
    fn default() -> Self {
        Self {
            rate_hz: 250.0,
            broadcast_capacity: 16,
            mailbox_capacity: 256,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum LiveError {
    #[error("port unavailable: {0}")]
    PortUnavailable(std::io::Error),
    #[error("invalid live config: {0}")]
    Config(String),
    #[error("server: {0}")]
    Io(#[from] std::io::Error),
}

struct Shared {
    handshake: Arc<str>,
    frames: broadcast::Sender<Arc<str>>,
    mailbox: mpsc::Sender<ClientMessage>,
    posable: Vec<String>,
    recorded: Vec<String>,
}

/// A running server. Dropping it stops the control loop; the HTTP task ends
/// with the runtime or on [`LiveServer::shutdown`].
pub struct LiveServer {
    pub addr: SocketAddr,
    stop: Arc<AtomicBool>,
    http: tokio::task::JoinHandle<()>,
    control: Option<std::thread::JoinHandle<()>>,
}

impl LiveServer {
    pub async fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.http.abort();
        if let Some(h) = self.control.take() {
            let _ = tokio::task::spawn_blocking(move || h.join()).await;
        }
    }
}

impl Drop for LiveServer {
    fn drop(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        self.http.abort();
    }
}

/// Bind `addr` and start serving. Port 0 picks a free port.
pub async fn start(scenario: Scenario, addr: SocketAddr, cfg: LiveConfig) -> Result<LiveServer, LiveError> {
    if !(cfg.rate_hz > 0.0) || cfg.broadcast_capacity == 0 || cfg.mailbox_capacity == 0 {
        return Err(LiveError::Config("rate and capacities must be positive".into()));
    }
    let listener = TcpListener::bind(addr).await.map_err(LiveError::PortUnavailable)?;
    let addr = listener.local_addr()?;
    let session = Session::new(scenario, cfg.rate_hz);
    let (frames, _) = broadcast::channel(cfg.broadcast_capacity);
    let (mailbox, inbox) = mpsc::channel(cfg.mailbox_capacity);
    let shared = Arc::new(Shared {
        handshake: serde_json::to_string(&session.handshake()).expect("handshake serializes").into(),
        frames: frames.clone(),
        mailbox,
        posable: session.posable_ids(),
        recorded: session.recorded_ids(),
    });
    let stop = Arc::new(AtomicBool::new(false));
    let control = {
        let stop = stop.clone();
        std::thread::Builder::new()
            .name("reflex-control".into())
            .spawn(move || control_loop(session, inbox, frames, cfg.rate_hz, stop))?
    };
    let app = Router::new().route("/ws", get(ws_handler)).with_state(shared);
    let http = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            log::error!("http server: {e}");
        }
    });
    log::info!("serving on ws://{addr}/ws");
    Ok(LiveServer {
        addr,
        stop,
        http,
        control: Some(control),
    })
}

/// Serve until the process is interrupted.
pub async fn serve(scenario: Scenario, addr: SocketAddr) -> Result<(), LiveError> {
    let server = start(scenario, addr, LiveConfig::default()).await?;
    tokio::signal::ctrl_c().await?;
    server.shutdown().await;
    Ok(())
}

/// Fixed-rate loop: drain the mailbox, tick, publish. Publishing never waits
/// on clients; lagging receivers lose the oldest frames.
fn control_loop(
    mut session: Session,
    mut inbox: mpsc::Receiver<ClientMessage>,
    frames: broadcast::Sender<Arc<str>>,
    rate_hz: f64,
    stop: Arc<AtomicBool>,
) {
    let period = Duration::from_secs_f64(1.0 / rate_hz);
    let mut next = Instant::now();
    while !stop.load(Ordering::SeqCst) {
        while let Ok(msg) = inbox.try_recv() {
            session.apply(msg);
        }
        match session.advance() {
            Ok(frame) => {
                let text: Arc<str> = serde_json::to_string(&frame).expect("frame serializes").into();
                let _ = frames.send(text);
            }
            Err(e) => {
                log::error!("control loop stopped: {e}");
                return;
            }
        }
        next += period;
        let now = Instant::now();
        if next > now {
            std::thread::sleep(next - now);
        } else {
            // Overran; keep cadence from here instead of bursting.
            next = now;
        }
    }
}

async fn ws_handler(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> impl IntoResponse {
    ws.on_upgrade(move |socket| client(socket, shared))
}

async fn client(socket: WebSocket, shared: Arc<Shared>) {
    let (mut tx, mut rx) = socket.split();
    // Subscribe before the handshake so no frame after it is missed.
    let mut frames = shared.frames.subscribe();
    if tx.send(Message::Text(shared.handshake.to_string().into())).await.is_err() {
        return;
    }
    loop {
        tokio::select! {
            frame = frames.recv() => match frame {
                Ok(text) => {
                    if tx.send(Message::Text(text.to_string().into())).await.is_err() {
                        return;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(n)) => log::debug!("client lagged, dropped {n} frames"),
                Err(broadcast::error::RecvError::Closed) => return,
            },
            incoming = rx.next() => match incoming {
                Some(Ok(Message::Text(text))) => {
                    let outcome = parse_client_message(&text, &shared.posable, &shared.recorded)
                        .and_then(|m| shared.mailbox.try_send(m).map_err(|_| SchemaError::MailboxFull));
                    if let Err(e) = outcome {
                        let frame = serde_json::to_string(&ErrorFrame::new(&e)).expect("error frame serializes");
                        if tx.send(Message::Text(frame.into())).await.is_err() {
                            return;
                        }
                    }
                }
                Some(Ok(Message::Close(_))) | None | Some(Err(_)) => return,
                Some(Ok(_)) => {}
            },
        }
    }
}
