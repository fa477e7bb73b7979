//! HTTP and WebSocket tuning service. A worker thread runs the session one input unit
//! per period, applies queued control messages between units and broadcasts results.

use std::collections::{HashMap, VecDeque};
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::{mpsc, Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::State;
use axum::handler::HandlerWithoutStateExt;
use axum::http::StatusCode;
use axum::response::{Html, IntoResponse, Response};
use axum::routing::get;
use axum::{Json, Router};
use eventforge_core::sim::{read_roi_track, SimConfig, SimMode};
use eventforge_core::synth;
use futures_util::{SinkExt, StreamExt};
use tokio::sync::{broadcast, mpsc as tmpsc};
use tower_http::services::ServeDir;

use crate::cli::ServeArgs;
use crate::error::{CliError, Result};
use crate::media;
use crate::protocol::*;
use crate::session::{Output, Session, SourceSpec};

/// Metric ticks kept for `/ticks`.
pub const TICK_HISTORY: usize = 600;
/// Messages buffered per client before the slowest client starts skipping.
const BROADCAST_DEPTH: usize = 256;

/// Fixed-capacity ring of the most recent items.
#[derive(Clone, Debug)]
pub struct Ring<T> {
    cap: usize,
    items: VecDeque<T>,
}

impl<T: Clone> Ring<T> {
    pub fn new(cap: usize) -> Self {
        Self { cap: cap.max(1), items: VecDeque::with_capacity(cap.max(1)) }
    }

    pub fn push(&mut self, v: T) {
        if self.items.len() == self.cap {
            self.items.pop_front();
        }
        self.items.push_back(v);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn to_vec(&self) -> Vec<T> {
        self.items.iter().cloned().collect()
    }
}

#[derive(Clone, Debug)]
pub struct ServiceConfig {
    pub source: SourceSpec,
    pub crf: u8,
    /// Input units per second of wall time.
    pub rate: f64,
    pub ui_dir: PathBuf,
}

struct Inbound {
    client: u64,
    envelope: Envelope,
}

struct Shared {
    out: broadcast::Sender<Arc<Vec<u8>>>,
    mailbox: Mutex<mpsc::Sender<Inbound>>,
    clients: Mutex<HashMap<u64, tmpsc::UnboundedSender<Arc<Vec<u8>>>>>,
    next_client: AtomicU64,
    ticks: Mutex<Ring<Tick>>,
    state: Mutex<SessionState>,
    stop: AtomicBool,
}

impl Shared {
    fn send_to(&self, client: u64, msg: Vec<u8>) {
        if let Some(tx) = self.clients.lock().unwrap().get(&client) {
            let _ = tx.send(Arc::new(msg));
        }
    }

    fn broadcast(&self, msg: Vec<u8>) {
        // no receivers is fine
        let _ = self.out.send(Arc::new(msg));
    }
}

/// A running service; dropping it stops the worker.
pub struct ServiceHandle {
    pub addr: SocketAddr,
    shared: Arc<Shared>,
    worker: Option<thread::JoinHandle<()>>,
    server: tokio::task::JoinHandle<()>,
}

impl ServiceHandle {
    pub fn stop(mut self) {
        self.shutdown();
    }

    fn shutdown(&mut self) {
        self.shared.stop.store(true, Ordering::SeqCst);
        self.server.abort();
        if let Some(w) = self.worker.take() {
            let _ = w.join();
        }
    }
}

impl Drop for ServiceHandle {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn worker(mut session: Session, shared: Arc<Shared>, inbox: mpsc::Receiver<Inbound>, period: Duration) {
    let mut next = Instant::now();
    while !shared.stop.load(Ordering::SeqCst) {
        while let Ok(msg) = inbox.try_recv() {
            let Inbound { client, envelope: Envelope { id, control } } = msg;
            match session.apply(&control) {
                Ok(warning) => {
                    let state = session.state();
                    *shared.state.lock().unwrap() = state.clone();
                    let ack = Ack { id, applied: control.name().into(), state, warning };
                    shared.broadcast(json_frame(KIND_ACK, &ack));
                }
                Err(error) => shared.send_to(client, json_frame(KIND_ERROR, &ErrorReply { id, error })),
            }
        }
        match session.step() {
            Ok(outputs) => {
                for o in outputs {
                    match o {
                        Output::Tick(t) => {
                            let msg = json_frame(KIND_TICK, &t);
                            shared.ticks.lock().unwrap().push(t);
                            shared.broadcast(msg);
                        }
                        Output::Preview(png) => shared.broadcast(frame(KIND_PREVIEW, &png)),
                        Output::Features(f) => shared.broadcast(json_frame(KIND_FEATURES, &f)),
                    }
                }
                shared.state.lock().unwrap().unit = session.state().unit;
            }
            Err(e) => {
                log::error!("session step failed: {e}");
                shared.broadcast(json_frame(KIND_ERROR, &ErrorReply { id: None, error: e }));
                session.apply(&Control::Pause { paused: Some(true) }).ok();
                *shared.state.lock().unwrap() = session.state();
            }
        }
        next += period;
        let now = Instant::now();
        if next > now {
            thread::sleep(next - now);
        } else {
            next = now;
        }
    }
}

async fn ws_handler(ws: WebSocketUpgrade, State(shared): State<Arc<Shared>>) -> Response {
    ws.on_upgrade(move |socket| client(socket, shared))
}

async fn client(socket: WebSocket, shared: Arc<Shared>) {
    let id = shared.next_client.fetch_add(1, Ordering::SeqCst);
    let (mut sink, mut stream) = socket.split();
    let mut bcast = shared.out.subscribe();
    let (direct_tx, mut direct_rx) = tmpsc::unbounded_channel::<Arc<Vec<u8>>>();
    shared.clients.lock().unwrap().insert(id, direct_tx.clone());
    let hello = Ack { id: None, applied: "hello".into(), state: shared.state.lock().unwrap().clone(), warning: None };
    let _ = direct_tx.send(Arc::new(json_frame(KIND_ACK, &hello)));

    let writer = tokio::spawn(async move {
        loop {
            let msg = tokio::select! {
                biased;
                m = direct_rx.recv() => match m {
                    Some(m) => m,
                    None => break,
                },
                m = bcast.recv() => match m {
                    Ok(m) => m,
                    // a slow client skips what it missed
                    Err(broadcast::error::RecvError::Lagged(n)) => {
                        log::debug!("client {id} skipped {n} messages");
                        continue;
                    }
                    Err(broadcast::error::RecvError::Closed) => break,
                },
            };
            if sink.send(Message::Binary(msg.as_ref().clone().into())).await.is_err() {
                break;
            }
        }
    });

    while let Some(Ok(msg)) = stream.next().await {
        let parsed = match msg {
            Message::Binary(b) => parse_control(&b),
            Message::Text(t) => parse_control(t.as_bytes()),
            Message::Close(_) => break,
            _ => continue,
        };
        match parsed {
            Ok(envelope) => {
                let sent = shared.mailbox.lock().unwrap().send(Inbound { client: id, envelope });
                if sent.is_err() {
                    break;
                }
            }
            Err(error) => {
                let _ = direct_tx.send(Arc::new(json_frame(KIND_ERROR, &ErrorReply { id: None, error })));
            }
        }
    }
    shared.clients.lock().unwrap().remove(&id);
    writer.abort();
}

async fn ticks_handler(State(shared): State<Arc<Shared>>) -> Json<Vec<Tick>> {
    Json(shared.ticks.lock().unwrap().to_vec())
}

async fn state_handler(State(shared): State<Arc<Shared>>) -> Json<SessionState> {
    Json(shared.state.lock().unwrap().clone())
}

async fn no_ui() -> impl IntoResponse {
    (
        StatusCode::NOT_FOUND,
        Html("<!doctype html><title>eventforge</title><p>UI bundle not found. The WebSocket endpoint is at <code>/ws</code>.</p>"),
    )
}

/// Starts the worker and serves on `listener`.
pub async fn start(config: ServiceConfig, listener: tokio::net::TcpListener) -> Result<ServiceHandle> {
    if !(config.rate.is_finite() && config.rate > 0.0) {
        return Err(CliError::param(format!("invalid rate {}", config.rate)));
    }
    let session = Session::new(config.source, config.crf).map_err(CliError::Param)?;
    let (mail_tx, mail_rx) = mpsc::channel();
    let shared = Arc::new(Shared {
        out: broadcast::channel(BROADCAST_DEPTH).0,
        mailbox: Mutex::new(mail_tx),
        clients: Mutex::new(HashMap::new()),
        next_client: AtomicU64::new(1),
        ticks: Mutex::new(Ring::new(TICK_HISTORY)),
        state: Mutex::new(session.state()),
        stop: AtomicBool::new(false),
    });
    let period = Duration::from_secs_f64(1.0 / config.rate);
    let w_shared = shared.clone();
    let worker = thread::Builder::new()
        .name("transcode".into())
        .spawn(move || worker(session, w_shared, mail_rx, period))
        .map_err(|e| CliError::io(&config.ui_dir, e))?;

    let app = Router::new()
        .route("/ws", get(ws_handler))
        .route("/ticks", get(ticks_handler))
        .route("/state", get(state_handler))
        .fallback_service(ServeDir::new(&config.ui_dir).fallback(no_ui.into_service()))
        .with_state(shared.clone());
    let addr = listener.local_addr().map_err(|e| CliError::io(&config.ui_dir, e))?;
    let server = tokio::spawn(async move {
        if let Err(e) = axum::serve(listener, app).await {
            log::error!("server stopped: {e}");
        }
    });
    Ok(ServiceHandle { addr, shared, worker: Some(worker), server })
}

fn source_from_args(a: &ServeArgs) -> Result<SourceSpec> {
    if a.simulate {
        let (config, frames, roi) = match &a.input {
            Some(p) => {
                let (w, h, frames) = media::read_photons(p, a.geometry.into())?;
                let mut roi_path = p.as_os_str().to_owned();
                roi_path.push(".roi.csv");
                let roi_path = PathBuf::from(roi_path);
                let roi = if roi_path.exists() {
                    let text = String::from_utf8(media::read_file(&roi_path)?).map_err(|_| CliError::format("ROI track is not UTF-8"))?;
                    read_roi_track(&text)?
                } else {
                    Vec::new()
                };
                let mode = if roi.is_empty() { SimMode::SelfAdjust } else { SimMode::Aggressive };
                (SimConfig::new(mode, w, h), frames, roi)
            }
            None => {
                let (frames, roi) = synth::photon_mover(96, 64, 240, 12, 1);
                (SimConfig::new(SimMode::Aggressive, 96, 64), frames, roi)
            }
        };
        return Ok(SourceSpec::Simulator { config, frames, roi });
    }
    match &a.input {
        Some(p) => {
            let v = media::read_video(p, a.geometry.into())?;
            Ok(SourceSpec::Video { fps: v.fps.unwrap_or(30.0), frames: v.frames })
        }
        None => Ok(SourceSpec::Video { frames: synth::surveillance(160, 120, 300, 1), fps: 30.0 }),
    }
}

/// Runs the service until interrupted.
pub fn serve_blocking(a: ServeArgs) -> Result<()> {
    let source = source_from_args(&a)?;
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().map_err(|e| CliError::io(&a.ui_dir, e))?;
    rt.block_on(async {
        let bind = format!("{}:{}", a.bind, a.port);
        let listener = tokio::net::TcpListener::bind(&bind).await.map_err(|e| CliError::io(std::path::Path::new(&bind), e))?;
        let config = ServiceConfig { source, crf: a.crf, rate: a.rate, ui_dir: a.ui_dir.clone() };
        let handle = start(config, listener).await?;
        log::info!("serving on http://{}", handle.addr);
        eprintln!("serving on http://{} (WebSocket at /ws)", handle.addr);
        let _ = tokio::signal::ctrl_c().await;
        handle.stop();
        Ok(())
    })
}
