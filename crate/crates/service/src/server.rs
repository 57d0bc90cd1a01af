//! HTTP and WebSocket front end.
//!
//! * `POST /sessions` with a [`SessionSpec`] body creates a session and returns its seat tickets.
//! * `GET /sessions/{id}` returns the public [`SessionSummary`].
//! * `GET /sessions/{id}/ws?token=<seat token>` upgrades to the seat's frame channel.
//! * `GET /cards/{card_id}` serves a card image from the deck directory.
//! * `GET /health` reports liveness and the protocol version.
//!
//! Each session lives on its own thread, which owns the [`Session`] and
//! applies commands one at a time; frames leave through per-connection
//! queues in the order the session produced them.

use std::collections::HashMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::mpsc::{self as std_mpsc, RecvTimeoutError};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, Query, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use futures_util::{SinkExt, StreamExt};
use serde::{Deserialize, Serialize};
use tokio::sync::{mpsc, oneshot};

use dixit_core::agents::SimilarityTable;
use dixit_core::deck::{resolve_image, Card};
use dixit_core::engine::GameState;
use dixit_core::ids::PlayerId;
use dixit_core::logstore::{JsonlSink, LogSink, NullSink};

use crate::error::ServiceError;
use crate::session::{new_token, ConnId, SeatTicket, Session, SessionEnv, SessionSummary};
use crate::spec::SessionSpec;
use crate::wire::{self, ServerFrame, PROTOCOL_VERSION};

/// A frame about to be sent, with the state it was produced from.
pub struct TapEvent<'a> {
    pub session_id: &'a str,
    pub player_id: &'a PlayerId,
    pub state: &'a GameState,
    pub frame: &'a ServerFrame,
    pub text: &'a str,
}

pub type FrameTap = Arc<dyn Fn(&TapEvent<'_>) + Send + Sync>;

#[derive(Clone, Default)]
pub struct ServerConfig {
    pub cards: Vec<Card>,
    /// Directory card image refs resolve against; `None` serves no images.
    pub image_root: Option<PathBuf>,
    pub table: Option<Arc<SimilarityTable>>,
    /// Each session streams its log to `<log_dir>/<session_id>.jsonl`.
    pub log_dir: Option<PathBuf>,
    pub tap: Option<FrameTap>,
}

enum Command {
    Attach {
        token: String,
        out: mpsc::UnboundedSender<String>,
        reply: oneshot::Sender<Result<ConnId, ServiceError>>,
    },
    Frame {
        conn: ConnId,
        text: String,
    },
    Detach {
        conn: ConnId,
    },
    Summary {
        reply: oneshot::Sender<SessionSummary>,
    },
}

struct AppState {
    config: ServerConfig,
    sessions: Mutex<HashMap<String, std_mpsc::Sender<Command>>>,
}

impl AppState {
    fn session(&self, id: &str) -> Result<std_mpsc::Sender<Command>, ServiceError> {
        self.sessions
            .lock()
            .expect("session map")
            .get(id)
            .cloned()
            .ok_or_else(|| ServiceError::UnknownSession(id.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CreatedSession {
    pub session_id: String,
    pub seats: Vec<SeatTicket>,
    /// Path of the seat channel; append `?token=<token>`.
    pub ws_path: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

impl IntoResponse for ServiceError {
    fn into_response(self) -> Response {
        let status = match &self {
            ServiceError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServiceError::SeatTaken(_) => StatusCode::CONFLICT,
            ServiceError::InvalidToken => StatusCode::FORBIDDEN,
            ServiceError::SessionClosed(_) | ServiceError::Log(_) => StatusCode::INTERNAL_SERVER_ERROR,
            _ => StatusCode::BAD_REQUEST,
        };
        let body = ErrorBody {
            code: self.code().to_owned(),
            message: self.to_string(),
        };
        (status, Json(body)).into_response()
    }
}

fn flush(session: &mut Session, conns: &HashMap<ConnId, mpsc::UnboundedSender<String>>, tap: &Option<FrameTap>) {
    for out in session.drain_outbox() {
        let text = wire::encode(&out.frame);
        if let Some(tap) = tap {
            tap(&TapEvent {
                session_id: session.id(),
                player_id: &out.player_id,
                state: session.state(),
                frame: &out.frame,
                text: &text,
            });
        }
        if let Some(tx) = conns.get(&out.conn) {
            let _ = tx.send(text);
        }
    }
}

fn advance(session: &mut Session, conns: &HashMap<ConnId, mpsc::UnboundedSender<String>>, tap: &Option<FrameTap>) {
    loop {
        match session.step(Instant::now()) {
            Ok(true) => flush(session, conns, tap),
            Ok(false) => break,
            Err(e) => {
                tracing::error!(session = %session.id(), "session stalled: {e}");
                break;
            }
        }
    }
}

fn run_session(mut session: Session, rx: std_mpsc::Receiver<Command>, tap: Option<FrameTap>) {
    let mut conns: HashMap<ConnId, mpsc::UnboundedSender<String>> = HashMap::new();
    let mut next_conn: ConnId = 1;
    advance(&mut session, &conns, &tap);
    loop {
        let command = match session.deadline() {
            Some(deadline) => {
                let wait = deadline
                    .saturating_duration_since(Instant::now())
                    .max(Duration::from_millis(10));
                match rx.recv_timeout(wait) {
                    Ok(c) => Some(c),
                    Err(RecvTimeoutError::Timeout) => None,
                    Err(RecvTimeoutError::Disconnected) => break,
                }
            }
            None => match rx.recv() {
                Ok(c) => Some(c),
                Err(_) => break,
            },
        };
        match command {
            Some(Command::Attach { token, out, reply }) => {
                let conn = next_conn;
                next_conn += 1;
                let result = session.attach(&token, conn).map(|_| conn);
                if result.is_ok() {
                    conns.insert(conn, out);
                }
                let _ = reply.send(result);
            }
            Some(Command::Frame { conn, text }) => session.handle_text(conn, &text, Instant::now()),
            Some(Command::Detach { conn }) => {
                session.detach(conn);
                conns.remove(&conn);
            }
            Some(Command::Summary { reply }) => {
                let _ = reply.send(session.summary());
            }
            None => {}
        }
        flush(&mut session, &conns, &tap);
        advance(&mut session, &conns, &tap);
    }
    tracing::debug!(session = %session.id(), "session thread exits");
}

async fn create_session(State(app): State<Arc<AppState>>, body: String) -> Result<Response, ServiceError> {
    let spec: SessionSpec = serde_json::from_str(&body).map_err(|e| ServiceError::InvalidSpec(e.to_string()))?;
    let app2 = app.clone();
    // remote seats build blocking HTTP clients, which must not happen on a runtime thread
    let created = tokio::task::spawn_blocking(move || {
        let config = &app2.config;
        let id = new_token(8);
        let sink: Box<dyn LogSink + Send> = match &config.log_dir {
            Some(dir) => Box::new(
                JsonlSink::create(dir.join(format!("{id}.jsonl"))).map_err(|e| ServiceError::Log(e.to_string()))?,
            ),
            None => Box::new(NullSink),
        };
        let env = SessionEnv {
            cards: config.cards.clone(),
            table: config.table.clone(),
            image_root: config.image_root.clone(),
            sink,
        };
        let (session, seats) = Session::create(id.clone(), &spec, env, Instant::now())?;
        let (tx, rx) = std_mpsc::channel();
        let tap = config.tap.clone();
        std::thread::Builder::new()
            .name(format!("session-{id}"))
            .spawn(move || run_session(session, rx, tap))
            .map_err(|e| ServiceError::Log(e.to_string()))?;
        app2.sessions.lock().expect("session map").insert(id.clone(), tx);
        tracing::info!(session = %id, seats = seats.len(), "session created");
        Ok::<_, ServiceError>(CreatedSession {
            ws_path: format!("/sessions/{id}/ws"),
            session_id: id,
            seats,
        })
    })
    .await
    .map_err(|e| ServiceError::Log(e.to_string()))??;
    Ok((StatusCode::CREATED, Json(created)).into_response())
}

async fn session_summary(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
) -> Result<Json<SessionSummary>, ServiceError> {
    let tx = app.session(&id)?;
    let (reply, rx) = oneshot::channel();
    tx.send(Command::Summary { reply })
        .map_err(|_| ServiceError::SessionClosed(id.clone()))?;
    rx.await.map(Json).map_err(|_| ServiceError::SessionClosed(id))
}

#[derive(Debug, Deserialize)]
struct SeatQuery {
    token: String,
}

async fn seat_channel(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<SeatQuery>,
    upgrade: WebSocketUpgrade,
) -> Result<Response, ServiceError> {
    let tx = app.session(&id)?;
    Ok(upgrade.on_upgrade(move |socket| seat_socket(socket, tx, query.token)))
}

async fn seat_socket(socket: WebSocket, tx: std_mpsc::Sender<Command>, token: String) {
    let (mut sink, mut stream) = socket.split();
    let (out, mut out_rx) = mpsc::unbounded_channel();
    let (reply, reply_rx) = oneshot::channel();
    if tx.send(Command::Attach { token, out, reply }).is_err() {
        return;
    }
    let conn = match reply_rx.await {
        Ok(Ok(conn)) => conn,
        Ok(Err(e)) => {
            let frame = wire::encode(&ServerFrame::Error {
                code: e.code().to_owned(),
                message: e.to_string(),
            });
            let _ = sink.send(Message::Text(frame)).await;
            let _ = sink.close().await;
            return;
        }
        Err(_) => return,
    };
    let writer = tokio::spawn(async move {
        while let Some(text) = out_rx.recv().await {
            if sink.send(Message::Text(text)).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    while let Some(message) = stream.next().await {
        match message {
            Ok(Message::Text(text)) => {
                if tx.send(Command::Frame { conn, text }).is_err() {
                    break;
                }
            }
            Ok(Message::Close(_)) | Err(_) => break,
            Ok(_) => {}
        }
    }
    let _ = tx.send(Command::Detach { conn });
    writer.abort();
}

fn image_type(path: &std::path::Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase).as_deref() {
        Some("png") => "image/png",
        Some("jpg" | "jpeg") => "image/jpeg",
        Some("gif") => "image/gif",
        Some("webp") => "image/webp",
        Some("svg") => "image/svg+xml",
        _ => "application/octet-stream",
    }
}

async fn card_image(State(app): State<Arc<AppState>>, Path(card_id): Path<String>) -> Response {
    let not_found = |message: String| {
        (
            StatusCode::NOT_FOUND,
            Json(ErrorBody {
                code: "UnknownCard".into(),
                message,
            }),
        )
            .into_response()
    };
    let Some(card) = app.config.cards.iter().find(|c| c.id.as_str() == card_id) else {
        return not_found(format!("no card {card_id}"));
    };
    let Some(root) = &app.config.image_root else {
        return not_found("this server has no card images".into());
    };
    let path = resolve_image(root, &card.image_ref);
    match tokio::fs::read(&path).await {
        Ok(bytes) => ([(header::CONTENT_TYPE, image_type(&path))], bytes).into_response(),
        Err(e) => not_found(format!("{}: {e}", card.image_ref)),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub protocol: u32,
    pub sessions: usize,
}

async fn health(State(app): State<Arc<AppState>>) -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        protocol: PROTOCOL_VERSION,
        sessions: app.sessions.lock().expect("session map").len(),
    })
}

pub fn router(config: ServerConfig) -> Router {
    let app = Arc::new(AppState {
        config,
        sessions: Mutex::new(HashMap::new()),
    });
    Router::new()
        .route("/health", get(health))
        .route("/sessions", post(create_session))
        .route("/sessions/:id", get(session_summary))
        .route("/sessions/:id/ws", get(seat_channel))
        .route("/cards/:card_id", get(card_image))
        .with_state(app)
}

pub async fn serve(listener: tokio::net::TcpListener, config: ServerConfig) -> std::io::Result<()> {
    axum::serve(listener, router(config)).await
}

/// Start a server on an ephemeral local port on a background runtime.
pub fn spawn_local(config: ServerConfig) -> std::io::Result<SocketAddr> {
    let listener = std::net::TcpListener::bind("127.0.0.1:0")?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    std::thread::Builder::new().name("dixit-server".into()).spawn(move || {
        let runtime = tokio::runtime::Builder::new_multi_thread()
            .worker_threads(2)
            .enable_all()
            .build()
            .expect("tokio runtime");
        runtime.block_on(async move {
            let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
            if let Err(e) = serve(listener, config).await {
                tracing::error!("server stopped: {e}");
            }
        });
    })?;
    Ok(addr)
}
