//! Headless client for the seat protocol, standing in for a browser.

use std::time::Duration;

use futures_util::{SinkExt, StreamExt};
use thiserror::Error;
use tokio::net::TcpStream;
use tokio_tungstenite::tungstenite::Message;
use tokio_tungstenite::{MaybeTlsStream, WebSocketStream};

use dixit_core::engine::{Phase, PlayerView};

use crate::server::{CreatedSession, ErrorBody};
use crate::session::SessionSummary;
use crate::spec::SessionSpec;
use crate::wire::{self, Action, ClientFrame, ServerFrame, WireError};

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("http: {0}")]
    Http(String),
    #[error("server refused: {code}: {message}")]
    Refused { code: String, message: String },
    #[error("websocket: {0}")]
    Ws(String),
    #[error(transparent)]
    Wire(#[from] WireError),
    #[error("timed out waiting for a frame")]
    Timeout,
    #[error("connection closed")]
    Closed,
}

async fn refused(response: reqwest::Response) -> ClientError {
    let status = response.status();
    match response.json::<ErrorBody>().await {
        Ok(body) => ClientError::Refused {
            code: body.code,
            message: body.message,
        },
        Err(_) => ClientError::Http(format!("status {status}")),
    }
}

/// `POST /sessions`.
pub async fn create_session(base_url: &str, spec: &SessionSpec) -> Result<CreatedSession, ClientError> {
    let response = reqwest::Client::new()
        .post(format!("{base_url}/sessions"))
        .json(spec)
        .send()
        .await
        .map_err(|e| ClientError::Http(e.to_string()))?;
    if !response.status().is_success() {
        return Err(refused(response).await);
    }
    response.json().await.map_err(|e| ClientError::Http(e.to_string()))
}

/// `GET /sessions/{id}`.
pub async fn session_summary(base_url: &str, session_id: &str) -> Result<SessionSummary, ClientError> {
    let response = reqwest::get(format!("{base_url}/sessions/{session_id}"))
        .await
        .map_err(|e| ClientError::Http(e.to_string()))?;
    if !response.status().is_success() {
        return Err(refused(response).await);
    }
    response.json().await.map_err(|e| ClientError::Http(e.to_string()))
}

pub struct SeatClient {
    ws: WebSocketStream<MaybeTlsStream<TcpStream>>,
    next_key: u64,
    key_prefix: String,
    pub timeout: Duration,
    pub last_view: Option<PlayerView>,
}

impl SeatClient {
    /// Open the seat channel. `base_url` is the server's `http://host:port`.
    pub async fn connect(base_url: &str, session_id: &str, token: &str) -> Result<Self, ClientError> {
        let ws_base = base_url
            .strip_prefix("http://")
            .map(|rest| format!("ws://{rest}"))
            .or_else(|| base_url.strip_prefix("https://").map(|rest| format!("wss://{rest}")))
            .unwrap_or_else(|| base_url.to_owned());
        let url = format!("{ws_base}/sessions/{session_id}/ws?token={token}");
        let (ws, _) = tokio_tungstenite::connect_async(url)
            .await
            .map_err(|e| ClientError::Ws(e.to_string()))?;
        Ok(Self {
            ws,
            next_key: 0,
            key_prefix: crate::session::new_token(4),
            timeout: Duration::from_secs(10),
            last_view: None,
        })
    }

    /// Next frame from the server.
    pub async fn recv(&mut self) -> Result<ServerFrame, ClientError> {
        loop {
            let message = tokio::time::timeout(self.timeout, self.ws.next())
                .await
                .map_err(|_| ClientError::Timeout)?;
            match message {
                None => return Err(ClientError::Closed),
                Some(Err(e)) => return Err(ClientError::Ws(e.to_string())),
                Some(Ok(Message::Text(text))) => {
                    let frame: ServerFrame = wire::decode(&text)?;
                    if let ServerFrame::View { view, .. } = &frame {
                        self.last_view = Some(view.clone());
                    }
                    return Ok(frame);
                }
                Some(Ok(Message::Close(_))) => return Err(ClientError::Closed),
                Some(Ok(_)) => {}
            }
        }
    }

    /// Read until `pred` matches, returning the matching frame.
    pub async fn recv_until(&mut self, mut pred: impl FnMut(&ServerFrame) -> bool) -> Result<ServerFrame, ClientError> {
        loop {
            let frame = self.recv().await?;
            if pred(&frame) {
                return Ok(frame);
            }
        }
    }

    /// Read until a view matching `pred` arrives.
    pub async fn recv_view(&mut self, mut pred: impl FnMut(&PlayerView) -> bool) -> Result<PlayerView, ClientError> {
        let frame = self
            .recv_until(|f| matches!(f, ServerFrame::View { view, .. } if pred(view)))
            .await?;
        match frame {
            ServerFrame::View { view, .. } => Ok(view),
            _ => unreachable!(),
        }
    }

    pub async fn send_raw(&mut self, text: String) -> Result<(), ClientError> {
        self.ws
            .send(Message::Text(text))
            .await
            .map_err(|e| ClientError::Ws(e.to_string()))
    }

    pub async fn send(&mut self, key: &str, action: Action) -> Result<(), ClientError> {
        let frame = ClientFrame::Action {
            key: key.to_owned(),
            action,
        };
        self.send_raw(wire::encode(&frame)).await
    }

    /// Send with a fresh idempotency key and wait for its ack or rejection.
    pub async fn act(&mut self, action: Action) -> Result<ServerFrame, ClientError> {
        self.next_key += 1;
        let key = format!("{}-{}", self.key_prefix, self.next_key);
        self.send(&key, action).await?;
        self.recv_until(|f| match f {
            ServerFrame::Ack { key: k, .. } | ServerFrame::Reject { key: k, .. } => *k == key,
            _ => false,
        })
        .await
    }

    /// Play the seat to the end: first card in hand for stories and
    /// decoys, first card on offer for votes. Returns the final view.
    pub async fn play_first_choice(&mut self, caption: &str) -> Result<PlayerView, ClientError> {
        let mut advanced: Option<u32> = None;
        loop {
            let view = match self.recv().await? {
                ServerFrame::View { view, .. } => view,
                ServerFrame::Error { code, message } => return Err(ClientError::Refused { code, message }),
                _ => continue,
            };
            let action = match view.phase {
                Phase::GameOver => return Ok(view),
                Phase::RoundComplete if advanced != Some(view.round_index) => {
                    advanced = Some(view.round_index);
                    Some(Action::NextRound)
                }
                Phase::AwaitingStory if view.awaiting_you => Some(Action::Story {
                    card_id: view.hand[0].id.clone(),
                    caption: caption.to_owned(),
                }),
                Phase::AwaitingDecoys if view.awaiting_you => Some(Action::Decoy {
                    card_id: view.hand[0].id.clone(),
                }),
                Phase::AwaitingVotes if view.awaiting_you => Some(Action::Vote {
                    card_id: view.pool.as_ref().expect("vote view has a pool")[0].id.clone(),
                }),
                _ => None,
            };
            let Some(action) = action else { continue };
            let next_round = action == Action::NextRound;
            match self.act(action).await? {
                ServerFrame::Reject { code, .. } if next_round && code == "NotYourTurnPhase" => {}
                ServerFrame::Reject { code, message, .. } => return Err(ClientError::Refused { code, message }),
                _ => {}
            }
        }
    }

    pub async fn close(mut self) {
        let _ = self.ws.close(None).await;
    }
}
