//! Frames exchanged over a seat channel.
//!
//! Every frame is one text record `<len>:<json>`, where `<len>` is the
//! decimal byte length of `<json>`. The JSON object always starts with the
//! protocol version `"v"` and a `"type"` tag:
//!
//! ```text
//! 49:{"v":1,"type":"ack","key":"k1","duplicate":false}
//! ```
//!
//! On a WebSocket each text message carries exactly one frame. Over a raw
//! byte stream frames are simply concatenated; [`FrameBuffer`] splits them.
//!
//! Server to client: `welcome`, `view`, `ack`, `reject`, `error`.
//! Client to server: `action`, whose `action.kind` is `story`, `decoy`,
//! `vote` or `next_round`.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use dixit_core::engine::PlayerView;
use dixit_core::ids::{CardId, PlayerId};

pub const PROTOCOL_VERSION: u32 = 1;

/// Frames larger than this are refused before parsing.
pub const MAX_FRAME_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
// most frames are views anyway
#[allow(clippy::large_enum_variant)]
pub enum ServerFrame {
    Welcome {
        session_id: String,
        player_id: PlayerId,
        seat: usize,
    },
    View {
        seq: u64,
        view: PlayerView,
    },
    Ack {
        key: String,
        duplicate: bool,
    },
    Reject {
        key: String,
        code: String,
        message: String,
        duplicate: bool,
    },
    Error {
        code: String,
        message: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum ClientFrame {
    Action { key: String, action: Action },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Action {
    Story { card_id: CardId, caption: String },
    Decoy { card_id: CardId },
    Vote { card_id: CardId },
    NextRound,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum WireError {
    #[error("malformed frame: {0}")]
    Malformed(String),
    #[error("frame declares {declared} bytes but carries {actual}")]
    LengthMismatch { declared: usize, actual: usize },
    #[error("frame of {0} bytes exceeds the limit")]
    TooLarge(usize),
    #[error("unsupported protocol version {0}")]
    UnsupportedVersion(u64),
    #[error("bad frame body: {0}")]
    Body(String),
}

impl WireError {
    pub fn code(&self) -> &'static str {
        match self {
            Self::UnsupportedVersion(_) => "UnsupportedVersion",
            _ => "BadFrame",
        }
    }
}

#[derive(Serialize)]
struct Outgoing<'a, T> {
    v: u32,
    #[serde(flatten)]
    frame: &'a T,
}

pub fn encode<T: Serialize>(frame: &T) -> String {
    let json = serde_json::to_string(&Outgoing {
        v: PROTOCOL_VERSION,
        frame,
    })
    .expect("frames serialize");
    format!("{}:{json}", json.len())
}

/// Parse the length prefix; returns (declared length, offset of the body).
fn prefix(text: &str) -> Result<(usize, usize), WireError> {
    let colon = text
        .find(':')
        .ok_or_else(|| WireError::Malformed("missing length prefix".into()))?;
    let digits = &text[..colon];
    if digits.is_empty() || digits.len() > 8 || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return Err(WireError::Malformed(format!("bad length prefix {digits:?}")));
    }
    let declared: usize = digits.parse().expect("checked digits");
    if declared > MAX_FRAME_BYTES {
        return Err(WireError::TooLarge(declared));
    }
    Ok((declared, colon + 1))
}

/// Decode one complete frame.
pub fn decode<T: DeserializeOwned>(text: &str) -> Result<T, WireError> {
    let (declared, start) = prefix(text)?;
    let body = &text[start..];
    if body.len() != declared {
        return Err(WireError::LengthMismatch {
            declared,
            actual: body.len(),
        });
    }
    decode_body(body)
}

fn decode_body<T: DeserializeOwned>(body: &str) -> Result<T, WireError> {
    let mut value: serde_json::Value = serde_json::from_str(body).map_err(|e| WireError::Body(e.to_string()))?;
    let object = value
        .as_object_mut()
        .ok_or_else(|| WireError::Body("frame is not a JSON object".into()))?;
    match object.remove("v").and_then(|v| v.as_u64()) {
        Some(v) if v == u64::from(PROTOCOL_VERSION) => {}
        Some(v) => return Err(WireError::UnsupportedVersion(v)),
        None => return Err(WireError::Body("missing protocol version".into())),
    }
    serde_json::from_value(value).map_err(|e| WireError::Body(e.to_string()))
}

/// Splits a byte stream of concatenated frames.
#[derive(Debug, Default)]
pub struct FrameBuffer {
    buf: Vec<u8>,
}

impl FrameBuffer {
    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// The next complete frame's text, `None` until one has fully arrived.
    pub fn next_frame(&mut self) -> Result<Option<String>, WireError> {
        let Some(colon) = self.buf.iter().position(|&b| b == b':') else {
            if self.buf.len() > 8 {
                return Err(WireError::Malformed("length prefix too long".into()));
            }
            return Ok(None);
        };
        let head = std::str::from_utf8(&self.buf[..=colon]).map_err(|e| WireError::Malformed(e.to_string()))?;
        let (declared, start) = prefix(head)?;
        if self.buf.len() < start + declared {
            return Ok(None);
        }
        let frame: Vec<u8> = self.buf.drain(..start + declared).collect();
        String::from_utf8(frame)
            .map(Some)
            .map_err(|e| WireError::Malformed(e.to_string()))
    }
}
