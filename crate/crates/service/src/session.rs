//! One game with its seats, driven by a single owner.
//!
//! A [`Session`] is plain synchronous state: callers feed it connection
//! events and client frames, call [`Session::step`] until it reports no
//! progress, and drain the frames it queued. The server runs each session
//! on its own thread; tests can drive one directly.

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand_core::{OsRng, RngCore};
use serde::{Deserialize, Serialize};

use dixit_core::agents::{Agent, AgentReply, RandomAgent, RemoteAgent, SimilarityTable, TableAgent};
use dixit_core::deck::Card;
use dixit_core::engine::{ActionKind, EndReason, GameState, Phase, ScoreLine};
use dixit_core::ids::{CardId, PlayerId};
use dixit_core::logstore::{LogFooter, LogSink, NullSink};
use dixit_core::rng::derive_seed;
use dixit_core::tournament::plan_games;

use crate::error::ServiceError;
use crate::spec::{SeatKind, SessionSpec};
use crate::wire::{self, Action, ClientFrame, ServerFrame};

pub type ConnId = u64;

/// A frame queued for one connection.
#[derive(Debug, Clone, PartialEq)]
pub struct Outbound {
    pub conn: ConnId,
    pub player_id: PlayerId,
    pub frame: ServerFrame,
}

/// Returned by session creation; only human seats carry a token.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SeatTicket {
    pub player_id: PlayerId,
    pub kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeatStatus {
    pub player_id: PlayerId,
    pub kind: String,
    pub connected: bool,
}

/// Public state, as served by `GET /sessions/{id}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionSummary {
    pub session_id: String,
    pub phase: Phase,
    pub round_index: u32,
    pub seq: u64,
    pub scores: Vec<ScoreLine>,
    pub seats: Vec<SeatStatus>,
    pub end_reason: Option<EndReason>,
}

enum Driver {
    Bot(Box<dyn Agent>),
    Human {
        token: String,
        conn: Option<ConnId>,
        ready: bool,
    },
}

struct Seat {
    player_id: PlayerId,
    kind: &'static str,
    driver: Driver,
    /// Plays for the seat when its bot fails or its human times out.
    stand_in: RandomAgent,
}

impl Seat {
    fn is_bot(&self) -> bool {
        matches!(self.driver, Driver::Bot(_))
    }
}

/// Random capability string.
pub fn new_token(bytes: usize) -> String {
    let mut buf = vec![0u8; bytes];
    OsRng.fill_bytes(&mut buf);
    hex::encode(buf)
}

/// What a session needs from the server besides its spec.
pub struct SessionEnv {
    pub cards: Vec<Card>,
    pub table: Option<Arc<SimilarityTable>>,
    pub image_root: Option<PathBuf>,
    pub sink: Box<dyn LogSink + Send>,
}

impl SessionEnv {
    pub fn new(cards: Vec<Card>) -> Self {
        Self {
            cards,
            table: None,
            image_root: None,
            sink: Box::new(NullSink),
        }
    }
}

pub struct Session {
    id: String,
    state: GameState,
    seats: Vec<Seat>,
    seq: u64,
    outcomes: HashMap<(usize, String), Result<(), ServiceError>>,
    outbox: Vec<Outbound>,
    auto_advance: bool,
    human_timeout: Option<Duration>,
    last_change: Instant,
    sink: Box<dyn LogSink + Send>,
}

impl Session {
    pub fn create(
        id: impl Into<String>,
        spec: &SessionSpec,
        env: SessionEnv,
        now: Instant,
    ) -> Result<(Self, Vec<SeatTicket>), ServiceError> {
        let id = id.into();
        let config = spec.game_config()?;
        let roster = spec.roster();
        let plan = plan_games(1, spec.seed, &config, &env.cards, &roster)
            .pop()
            .expect("one plan");
        let mut seats = Vec::with_capacity(spec.seats.len());
        let mut tickets = Vec::with_capacity(spec.seats.len());
        for (i, seat) in spec.seats.iter().enumerate() {
            let seed = plan.agent_seeds[i];
            let driver = match &seat.kind {
                SeatKind::Human => Driver::Human {
                    token: new_token(16),
                    conn: None,
                    ready: false,
                },
                SeatKind::Random => Driver::Bot(Box::new(RandomAgent::new(seed))),
                SeatKind::Table => {
                    let table = env
                        .table
                        .clone()
                        .ok_or_else(|| ServiceError::InvalidSpec("no similarity table for table seats".into()))?;
                    Driver::Bot(Box::new(TableAgent::new(table)))
                }
                SeatKind::Remote { endpoint } => {
                    let mut agent = RemoteAgent::over_http(
                        format!("{id}/{}", seat.id),
                        endpoint.clone(),
                        config.agent_retry_limit,
                        seed,
                    )
                    .map_err(|e| ServiceError::InvalidSpec(e.to_string()))?;
                    if let Some(root) = &env.image_root {
                        agent = agent.with_image_root(root);
                    }
                    Driver::Bot(Box::new(agent))
                }
            };
            tickets.push(SeatTicket {
                player_id: seat.id.clone(),
                kind: seat.kind.label().to_owned(),
                token: match &driver {
                    Driver::Human { token, .. } => Some(token.clone()),
                    Driver::Bot(_) => None,
                },
            });
            seats.push(Seat {
                player_id: seat.id.clone(),
                kind: seat.kind.label(),
                driver,
                stand_in: RandomAgent::new(derive_seed(seed, "stand-in", 0)),
            });
        }

        let mut setup = plan.setup;
        setup.game_id = id.clone();
        let state = GameState::new_game_with_start(
            setup.config.clone(),
            &setup.manifest,
            &setup.roster,
            setup.start_storyteller,
        )?;
        let agents: Vec<String> = seats
            .iter()
            .map(|s| match &s.driver {
                Driver::Bot(a) => a.describe(),
                Driver::Human { .. } => "human".to_owned(),
            })
            .collect();
        let mut sink = env.sink;
        sink.header(&setup.header(&agents))
            .map_err(|e| ServiceError::Log(e.to_string()))?;

        let session = Self {
            id,
            state,
            seats,
            seq: 0,
            outcomes: HashMap::new(),
            outbox: Vec::new(),
            auto_advance: spec.auto_advance,
            human_timeout: spec.human_timeout_secs.map(Duration::from_secs),
            last_change: now,
            sink,
        };
        Ok((session, tickets))
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn state(&self) -> &GameState {
        &self.state
    }

    /// Bumped on every state change; carried by `view` frames.
    pub fn seq(&self) -> u64 {
        self.seq
    }

    pub fn is_over(&self) -> bool {
        self.state.phase() == Phase::GameOver
    }

    pub fn drain_outbox(&mut self) -> Vec<Outbound> {
        std::mem::take(&mut self.outbox)
    }

    pub fn summary(&self) -> SessionSummary {
        SessionSummary {
            session_id: self.id.clone(),
            phase: self.state.phase(),
            round_index: self.state.round_index(),
            seq: self.seq,
            scores: self
                .state
                .scores()
                .into_iter()
                .map(|(player_id, score)| ScoreLine { player_id, score })
                .collect(),
            seats: self
                .seats
                .iter()
                .map(|s| SeatStatus {
                    player_id: s.player_id.clone(),
                    kind: s.kind.to_owned(),
                    connected: matches!(s.driver, Driver::Human { conn: Some(_), .. }),
                })
                .collect(),
            end_reason: self.state.end_reason(),
        }
    }

    fn seat_of_conn(&self, conn: ConnId) -> Option<usize> {
        self.seats
            .iter()
            .position(|s| matches!(s.driver, Driver::Human { conn: Some(c), .. } if c == conn))
    }

    /// Bind `conn` to the human seat holding `token` and queue a welcome
    /// and the seat's current view.
    pub fn attach(&mut self, token: &str, conn: ConnId) -> Result<PlayerId, ServiceError> {
        let seat = self
            .seats
            .iter()
            .position(|s| matches!(&s.driver, Driver::Human { token: t, .. } if t == token))
            .ok_or(ServiceError::InvalidToken)?;
        let player = self.seats[seat].player_id.clone();
        if let Driver::Human { conn: bound, .. } = &mut self.seats[seat].driver {
            if bound.is_some() {
                return Err(ServiceError::SeatTaken(player));
            }
            *bound = Some(conn);
        }
        self.push(
            conn,
            &player,
            ServerFrame::Welcome {
                session_id: self.id.clone(),
                player_id: player.clone(),
                seat,
            },
        );
        self.push_view(conn, seat);
        Ok(player)
    }

    pub fn detach(&mut self, conn: ConnId) {
        if let Some(seat) = self.seat_of_conn(conn) {
            if let Driver::Human { conn: bound, .. } = &mut self.seats[seat].driver {
                *bound = None;
            }
        }
    }

    /// Handle one raw frame from `conn`.
    pub fn handle_text(&mut self, conn: ConnId, text: &str, now: Instant) {
        match wire::decode::<ClientFrame>(text) {
            Ok(ClientFrame::Action { key, action }) => self.act(conn, key, action, now),
            Err(e) => {
                let player = self
                    .seat_of_conn(conn)
                    .map(|s| self.seats[s].player_id.clone())
                    .unwrap_or_else(|| PlayerId::from(""));
                self.push(
                    conn,
                    &player,
                    ServerFrame::Error {
                        code: e.code().to_owned(),
                        message: e.to_string(),
                    },
                );
            }
        }
    }

    /// Apply a human action once per idempotency key and queue its ack or rejection.
    pub fn act(&mut self, conn: ConnId, key: String, action: Action, now: Instant) {
        let Some(seat) = self.seat_of_conn(conn) else {
            let e = ServiceError::NotBound;
            self.push(
                conn,
                &PlayerId::from(""),
                ServerFrame::Reject {
                    key,
                    code: e.code().into(),
                    message: e.to_string(),
                    duplicate: false,
                },
            );
            return;
        };
        let player = self.seats[seat].player_id.clone();
        let slot = (seat, key.clone());
        let (result, duplicate, changed) = match self.outcomes.get(&slot) {
            Some(prev) => (prev.clone(), true, false),
            None => {
                let applied = if key.is_empty() {
                    Err(ServiceError::Wire(wire::WireError::Body("empty idempotency key".into())))
                } else {
                    self.apply(seat, &action)
                };
                let changed = matches!(applied, Ok(true));
                let result = applied.map(|_| ());
                self.outcomes.insert(slot, result.clone());
                (result, false, changed)
            }
        };
        let frame = match result {
            Ok(()) => ServerFrame::Ack { key, duplicate },
            Err(e) => ServerFrame::Reject {
                key,
                code: e.code().into(),
                message: e.to_string(),
                duplicate,
            },
        };
        self.push(conn, &player, frame);
        if changed {
            self.changed(now);
        }
    }

    /// `Ok(true)` when the game state changed.
    fn apply(&mut self, seat: usize, action: &Action) -> Result<bool, ServiceError> {
        let player = self.seats[seat].player_id.clone();
        let phase = self.state.phase();
        let wrong = || ServiceError::NotYourTurnPhase {
            player: player.clone(),
            phase,
        };
        let pending = self.state.is_pending(&player);
        match action {
            Action::Story { card_id, caption } => {
                if phase != Phase::AwaitingStory || !pending {
                    return Err(wrong());
                }
                self.state.submit_story(&player, card_id, caption, "")?;
            }
            Action::Decoy { card_id } => {
                if phase != Phase::AwaitingDecoys || !pending {
                    return Err(wrong());
                }
                self.state.submit_decoy(&player, card_id)?;
            }
            Action::Vote { card_id } => {
                if phase != Phase::AwaitingVotes || !pending {
                    return Err(wrong());
                }
                self.state.submit_vote(&player, card_id)?;
            }
            Action::NextRound => {
                if phase != Phase::RoundComplete {
                    return Err(wrong());
                }
                if let Driver::Human { ready, .. } = &mut self.seats[seat].driver {
                    *ready = true;
                }
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn timed_out(&self, now: Instant) -> bool {
        self.human_timeout
            .is_some_and(|t| now.saturating_duration_since(self.last_change) >= t)
    }

    /// When [`Session::step`] should next be called even without input.
    pub fn deadline(&self) -> Option<Instant> {
        if self.is_over() {
            return None;
        }
        self.human_timeout.map(|t| self.last_change + t)
    }

    /// Make one unit of progress: bank a finished round, play one bot seat,
    /// or stand in for one stalled human. Returns whether anything changed.
    pub fn step(&mut self, now: Instant) -> Result<bool, ServiceError> {
        let changed = match self.state.phase() {
            Phase::GameOver => false,
            Phase::RoundComplete => {
                let ready = self.seats.iter().all(|s| match &s.driver {
                    Driver::Human { ready, .. } => *ready,
                    Driver::Bot(_) => true,
                });
                if self.auto_advance || ready || self.timed_out(now) {
                    self.bank_round()?;
                    true
                } else {
                    false
                }
            }
            _ => {
                let pending = |s: &Seat| self.state.is_pending(&s.player_id);
                if let Some(seat) = self.seats.iter().position(|s| s.is_bot() && pending(s)) {
                    self.seat_move(seat, false)?;
                    true
                } else if self.timed_out(now) {
                    match self.seats.iter().position(|s| !s.is_bot() && pending(s)) {
                        Some(seat) => {
                            tracing::info!(session = %self.id, player = %self.seats[seat].player_id, "human timed out");
                            self.seat_move(seat, true)?;
                            true
                        }
                        None => false,
                    }
                } else {
                    false
                }
            }
        };
        if changed {
            self.changed(now);
        }
        Ok(changed)
    }

    /// Step until nothing more happens without input; returns the step count.
    pub fn run_until_idle(&mut self, now: Instant) -> Result<usize, ServiceError> {
        let mut steps = 0;
        while self.step(now)? {
            steps += 1;
        }
        Ok(steps)
    }

    fn bank_round(&mut self) -> Result<(), ServiceError> {
        let record = self.state.finish_round()?;
        if let Err(e) = self.sink.round(&record) {
            tracing::warn!(session = %self.id, "writing round to log: {e}");
        }
        for seat in &mut self.seats {
            if let Driver::Human { ready, .. } = &mut seat.driver {
                *ready = false;
            }
        }
        if let Some(footer) = LogFooter::from_state(&self.state) {
            if let Err(e) = self.sink.footer(&footer) {
                tracing::warn!(session = %self.id, "writing footer to log: {e}");
            }
        }
        Ok(())
    }

    /// Let the seat's bot (or its stand-in) make its pending move.
    fn seat_move(&mut self, seat: usize, stand_in: bool) -> Result<(), ServiceError> {
        let Session { state, seats, id, .. } = self;
        let slot = &mut seats[seat];
        let player = slot.player_id.clone();
        if !stand_in {
            if let Driver::Bot(agent) = &mut slot.driver {
                match play_move(state, &player, agent.as_mut(), false) {
                    Ok(()) => return Ok(()),
                    Err(e) => tracing::warn!(session = %id, player = %player, "bot failed, standing in: {e}"),
                }
            }
        }
        play_move(state, &player, &mut slot.stand_in, true).map_err(|e| match e {
            MoveError::Engine(e) => ServiceError::Engine(e),
            other => ServiceError::InvalidSpec(other.to_string()),
        })
    }

    fn changed(&mut self, now: Instant) {
        self.seq += 1;
        self.last_change = now;
        let bound: Vec<(ConnId, usize)> = self
            .seats
            .iter()
            .enumerate()
            .filter_map(|(i, s)| match s.driver {
                Driver::Human { conn: Some(c), .. } => Some((c, i)),
                _ => None,
            })
            .collect();
        for (conn, seat) in bound {
            self.push_view(conn, seat);
        }
    }

    fn push_view(&mut self, conn: ConnId, seat: usize) {
        let player = self.seats[seat].player_id.clone();
        let view = self.state.view_for(&player).expect("seated player");
        self.push(conn, &player, ServerFrame::View { seq: self.seq, view });
    }

    fn push(&mut self, conn: ConnId, player: &PlayerId, frame: ServerFrame) {
        self.outbox.push(Outbound {
            conn,
            player_id: player.clone(),
            frame,
        });
    }
}

#[derive(Debug, thiserror::Error)]
enum MoveError {
    #[error("agent: {0}")]
    Agent(#[from] dixit_core::agents::AgentError),
    #[error("agent answered {0}")]
    Bad(String),
    #[error(transparent)]
    Engine(#[from] dixit_core::engine::EngineError),
}

fn chosen<'a>(reply: &AgentReply, cards: &'a [Card]) -> Result<&'a CardId, MoveError> {
    match reply.as_choice() {
        Some(i) if i < cards.len() => Ok(&cards[i].id),
        Some(i) => Err(MoveError::Bad(format!("choice {i} of {}", cards.len()))),
        None => Err(MoveError::Bad("a caption where a choice was expected".into())),
    }
}

/// Decide and submit one move for `player`. Nothing is applied on error.
fn play_move(state: &mut GameState, player: &PlayerId, agent: &mut dyn Agent, fallback: bool) -> Result<(), MoveError> {
    match state.phase() {
        Phase::AwaitingStory => {
            let hand = state.hand(player)?;
            let select = agent.select_story_card(&hand)?;
            let card = chosen(&select, &hand)?.clone();
            let story = hand.iter().find(|c| c.id == card).expect("card from hand");
            let caption = agent.caption_card(story)?;
            let text = caption
                .as_caption()
                .ok_or_else(|| MoveError::Bad("a choice where a caption was expected".into()))?;
            state.submit_story(player, &card, text, "")?;
            state.annotate(player, ActionKind::StorySelect, &select.thought, fallback || select.fallback);
            state.annotate(player, ActionKind::StoryCaption, &caption.thought, fallback || caption.fallback);
        }
        Phase::AwaitingDecoys => {
            let caption = state.caption().unwrap_or_default().to_owned();
            let hand = state.hand(player)?;
            let reply = agent.select_decoy(&caption, &hand)?;
            let card = chosen(&reply, &hand)?.clone();
            state.submit_decoy(player, &card)?;
            state.annotate(player, ActionKind::Decoy, &reply.thought, fallback || reply.fallback);
        }
        Phase::AwaitingVotes => {
            let caption = state.caption().unwrap_or_default().to_owned();
            let pool = state.visible_pool(player)?;
            let reply = agent.vote(&caption, &pool)?;
            let card = chosen(&reply, &pool)?.clone();
            state.submit_vote(player, &card)?;
            state.annotate(player, ActionKind::Vote, &reply.thought, fallback || reply.fallback);
        }
        Phase::RoundComplete | Phase::GameOver => {}
    }
    Ok(())
}
