//! Drives one game between agents and streams its log.
//!
//! Seat `i` is played by `agents[i]` under `roster[i]`. The storyteller is
//! asked for a card and a caption; the remaining seats are then asked for
//! decoys and votes concurrently, and their answers are applied in roster
//! order so the outcome never depends on which agent answered first.

use std::io;

use thiserror::Error;

use crate::agents::{Agent, AgentError, AgentReply};
use crate::deck::{manifest_digest, Card};
use crate::engine::{ActionKind, EngineError, GameConfig, GameState, Phase};
use crate::ids::PlayerId;
use crate::logstore::{GameLog, LogFooter, LogHeader, LogSink, SeatInfo, ENGINE_VERSION, LOG_SCHEMA};
use crate::rng::PRNG_NAME;

#[derive(Debug, Clone, PartialEq)]
pub struct GameSetup {
    pub game_id: String,
    pub game_index: Option<u64>,
    pub game_seed: Option<u64>,
    pub config: GameConfig,
    pub manifest: Vec<Card>,
    pub roster: Vec<PlayerId>,
    /// Roster index of the first storyteller.
    pub start_storyteller: usize,
}

impl GameSetup {
    pub fn new(game_id: impl Into<String>, config: GameConfig, manifest: Vec<Card>, roster: Vec<PlayerId>) -> Self {
        Self {
            game_id: game_id.into(),
            game_index: None,
            game_seed: None,
            config,
            manifest,
            roster,
            start_storyteller: 0,
        }
    }

    pub fn header(&self, agents: &[String]) -> LogHeader {
        LogHeader {
            schema: LOG_SCHEMA.to_owned(),
            game_id: self.game_id.clone(),
            game_index: self.game_index,
            game_seed: self.game_seed,
            engine_version: ENGINE_VERSION.to_owned(),
            prng: PRNG_NAME.to_owned(),
            config: self.config.clone(),
            manifest_digest: manifest_digest(&self.manifest),
            manifest: self.manifest.clone(),
            seats: self
                .roster
                .iter()
                .zip(agents)
                .map(|(p, a)| SeatInfo {
                    player_id: p.clone(),
                    agent: a.clone(),
                })
                .collect(),
            start_storyteller: self.roster[self.start_storyteller].clone(),
        }
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("{agents} agents for {players} seats")]
    SeatCount { agents: usize, players: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("agent for {player} failed: {source}")]
    Agent {
        player: PlayerId,
        #[source]
        source: AgentError,
    },
    #[error("agent for {player} returned {detail}")]
    BadDecision { player: PlayerId, detail: String },
    #[error("writing log: {0}")]
    Log(#[from] io::Error),
}

fn agent_err(player: &PlayerId) -> impl FnOnce(AgentError) -> RunError + '_ {
    move |source| RunError::Agent {
        player: player.clone(),
        source,
    }
}

fn pick<'a>(player: &PlayerId, reply: &AgentReply, cards: &'a [Card]) -> Result<&'a Card, RunError> {
    match reply.as_choice() {
        Some(i) if i < cards.len() => Ok(&cards[i]),
        Some(i) => Err(RunError::BadDecision {
            player: player.clone(),
            detail: format!("choice {i} from {} options", cards.len()),
        }),
        None => Err(RunError::BadDecision {
            player: player.clone(),
            detail: "a caption where a choice was expected".into(),
        }),
    }
}

/// Ask every seat listed in `jobs` (ascending seat order) at once.
fn ask_seats<A, F>(agents: &mut [A], jobs: &[(usize, Vec<Card>)], ask: F) -> Vec<Result<AgentReply, AgentError>>
where
    A: Agent,
    F: Fn(&mut A, &[Card]) -> Result<AgentReply, AgentError> + Sync,
{
    let ask = &ask;
    std::thread::scope(|scope| {
        let mut handles = Vec::with_capacity(jobs.len());
        let mut jobs = jobs.iter().peekable();
        for (seat, agent) in agents.iter_mut().enumerate() {
            if let Some((_, cards)) = jobs.next_if(|(s, _)| *s == seat) {
                handles.push(scope.spawn(move || ask(agent, cards)));
            }
        }
        handles
            .into_iter()
            .map(|h| h.join().expect("agent thread panicked"))
            .collect()
    })
}

/// Play one round up to `RoundComplete`.
fn play_round<A: Agent>(state: &mut GameState, agents: &mut [A]) -> Result<(), RunError> {
    let roster = state.roster().to_vec();
    let teller_seat = state.storyteller_index();
    let teller = roster[teller_seat].clone();

    let hand = state.hand(&teller)?;
    let select = agents[teller_seat]
        .select_story_card(&hand)
        .map_err(agent_err(&teller))?;
    let card = pick(&teller, &select, &hand)?.clone();
    let caption = agents[teller_seat]
        .caption_card(&card)
        .map_err(agent_err(&teller))?;
    let text = caption.as_caption().ok_or_else(|| RunError::BadDecision {
        player: teller.clone(),
        detail: "a choice where a caption was expected".into(),
    })?;
    state.submit_story(&teller, &card.id, text, "")?;
    state.annotate(&teller, ActionKind::StorySelect, &select.thought, select.fallback);
    state.annotate(&teller, ActionKind::StoryCaption, &caption.thought, caption.fallback);

    let caption = state.caption().expect("caption staged").to_owned();
    let others: Vec<usize> = (0..roster.len()).filter(|&s| s != teller_seat).collect();

    let jobs = others
        .iter()
        .map(|&s| Ok((s, state.hand(&roster[s])?)))
        .collect::<Result<Vec<_>, EngineError>>()?;
    let replies = ask_seats(agents, &jobs, |agent, hand| agent.select_decoy(&caption, hand));
    let mut decoys = Vec::with_capacity(jobs.len());
    for ((seat, hand), reply) in jobs.iter().zip(replies) {
        let player = &roster[*seat];
        let reply = reply.map_err(agent_err(player))?;
        decoys.push((player, pick(player, &reply, hand)?.id.clone(), reply));
    }
    for (player, card, reply) in &decoys {
        state.submit_decoy(player, card)?;
        state.annotate(player, ActionKind::Decoy, &reply.thought, reply.fallback);
    }

    let jobs = others
        .iter()
        .map(|&s| Ok((s, state.visible_pool(&roster[s])?)))
        .collect::<Result<Vec<_>, EngineError>>()?;
    let replies = ask_seats(agents, &jobs, |agent, pool| agent.vote(&caption, pool));
    let mut votes = Vec::with_capacity(jobs.len());
    for ((seat, pool), reply) in jobs.iter().zip(replies) {
        let player = &roster[*seat];
        let reply = reply.map_err(agent_err(player))?;
        votes.push((player, pick(player, &reply, pool)?.id.clone(), reply));
    }
    for (player, card, reply) in &votes {
        state.submit_vote(player, card)?;
        state.annotate(player, ActionKind::Vote, &reply.thought, reply.fallback);
    }
    debug_assert_eq!(state.phase(), Phase::RoundComplete);
    Ok(())
}

/// Play a full game, streaming header, rounds and footer to `sink`.
///
/// On failure the sink has received a valid prefix without a footer.
pub fn play_game<A: Agent>(
    setup: &GameSetup,
    agents: &mut [A],
    sink: &mut dyn LogSink,
) -> Result<GameLog, RunError> {
    if agents.len() != setup.roster.len() {
        return Err(RunError::SeatCount {
            agents: agents.len(),
            players: setup.roster.len(),
        });
    }
    let mut state = GameState::new_game_with_start(
        setup.config.clone(),
        &setup.manifest,
        &setup.roster,
        setup.start_storyteller,
    )?;
    let descriptions: Vec<String> = agents.iter().map(|a| a.describe()).collect();
    let header = setup.header(&descriptions);
    sink.header(&header)?;

    let mut rounds = Vec::new();
    while state.phase() != Phase::GameOver {
        play_round(&mut state, agents)?;
        let record = state.finish_round()?;
        sink.round(&record)?;
        tracing::debug!(game = %setup.game_id, round = record.round_index, "round finished");
        rounds.push(record);
    }

    let footer = LogFooter::from_state(&state).expect("game over has an end reason");
    sink.footer(&footer)?;
    Ok(GameLog {
        header,
        rounds,
        footer: Some(footer),
    })
}
