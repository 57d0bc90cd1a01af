//! Live-server harnesses shared by the service and acceptance suites.
#![allow(dead_code)]

#[path = "../../../core/tests/support/mod.rs"]
pub mod core_support;

use std::net::SocketAddr;
use std::sync::{Arc, Mutex};

use dixit_core::agents::SimilarityTable;
use dixit_core::deck::synthetic_cards;
use dixit_core::engine::Phase;
use dixit_core::ids::PlayerId;
use dixit_service::client::{create_session, SeatClient};
use dixit_service::server::{spawn_local, ServerConfig, TapEvent};
use dixit_service::wire::ServerFrame;
use dixit_service::{SeatKind, SeatSpec, SessionSpec};

pub fn server_config(cards: usize) -> ServerConfig {
    let cards = synthetic_cards(cards);
    let table = Arc::new(SimilarityTable::synthetic(&cards, 17));
    ServerConfig {
        cards,
        table: Some(table),
        ..ServerConfig::default()
    }
}

pub fn base_url(addr: SocketAddr) -> String {
    format!("http://{addr}")
}

pub fn spec(kinds: &[SeatKind], seed: u64) -> SessionSpec {
    SessionSpec {
        seats: kinds
            .iter()
            .enumerate()
            .map(|(i, kind)| SeatSpec {
                id: PlayerId::new(format!("p{}", i + 1)),
                kind: kind.clone(),
            })
            .collect(),
        seed,
        game: None,
        auto_advance: false,
        human_timeout_secs: None,
    }
}

#[derive(Debug, Default)]
pub struct Capture {
    pub games: usize,
    pub frames: usize,
    pub view_frames: usize,
    pub vote_views: usize,
    pub reveal_views: usize,
    pub violations: Vec<String>,
}

fn inspect(event: &TapEvent<'_>, capture: &Mutex<Capture>) {
    let mut c = capture.lock().unwrap();
    c.frames += 1;
    let payload = match event.frame {
        ServerFrame::View { view, .. } => {
            c.view_frames += 1;
            if view.phase == Phase::AwaitingVotes && &view.player_id != event.state.storyteller() {
                c.vote_views += 1;
                let shown = view.pool.as_ref().map_or(0, Vec::len);
                let n = event.state.config().num_players;
                if shown != n - 1 {
                    c.violations.push(format!("{} offered {shown} cards to vote on", view.player_id));
                }
            }
            if view.reveal.is_some() {
                c.reveal_views += 1;
            }
            serde_json::to_value(view).unwrap()
        }
        other => serde_json::to_value(other).unwrap(),
    };
    let found = core_support::view_violations(event.state, event.player_id, &payload);
    if view_player_mismatch(event) {
        c.violations.push(format!("frame for {} addressed elsewhere", event.player_id));
    }
    c.violations.extend(found);
}

fn view_player_mismatch(event: &TapEvent<'_>) -> bool {
    matches!(event.frame, ServerFrame::View { view, .. } if &view.player_id != event.player_id)
}

/// Play `games` sessions of two humans (headless clients) against a random
/// and a table bot over real WebSocket connections, checking every frame
/// the server sends against the state it was produced from.
pub fn redaction_capture(games: u64) -> Capture {
    let capture = Arc::new(Mutex::new(Capture::default()));
    let mut config = server_config(100);
    let sink = capture.clone();
    config.tap = Some(Arc::new(move |e: &TapEvent<'_>| inspect(e, &sink)));
    let addr = spawn_local(config).expect("server starts");
    let base = base_url(addr);
    let runtime = tokio::runtime::Runtime::new().unwrap();
    runtime.block_on(async {
        for seed in 0..games {
            let kinds = [SeatKind::Human, SeatKind::Random, SeatKind::Human, SeatKind::Table];
            let created = create_session(&base, &spec(&kinds, seed)).await.expect("session");
            let token = |i: usize| created.seats[i].token.clone().unwrap();
            let mut a = SeatClient::connect(&base, &created.session_id, &token(0)).await.unwrap();
            let mut b = SeatClient::connect(&base, &created.session_id, &token(2)).await.unwrap();
            let (va, vb) = tokio::join!(a.play_first_choice("a quiet storm"), b.play_first_choice("the long way home"));
            let (va, vb) = (va.expect("seat a plays out"), vb.expect("seat b plays out"));
            assert_eq!(va.phase, Phase::GameOver);
            assert_eq!(va.scores, vb.scores);
            capture.lock().unwrap().games += 1;
            a.close().await;
            b.close().await;
        }
    });
    let taken = std::mem::take(&mut *capture.lock().unwrap());
    taken
}
