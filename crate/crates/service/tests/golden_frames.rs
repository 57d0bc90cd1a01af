use std::path::PathBuf;
use std::time::Instant;

use dixit_core::deck::synthetic_cards;
use dixit_core::engine::Phase;
use dixit_core::ids::PlayerId;
use dixit_service::session::SessionEnv;
use dixit_service::wire::{self, Action, ClientFrame, ServerFrame};
use dixit_service::{SeatKind, SeatSpec, Session, SessionSpec};

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/frames.txt")
}

/// Views from a fixed session: the human's opening view and the first reveal.
fn session_views() -> (ServerFrame, ServerFrame) {
    let spec = SessionSpec {
        seats: [SeatKind::Random, SeatKind::Human, SeatKind::Random]
            .into_iter()
            .enumerate()
            .map(|(i, kind)| SeatSpec {
                id: PlayerId::new(format!("p{}", i + 1)),
                kind,
            })
            .collect(),
        seed: 5,
        game: None,
        auto_advance: false,
        human_timeout_secs: None,
    };
    let now = Instant::now();
    let (mut s, tickets) = Session::create("golden", &spec, SessionEnv::new(synthetic_cards(60)), now).unwrap();
    let human = PlayerId::from("p2");
    s.attach(tickets[1].token.as_deref().unwrap(), 1).unwrap();
    let opening = s.drain_outbox().pop().unwrap().frame;
    let mut n = 0;
    loop {
        s.run_until_idle(now).unwrap();
        if s.state().phase() == Phase::RoundComplete {
            break;
        }
        let state = s.state();
        let action = match state.phase() {
            Phase::AwaitingStory => Action::Story {
                card_id: state.hand(&human).unwrap()[0].id.clone(),
                caption: "A door in the sea".into(),
            },
            Phase::AwaitingDecoys => Action::Decoy {
                card_id: state.hand(&human).unwrap()[0].id.clone(),
            },
            Phase::AwaitingVotes => Action::Vote {
                card_id: state.visible_pool(&human).unwrap()[0].id.clone(),
            },
            other => panic!("{other:?}"),
        };
        n += 1;
        s.act(1, format!("k{n}"), action, now);
    }
    let reveal = s
        .drain_outbox()
        .into_iter()
        .rev()
        .find(|o| matches!(&o.frame, ServerFrame::View { view, .. } if view.phase == Phase::RoundComplete))
        .unwrap()
        .frame;
    (opening, reveal)
}

fn frames() -> Vec<String> {
    let (opening, reveal) = session_views();
    let server = [
        ServerFrame::Welcome {
            session_id: "golden".into(),
            player_id: "p2".into(),
            seat: 1,
        },
        opening,
        ServerFrame::Ack {
            key: "k1".into(),
            duplicate: false,
        },
        ServerFrame::Ack {
            key: "k1".into(),
            duplicate: true,
        },
        ServerFrame::Reject {
            key: "k2".into(),
            code: "OwnCardVote".into(),
            message: "p2 voted for their own card".into(),
            duplicate: false,
        },
        ServerFrame::Error {
            code: "SeatTaken".into(),
            message: "seat p2 is already connected".into(),
        },
        reveal,
    ];
    let client = [
        Action::Story {
            card_id: "c007".into(),
            caption: "A door in the sea".into(),
        },
        Action::Decoy { card_id: "c012".into() },
        Action::Vote { card_id: "c031".into() },
        Action::NextRound,
    ]
    .into_iter()
    .enumerate()
    .map(|(i, action)| ClientFrame::Action {
        key: format!("k{}", i + 1),
        action,
    });
    server
        .iter()
        .map(wire::encode)
        .chain(client.map(|f| wire::encode(&f)))
        .collect()
}

#[test]
fn frames_match_golden_file() {
    let text: String = frames().into_iter().map(|f| f + "\n").collect();
    if std::env::var_os("DIXIT_UPDATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), &text).unwrap();
    }
    let golden = std::fs::read_to_string(golden_path()).unwrap();
    assert_eq!(text, golden);
}

#[test]
fn golden_frames_decode_and_reencode_exactly() {
    let golden = std::fs::read_to_string(golden_path()).unwrap();
    let lines: Vec<&str> = golden.lines().collect();
    assert_eq!(lines.len(), 11);
    for line in &lines[..7] {
        let frame: ServerFrame = wire::decode(line).unwrap();
        assert_eq!(&wire::encode(&frame), line);
    }
    for line in &lines[7..] {
        let frame: ClientFrame = wire::decode(line).unwrap();
        assert_eq!(&wire::encode(&frame), line);
    }
    assert_eq!(lines[2], r#"49:{"v":1,"type":"ack","key":"k1","duplicate":false}"#);
    assert_eq!(lines[10], r#"65:{"v":1,"type":"action","key":"k4","action":{"kind":"next_round"}}"#);
    assert!(lines[6].contains(r#""phase":"RoundComplete""#));
    // every prefix is the byte length of its body, checked without the codec
    for line in &lines {
        let (n, body) = line.split_once(':').unwrap();
        assert_eq!(n.parse::<usize>().unwrap(), body.len());
    }
}
