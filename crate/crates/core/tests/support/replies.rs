//! Seeded generators of well-formed and malformed model replies.

use dixit_core::agents::{AgentReply, Decision};
use dixit_core::engine::normalize_caption;
use dixit_core::prompts::{ChoiceSet, ReplyKind};
use dixit_core::rng::GameRng;

const WORDS: [&str; 16] = [
    "owl", "moon", "key", "\"quoted\"", "{brace}", "naïve", "tower", "x,y", "ship", "\\slash", "clock", "}",
    "星", "river", "`tick`", "door",
];

fn phrase(rng: &mut GameRng, min: usize) -> String {
    let n = min + rng.below(6);
    (0..n).map(|_| WORDS[rng.below(WORDS.len())]).collect::<Vec<_>>().join(" ")
}

/// At least one word that normalization cannot strip away entirely.
fn caption(rng: &mut GameRng) -> String {
    let mut words: Vec<&str> = (0..rng.below(5)).map(|_| WORDS[rng.below(WORDS.len())]).collect();
    words.insert(rng.below(words.len() + 1), "plain");
    words.join(" ")
}

fn wrap(rng: &mut GameRng, json: &str) -> String {
    match rng.below(5) {
        0 => json.to_owned(),
        1 => format!("```json\n{json}\n```"),
        2 => format!("Here is my answer.\n```json\n{json}\n```\nThanks!"),
        3 => format!("I considered each card carefully. {json}"),
        _ => format!("```\n{json}\n```"),
    }
}

pub struct GoodReply {
    pub raw: String,
    pub kind: ReplyKind,
    pub valid: ChoiceSet,
    pub expected: AgentReply,
}

pub fn good_replies(seed: u64, count: usize) -> Vec<GoodReply> {
    let mut rng = GameRng::from_seed(seed);
    (0..count)
        .map(|_| {
            let thought = phrase(&mut rng, 0);
            let size = 1 + rng.below(6);
            let valid = ChoiceSet::first(size);
            let (kind, sent) = if rng.below(2) == 0 {
                let mut c = caption(&mut rng);
                if rng.below(3) == 0 {
                    c = format!("  \"{c}\" ");
                }
                (ReplyKind::Caption, AgentReply::caption(c, thought))
            } else {
                (ReplyKind::Choice, AgentReply::choice(rng.below(size), thought))
            };
            let mut expected = sent.clone();
            if let Decision::Caption(c) = &sent.decision {
                expected.decision = Decision::Caption(normalize_caption(c));
            }
            let json = match (&sent.decision, rng.below(3)) {
                // the template's own shape, trailing comma included
                (Decision::Choice(i), 0) => format!(
                    "{{\n    \"thought\": {},\n    \"choice\": \"{i}\",\n}}",
                    serde_json::to_string(&expected.thought).unwrap()
                ),
                (Decision::Choice(i), 1) => format!(
                    "{{\"choice\": {i}, \"thought\": {}}}",
                    serde_json::to_string(&expected.thought).unwrap()
                ),
                _ => sent.to_schema_json(),
            };
            GoodReply {
                raw: wrap(&mut rng, &json),
                kind,
                valid,
                expected,
            }
        })
        .collect()
}

pub struct BadReply {
    pub raw: String,
    pub kind: ReplyKind,
    pub valid: ChoiceSet,
    pub expected_code: &'static str,
}

pub fn bad_replies(seed: u64, count: usize) -> Vec<BadReply> {
    let mut rng = GameRng::from_seed(seed);
    (0..count)
        .map(|i| {
            let size = 1 + rng.below(6);
            let valid = ChoiceSet::first(size);
            let thought = serde_json::to_string(&phrase(&mut rng, 1)).unwrap();
            let (json, kind, code) = match i % 6 {
                0 => (format!("I pick card {} because {}", rng.below(size), phrase(&mut rng, 1)), ReplyKind::Choice, "ParseError"),
                1 => (format!("{{\"choice\": \"{}\"}}", rng.below(size)), ReplyKind::Choice, "MissingField"),
                2 => (format!("{{\"thought\": {thought}, \"choice\": \"{}\"}}", size + rng.below(5)), ReplyKind::Choice, "ChoiceOutOfRange"),
                3 => (format!("{{\"thought\": {thought}, \"choice\": -{}}}", 1 + rng.below(3)), ReplyKind::Choice, "ChoiceOutOfRange"),
                4 => {
                    let c = serde_json::to_string(&caption(&mut rng)).unwrap();
                    (format!("{{\"thought\": {thought}, \"caption\": {c}}}"), ReplyKind::Choice, "WrongKind")
                }
                _ => (format!("{{\"thought\": {thought}, \"caption\": \"   \"}}"), ReplyKind::Caption, "MissingField"),
            };
            BadReply {
                raw: wrap(&mut rng, &json),
                kind,
                valid,
                expected_code: code,
            }
        })
        .collect()
}
