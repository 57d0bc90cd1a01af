//! Prompt templates and structured-reply parsing.
//!
//! Templates are checked in under `prompts/` and use `{{name}}` slots. Each
//! is named by what its body asks for, not by its original title.

use std::collections::BTreeMap;

use serde_json::{Map, Value};
use thiserror::Error;

use crate::agents::{AgentReply, Decision};
use crate::engine::normalize_caption;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PromptName {
    Rules,
    StoryCardSelect,
    StoryCaption,
    DecoySelect,
    Vote,
}

impl PromptName {
    pub const ALL: [PromptName; 5] = [
        PromptName::Rules,
        PromptName::StoryCardSelect,
        PromptName::StoryCaption,
        PromptName::DecoySelect,
        PromptName::Vote,
    ];

    pub fn body(self) -> &'static str {
        match self {
            PromptName::Rules => include_str!("../prompts/rules.txt"),
            PromptName::StoryCardSelect => include_str!("../prompts/story_card_select.txt"),
            PromptName::StoryCaption => include_str!("../prompts/story_caption.txt"),
            PromptName::DecoySelect => include_str!("../prompts/decoy_select.txt"),
            PromptName::Vote => include_str!("../prompts/vote.txt"),
        }
    }

    pub fn file_name(self) -> &'static str {
        match self {
            PromptName::Rules => "rules.txt",
            PromptName::StoryCardSelect => "story_card_select.txt",
            PromptName::StoryCaption => "story_caption.txt",
            PromptName::DecoySelect => "decoy_select.txt",
            PromptName::Vote => "vote.txt",
        }
    }

    /// Slot names in order of first appearance.
    pub fn slots(self) -> Vec<&'static str> {
        let mut out = Vec::new();
        for segment in segments(self.body()) {
            if let Segment::Slot(name) = segment {
                if !out.contains(&name) {
                    out.push(name);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PromptError {
    #[error("template slot {{{{{0}}}}} is not bound")]
    MissingSlot(String),
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Bindings(BTreeMap<String, String>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, slot: &str, value: impl Into<String>) -> Self {
        self.0.insert(slot.to_owned(), value.into());
        self
    }

    /// Binds `dixit_rules` to the rendered rules prompt.
    pub fn with_rules(self) -> Self {
        self.with("dixit_rules", PromptName::Rules.body())
    }

    pub fn get(&self, slot: &str) -> Option<&str> {
        self.0.get(slot).map(String::as_str)
    }
}

enum Segment<'a> {
    Text(&'a str),
    Slot(&'a str),
}

fn segments(body: &str) -> Vec<Segment<'_>> {
    let mut out = Vec::new();
    let mut rest = body;
    while let Some(start) = rest.find("{{") {
        let after = &rest[start + 2..];
        let Some(end) = after.find("}}") else { break };
        let name = &after[..end];
        if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
            out.push(Segment::Text(&rest[..start + 2]));
            rest = after;
            continue;
        }
        out.push(Segment::Text(&rest[..start]));
        out.push(Segment::Slot(name));
        rest = &after[end + 2..];
    }
    out.push(Segment::Text(rest));
    out
}

/// Substitute every slot of the named template in a single pass.
pub fn render(name: PromptName, bindings: &Bindings) -> Result<String, PromptError> {
    let mut out = String::with_capacity(name.body().len() * 2);
    for segment in segments(name.body()) {
        match segment {
            Segment::Text(t) => out.push_str(t),
            Segment::Slot(slot) => out.push_str(
                bindings
                    .get(slot)
                    .ok_or_else(|| PromptError::MissingSlot(slot.to_owned()))?,
            ),
        }
    }
    Ok(out)
}

/// Indices an agent may answer with, rendered as `{0,1,2}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChoiceSet(Vec<usize>);

impl ChoiceSet {
    /// `0..count`
    pub fn first(count: usize) -> Self {
        Self((0..count).collect())
    }

    pub fn from_indices(mut indices: Vec<usize>) -> Self {
        indices.sort_unstable();
        indices.dedup();
        Self(indices)
    }

    pub fn contains(&self, index: i64) -> bool {
        index >= 0 && self.0.binary_search(&(index as usize)).is_ok()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn render(&self) -> String {
        let items: Vec<String> = self.0.iter().map(usize::to_string).collect();
        format!("{{{}}}", items.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReplyKind {
    Caption,
    Choice,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ReplyError {
    #[error("no structured object found: {0}")]
    ParseError(String),
    #[error("reply is missing field {0:?}")]
    MissingField(&'static str),
    #[error("choice {0} is not one of the valid choices")]
    ChoiceOutOfRange(i64),
    #[error("expected a {expected:?} reply")]
    WrongKind { expected: ReplyKind },
}

impl ReplyError {
    pub fn code(&self) -> &'static str {
        match self {
            ReplyError::ParseError(_) => "ParseError",
            ReplyError::MissingField(_) => "MissingField",
            ReplyError::ChoiceOutOfRange(_) => "ChoiceOutOfRange",
            ReplyError::WrongKind { .. } => "WrongKind",
        }
    }
}

/// Extract and validate the first structured object in a model reply.
///
/// Fenced code blocks are tried before bare `{...}` spans. Trailing commas,
/// which the output template itself contains, are tolerated.
pub fn parse_reply(
    raw: &str,
    expected: ReplyKind,
    valid: &ChoiceSet,
) -> Result<AgentReply, ReplyError> {
    let object = first_object(raw)
        .ok_or_else(|| ReplyError::ParseError("no JSON object in reply".into()))?;

    let thought = match object.get("thought") {
        Some(Value::String(s)) => s.clone(),
        Some(_) => return Err(ReplyError::ParseError("thought is not a string".into())),
        None => return Err(ReplyError::MissingField("thought")),
    };

    let decision = match expected {
        ReplyKind::Caption => match object.get("caption") {
            Some(Value::String(s)) => {
                let caption = normalize_caption(s);
                if caption.is_empty() {
                    return Err(ReplyError::MissingField("caption"));
                }
                Decision::Caption(caption)
            }
            Some(_) => return Err(ReplyError::ParseError("caption is not a string".into())),
            None if object.contains_key("choice") => return Err(ReplyError::WrongKind { expected }),
            None => return Err(ReplyError::MissingField("caption")),
        },
        ReplyKind::Choice => match object.get("choice") {
            Some(value) => {
                let index = choice_value(value)?;
                if !valid.contains(index) {
                    return Err(ReplyError::ChoiceOutOfRange(index));
                }
                Decision::Choice(index as usize)
            }
            None if object.contains_key("caption") => return Err(ReplyError::WrongKind { expected }),
            None => return Err(ReplyError::MissingField("choice")),
        },
    };
    Ok(AgentReply {
        thought,
        decision,
        fallback: false,
    })
}

fn choice_value(value: &Value) -> Result<i64, ReplyError> {
    let not_int = || ReplyError::ParseError(format!("choice {value} is not an integer"));
    match value {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(i)
            } else {
                match n.as_f64() {
                    Some(f) if f.fract() == 0.0 && f.abs() < 1e15 => Ok(f as i64),
                    _ => Err(not_int()),
                }
            }
        }
        Value::String(s) => s.trim().parse::<i64>().map_err(|_| not_int()),
        _ => Err(not_int()),
    }
}

fn first_object(raw: &str) -> Option<Map<String, Value>> {
    fenced_blocks(raw)
        .into_iter()
        .chain(brace_spans(raw))
        .find_map(parse_object)
}

fn parse_object(candidate: &str) -> Option<Map<String, Value>> {
    let candidate = candidate.trim();
    let parsed = serde_json::from_str::<Value>(candidate)
        .ok()
        .or_else(|| serde_json::from_str::<Value>(&strip_trailing_commas(candidate)).ok());
    match parsed {
        Some(Value::Object(map)) => Some(map),
        _ => None,
    }
}

fn fenced_blocks(raw: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut rest = raw;
    while let Some(open) = rest.find("```") {
        let after = &rest[open + 3..];
        // skip an info string such as `json`
        let body_start = after.find('\n').map(|i| i + 1).unwrap_or(0);
        let info = &after[..body_start];
        let body_start = if info.trim().chars().all(|c| c.is_ascii_alphanumeric()) {
            body_start
        } else {
            0
        };
        let body = &after[body_start..];
        let Some(close) = body.find("```") else { break };
        out.push(&body[..close]);
        rest = &body[close + 3..];
    }
    out
}

/// Balanced `{...}` spans in order of their opening brace, string-literal aware.
fn brace_spans(raw: &str) -> Vec<&str> {
    let bytes = raw.as_bytes();
    let mut out = Vec::new();
    for (start, &b) in bytes.iter().enumerate() {
        if b != b'{' {
            continue;
        }
        let mut depth = 0usize;
        let mut in_string = false;
        let mut escaped = false;
        for (offset, &c) in bytes[start..].iter().enumerate() {
            if in_string {
                match c {
                    _ if escaped => escaped = false,
                    b'\\' => escaped = true,
                    b'"' => in_string = false,
                    _ => {}
                }
                continue;
            }
            match c {
                b'"' => in_string = true,
                b'{' => depth += 1,
                b'}' => {
                    depth -= 1;
                    if depth == 0 {
                        out.push(&raw[start..=start + offset]);
                        break;
                    }
                }
                _ => {}
            }
        }
    }
    out
}

fn strip_trailing_commas(text: &str) -> String {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len());
    let mut in_string = false;
    let mut escaped = false;
    for (i, &c) in chars.iter().enumerate() {
        if in_string {
            out.push(c);
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        if c == '"' {
            in_string = true;
        }
        if c == ',' {
            let next = chars[i + 1..].iter().find(|c| !c.is_whitespace());
            if matches!(next, Some('}') | Some(']')) {
                continue;
            }
        }
        out.push(c);
    }
    out
}
