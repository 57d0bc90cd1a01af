//! Cards, seeded decks and the on-disk deck manifest.
//!
//! A manifest is a directory holding image files plus `index.csv`, one
//! `id,image_ref` pair per line. Line order is significant: the deck shuffle
//! permutes manifest order. Blank lines and lines starting with `#` are
//! skipped, and an optional leading `id,image_ref` header line is ignored.

use std::collections::HashSet;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::ids::CardId;
use crate::rng::GameRng;

pub const MANIFEST_INDEX: &str = "index.csv";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Card {
    pub id: CardId,
    pub image_ref: String,
}

impl Card {
    pub fn new(id: impl Into<CardId>, image_ref: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            image_ref: image_ref.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum ManifestError {
    #[error("reading manifest {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("manifest line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate card id {0}")]
    DuplicateCardId(CardId),
    #[error("card {0} has an empty image_ref")]
    EmptyImageRef(CardId),
}

/// A loaded manifest: cards in file order plus the directory image refs resolve against.
#[derive(Clone, Debug)]
pub struct Manifest {
    pub root: PathBuf,
    pub cards: Vec<Card>,
}

impl Manifest {
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, ManifestError> {
        let root = dir.as_ref().to_path_buf();
        let index = root.join(MANIFEST_INDEX);
        let text = fs::read_to_string(&index).map_err(|source| ManifestError::Io {
            path: index.clone(),
            source,
        })?;
        let cards = parse_manifest(&text)?;
        Ok(Self { root, cards })
    }

    pub fn digest(&self) -> String {
        manifest_digest(&self.cards)
    }

    pub fn resolve(&self, image_ref: &str) -> PathBuf {
        resolve_image(&self.root, image_ref)
    }
}

pub fn resolve_image(root: &Path, image_ref: &str) -> PathBuf {
    let path = Path::new(image_ref);
    if path.is_absolute() {
        path.to_path_buf()
    } else {
        root.join(path)
    }
}

pub fn parse_manifest(text: &str) -> Result<Vec<Card>, ManifestError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());

    let mut cards = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| ManifestError::Malformed {
            line: e.position().map(|p| p.line() as usize).unwrap_or(i + 1),
            message: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if record.iter().all(str::is_empty) {
            continue;
        }
        if record.len() != 2 {
            return Err(ManifestError::Malformed {
                line,
                message: format!("expected 2 fields, found {}", record.len()),
            });
        }
        let (id, image_ref) = (&record[0], &record[1]);
        if cards.is_empty() && id == "id" && image_ref == "image_ref" {
            continue;
        }
        if id.is_empty() || id.chars().any(char::is_whitespace) {
            return Err(ManifestError::Malformed {
                line,
                message: format!("invalid card id {id:?}"),
            });
        }
        cards.push(Card::new(id, image_ref));
    }
    validate_cards(&cards)?;
    Ok(cards)
}

pub fn validate_cards(cards: &[Card]) -> Result<(), ManifestError> {
    let mut seen = HashSet::new();
    for card in cards {
        if !seen.insert(&card.id) {
            return Err(ManifestError::DuplicateCardId(card.id.clone()));
        }
        if card.image_ref.trim().is_empty() {
            return Err(ManifestError::EmptyImageRef(card.id.clone()));
        }
    }
    Ok(())
}

/// SHA-256 (hex) over `id \t image_ref \n` for each card in manifest order.
pub fn manifest_digest(cards: &[Card]) -> String {
    let mut hasher = Sha256::new();
    for card in cards {
        hasher.update(card.id.as_str().as_bytes());
        hasher.update(b"\t");
        hasher.update(card.image_ref.as_bytes());
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}

/// Draw pile: manifest order permuted by `shuffle_seed`, consumed front to back.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Deck {
    cards: Vec<Card>,
    next_index: usize,
    shuffle_seed: u64,
}

impl Deck {
    pub fn shuffled(manifest: &[Card], shuffle_seed: u64) -> Self {
        let mut cards = manifest.to_vec();
        GameRng::from_seed(shuffle_seed).shuffle(&mut cards);
        Self {
            cards,
            next_index: 0,
            shuffle_seed,
        }
    }

    pub fn draw(&mut self) -> Option<Card> {
        let card = self.cards.get(self.next_index)?.clone();
        self.next_index += 1;
        Some(card)
    }

    pub fn undrawn(&self) -> usize {
        self.cards.len() - self.next_index
    }

    pub fn len(&self) -> usize {
        self.cards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cards.is_empty()
    }

    pub fn next_index(&self) -> usize {
        self.next_index
    }

    pub fn shuffle_seed(&self) -> u64 {
        self.shuffle_seed
    }

    /// Cards not yet drawn, in draw order.
    pub fn remaining(&self) -> &[Card] {
        &self.cards[self.next_index..]
    }

    pub fn cards(&self) -> &[Card] {
        &self.cards
    }
}

/// Procedurally generated cards (`card-000` ...) with SVG images, for demos and tests.
pub fn synthetic_cards(count: usize) -> Vec<Card> {
    (0..count)
        .map(|i| Card::new(format!("card-{i:03}"), format!("card-{i:03}.svg")))
        .collect()
}

/// Write a synthetic deck directory: one SVG per card plus `index.csv`.
pub fn write_synthetic_deck(dir: &Path, count: usize, seed: u64) -> io::Result<Manifest> {
    fs::create_dir_all(dir)?;
    let cards = synthetic_cards(count);
    let mut index = String::from("id,image_ref\n");
    for (i, card) in cards.iter().enumerate() {
        let mut rng = GameRng::from_seed(crate::rng::derive_seed(seed, "deck-art", i as u64));
        fs::write(dir.join(&card.image_ref), synthetic_svg(&mut rng, card.id.as_str()))?;
        index.push_str(&format!("{},{}\n", card.id, card.image_ref));
    }
    fs::write(dir.join(MANIFEST_INDEX), index)?;
    Ok(Manifest {
        root: dir.to_path_buf(),
        cards,
    })
}

fn synthetic_svg(rng: &mut GameRng, label: &str) -> String {
    const PALETTE: [&str; 8] = [
        "#2b3a67", "#496a81", "#66999b", "#b3af8f", "#ffc482", "#e07a5f", "#81b29a", "#3d405b",
    ];
    let bg = PALETTE[rng.below(PALETTE.len())];
    let mut body = String::new();
    for _ in 0..(3 + rng.below(5)) {
        let color = PALETTE[rng.below(PALETTE.len())];
        let (cx, cy, r) = (20 + rng.below(160), 20 + rng.below(260), 10 + rng.below(50));
        if rng.below(2) == 0 {
            body.push_str(&format!(
                r#"<circle cx="{cx}" cy="{cy}" r="{r}" fill="{color}" opacity="0.8"/>"#
            ));
        } else {
            body.push_str(&format!(
                r#"<rect x="{cx}" y="{cy}" width="{w}" height="{h}" fill="{color}" opacity="0.7"/>"#,
                w = r * 2,
                h = r,
            ));
        }
    }
    format!(
        r##"<svg xmlns="http://www.w3.org/2000/svg" width="200" height="300" viewBox="0 0 200 300"><rect width="200" height="300" fill="{bg}"/>{body}<text x="10" y="290" font-size="12" fill="#fff">{label}</text></svg>
"##
    )
}
