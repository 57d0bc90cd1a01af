use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::deck::Card;
use crate::ids::{CardId, PlayerId};
use crate::logstore::GameLog;

/// CLIPScore convention: `w * max(cos, 0)` with `w = 2.5`.
pub const CLIPSCORE_WEIGHT: f64 = 2.5;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("similarity provider unavailable: {0}")]
    ProviderUnavailable(String),
    #[error("no similarity for card {card} and caption digest {digest}")]
    Missing { card: CardId, digest: String },
    #[error("provider returned cosine {0}, outside [-1, 1]")]
    OutOfRange(f64),
    #[error("provider config: {0}")]
    Config(String),
}

/// Scores how well a caption describes a card's image, as a cosine in [-1, 1].
pub trait SimilarityProvider: Send + Sync {
    fn cosine(&self, card: &Card, caption: &str) -> Result<f64, ProviderError>;
}

/// `max(0, cosine) * 2.5`.
pub fn caption_image_score(
    provider: &dyn SimilarityProvider,
    card: &Card,
    caption: &str,
) -> Result<f64, ProviderError> {
    let cos = provider.cosine(card, caption)?;
    if !(-1.0..=1.0).contains(&cos) {
        return Err(ProviderError::OutOfRange(cos));
    }
    Ok(CLIPSCORE_WEIGHT * cos.max(0.0))
}

/// Key used by similarity files: hex SHA-256 of the trimmed caption.
pub fn caption_digest(caption: &str) -> String {
    hex::encode(Sha256::digest(caption.trim().as_bytes()))
}

/// Precomputed similarities from a CSV file with columns
/// `card_id,caption_sha256,cosine`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FileProvider {
    entries: BTreeMap<(CardId, String), f64>,
}

impl FileProvider {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ProviderError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ProviderError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut entries = BTreeMap::new();
        for (i, row) in reader.records().enumerate() {
            let row = row.map_err(|e| ProviderError::Config(e.to_string()))?;
            if row.len() != 3 {
                return Err(ProviderError::Config(format!("row {}: expected 3 fields", i + 2)));
            }
            let cos: f64 = row[2]
                .parse()
                .map_err(|e| ProviderError::Config(format!("row {}: {e}", i + 2)))?;
            if !(-1.0..=1.0).contains(&cos) {
                return Err(ProviderError::OutOfRange(cos));
            }
            entries.insert((CardId::from(&row[0]), row[1].to_ascii_lowercase()), cos);
        }
        Ok(Self { entries })
    }

    pub fn insert(&mut self, card: &CardId, caption: &str, cosine: f64) {
        self.entries.insert((card.clone(), caption_digest(caption)), cosine);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("card_id,caption_sha256,cosine\n");
        for ((card, digest), cos) in &self.entries {
            out.push_str(&format!("{card},{digest},{cos}\n"));
        }
        out
    }
}

impl SimilarityProvider for FileProvider {
    fn cosine(&self, card: &Card, caption: &str) -> Result<f64, ProviderError> {
        let digest = caption_digest(caption);
        self.entries
            .get(&(card.id.clone(), digest.clone()))
            .copied()
            .ok_or(ProviderError::Missing {
                card: card.id.clone(),
                digest,
            })
    }
}

#[derive(Debug, Serialize)]
struct SimilarityRequest<'a> {
    card_id: &'a str,
    image_ref: &'a str,
    caption: &'a str,
}

#[derive(Debug, Deserialize)]
struct SimilarityResponse {
    cosine: f64,
}

/// Remote scorer: `POST <url>` with `{"card_id","image_ref","caption"}`,
/// answered by `{"cosine": <f64>}`.
pub struct HttpProvider {
    client: reqwest::blocking::Client,
    url: String,
}

impl HttpProvider {
    pub fn new(url: impl Into<String>, timeout: Duration) -> Result<Self, ProviderError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok(Self {
            client,
            url: url.into(),
        })
    }
}

impl SimilarityProvider for HttpProvider {
    fn cosine(&self, card: &Card, caption: &str) -> Result<f64, ProviderError> {
        let body = SimilarityRequest {
            card_id: card.id.as_str(),
            image_ref: &card.image_ref,
            caption,
        };
        let response = self
            .client
            .post(&self.url)
            .json(&body)
            .send()
            .and_then(|r| r.error_for_status())
            .map_err(|e| ProviderError::ProviderUnavailable(e.to_string()))?;
        let parsed: SimilarityResponse = response
            .json()
            .map_err(|e| ProviderError::ProviderUnavailable(format!("bad response: {e}")))?;
        Ok(parsed.cosine)
    }
}

/// Fixed answers for tests: per-card cosines with a default.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MockProvider {
    pub default: f64,
    pub by_card: BTreeMap<CardId, f64>,
}

impl MockProvider {
    pub fn constant(cosine: f64) -> Self {
        Self {
            default: cosine,
            by_card: BTreeMap::new(),
        }
    }
}

impl SimilarityProvider for MockProvider {
    fn cosine(&self, card: &Card, _caption: &str) -> Result<f64, ProviderError> {
        Ok(self.by_card.get(&card.id).copied().unwrap_or(self.default))
    }
}

/// Provider config file (TOML): `kind = "file"` with `path`, or
/// `kind = "http"` with `url` and optional `timeout_secs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProviderConfig {
    File {
        path: PathBuf,
    },
    Http {
        url: String,
        #[serde(default = "default_timeout")]
        timeout_secs: u64,
    },
}

fn default_timeout() -> u64 {
    30
}

impl ProviderConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<(Self, PathBuf), ProviderError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| ProviderError::Config(format!("{}: {e}", path.display())))?;
        let config = toml::from_str(&text).map_err(|e| ProviderError::Config(e.to_string()))?;
        Ok((config, path.parent().map(Path::to_path_buf).unwrap_or_default()))
    }

    pub fn build(&self, base_dir: &Path) -> Result<Box<dyn SimilarityProvider>, ProviderError> {
        match self {
            Self::File { path } => Ok(Box::new(FileProvider::load(base_dir.join(path))?)),
            Self::Http { url, timeout_secs } => Ok(Box::new(HttpProvider::new(
                url.clone(),
                Duration::from_secs(*timeout_secs),
            )?)),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlayerClipScore {
    pub player_id: PlayerId,
    pub captions: usize,
    pub mean_score: f64,
}

/// Mean caption score per storyteller over every round in `logs`.
pub fn clipscore_by_player(
    logs: &[GameLog],
    provider: &dyn SimilarityProvider,
) -> Result<Vec<PlayerClipScore>, ProviderError> {
    let mut sums: BTreeMap<PlayerId, (f64, usize)> = BTreeMap::new();
    for log in logs {
        let cards: BTreeMap<&CardId, &Card> = log.header.manifest.iter().map(|c| (&c.id, c)).collect();
        for round in &log.rounds {
            let card = cards.get(&round.story_card_id).ok_or_else(|| {
                ProviderError::Config(format!("story card {} missing from log manifest", round.story_card_id))
            })?;
            let score = caption_image_score(provider, card, &round.caption)?;
            let entry = sums.entry(round.storyteller_id.clone()).or_default();
            entry.0 += score;
            entry.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(player_id, (sum, n))| PlayerClipScore {
            player_id,
            captions: n,
            mean_score: sum / n as f64,
        })
        .collect())
}
