//! Post-hoc statistics over game logs.

mod agreement;
mod captions;
mod labels;
mod similarity;

use thiserror::Error;

pub use agreement::{agreement_matrix, AgreementMatrix};
pub use captions::{caption_stats, caption_stats_csv, caption_stats_table, summarize, token_count, CaptionStats, Grouping};
pub use labels::{label_distribution, selection_accuracy, Category, Judgment, LabelSet, RationaleLabel, Target};
pub use similarity::{
    caption_digest, caption_image_score, clipscore_by_player, FileProvider, HttpProvider, MockProvider,
    PlayerClipScore, ProviderConfig, ProviderError, SimilarityProvider, CLIPSCORE_WEIGHT,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("no logs to analyze")]
    NoLogs,
    #[error("no captions in the selected logs")]
    NoCaptions,
    #[error("label set is empty")]
    EmptyLabels,
    #[error("no selection judgments")]
    NoJudgments,
    #[error("label file: {0}")]
    Labels(String),
}
