//! Shared plumbing for the `tournament`, `replay` and `analyze` binaries.
//! Every command renders to a `String` so tests can call it directly.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use dixit_core::analysis::{
    agreement_matrix, caption_stats, caption_stats_csv, caption_stats_table, clipscore_by_player, label_distribution,
    selection_accuracy, AnalysisError, Category, Grouping, LabelSet, ProviderConfig, ProviderError,
};
use dixit_core::ids::PlayerId;
use dixit_core::logstore::{self, GameLog, LogError};
use dixit_core::tournament::{run_tournament, GameResult, MetricsReport, TournamentError, TournamentSpec};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Tournament(#[from] TournamentError),
    #[error("{path}: {source}")]
    Log {
        path: PathBuf,
        #[source]
        source: LogError,
    },
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("no readable logs in {0}")]
    NoLogs(PathBuf),
}

pub type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GroupBy {
    Player,
    Agent,
    All,
}

impl From<GroupBy> for Grouping {
    fn from(g: GroupBy) -> Self {
        match g {
            GroupBy::Player => Grouping::Player,
            GroupBy::Agent => Grouping::Agent,
            GroupBy::All => Grouping::All,
        }
    }
}

pub fn init_tracing() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into());
    tracing_subscriber::fmt().with_env_filter(filter).with_writer(std::io::stderr).init();
}

/// Logs that parsed, plus a note for every file that did not.
pub struct LoadedLogs {
    pub logs: Vec<GameLog>,
    pub skipped: Vec<String>,
}

pub fn load_logs(dir: &Path) -> Result<LoadedLogs> {
    let entries = logstore::load_dir(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut logs = Vec::new();
    let mut skipped = Vec::new();
    for (path, result) in entries {
        match result {
            Ok(log) => logs.push(log),
            Err(e) => skipped.push(format!("{}: {e}", path.display())),
        }
    }
    if logs.is_empty() {
        return Err(CliError::NoLogs(dir.to_path_buf()));
    }
    Ok(LoadedLogs { logs, skipped })
}

fn render_report(report: &MetricsReport, format: Format) -> String {
    match format {
        Format::Table => report.to_table(),
        Format::Csv => report.to_csv(),
    }
}

pub fn tournament_run(spec_path: &Path, out: &Path) -> Result<String> {
    let spec = TournamentSpec::load(spec_path)?;
    let result = run_tournament(&spec, out)?;
    let mut text = render_report(&result.report, Format::Table);
    for failure in result.failures() {
        if let Err(e) = &failure.result {
            text.push_str(&format!("failed: {}: {e}\n", failure.game_id));
        }
    }
    text.push_str(&format!(
        "{} games, {} failed, logs in {}\n",
        result.outcomes.len(),
        result.report.failed_games,
        out.display()
    ));
    Ok(text)
}

/// Metrics over every complete log in `dir`. Unreadable and unfinished
/// logs count as failed games.
pub fn tournament_report(dir: &Path, format: Format) -> Result<(String, Vec<String>)> {
    let loaded = load_logs(dir)?;
    let mut results = Vec::new();
    let mut notes = loaded.skipped;
    for log in &loaded.logs {
        match GameResult::from_log(log) {
            Some(r) => results.push(r),
            None => notes.push(format!("{}: incomplete", log.header.game_id)),
        }
    }
    let report = MetricsReport::from_results(&results, notes.len()).map_err(TournamentError::from)?;
    Ok((render_report(&report, format), notes))
}

pub fn replay_file(path: &Path) -> Result<String> {
    let log_err = |source| CliError::Log {
        path: path.to_path_buf(),
        source,
    };
    let log = logstore::load(path).map_err(log_err)?;
    let report = logstore::replay(&log).map_err(log_err)?;
    let scores: Vec<String> = report.final_scores.iter().map(|(p, s)| format!("{p}={s}")).collect();
    Ok(format!(
        "ok: {} replayed {} rounds without divergence, ended by {:?}, final {}\n",
        report.game_id,
        report.rounds_checked,
        report.end_reason,
        scores.join(" ")
    ))
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory csv");
    for row in rows {
        w.write_record(row).expect("in-memory csv");
    }
    String::from_utf8(w.into_inner().expect("in-memory csv")).expect("csv is utf-8")
}

fn table_text(header: &[&str], rows: Vec<Vec<String>>) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.len());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect();
        padded.join("  ").trim_end().to_owned() + "\n"
    };
    let mut out = line(header.to_vec());
    for row in &rows {
        out.push_str(&line(row.iter().map(String::as_str).collect()));
    }
    out
}

fn rows_text(format: Format, header: &[&str], rows: Vec<Vec<String>>) -> String {
    match format {
        Format::Table => table_text(header, rows),
        Format::Csv => csv_text(header, rows),
    }
}

pub fn analyze_agreement(logs: &[GameLog], voters: &[PlayerId], format: Format) -> String {
    let m = agreement_matrix(logs.iter().flat_map(|l| &l.rounds), voters);
    match format {
        Format::Table => m.to_table(),
        Format::Csv => m.to_csv(),
    }
}

pub fn analyze_captions(logs: &[GameLog], group: GroupBy, format: Format) -> Result<String> {
    let stats = caption_stats(logs, group.into())?;
    Ok(match format {
        Format::Table => caption_stats_table(&stats),
        Format::Csv => caption_stats_csv(&stats),
    })
}

/// Label shares and selection accuracy. Labels naming a game, round or
/// player absent from `logs` are counted in the returned notes.
pub fn analyze_labels(logs: &[GameLog], labels: &LabelSet, format: Format) -> Result<(String, Vec<String>)> {
    let known: BTreeSet<(&str, u32, &PlayerId)> = logs
        .iter()
        .flat_map(|l| {
            l.rounds.iter().flat_map(move |r| {
                l.header
                    .seats
                    .iter()
                    .map(move |s| (l.header.game_id.as_str(), r.round_index, &s.player_id))
            })
        })
        .collect();
    let targets = labels
        .rationales
        .iter()
        .map(|l| &l.target)
        .chain(labels.judgments.iter().map(|j| &j.target));
    let unknown = targets
        .filter(|t| !known.contains(&(t.game.as_str(), t.round, &t.player)))
        .count();
    let notes = if unknown > 0 {
        vec![format!("{unknown} labels refer to rounds not in the logs")]
    } else {
        Vec::new()
    };

    let mut rows = Vec::new();
    if !labels.rationales.is_empty() {
        let dist = label_distribution(&labels.rationales)?;
        for (player, shares) in &dist {
            for category in Category::ALL {
                let share = shares.get(&category).copied().unwrap_or(0.0);
                rows.push(vec![player.to_string(), category.as_str().to_owned(), format!("{share:.4}")]);
            }
        }
    }
    if !labels.judgments.is_empty() {
        let accuracy: BTreeMap<PlayerId, f64> = selection_accuracy(&labels.judgments)?;
        for (player, acc) in &accuracy {
            rows.push(vec![player.to_string(), "selection_accuracy".to_owned(), format!("{acc:.4}")]);
        }
    }
    if rows.is_empty() {
        return Err(AnalysisError::EmptyLabels.into());
    }
    Ok((rows_text(format, &["player", "measure", "value"], rows), notes))
}

pub fn analyze_clipscore(logs: &[GameLog], provider_config: &Path, format: Format) -> Result<String> {
    let (config, base_dir) = ProviderConfig::load(provider_config)?;
    let provider = config.build(&base_dir)?;
    let scores = clipscore_by_player(logs, provider.as_ref())?;
    let rows = scores
        .iter()
        .map(|s| vec![s.player_id.to_string(), s.captions.to_string(), format!("{:.4}", s.mean_score)])
        .collect();
    Ok(rows_text(format, &["player", "captions", "mean_clipscore"], rows))
}

pub fn parse_voters(list: Option<&str>) -> Vec<PlayerId> {
    list.map(|s| s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(PlayerId::from).collect())
        .unwrap_or_default()
}

/// Print notes to stderr and the body to stdout.
pub fn emit(body: &str, notes: &[String]) {
    for note in notes {
        eprintln!("warning: {note}");
    }
    print!("{body}");
}
