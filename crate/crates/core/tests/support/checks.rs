//! Each check returns a one-line detail on success and the first failure
//! otherwise, so the acceptance runner and the regular tests share them.

use std::time::{Duration, Instant};

use dixit_core::agents::RandomAgent;
use dixit_core::analysis::{agreement_matrix, caption_stats, Grouping};
use dixit_core::deck::synthetic_cards;
use dixit_core::engine::{EndReason, GameConfig, PoolEntry, RoundRecord, VoteRecord};
use dixit_core::ids::{CardId, PlayerId};
use dixit_core::logstore::{self, replay, NullSink};
use dixit_core::prompts::{parse_reply, render, Bindings, PromptName};
use dixit_core::rng::GameRng;
use dixit_core::runner::{play_game, GameSetup};
use dixit_core::tournament::{rank_by, rank_values, spearman_rho, Metric, MetricsReport};

use super::published::{baseline_separation, human_games, model_report, model_table};
use super::replies::{bad_replies, good_replies};
use super::{analysis_fixture, check_scoring_oracle, core_dir, golden_log_path, play_golden, roster, AllHit};

pub type Check = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

pub fn scoring(limit: Duration) -> Check {
    let started = Instant::now();
    let mut cases = 0;
    for n in 3..=6 {
        cases += check_scoring_oracle(n)?;
    }
    let elapsed = started.elapsed();
    ensure(elapsed < limit, || format!("{cases} cases took {elapsed:?}"))?;
    Ok(format!("{cases} vote assignments for n=3..6 in {:.2}s", elapsed.as_secs_f64()))
}

pub fn golden_game() -> Check {
    let first = play_golden().to_text();
    ensure(first == play_golden().to_text(), || "two runs differ".into())?;
    let fixture = std::fs::read_to_string(golden_log_path()).map_err(|e| e.to_string())?;
    ensure(first == fixture, || "run differs from the checked-in golden log".into())?;
    let log = logstore::parse_log(&fixture).map_err(|e| e.to_string())?;
    let report = replay(&log).map_err(|e| format!("replay: {e}"))?;
    ensure(report.rounds_checked as usize == log.rounds.len(), || "replay skipped rounds".into())?;
    Ok(format!("{} bytes identical, {} rounds replayed", first.len(), report.rounds_checked))
}

/// Seeded random games over assorted sizes: the game must stop in exactly
/// the round where some score reaches the threshold or fewer than `n` cards
/// remain undrawn. Then a 100-card, 4-player game nobody can win lasts 19 rounds.
pub fn endgame(samples: usize, seed: u64) -> Check {
    let mut rng = GameRng::from_seed(seed);
    let mut rounds_seen = 0;
    for s in 0..samples {
        let n = 3 + rng.below(4);
        let hand = 3 + rng.below(4);
        // half the games keep the default threshold
        let threshold = if s % 2 == 0 { 30 } else { 4 + rng.below(36) as u32 };
        let game_seed = rng.next_u64();
        let config = GameConfig {
            num_players: n,
            hand_size: hand,
            win_threshold: threshold,
            shuffle_seed: game_seed,
            pool_seed: game_seed.rotate_left(13),
            ..GameConfig::default()
        };
        let m = config.min_deck_size() + rng.below(40);
        let setup = GameSetup::new("endgame", config, synthetic_cards(m), roster(n));
        let mut agents: Vec<RandomAgent> = (0..n as u64).map(|i| RandomAgent::new(game_seed ^ i)).collect();
        let log = play_game(&setup, &mut agents, &mut NullSink).map_err(|e| e.to_string())?;
        let footer = log.footer.as_ref().ok_or("game left unfinished")?;
        for (i, round) in log.rounds.iter().enumerate() {
            let undrawn = m - n * hand - n * (i + 1);
            let hit = round.scores_after.values().any(|&v| v >= threshold);
            let over = hit || undrawn < n;
            let last = i + 1 == log.rounds.len();
            ensure(over == last, || {
                format!("sample {s}: n={n} m={m} round {i} undrawn {undrawn} hit {hit} but last={last}")
            })?;
            if last {
                let want = if hit { EndReason::Threshold } else { EndReason::DeckEmpty };
                ensure(footer.end_reason == want, || format!("sample {s}: end reason {:?}", footer.end_reason))?;
            }
        }
        rounds_seen += log.rounds.len();
    }

    let config = GameConfig {
        win_threshold: 1000,
        ..GameConfig::default()
    };
    let setup = GameSetup::new("long", config, synthetic_cards(100), roster(4));
    let log = play_game(&setup, &mut AllHit::team(4), &mut NullSink).map_err(|e| e.to_string())?;
    ensure(log.rounds.len() == 19, || format!("m=100 n=4 lasted {} rounds", log.rounds.len()))?;
    Ok(format!("{samples} random games ({rounds_seen} rounds) stop on time; m=100 n=4 lasts 19 rounds"))
}

pub fn baseline(games: usize, seed: u64, need: usize, limit: Duration) -> Check {
    let started = Instant::now();
    let s = baseline_separation(games, seed);
    let elapsed = started.elapsed();
    ensure(s.failed == 0, || format!("{} games failed", s.failed))?;
    ensure(s.random_lowest >= need, || format!("random strictly lowest in {}/{games}", s.random_lowest))?;
    ensure(elapsed < limit, || format!("took {elapsed:?}"))?;
    Ok(format!(
        "random strictly lowest in {}/{games} games, {:.1}s",
        s.random_lowest,
        elapsed.as_secs_f64()
    ))
}

pub fn metrics() -> Check {
    let humans = MetricsReport::from_results(&human_games(), 0).map_err(|e| e.to_string())?;
    let first = humans.player(&PlayerId::from("Player 1")).ok_or("Player 1 missing")?;
    ensure((first.avg_points - 30.33).abs() <= 0.005, || format!("avg(31,31,29) = {}", first.avg_points))?;

    let ranked = rank_by(&model_report(), Metric::AvgPoints);
    let table = model_table();
    for (row, (player, rank)) in table.iter().zip(&ranked) {
        ensure(player.as_str() == row.name && *rank == row.dixit_rank, || {
            format!("{} ranked {rank}, expected {} at {}", player, row.name, row.dixit_rank)
        })?;
    }
    ensure(ranked.len() == table.len(), || "rank list length".into())?;

    let listed: Vec<_> = table.iter().filter(|r| r.openvlm_rank.is_some()).collect();
    let dixit = rank_values(&listed.iter().map(|r| r.avg_points).collect::<Vec<_>>(), Metric::AvgPoints);
    let openvlm: Vec<f64> = listed.iter().filter_map(|r| r.openvlm_rank).collect();
    let arena: Vec<f64> = listed.iter().filter_map(|r| r.chatarena_rank).collect();
    let rho_o = spearman_rho(&dixit, &openvlm).map_err(|e| e.to_string())?;
    let rho_a = spearman_rho(&dixit, &arena).map_err(|e| e.to_string())?;
    ensure(rho_o == 1.0 && rho_a == 1.0, || format!("spearman {rho_o} / {rho_a}"))?;
    Ok(format!(
        "avg {:.4}, ranks 1..{}, spearman {rho_o} and {rho_a}",
        first.avg_points,
        ranked.len()
    ))
}

pub fn prompts() -> Check {
    let dir = core_dir().join("tests/golden");
    let bindings = Bindings::new()
        .with_rules()
        .with("caption", "Freedom's key")
        .with("valid_choices", "{0,1,2,3,4,5}");
    for name in PromptName::ALL {
        let rendered = render(name, &bindings).map_err(|e| e.to_string())?;
        let golden = std::fs::read_to_string(dir.join(name.file_name())).map_err(|e| e.to_string())?;
        ensure(rendered == golden, || format!("{name:?} differs from its golden file"))?;
    }
    let good = good_replies(1, 100);
    for case in &good {
        match parse_reply(&case.raw, case.kind, &case.valid) {
            Ok(parsed) if parsed == case.expected => {}
            other => return Err(format!("{:?} gave {other:?}", case.raw)),
        }
    }
    let bad = bad_replies(2, 100);
    for case in &bad {
        match parse_reply(&case.raw, case.kind, &case.valid) {
            Err(e) if e.code() == case.expected_code => {}
            Err(e) => return Err(format!("{:?}: {} instead of {}", case.raw, e.code(), case.expected_code)),
            Ok(r) => return Err(format!("{:?} accepted as {r:?}", case.raw)),
        }
    }
    Ok(format!(
        "{} golden files exact, {} good and {} bad replies",
        PromptName::ALL.len(),
        good.len(),
        bad.len()
    ))
}

/// Rounds with `voters` voters (`v0`, `v1`, ...) where each sits out a
/// round with probability 1/4 and otherwise picks any pool card.
pub fn random_agreement_rounds(rng: &mut GameRng, voters: usize) -> Vec<RoundRecord> {
    let teller = PlayerId::from("teller");
    (0..1 + rng.below(12))
        .map(|r| {
            let cards: Vec<CardId> = (0..voters + 1).map(|c| CardId::new(format!("r{r}c{c}"))).collect();
            RoundRecord {
                round_index: r as u32,
                storyteller_id: teller.clone(),
                story_card_id: cards[0].clone(),
                caption: "c".into(),
                pool: cards
                    .iter()
                    .enumerate()
                    .map(|(i, c)| PoolEntry {
                        card_id: c.clone(),
                        owner_id: teller.clone(),
                        pool_position: i,
                    })
                    .collect(),
                votes: (0..voters)
                    .filter_map(|v| {
                        let vote = VoteRecord {
                            voter_id: PlayerId::new(format!("v{v}")),
                            chosen_card_id: cards[rng.below(cards.len())].clone(),
                        };
                        (rng.below(4) != 0).then_some(vote)
                    })
                    .collect(),
                score_deltas: Default::default(),
                scores_after: Default::default(),
                rationales: Vec::new(),
            }
        })
        .collect()
}

pub fn random_matrices(count: usize, seed: u64) -> Check {
    let mut rng = GameRng::from_seed(seed);
    for k in 0..count {
        let voters = 2 + rng.below(5);
        let rounds = random_agreement_rounds(&mut rng, voters);
        let roster: Vec<PlayerId> = (0..voters).map(|v| PlayerId::new(format!("v{v}"))).collect();
        let m = agreement_matrix(&rounds, &roster);
        ensure(m.is_symmetric(), || format!("matrix {k} is not symmetric"))?;
        for i in 0..voters {
            ensure(m.values[i][i] == Some(1.0), || format!("matrix {k} diagonal {i}"))?;
            for j in 0..voters {
                ensure(m.agreements[i][j] <= m.counts[i][j], || format!("matrix {k} ({i},{j}) overcounts"))?;
                if let Some(v) = m.values[i][j] {
                    ensure((0.0..=1.0).contains(&v), || format!("matrix {k} ({i},{j}) = {v}"))?;
                }
            }
        }
    }
    Ok(format!("{count} random matrices symmetric with unit diagonal"))
}

pub fn analytics() -> Check {
    let log = analysis_fixture();
    let m = agreement_matrix(&log.rounds, &[]);
    let pid = PlayerId::from;
    for (a, b, want) in [("a", "b", 0.6), ("a", "c", 0.6), ("b", "c", 0.2)] {
        let got = m.get(&pid(a), &pid(b));
        ensure(got == Some(want), || format!("agreement {a}/{b} = {got:?}, expected {want}"))?;
    }
    let stats = caption_stats(std::slice::from_ref(&log), Grouping::All).map_err(|e| e.to_string())?;
    ensure(stats[0].mean_tokens == 2.4 && stats[0].median_tokens == 2.0, || {
        format!("caption mean {} median {}", stats[0].mean_tokens, stats[0].median_tokens)
    })?;
    let matrices = random_matrices(1000, 77)?;
    Ok(format!("fixture agreement and caption lengths exact; {matrices}"))
}
