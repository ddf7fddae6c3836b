//! Multi-seed scores of several optimizers on two tasks, aggregated into
//! per-task leaderboards and a normalized cross-task ranking.

use std::collections::BTreeMap;

use evobench::evaluator::RunConfig;
use evobench::protocol::{multi_seed_eval, Problem};
use evobench::report::{normalize_and_aggregate, render, Format, Leaderboard, ScoreRow, Stat};
use evobench::{StrategyConfig, StrategyKind, TaskConfig};

fn main() -> evobench::Result<()> {
    let run = RunConfig {
        generations: 100,
        eval_every: 0,
        ..RunConfig::default()
    };
    let mut rows = Vec::new();
    for task in ["sphere:10", "rosenbrock:10"] {
        for kind in [StrategyKind::OpenaiEs, StrategyKind::Snes, StrategyKind::GaussianGa] {
            let p = Problem::new(StrategyConfig::default_for(kind), task.parse::<TaskConfig>()?, 32, run.clone());
            let s = multi_seed_eval(&p, &BTreeMap::new(), 3)?;
            rows.extend(s.scores.iter().enumerate().map(|(seed, score)| ScoreRow {
                strategy: kind.name().into(),
                task: task.into(),
                seed: seed as u64,
                score: *score,
            }));
        }
    }
    let boards = Leaderboard::from_scores(&rows)?;
    for b in &boards {
        println!("{}", b.task);
        for r in &b.rows {
            println!("  {:<12} {:>12.4} ± {:.4}", r.strategy, r.mean, r.stderr);
        }
    }
    for (s, v) in normalize_and_aggregate(&boards, Stat::Median)?.ranking {
        println!("{s:<12} normalized median {v:.3}");
    }
    print!("{}", String::from_utf8_lossy(&render(&rows[..3], Format::Csv, "example")?));
    Ok(())
}
