//! Writes a synthetic IDX image dataset and trains an MLP classifier on it.
//! Point `data_dir` at real MNIST files to use those instead.

use evobench::evaluator::{run_configs, RunConfig};
use evobench::tasks::classify::write_synthetic;
use evobench::tasks::TaskKind;
use evobench::{StrategyConfig, StrategyKind, TaskConfig};

fn main() -> evobench::Result<()> {
    let dir = std::env::temp_dir().join("evobench-synthetic-idx");
    let mut cfg = write_synthetic(&dir, 1000, 300, 0)?;
    cfg.hidden = vec![8];
    cfg.batch = 64;
    let task = TaskConfig::new(TaskKind::Classification(cfg));
    let run = RunConfig {
        generations: 60,
        eval_every: 20,
        ..RunConfig::default()
    };
    let r = run_configs(&StrategyConfig::default_for(StrategyKind::Snes), &task, 32, &run)?;
    for (g, m) in r.eval_points() {
        println!("generation {g:>3}: test accuracy {m:.3}");
    }
    Ok(())
}
