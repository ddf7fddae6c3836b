//! Evolves a small GRU on the two-marker addition problem.

use evobench::evaluator::{run_configs, RunConfig};
use evobench::tasks::{AdditionConfig, TaskKind};
use evobench::{StrategyConfig, StrategyKind, TaskConfig};

fn main() -> evobench::Result<()> {
    let task = TaskConfig::new(TaskKind::Addition(AdditionConfig {
        hidden: 4,
        batch: 16,
        ..AdditionConfig::short()
    }));
    let run = RunConfig {
        generations: 100,
        eval_every: 20,
        ..RunConfig::default()
    };
    let r = run_configs(&StrategyConfig::default_for(StrategyKind::OpenaiEs), &task, 32, &run)?;
    println!("constant predictor MAE = 1/3");
    for (g, m) in r.eval_points() {
        println!("generation {g:>3}: test MAE {:.4}", -m);
    }
    Ok(())
}
