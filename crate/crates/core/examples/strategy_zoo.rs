//! Runs every optimizer with its default settings on a 10-d sphere.

use evobench::evaluator::{run_configs, RunConfig};
use evobench::{StrategyConfig, StrategyKind, TaskConfig};

fn main() -> evobench::Result<()> {
    let task: TaskConfig = "sphere:10".parse()?;
    let run = RunConfig {
        generations: 500,
        eval_every: 0,
        ..RunConfig::default()
    };
    for kind in StrategyKind::ALL {
        let r = run_configs(&StrategyConfig::default_for(kind), &task, 32, &run)?;
        println!("{:<12} f = {:.3e}", kind.name(), -r.final_metric);
    }
    Ok(())
}
