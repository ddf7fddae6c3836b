//! Sweeps mean decay and the initial learning rate of OpenAI-ES.

use evobench::evaluator::RunConfig;
use evobench::protocol::{grid_sweep, Axis, Problem};
use evobench::{StrategyConfig, StrategyKind, TaskConfig};

fn main() -> evobench::Result<()> {
    let run = RunConfig {
        generations: 150,
        eval_every: 0,
        ..RunConfig::default()
    };
    let problem = Problem::new(
        StrategyConfig::default_for(StrategyKind::OpenaiEs),
        "sphere:20".parse::<TaskConfig>()?,
        32,
        run,
    );
    let axes = [
        Axis::new("mean_decay", [0.0, 1e-3, 1e-2, 1e-1].map(Into::into)),
        Axis::new("alpha0", [0.01, 0.05].map(Into::into)),
    ];
    for cell in grid_sweep(&axes, &problem, 3)? {
        let s = cell.summary.expect("cell ran");
        println!("{:?}: median {:.4}", cell.assignment, s.median);
    }
    Ok(())
}
