//! Final score as a function of population size and model size.

use evobench::evaluator::RunConfig;
use evobench::protocol::{scaling_sweep, Problem};
use evobench::{StrategyConfig, StrategyKind, TaskConfig};

fn main() -> evobench::Result<()> {
    let problem = Problem::new(
        StrategyConfig::default_for(StrategyKind::OpenaiEs),
        "sphere:10".parse::<TaskConfig>()?,
        16,
        RunConfig {
            eval_every: 0,
            ..RunConfig::default()
        },
    );
    for c in scaling_sweep(&problem, &[8, 32, 128], &[5, 20], 100, 3)? {
        let s = c.summary.expect("cell ran");
        println!("pop {:>3}, d = {:>2}: median {:.4e}", c.popsize, c.dim, -s.median);
    }
    Ok(())
}
