//! Population size against Monte-Carlo evaluations per member at a fixed
//! number of evaluations per generation, with and without fitness noise.

use evobench::evaluator::{budget_pairs, resource_sweep, RunConfig};
use evobench::protocol::median;
use evobench::{StrategyConfig, StrategyKind, TaskConfig};

fn main() -> evobench::Result<()> {
    let pairs = budget_pairs(64, &[1, 4, 16])?;
    let run = RunConfig {
        generations: 100,
        eval_every: 0,
        ..RunConfig::default()
    };
    let cells = resource_sweep(
        &StrategyConfig::default_for(StrategyKind::OpenaiEs),
        &"sphere:10".parse::<TaskConfig>()?,
        &pairs,
        &[0.0, 0.5],
        &[0, 1, 2],
        &run,
    )?;
    for &(p, e) in &pairs {
        for noise in [0.0, 0.5] {
            let scores: Vec<f64> = cells
                .iter()
                .filter(|c| c.popsize == p && c.noise_std == noise)
                .map(|c| c.report.final_metric)
                .collect();
            println!("pop {p:>3} x {e:>2} evals, noise {noise}: median {:.4}", median(&scores));
        }
    }
    Ok(())
}
