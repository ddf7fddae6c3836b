//! Trains an MLP policy on the built-in cart-pole with OpenAI-ES.

use evobench::evaluator::{run_configs, RunConfig};
use evobench::tasks::{CartPoleConfig, TaskKind};
use evobench::{StrategyConfig, StrategyKind, TaskConfig};

fn main() -> evobench::Result<()> {
    let task = TaskConfig::new(TaskKind::CartPole(CartPoleConfig {
        hidden: vec![16],
        ..CartPoleConfig::default()
    }));
    let run = RunConfig {
        generations: 30,
        eval_every: 5,
        ..RunConfig::default()
    };
    let r = run_configs(&StrategyConfig::default_for(StrategyKind::OpenaiEs), &task, 64, &run)?;
    for (g, m) in r.eval_points() {
        println!("generation {g:>3}: mean return over evaluation episodes {m:.1}");
    }
    Ok(())
}
