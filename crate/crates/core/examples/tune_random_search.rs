//! Budgeted random search with refinement, followed by multi-seed
//! re-evaluation of the winner.

use evobench::evaluator::RunConfig;
use evobench::protocol::{best_so_far, multi_seed_eval, random_search, Budget, Problem, SearchSpace};
use evobench::{StrategyConfig, StrategyKind, TaskConfig};

fn main() -> evobench::Result<()> {
    let kind = StrategyKind::OpenaiEs;
    let run = RunConfig {
        generations: 60,
        eval_every: 0,
        ..RunConfig::default()
    };
    let problem = Problem::new(StrategyConfig::default_for(kind), "rastrigin:5".parse::<TaskConfig>()?, 16, run);
    let res = random_search(&SearchSpace::default_for(kind), &problem, Budget::Large, 7)?;
    println!("best-so-far over {} trials:", res.trials.len());
    for (i, b) in best_so_far(&res.trials).iter().enumerate().step_by(5) {
        println!("  trial {:>2}: {b:.4}", i + 1);
    }
    println!("refined space: {:?}", res.refined.map(|s| s.params));
    let summary = multi_seed_eval(&problem, &res.best.config, 5)?;
    println!("best config {:?}", res.best.config);
    println!("over 5 seeds: mean {:.4} ± {:.4}", summary.mean, summary.stderr);
    Ok(())
}
