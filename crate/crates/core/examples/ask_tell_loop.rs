//! Drives an optimizer by hand through the ask-tell interface.

use evobench::{Population, RngStream, StrategyConfig, StrategyKind};

fn main() -> evobench::Result<()> {
    let dim = 8;
    let strategy = StrategyConfig::default_for(StrategyKind::Snes).build(dim, 16)?;
    let root = RngStream::new(42);
    let mut state = strategy.initialize(&vec![3.0; dim], &root.split(0))?;

    for g in 0..300 {
        let candidates = strategy.ask(&state, &root.split(1).split(g), 16)?;
        // Maximize the negated sphere.
        let fitness = candidates
            .iter()
            .map(|c| -c.params.iter().map(|x| x * x).sum::<f64>())
            .collect();
        state = strategy.tell(&state, &Population::new(candidates, fitness)?)?;
        if g % 50 == 0 {
            let best = state.best_so_far.as_ref().map(|e| e.fitness).unwrap_or(f64::NAN);
            println!("generation {g:>3}: best so far {best:.6}");
        }
    }
    let mean = strategy.incumbent(&state);
    println!("final mean norm {:.2e}", mean.iter().map(|x| x * x).sum::<f64>().sqrt());
    Ok(())
}
