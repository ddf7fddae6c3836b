//! Applies every fitness transformation to the same population.

use evobench::shaping::{centered_ranks, range_norm, softmax_utility, z_score, RangeMode};

fn main() -> evobench::Result<()> {
    let f = [0.1, 0.5, 0.3, 0.2];
    println!("raw             {f:?}");
    println!("centered ranks  {:?}", centered_ranks(&f)?);
    println!("z-score         {:?}", z_score(&f)?);
    println!("range (intended){:?}", range_norm(&f, RangeMode::Intended)?);
    println!("range (literal) {:?}", range_norm(&f, RangeMode::Literal)?);
    println!("softmax beta=20 {:?}", softmax_utility(&f, 20.0)?);
    Ok(())
}
