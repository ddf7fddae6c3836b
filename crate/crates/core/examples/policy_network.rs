//! Flat parameter vectors mapped onto an MLP and a GRU.

use evobench::networks::{Activation, GruSpec, Head, MlpSpec};
use evobench::RngStream;

fn main() -> evobench::Result<()> {
    let mlp = MlpSpec::new(vec![4, 32, 32, 2], Activation::Tanh, Head::Argmax)?;
    println!("mlp {:?}: {} parameters", mlp.sizes, mlp.total_dim());
    for t in &mlp.layout().tensors {
        println!("  {:<4} {:?}", t.name, t.shape);
    }
    let params: Vec<f64> = RngStream::new(0).normal_vec(mlp.total_dim()).iter().map(|v| 0.1 * v).collect();
    println!("action for obs [0.1, 0, -0.2, 0.3]: {:?}", mlp.forward(&params, &[0.1, 0.0, -0.2, 0.3])?);

    let gru = GruSpec::new(2, 8)?;
    let params: Vec<f64> = RngStream::new(1).normal_vec(gru.total_dim()).iter().map(|v| 0.3 * v).collect();
    let seq: Vec<Vec<f64>> = (0..10).map(|t| vec![0.1 * t as f64, (t == 3) as u8 as f64]).collect();
    println!("gru with {} parameters reads 10 steps -> {:.4}", gru.total_dim(), gru.forward(&params, &seq)?);
    Ok(())
}
