//! Compares the antithetic finite-difference estimate with the analytic
//! gradient of a quadratic.

use evobench::strategies::fd_gradient;
use evobench::RngStream;

fn main() {
    let d = 10;
    let sigma = vec![0.05; d];
    let x: Vec<f64> = (0..d).map(|i| 1.0 - 0.2 * i as f64).collect();
    let a: Vec<f64> = (0..d).map(|i| 1.0 + i as f64).collect();
    let f = |p: &[f64]| p.iter().zip(&a).map(|(v, ai)| ai * v * v).sum::<f64>();
    let exact: Vec<f64> = x.iter().zip(&a).map(|(v, ai)| 2.0 * ai * v).collect();

    let root = RngStream::new(1);
    for pairs in [10usize, 1_000, 50_000] {
        let mut eps = Vec::with_capacity(2 * pairs);
        for k in 0..pairs {
            let e = root.split(pairs as u64).split(k as u64).normal_vec(d);
            eps.push(e.iter().map(|v| -v).collect::<Vec<_>>());
            eps.push(e);
        }
        let values: Vec<f64> = eps
            .iter()
            .map(|e| f(&x.iter().zip(e).map(|(xi, ei)| xi + 0.05 * ei).collect::<Vec<_>>()))
            .collect();
        let refs: Vec<&[f64]> = eps.iter().map(Vec::as_slice).collect();
        let g = fd_gradient(&values, &refs, &sigma);
        let err: f64 = g.iter().zip(&exact).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = exact.iter().map(|v| v * v).sum::<f64>().sqrt();
        println!("N = {:>6}: relative error {:.4}", 2 * pairs, err / norm);
    }
}
