//! Sequence addition: a GRU reads `(value, marker)` pairs and predicts the
//! sum of the two marked values.

use std::sync::{Arc, Mutex};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asktell::FitnessDirection;
use crate::error::{Error, Result};
use crate::networks::GruSpec;
use crate::rng::RngStream;

use super::{EvalContext, MetricKind, Outcome, Task, TaskSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AdditionConfig {
    pub seq_len: usize,
    pub hidden: usize,
    pub batch: usize,
    pub eval_batch: usize,
    pub popsize: usize,
    pub generations: usize,
}

impl Default for AdditionConfig {
    fn default() -> Self {
        AdditionConfig {
            seq_len: 150,
            hidden: 32,
            batch: 1024,
            eval_batch: 1024,
            popsize: 128,
            generations: 5000,
        }
    }
}

impl AdditionConfig {
    /// Desk-scale preset: 500 generations, small network and batch.
    pub fn short() -> Self {
        AdditionConfig {
            seq_len: 150,
            hidden: 4,
            batch: 16,
            eval_batch: 512,
            popsize: 128,
            generations: 500,
        }
    }
}

/// One input sequence with its target.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub inputs: Vec<Vec<f64>>,
    pub target: f64,
}

impl Example {
    pub fn from_parts(values: &[f64], markers: &[bool]) -> Result<Self> {
        if values.len() != markers.len() {
            return Err(Error::DimensionMismatch {
                expected: values.len(),
                found: markers.len(),
            });
        }
        let marked = markers.iter().filter(|m| **m).count();
        if marked != 2 {
            return Err(Error::Generator(format!("sequence has {marked} markers, expected 2")));
        }
        let target = values.iter().zip(markers).filter(|(_, m)| **m).map(|(v, _)| v).sum();
        let inputs = values
            .iter()
            .zip(markers)
            .map(|(v, m)| vec![*v, if *m { 1.0 } else { 0.0 }])
            .collect();
        Ok(Example { inputs, target })
    }
}

/// Draws `n` sequences of length `len` from `stream`.
pub fn generate_batch(stream: &RngStream, n: usize, len: usize) -> Result<Vec<Example>> {
    if len < 2 {
        return Err(Error::config("addition sequences need length >= 2"));
    }
    let mut rng = stream.generator();
    (0..n)
        .map(|_| {
            let values: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
            let a = rng.random_range(0..len);
            let mut b = rng.random_range(0..len - 1);
            if b >= a {
                b += 1;
            }
            let mut markers = vec![false; len];
            markers[a] = true;
            markers[b] = true;
            Example::from_parts(&values, &markers)
        })
        .collect()
}

const CACHED_BATCHES: usize = 4;

type BatchCache = Mutex<Vec<(RngStream, Arc<Vec<Example>>)>>;

#[derive(Debug)]
pub struct AdditionTask {
    cfg: AdditionConfig,
    net: GruSpec,
    /// Training batches of recent shared streams; every candidate of a
    /// generation reads the same one.
    cache: BatchCache,
}

impl Clone for AdditionTask {
    fn clone(&self) -> Self {
        AdditionTask {
            cfg: self.cfg.clone(),
            net: self.net.clone(),
            cache: Mutex::default(),
        }
    }
}

impl AdditionTask {
    pub fn new(cfg: AdditionConfig) -> Result<Self> {
        if cfg.batch == 0 || cfg.eval_batch == 0 {
            return Err(Error::config("addition batch sizes must be >= 1"));
        }
        let net = GruSpec::new(2, cfg.hidden)?;
        Ok(AdditionTask {
            cfg,
            net,
            cache: Mutex::default(),
        })
    }

    fn training_batch(&self, shared: &RngStream) -> Result<Arc<Vec<Example>>> {
        let lookup = |c: &Vec<(RngStream, Arc<Vec<Example>>)>| c.iter().find(|(s, _)| s == shared).map(|(_, b)| b.clone());
        if let Some(b) = lookup(&self.cache.lock().expect("batch cache poisoned")) {
            return Ok(b);
        }
        let batch = Arc::new(generate_batch(shared, self.cfg.batch, self.cfg.seq_len)?);
        let mut cache = self.cache.lock().expect("batch cache poisoned");
        if cache.len() >= CACHED_BATCHES {
            cache.remove(0);
        }
        cache.push((shared.clone(), batch.clone()));
        Ok(batch)
    }

    pub fn network(&self) -> &GruSpec {
        &self.net
    }

    pub fn predict(&self, params: &[f64], ex: &Example) -> Result<f64> {
        self.net.forward(params, &ex.inputs)
    }

    pub fn mse(&self, params: &[f64], batch: &[Example]) -> Result<f64> {
        let mut total = 0.0;
        for ex in batch {
            total += (self.predict(params, ex)? - ex.target).powi(2);
        }
        Ok(total / batch.len() as f64)
    }

    pub fn mae(&self, params: &[f64], batch: &[Example]) -> Result<f64> {
        let mut total = 0.0;
        for ex in batch {
            total += (self.predict(params, ex)? - ex.target).abs();
        }
        Ok(total / batch.len() as f64)
    }
}

impl Task for AdditionTask {
    fn spec(&self) -> TaskSpec {
        TaskSpec {
            id: "addition".into(),
            direction: FitnessDirection::Minimize,
            popsize: self.cfg.popsize,
            generations: self.cfg.generations,
            mc_evals: 1,
            eval_metric: MetricKind::NegMae,
            init_range: (0.0, 0.0),
            eval_every: (self.cfg.generations / 100).max(1),
        }
    }

    fn dim(&self) -> usize {
        self.net.total_dim()
    }

    /// Mean squared error on the generation's shared batch.
    fn evaluate(&self, params: &[f64], ctx: &EvalContext) -> Result<Outcome> {
        let batch = self.training_batch(&ctx.shared)?;
        Ok(Outcome::value(self.mse(params, &batch)?))
    }

    /// Negative mean absolute error on a held-out batch.
    fn eval_metric(&self, params: &[f64], stream: &RngStream) -> Result<f64> {
        let batch = generate_batch(stream, self.cfg.eval_batch, self.cfg.seq_len)?;
        Ok(-self.mae(params, &batch)?)
    }

    fn boxed_clone(&self) -> Box<dyn Task> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_is_sum_of_marked() {
        let ex = Example::from_parts(&[0.1, 0.5, 0.9, 0.3], &[false, true, false, true]).unwrap();
        assert!((ex.target - 0.8).abs() < 1e-15);
        assert_eq!(ex.inputs[1], vec![0.5, 1.0]);
    }

    #[test]
    fn wrong_marker_count_is_a_generator_bug() {
        let err = Example::from_parts(&[0.1, 0.5, 0.9], &[true, true, true]).unwrap_err();
        assert!(matches!(err, Error::Generator(_)));
    }

    #[test]
    fn generated_batches_have_two_markers() {
        let b = generate_batch(&RngStream::new(1), 200, 150).unwrap();
        for ex in &b {
            assert_eq!(ex.inputs.len(), 150);
            assert_eq!(ex.inputs.iter().filter(|x| x[1] == 1.0).count(), 2);
            assert!((0.0..2.0).contains(&ex.target));
        }
    }

    #[test]
    fn constant_predictor_moments() {
        // E|A+B-1| = 1/3 and E(A+B)^2 = 7/6 for A, B ~ U(0, 1).
        let n = 1_000_000;
        let mut rng = RngStream::new(11).generator();
        let (mut mae, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let s = rng.random::<f64>() + rng.random::<f64>();
            mae += (s - 1.0).abs();
            sq += s * s;
        }
        assert!((mae / n as f64 - 1.0 / 3.0).abs() < 1e-3);
        assert!((sq / n as f64 - 7.0 / 6.0).abs() < 5e-3);
    }

    #[test]
    fn zero_network_mse_matches_second_moment() {
        let t = AdditionTask::new(AdditionConfig {
            seq_len: 10,
            hidden: 2,
            ..AdditionConfig::default()
        })
        .unwrap();
        let batch = generate_batch(&RngStream::new(4), 20_000, 10).unwrap();
        let mse = t.mse(&vec![0.0; t.dim()], &batch).unwrap();
        assert!((mse - 7.0 / 6.0).abs() < 0.03, "{mse}");
        // Constant 1.0 via the output bias.
        let mut p = vec![0.0; t.dim()];
        *p.last_mut().unwrap() = 1.0;
        let mae = t.mae(&p, &batch).unwrap();
        assert!((mae - 1.0 / 3.0).abs() < 0.01, "{mae}");
    }
}
