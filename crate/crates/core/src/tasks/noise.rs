use crate::error::{Error, Result};
use crate::rng::{normal, RngStream};

use super::{EvalContext, Outcome, Task, TaskSpec};

/// Path key of the noise draw inside an evaluation's stream.
const NOISE_KEY: u64 = 0x6e6f_6973;

/// Adds `noise_std * N(0, 1)` to every training evaluation of the wrapped
/// task. Held-out evaluation stays noiseless.
#[derive(Debug)]
pub struct NoisyTask {
    inner: Box<dyn Task>,
    noise_std: f64,
}

impl NoisyTask {
    pub fn new(inner: Box<dyn Task>, noise_std: f64) -> Result<Self> {
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::config(format!("noise_std must be >= 0, got {noise_std}")));
        }
        Ok(NoisyTask { inner, noise_std })
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }
}

impl Task for NoisyTask {
    fn spec(&self) -> TaskSpec {
        self.inner.spec()
    }

    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn evaluate(&self, params: &[f64], ctx: &EvalContext) -> Result<Outcome> {
        let mut out = self.inner.evaluate(params, ctx)?;
        if self.noise_std > 0.0 {
            let mut rng = ctx.stream.split(NOISE_KEY).generator();
            out.value += self.noise_std * normal(&mut rng);
        }
        Ok(out)
    }

    fn eval_metric(&self, params: &[f64], stream: &RngStream) -> Result<f64> {
        self.inner.eval_metric(params, stream)
    }

    fn end_generation(&mut self, outcomes: &[Outcome]) {
        self.inner.end_generation(outcomes);
    }

    fn boxed_clone(&self) -> Box<dyn Task> {
        Box::new(NoisyTask {
            inner: self.inner.boxed_clone(),
            noise_std: self.noise_std,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tasks::TaskConfig;

    fn sphere() -> Box<dyn Task> {
        "sphere:3".parse::<TaskConfig>().unwrap().build().unwrap()
    }

    #[test]
    fn zero_noise_is_transparent() {
        let t = NoisyTask::new(sphere(), 0.0).unwrap();
        let ctx = EvalContext::standalone(RngStream::new(1));
        let x = [0.3, -1.0, 2.0];
        assert_eq!(
            t.evaluate(&x, &ctx).unwrap().value.to_bits(),
            sphere().evaluate(&x, &ctx).unwrap().value.to_bits()
        );
    }

    #[test]
    fn noise_mean_within_clt_bound() {
        let std = 0.5;
        let t = NoisyTask::new(sphere(), std).unwrap();
        let x = [1.0, 0.0, 0.0];
        let n = 100_000;
        let mean: f64 = (0..n)
            .map(|i| {
                let ctx = EvalContext::standalone(RngStream::new(2).split(i));
                t.evaluate(&x, &ctx).unwrap().value
            })
            .sum::<f64>()
            / n as f64;
        assert!((mean - 1.0).abs() < 3.0 * std / (n as f64).sqrt());
    }

    #[test]
    fn repeats_differ() {
        let t = NoisyTask::new(sphere(), 0.1).unwrap();
        let x = [0.0; 3];
        let a = t.evaluate(&x, &EvalContext::standalone(RngStream::new(3).split(0))).unwrap();
        let b = t.evaluate(&x, &EvalContext::standalone(RngStream::new(3).split(1))).unwrap();
        assert_ne!(a.value, b.value);
        assert!(NoisyTask::new(sphere(), -1.0).is_err());
    }
}
