use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asktell::FitnessDirection;
use crate::error::{Error, Result};
use crate::rng::RngStream;

use super::{EvalContext, MetricKind, Outcome, Task, TaskSpec};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BbobFunction {
    Sphere,
    Rosenbrock,
    Rastrigin,
    Ackley,
    Griewank,
    Ellipsoid,
    Discus,
    /// Schwefel 1.2 (cumulative sums squared).
    Schwefel,
}

impl BbobFunction {
    pub const ALL: [BbobFunction; 8] = [
        BbobFunction::Sphere,
        BbobFunction::Rosenbrock,
        BbobFunction::Rastrigin,
        BbobFunction::Ackley,
        BbobFunction::Griewank,
        BbobFunction::Ellipsoid,
        BbobFunction::Discus,
        BbobFunction::Schwefel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BbobFunction::Sphere => "sphere",
            BbobFunction::Rosenbrock => "rosenbrock",
            BbobFunction::Rastrigin => "rastrigin",
            BbobFunction::Ackley => "ackley",
            BbobFunction::Griewank => "griewank",
            BbobFunction::Ellipsoid => "ellipsoid",
            BbobFunction::Discus => "discus",
            BbobFunction::Schwefel => "schwefel",
        }
    }

    /// Function value (minimized).
    pub fn eval(self, x: &[f64]) -> Result<f64> {
        if x.is_empty() {
            return Err(Error::config("benchmark functions need d >= 1"));
        }
        let d = x.len() as f64;
        Ok(match self {
            BbobFunction::Sphere => x.iter().map(|v| v * v).sum(),
            BbobFunction::Rosenbrock => x
                .windows(2)
                .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                .sum(),
            BbobFunction::Rastrigin => {
                10.0 * d + x.iter().map(|v| v * v - 10.0 * (2.0 * PI * v).cos()).sum::<f64>()
            }
            BbobFunction::Ackley => {
                let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
                let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
                -20.0 * (-0.2 * sq.sqrt()).exp() - cs.exp() + 20.0 + E
            }
            BbobFunction::Griewank => {
                let s = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let p: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                1.0 + s - p
            }
            BbobFunction::Ellipsoid => {
                let denom = (x.len() - 1).max(1) as f64;
                x.iter()
                    .enumerate()
                    .map(|(i, v)| 10f64.powf(6.0 * i as f64 / denom) * v * v)
                    .sum()
            }
            BbobFunction::Discus => 1e6 * x[0] * x[0] + x[1..].iter().map(|v| v * v).sum::<f64>(),
            BbobFunction::Schwefel => {
                let mut acc = 0.0;
                x.iter()
                    .map(|v| {
                        acc += v;
                        acc * acc
                    })
                    .sum()
            }
        })
    }
}

impl fmt::Display for BbobFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BbobFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BbobFunction::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::config(format!("unknown task `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BbobConfig {
    pub function: BbobFunction,
    pub dim: usize,
    /// Seeds a random optimum location in `[-4, 4]^d`; `None` keeps the
    /// standard optimum.
    #[serde(default)]
    pub shift_seed: Option<u64>,
}

#[derive(Clone, Debug)]
pub struct BbobTask {
    cfg: BbobConfig,
    shift: Option<Vec<f64>>,
}

impl BbobTask {
    pub fn new(cfg: BbobConfig) -> Result<Self> {
        if cfg.dim == 0 {
            return Err(Error::config("benchmark dimension must be >= 1"));
        }
        let shift = cfg.shift_seed.map(|seed| {
            let mut rng = RngStream::new(seed).split(0x5817).generator();
            (0..cfg.dim).map(|_| rng.random_range(-4.0..4.0)).collect()
        });
        Ok(BbobTask { cfg, shift })
    }

    /// Location of the optimum offset (zero when unshifted).
    pub fn shift(&self) -> Option<&[f64]> {
        self.shift.as_deref()
    }

    pub fn value(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.cfg.dim {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.dim,
                found: x.len(),
            });
        }
        match &self.shift {
            Some(s) => {
                let y: Vec<f64> = x.iter().zip(s).map(|(a, b)| a - b).collect();
                self.cfg.function.eval(&y)
            }
            None => self.cfg.function.eval(x),
        }
    }
}

impl Task for BbobTask {
    fn spec(&self) -> TaskSpec {
        TaskSpec {
            id: format!("{}:{}", self.cfg.function, self.cfg.dim),
            direction: FitnessDirection::Minimize,
            popsize: 32,
            generations: 100,
            mc_evals: 1,
            eval_metric: MetricKind::NegFunctionValue,
            init_range: (-5.0, 5.0),
            eval_every: 1,
        }
    }

    fn dim(&self) -> usize {
        self.cfg.dim
    }

    fn evaluate(&self, params: &[f64], _ctx: &EvalContext) -> Result<Outcome> {
        self.value(params).map(Outcome::value)
    }

    fn eval_metric(&self, params: &[f64], _stream: &RngStream) -> Result<f64> {
        Ok(-self.value(params)?)
    }

    fn boxed_clone(&self) -> Box<dyn Task> {
        Box::new(self.clone())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn global_minima() {
        for d in [1, 2, 7] {
            let zero = vec![0.0; d];
            let ones = vec![1.0; d];
            assert_eq!(BbobFunction::Sphere.eval(&zero).unwrap(), 0.0);
            assert_eq!(BbobFunction::Rosenbrock.eval(&ones).unwrap(), 0.0);
            assert_eq!(BbobFunction::Rastrigin.eval(&zero).unwrap(), 0.0);
            assert!(BbobFunction::Ackley.eval(&zero).unwrap().abs() < 1e-15);
            assert_eq!(BbobFunction::Griewank.eval(&zero).unwrap(), 0.0);
            assert_eq!(BbobFunction::Ellipsoid.eval(&zero).unwrap(), 0.0);
            assert_eq!(BbobFunction::Discus.eval(&zero).unwrap(), 0.0);
            assert_eq!(BbobFunction::Schwefel.eval(&zero).unwrap(), 0.0);
        }
    }

    #[test]
    fn rastrigin_half() {
        assert!((BbobFunction::Rastrigin.eval(&[0.5, 0.5]).unwrap() - 40.5).abs() < 1e-12);
        assert!(BbobFunction::Rastrigin.eval(&[1e-3, 0.0]).unwrap() > 0.0);
    }

    #[test]
    fn hand_values() {
        assert_eq!(BbobFunction::Schwefel.eval(&[1.0, 2.0]).unwrap(), 1.0 + 9.0);
        assert_eq!(BbobFunction::Discus.eval(&[1.0, 2.0]).unwrap(), 1e6 + 4.0);
        assert_eq!(BbobFunction::Ellipsoid.eval(&[1.0, 1.0]).unwrap(), 1.0 + 1e6);
        assert_eq!(BbobFunction::Rosenbrock.eval(&[0.0, 0.0]).unwrap(), 1.0);
        assert!(BbobFunction::Sphere.eval(&[]).is_err());
    }

    #[test]
    fn shift_moves_the_optimum() {
        let t = BbobTask::new(BbobConfig {
            function: BbobFunction::Sphere,
            dim: 4,
            shift_seed: Some(3),
        })
        .unwrap();
        let s = t.shift().unwrap().to_vec();
        assert!(s.iter().all(|v| (-4.0..4.0).contains(v)));
        assert_eq!(t.value(&s).unwrap(), 0.0);
        assert!(t.value(&[0.0; 4]).unwrap() > 0.0);
    }
}
