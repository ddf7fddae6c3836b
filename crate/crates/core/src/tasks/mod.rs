//! Fitness tasks: synthetic benchmark functions, a cart-pole controller,
//! a recurrent addition regression and an image classifier.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asktell::FitnessDirection;
use crate::error::{Error, Result};
use crate::rng::RngStream;

pub mod addition;
pub mod bbob;
pub mod cartpole;
pub mod classify;
pub mod idx;
pub mod noise;

pub use addition::{AdditionConfig, AdditionTask};
pub use bbob::{BbobConfig, BbobFunction, BbobTask};
pub use cartpole::{CartPoleConfig, CartPoleState, CartPoleTask, ObsNormalizer, ObsStats};
pub use classify::{ClassifyConfig, ClassifyTask, Dataset};
pub use noise::NoisyTask;

/// Randomness available to one (candidate, repeat) evaluation.
#[derive(Clone, Debug)]
pub struct EvalContext {
    pub generation: u64,
    pub candidate: usize,
    pub repeat: usize,
    /// Private to this evaluation.
    pub stream: RngStream,
    /// Shared by every candidate of the generation for this repeat index.
    pub shared: RngStream,
}

impl EvalContext {
    /// Context for a one-off evaluation outside the generation loop.
    pub fn standalone(stream: RngStream) -> Self {
        EvalContext {
            generation: 0,
            candidate: 0,
            repeat: 0,
            shared: stream.split(0),
            stream,
        }
    }
}

/// Result of one evaluation in the task's native units.
#[derive(Clone, Debug, PartialEq)]
pub struct Outcome {
    pub value: f64,
    /// Observation statistics gathered during a rollout.
    pub obs: Option<ObsStats>,
}

impl Outcome {
    pub fn value(value: f64) -> Self {
        Outcome { value, obs: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    /// Negated function value.
    NegFunctionValue,
    CumulativeReturn,
    NegMae,
    TestAccuracy,
}

/// Task metadata and default run settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub direction: FitnessDirection,
    pub popsize: usize,
    pub generations: usize,
    pub mc_evals: usize,
    pub eval_metric: MetricKind,
    /// Uniform range of the initial search mean.
    pub init_range: (f64, f64),
    pub eval_every: usize,
}

pub trait Task: Send + Sync + fmt::Debug {
    fn spec(&self) -> TaskSpec;

    fn dim(&self) -> usize;

    /// Training fitness in native units (see `spec().direction`).
    fn evaluate(&self, params: &[f64], ctx: &EvalContext) -> Result<Outcome>;

    /// Held-out score of an incumbent, larger is better.
    fn eval_metric(&self, params: &[f64], stream: &RngStream) -> Result<f64>;

    /// Called once per generation with the outcomes in candidate order.
    fn end_generation(&mut self, _outcomes: &[Outcome]) {}

    fn boxed_clone(&self) -> Box<dyn Task>;
}

impl Clone for Box<dyn Task> {
    fn clone(&self) -> Self {
        self.boxed_clone()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case")]
pub enum TaskKind {
    Bbob(BbobConfig),
    CartPole(CartPoleConfig),
    Addition(AdditionConfig),
    Classification(ClassifyConfig),
}

/// Declarative task description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskConfig {
    #[serde(flatten)]
    pub kind: TaskKind,
    /// Additive Gaussian noise on every training evaluation.
    #[serde(default)]
    pub noise_std: f64,
}

impl TaskConfig {
    pub fn new(kind: TaskKind) -> Self {
        TaskConfig { kind, noise_std: 0.0 }
    }

    pub fn with_noise(mut self, noise_std: f64) -> Self {
        self.noise_std = noise_std;
        self
    }

    pub fn build(&self) -> Result<Box<dyn Task>> {
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::config(format!("noise_std must be >= 0, got {}", self.noise_std)));
        }
        let inner: Box<dyn Task> = match &self.kind {
            TaskKind::Bbob(c) => Box::new(BbobTask::new(c.clone())?),
            TaskKind::CartPole(c) => Box::new(CartPoleTask::new(c.clone())?),
            TaskKind::Addition(c) => Box::new(AdditionTask::new(c.clone())?),
            TaskKind::Classification(c) => Box::new(ClassifyTask::load(c.clone())?),
        };
        Ok(if self.noise_std > 0.0 {
            Box::new(NoisyTask::new(inner, self.noise_std)?)
        } else {
            inner
        })
    }

    /// Resizes the model (hidden units, or the dimension of a benchmark
    /// function).
    pub fn with_model_size(&self, size: usize) -> Result<TaskConfig> {
        if size == 0 {
            return Err(Error::config("model size must be >= 1"));
        }
        let mut out = self.clone();
        match &mut out.kind {
            TaskKind::Bbob(c) => c.dim = size,
            TaskKind::CartPole(c) => c.hidden = vec![size; c.hidden.len().max(1)],
            TaskKind::Addition(c) => c.hidden = size,
            TaskKind::Classification(c) => c.hidden = vec![size; c.hidden.len().max(1)],
        }
        Ok(out)
    }

    /// Short identifier used in reports.
    pub fn id(&self) -> String {
        let base = match &self.kind {
            TaskKind::Bbob(c) => format!("{}:{}", c.function, c.dim),
            TaskKind::CartPole(_) => "cartpole".to_string(),
            TaskKind::Addition(c) => {
                if *c == AdditionConfig::short() {
                    "addition-short".to_string()
                } else {
                    "addition".to_string()
                }
            }
            TaskKind::Classification(_) => "classification".to_string(),
        };
        if self.noise_std > 0.0 {
            format!("{base}+noise{}", self.noise_std)
        } else {
            base
        }
    }
}

impl FromStr for TaskConfig {
    type Err = Error;

    /// Accepts `sphere`, `rastrigin:20`, `cartpole`, `addition`,
    /// `addition-short` and `classification`.
    fn from_str(s: &str) -> Result<Self> {
        let (name, dim) = match s.split_once(':') {
            Some((n, d)) => (
                n,
                Some(
                    d.parse::<usize>()
                        .map_err(|_| Error::config(format!("bad dimension in task id `{s}`")))?,
                ),
            ),
            None => (s, None),
        };
        let kind = match name {
            "cartpole" => TaskKind::CartPole(CartPoleConfig::default()),
            "addition" => TaskKind::Addition(AdditionConfig::default()),
            "addition-short" => TaskKind::Addition(AdditionConfig::short()),
            "classification" | "mnist" => TaskKind::Classification(ClassifyConfig::default()),
            other => {
                let function: BbobFunction = other.parse()?;
                TaskKind::Bbob(BbobConfig {
                    function,
                    dim: 10,
                    shift_seed: None,
                })
            }
        };
        let cfg = TaskConfig::new(kind);
        match dim {
            Some(d) => cfg.with_model_size(d),
            None => Ok(cfg),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_ids() {
        let t: TaskConfig = "rastrigin:20".parse().unwrap();
        assert_eq!(t.id(), "rastrigin:20");
        assert_eq!(t.build().unwrap().dim(), 20);
        assert_eq!("addition-short".parse::<TaskConfig>().unwrap().id(), "addition-short");
        assert!("nope".parse::<TaskConfig>().is_err());
        assert!("sphere:x".parse::<TaskConfig>().is_err());
    }

    #[test]
    fn config_round_trips_through_json_and_toml() {
        let cfgs = [
            "sphere:3".parse::<TaskConfig>().unwrap().with_noise(0.5),
            "cartpole".parse().unwrap(),
            "addition-short".parse().unwrap(),
            "classification".parse().unwrap(),
        ];
        for c in cfgs {
            let j = serde_json::to_string(&c).unwrap();
            assert_eq!(serde_json::from_str::<TaskConfig>(&j).unwrap(), c);
            let t = toml::to_string(&c).unwrap();
            assert_eq!(toml::from_str::<TaskConfig>(&t).unwrap(), c);
        }
    }
}
