//! Classic cart-pole balancing with an evolved MLP policy.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asktell::FitnessDirection;
use crate::error::{Error, Result};
use crate::networks::{argmax, Activation, Head, MlpSpec};
use crate::rng::RngStream;

use super::{EvalContext, MetricKind, Outcome, Task, TaskSpec};

const GRAVITY: f64 = 9.8;
const CART_MASS: f64 = 1.0;
const POLE_MASS: f64 = 0.1;
const TOTAL_MASS: f64 = CART_MASS + POLE_MASS;
const HALF_LENGTH: f64 = 0.5;
const POLE_MASS_LENGTH: f64 = POLE_MASS * HALF_LENGTH;
const FORCE_MAG: f64 = 10.0;
const TAU: f64 = 0.02;
const THETA_LIMIT: f64 = 12.0 * 2.0 * std::f64::consts::PI / 360.0;
const X_LIMIT: f64 = 2.4;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CartPoleState {
    pub x: f64,
    pub x_dot: f64,
    pub theta: f64,
    pub theta_dot: f64,
}

impl CartPoleState {
    pub fn obs(&self) -> [f64; 4] {
        [self.x, self.x_dot, self.theta, self.theta_dot]
    }

    /// One explicit Euler step under a horizontal `force`.
    pub fn step(&self, force: f64) -> CartPoleState {
        let (sin, cos) = self.theta.sin_cos();
        let temp = (force + POLE_MASS_LENGTH * self.theta_dot * self.theta_dot * sin) / TOTAL_MASS;
        let theta_acc = (GRAVITY * sin - cos * temp)
            / (HALF_LENGTH * (4.0 / 3.0 - POLE_MASS * cos * cos / TOTAL_MASS));
        let x_acc = temp - POLE_MASS_LENGTH * theta_acc * cos / TOTAL_MASS;
        CartPoleState {
            x: self.x + TAU * self.x_dot,
            x_dot: self.x_dot + TAU * x_acc,
            theta: self.theta + TAU * self.theta_dot,
            theta_dot: self.theta_dot + TAU * theta_acc,
        }
    }

    pub fn failed(&self) -> bool {
        self.x.abs() > X_LIMIT || self.theta.abs() > THETA_LIMIT || !self.obs().iter().all(|v| v.is_finite())
    }
}

/// Welford accumulator for observations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsStats {
    pub count: f64,
    pub mean: Vec<f64>,
    pub m2: Vec<f64>,
}

impl ObsStats {
    pub fn new(d: usize) -> Self {
        ObsStats {
            count: 0.0,
            mean: vec![0.0; d],
            m2: vec![0.0; d],
        }
    }

    pub fn push(&mut self, x: &[f64]) {
        self.count += 1.0;
        for (j, v) in x.iter().enumerate() {
            let delta = v - self.mean[j];
            self.mean[j] += delta / self.count;
            self.m2[j] += delta * (v - self.mean[j]);
        }
    }

    /// Pooled statistics of two disjoint samples.
    pub fn merge(&mut self, other: &ObsStats) {
        if other.count == 0.0 {
            return;
        }
        let n = self.count + other.count;
        for j in 0..self.mean.len() {
            let delta = other.mean[j] - self.mean[j];
            self.mean[j] += delta * other.count / n;
            self.m2[j] += other.m2[j] + delta * delta * self.count * other.count / n;
        }
        self.count = n;
    }

    pub fn variance(&self) -> Vec<f64> {
        if self.count < 2.0 {
            return vec![1.0; self.mean.len()];
        }
        self.m2.iter().map(|m| m / self.count).collect()
    }
}

/// Observation normalizer whose statistics only change between generations.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObsNormalizer {
    stats: ObsStats,
    frozen_mean: Vec<f64>,
    frozen_std: Vec<f64>,
}

impl ObsNormalizer {
    pub fn new(d: usize) -> Self {
        ObsNormalizer {
            stats: ObsStats::new(d),
            frozen_mean: vec![0.0; d],
            frozen_std: vec![1.0; d],
        }
    }

    pub fn normalize(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.frozen_mean)
            .zip(&self.frozen_std)
            .map(|((v, m), s)| ((v - m) / s).clamp(-10.0, 10.0))
            .collect()
    }

    /// Folds in a batch of statistics and refreshes the frozen snapshot.
    pub fn update(&mut self, batch: &ObsStats) {
        self.stats.merge(batch);
        self.frozen_mean = self.stats.mean.clone();
        self.frozen_std = self.stats.variance().iter().map(|v| (v + 1e-8).sqrt()).collect();
    }

    pub fn count(&self) -> f64 {
        self.stats.count
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CartPoleConfig {
    pub hidden: Vec<usize>,
    pub episode_steps: usize,
    pub normalize_obs: bool,
    /// Share episode seeds across the candidates of a generation.
    pub common_random_numbers: bool,
    pub popsize: usize,
    pub generations: usize,
    pub mc_evals: usize,
    pub eval_episodes: usize,
}

impl Default for CartPoleConfig {
    fn default() -> Self {
        CartPoleConfig {
            hidden: vec![32, 32],
            episode_steps: 500,
            normalize_obs: true,
            common_random_numbers: true,
            popsize: 256,
            generations: 100,
            mc_evals: 1,
            eval_episodes: 8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CartPoleTask {
    cfg: CartPoleConfig,
    policy: MlpSpec,
    normalizer: ObsNormalizer,
}

impl CartPoleTask {
    pub fn new(cfg: CartPoleConfig) -> Result<Self> {
        if cfg.hidden.is_empty() {
            return Err(Error::config("cart-pole policy needs at least one hidden layer"));
        }
        if cfg.episode_steps == 0 || cfg.eval_episodes == 0 {
            return Err(Error::config("episode_steps and eval_episodes must be >= 1"));
        }
        let mut sizes = vec![4];
        sizes.extend(&cfg.hidden);
        sizes.push(2);
        let policy = MlpSpec::new(sizes, Activation::Tanh, Head::Argmax)?;
        Ok(CartPoleTask {
            cfg,
            policy,
            normalizer: ObsNormalizer::new(4),
        })
    }

    pub fn policy(&self) -> &MlpSpec {
        &self.policy
    }

    pub fn normalizer(&self) -> &ObsNormalizer {
        &self.normalizer
    }

    /// Runs one episode and returns its return and the raw observations'
    /// statistics.
    pub fn rollout(&self, params: &[f64], episode: &RngStream) -> Result<(f64, ObsStats)> {
        let mut rng = episode.generator();
        let mut s = CartPoleState {
            x: rng.random_range(-0.05..0.05),
            x_dot: rng.random_range(-0.05..0.05),
            theta: rng.random_range(-0.05..0.05),
            theta_dot: rng.random_range(-0.05..0.05),
        };
        let mut stats = ObsStats::new(4);
        let mut ret = 0.0;
        for _ in 0..self.cfg.episode_steps {
            let raw = s.obs();
            stats.push(&raw);
            let obs = if self.cfg.normalize_obs {
                self.normalizer.normalize(&raw)
            } else {
                raw.to_vec()
            };
            let action = argmax(&self.policy.logits(params, &obs)?);
            s = s.step(if action == 1 { FORCE_MAG } else { -FORCE_MAG });
            ret += 1.0;
            if s.failed() {
                break;
            }
        }
        Ok((ret, stats))
    }
}

impl Task for CartPoleTask {
    fn spec(&self) -> TaskSpec {
        TaskSpec {
            id: "cartpole".into(),
            direction: FitnessDirection::Maximize,
            popsize: self.cfg.popsize,
            generations: self.cfg.generations,
            mc_evals: self.cfg.mc_evals,
            eval_metric: MetricKind::CumulativeReturn,
            init_range: (0.0, 0.0),
            eval_every: 1,
        }
    }

    fn dim(&self) -> usize {
        self.policy.total_dim()
    }

    fn evaluate(&self, params: &[f64], ctx: &EvalContext) -> Result<Outcome> {
        let episode = if self.cfg.common_random_numbers {
            &ctx.shared
        } else {
            &ctx.stream
        };
        let (ret, stats) = self.rollout(params, episode)?;
        Ok(Outcome {
            value: ret,
            obs: self.cfg.normalize_obs.then_some(stats),
        })
    }

    fn eval_metric(&self, params: &[f64], stream: &RngStream) -> Result<f64> {
        let mut total = 0.0;
        for k in 0..self.cfg.eval_episodes {
            total += self.rollout(params, &stream.split(k as u64))?.0;
        }
        Ok(total / self.cfg.eval_episodes as f64)
    }

    fn end_generation(&mut self, outcomes: &[Outcome]) {
        if !self.cfg.normalize_obs {
            return;
        }
        let mut batch = ObsStats::new(4);
        for o in outcomes {
            if let Some(s) = &o.obs {
                batch.merge(s);
            }
        }
        self.normalizer.update(&batch);
    }

    fn boxed_clone(&self) -> Box<dyn Task> {
        Box::new(self.clone())
    }
}
