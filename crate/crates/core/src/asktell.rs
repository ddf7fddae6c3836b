//! The ask–tell contract shared by every optimizer.
//!
//! Fitness is canonical *Maximize* everywhere inside the library; tasks that
//! minimize a loss are negated once, at the evaluator boundary.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::strategies::StrategyInner;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitnessDirection {
    Maximize,
    Minimize,
}

impl FitnessDirection {
    /// Maps a task-native score to the canonical (larger is better) scale.
    pub fn to_canonical(self, value: f64) -> f64 {
        match self {
            FitnessDirection::Maximize => value,
            FitnessDirection::Minimize => -value,
        }
    }
}

/// Mean and per-dimension scale of a Gaussian search distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchDistribution {
    pub mean: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl SearchDistribution {
    pub fn new(mean: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if mean.is_empty() {
            return Err(Error::config("search distribution needs d >= 1"));
        }
        if mean.len() != sigma.len() {
            return Err(Error::DimensionMismatch {
                expected: mean.len(),
                found: sigma.len(),
            });
        }
        if let Some(i) = sigma.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::config(format!("sigma[{i}] must be positive and finite")));
        }
        Ok(SearchDistribution { mean, sigma })
    }

    pub fn isotropic(mean: Vec<f64>, sigma: f64) -> Result<Self> {
        let d = mean.len();
        Self::new(mean, vec![sigma; d])
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub params: Vec<f64>,
    /// Standard-normal direction for distribution-based strategies.
    pub perturbation: Option<Vec<f64>>,
    /// Index within the generation; tell canonicalizes on it.
    pub tag: usize,
    /// Mutation rate the candidate was produced with (GA family).
    pub mutation_rate: Option<f64>,
    /// Archive slot of the parent (GA family).
    pub parent: Option<usize>,
    /// Mutation-rate group (GESMR).
    pub group: Option<usize>,
}

impl Candidate {
    pub fn new(tag: usize, params: Vec<f64>) -> Self {
        Candidate {
            params,
            perturbation: None,
            tag,
            mutation_rate: None,
            parent: None,
            group: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Population {
    pub candidates: Vec<Candidate>,
    pub raw_fitness: Vec<f64>,
    pub shaped_fitness: Option<Vec<f64>>,
}

impl Population {
    pub fn new(candidates: Vec<Candidate>, raw_fitness: Vec<f64>) -> Result<Self> {
        if candidates.len() != raw_fitness.len() {
            return Err(Error::DimensionMismatch {
                expected: candidates.len(),
                found: raw_fitness.len(),
            });
        }
        Ok(Population {
            candidates,
            raw_fitness,
            shaped_fitness: None,
        })
    }

    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    pub fn check_finite(&self) -> Result<()> {
        match self.raw_fitness.iter().position(|f| !f.is_finite()) {
            Some(index) => Err(Error::NonFiniteFitness { index }),
            None => Ok(()),
        }
    }

    /// Copy of the population ordered by candidate tag.
    pub fn canonical(&self) -> Population {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by_key(|&i| self.candidates[i].tag);
        Population {
            candidates: order.iter().map(|&i| self.candidates[i].clone()).collect(),
            raw_fitness: order.iter().map(|&i| self.raw_fitness[i]).collect(),
            shaped_fitness: self
                .shaped_fitness
                .as_ref()
                .map(|s| order.iter().map(|&i| s[i]).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Elite {
    pub params: Vec<f64>,
    pub fitness: f64,
}

/// Immutable optimizer state threaded through ask/tell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyState {
    pub generation: u64,
    pub dim: usize,
    pub best_so_far: Option<Elite>,
    pub inner: StrategyInner,
    /// Stream for randomness consumed inside tell, split by generation.
    pub tell_stream: RngStream,
}

pub trait Strategy: Send + Sync + fmt::Debug {
    fn name(&self) -> &'static str;

    fn dim(&self) -> usize;

    fn popsize(&self) -> usize;

    /// Initial state around `init_mean`.
    fn initialize(&self, init_mean: &[f64], stream: &RngStream) -> Result<StrategyState>;

    /// Samples a generation. Reads `state`, consumes only `stream`.
    fn ask(&self, state: &StrategyState, stream: &RngStream, popsize: usize) -> Result<Vec<Candidate>>;

    /// Fitness transformation applied before the update.
    fn shape(&self, raw: &[f64]) -> Result<Vec<f64>>;

    /// Strategy-specific update on a tag-ordered, finite, shaped population.
    fn update(&self, state: &StrategyState, pop: &Population) -> Result<StrategyInner>;

    /// Point estimate used for held-out evaluation.
    fn incumbent(&self, state: &StrategyState) -> Vec<f64>;

    fn tell(&self, state: &StrategyState, pop: &Population) -> Result<StrategyState> {
        self.check_state(state)?;
        if pop.is_empty() {
            return Err(Error::config("cannot tell an empty population"));
        }
        pop.check_finite()?;
        for c in &pop.candidates {
            if c.params.len() != self.dim() {
                return Err(Error::DimensionMismatch {
                    expected: self.dim(),
                    found: c.params.len(),
                });
            }
        }
        let mut pop = pop.canonical();
        if pop.shaped_fitness.is_none() {
            pop.shaped_fitness = Some(self.shape(&pop.raw_fitness)?);
        }
        let inner = self.update(state, &pop)?;

        let mut best = state.best_so_far.clone();
        for (c, &f) in pop.candidates.iter().zip(&pop.raw_fitness) {
            if best.as_ref().is_none_or(|b| f > b.fitness) {
                best = Some(Elite {
                    params: c.params.clone(),
                    fitness: f,
                });
            }
        }
        Ok(StrategyState {
            generation: state.generation + 1,
            dim: state.dim,
            best_so_far: best,
            inner,
            tell_stream: state.tell_stream.clone(),
        })
    }

    fn check_state(&self, state: &StrategyState) -> Result<()> {
        if state.dim != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.dim,
            });
        }
        Ok(())
    }

    fn check_popsize(&self, popsize: usize) -> Result<()> {
        if popsize != self.popsize() {
            return Err(Error::config(format!(
                "asked for {popsize} candidates but {} is configured with {}",
                self.name(),
                self.popsize()
            )));
        }
        Ok(())
    }
}
