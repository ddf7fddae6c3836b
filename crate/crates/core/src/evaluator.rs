//! The generation loop: ask, evaluate in parallel with Monte Carlo repeats,
//! tell, and periodically score the incumbent on held-out data.
//!
//! Every random draw comes from a stream keyed by what it is for, so thread
//! count and evaluation cadence never change a trajectory.

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::asktell::{Population, Strategy};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::strategies::StrategyConfig;
use crate::tasks::{EvalContext, Outcome, Task, TaskConfig};

pub const SCHEMA_VERSION: u32 = 1;

/// Stream keys below the run seed.
pub mod keys {
    pub const INIT: u64 = 0;
    pub const ASK: u64 = 1;
    pub const EVAL: u64 = 2;
    pub const SHARED: u64 = 3;
    pub const HELD_OUT: u64 = 4;
    pub const TELL: u64 = 5;
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub generations: usize,
    /// Held-out evaluation cadence in generations; 0 disables periodic
    /// evaluation (the final incumbent is always scored).
    pub eval_every: usize,
    pub mc_evals: usize,
    pub seed: u64,
    pub threads: usize,
    /// Keep every individual evaluation in the report.
    pub record_evals: bool,
    /// Overrides the task's initial mean.
    pub init_mean: Option<Vec<f64>>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            generations: 100,
            eval_every: 10,
            mc_evals: 1,
            seed: 0,
            threads: 1,
            record_evals: false,
            init_mean: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub generation: usize,
    /// Canonical (larger is better) fitness, mean over repeats.
    pub best_fitness: f64,
    pub mean_fitness: f64,
    pub best_so_far: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval_metric: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evals: Option<Vec<Vec<f64>>>,
    pub wall_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub schema: u32,
    pub strategy: String,
    pub task: String,
    pub dim: usize,
    pub popsize: usize,
    pub mc_evals: usize,
    pub seed: u64,
    pub records: Vec<GenerationRecord>,
    pub initial_metric: f64,
    pub final_metric: f64,
    /// Best canonical training fitness seen.
    pub best_fitness: f64,
    pub final_incumbent: Vec<f64>,
    pub incumbent_digest: String,
}

#[derive(Serialize)]
struct Line<'a> {
    schema: u32,
    #[serde(flatten)]
    record: &'a GenerationRecord,
}

#[derive(Serialize)]
struct Summary<'a> {
    schema: u32,
    summary: bool,
    strategy: &'a str,
    task: &'a str,
    seed: u64,
    initial_metric: f64,
    final_metric: f64,
    best_fitness: f64,
    incumbent_digest: &'a str,
}

impl EvalReport {
    /// JSON-lines: one line per generation plus a trailing summary line.
    pub fn to_jsonl(&self, with_wall_clock: bool) -> Result<String> {
        let mut out = String::new();
        for r in &self.records {
            let mut record = r.clone();
            if !with_wall_clock {
                record.wall_ms = 0.0;
            }
            out.push_str(&serde_json::to_string(&Line {
                schema: SCHEMA_VERSION,
                record: &record,
            })?);
            out.push('\n');
        }
        out.push_str(&serde_json::to_string(&Summary {
            schema: SCHEMA_VERSION,
            summary: true,
            strategy: &self.strategy,
            task: &self.task,
            seed: self.seed,
            initial_metric: self.initial_metric,
            final_metric: self.final_metric,
            best_fitness: self.best_fitness,
            incumbent_digest: &self.incumbent_digest,
        })?);
        out.push('\n');
        Ok(out)
    }

    pub fn eval_points(&self) -> Vec<(usize, f64)> {
        self.records
            .iter()
            .filter_map(|r| r.eval_metric.map(|m| (r.generation, m)))
            .collect()
    }
}

/// Hex SHA-256 of the little-endian bytes of `params`.
pub fn params_digest(params: &[f64]) -> String {
    let mut h = Sha256::new();
    for p in params {
        h.update(p.to_le_bytes());
    }
    hex::encode(h.finalize())
}

fn initial_mean(task: &dyn Task, cfg: &RunConfig, root: &RngStream) -> Result<Vec<f64>> {
    let d = task.dim();
    if let Some(m) = &cfg.init_mean {
        if m.len() != d {
            return Err(Error::DimensionMismatch { expected: d, found: m.len() });
        }
        return Ok(m.clone());
    }
    let (lo, hi) = task.spec().init_range;
    if lo == hi {
        return Ok(vec![lo; d]);
    }
    let mut rng = root.split(keys::INIT).generator();
    Ok((0..d).map(|_| rng.random_range(lo..hi)).collect())
}

fn pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::config(format!("thread pool: {e}")))
}

/// Runs `strategy` on `task` for `cfg.generations` generations.
pub fn run(strategy: &dyn Strategy, task: &dyn Task, cfg: &RunConfig) -> Result<EvalReport> {
    if strategy.dim() != task.dim() {
        return Err(Error::DimensionMismatch {
            expected: task.dim(),
            found: strategy.dim(),
        });
    }
    if cfg.mc_evals == 0 {
        return Err(Error::config("mc_evals must be >= 1"));
    }
    let mut task = task.boxed_clone();
    let spec = task.spec();
    let popsize = strategy.popsize();
    let root = RngStream::new(cfg.seed);
    let held_out = root.split(keys::HELD_OUT);
    let pool = pool(cfg.threads)?;

    let mut state = strategy.initialize(&initial_mean(task.as_ref(), cfg, &root)?, &root.split(keys::TELL))?;
    let initial_metric = task.eval_metric(&strategy.incumbent(&state), &held_out)?;
    let mut records = Vec::with_capacity(cfg.generations);
    let mut last_metric = None;

    for g in 0..cfg.generations {
        let start = Instant::now();
        let candidates = strategy.ask(&state, &root.split(keys::ASK).split(g as u64), popsize)?;
        let jobs: Vec<(usize, usize)> = (0..candidates.len())
            .flat_map(|i| (0..cfg.mc_evals).map(move |r| (i, r)))
            .collect();
        let eval_root = root.split(keys::EVAL).split(g as u64);
        let shared_root = root.split(keys::SHARED).split(g as u64);
        let task_ref = task.as_ref();
        let outcomes: Vec<Outcome> = pool.install(|| {
            jobs.par_iter()
                .map(|&(i, r)| {
                    let ctx = EvalContext {
                        generation: g as u64,
                        candidate: i,
                        repeat: r,
                        stream: eval_root.split(i as u64).split(r as u64),
                        shared: shared_root.split(r as u64),
                    };
                    task_ref.evaluate(&candidates[i].params, &ctx)
                })
                .collect::<Result<Vec<_>>>()
        })?;

        let per_candidate: Vec<Vec<f64>> = outcomes
            .chunks(cfg.mc_evals)
            .map(|c| c.iter().map(|o| o.value).collect())
            .collect();
        let fitness: Vec<f64> = per_candidate
            .iter()
            .map(|v| spec.direction.to_canonical(v.iter().sum::<f64>() / v.len() as f64))
            .collect();
        task.end_generation(&outcomes);
        state = strategy.tell(&state, &Population::new(candidates, fitness.clone())?)?;

        let eval_metric = if cfg.eval_every > 0 && (g + 1) % cfg.eval_every == 0 {
            let m = task.eval_metric(&strategy.incumbent(&state), &held_out)?;
            last_metric = Some((g, m));
            Some(m)
        } else {
            None
        };
        records.push(GenerationRecord {
            generation: g,
            best_fitness: fitness.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            mean_fitness: fitness.iter().sum::<f64>() / fitness.len() as f64,
            best_so_far: state.best_so_far.as_ref().map_or(f64::NEG_INFINITY, |e| e.fitness),
            eval_metric,
            evals: cfg.record_evals.then_some(per_candidate),
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }

    let incumbent = strategy.incumbent(&state);
    let final_metric = match last_metric {
        Some((g, m)) if g + 1 == cfg.generations => m,
        _ if cfg.generations == 0 => initial_metric,
        _ => task.eval_metric(&incumbent, &held_out)?,
    };
    Ok(EvalReport {
        schema: SCHEMA_VERSION,
        strategy: strategy.name().to_string(),
        task: spec.id,
        dim: task.dim(),
        popsize,
        mc_evals: cfg.mc_evals,
        seed: cfg.seed,
        records,
        initial_metric,
        final_metric,
        best_fitness: state.best_so_far.as_ref().map_or(f64::NEG_INFINITY, |e| e.fitness),
        incumbent_digest: params_digest(&incumbent),
        final_incumbent: incumbent,
    })
}

/// Builds strategy and task from their configs and runs them.
pub fn run_configs(strategy: &StrategyConfig, task: &TaskConfig, popsize: usize, cfg: &RunConfig) -> Result<EvalReport> {
    let task = task.build()?;
    let strategy = strategy.build(task.dim(), popsize)?;
    run(strategy.as_ref(), task.as_ref(), cfg)
}

/// `(popsize, evals)` pairs with `popsize * evals = budget`.
pub fn budget_pairs(budget: usize, evals: &[usize]) -> Result<Vec<(usize, usize)>> {
    evals
        .iter()
        .map(|&e| {
            if e == 0 || budget % e != 0 {
                Err(Error::config(format!("budget {budget} is not divisible by {e} evaluations")))
            } else {
                Ok((budget / e, e))
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResourceCell {
    pub popsize: usize,
    pub mc_evals: usize,
    pub noise_std: f64,
    pub seed: u64,
    pub report: EvalReport,
}

/// One run per (pair, noise level, seed) at a fixed evaluation budget per
/// generation.
pub fn resource_sweep(
    strategy: &StrategyConfig,
    task: &TaskConfig,
    pairs: &[(usize, usize)],
    noise_levels: &[f64],
    seeds: &[u64],
    base: &RunConfig,
) -> Result<Vec<ResourceCell>> {
    if let Some(&(p, e)) = pairs.first() {
        if let Some(bad) = pairs.iter().find(|(q, f)| q * f != p * e) {
            return Err(Error::config(format!(
                "pair {bad:?} does not match budget {}",
                p * e
            )));
        }
    }
    let mut out = Vec::new();
    for &(popsize, mc_evals) in pairs {
        for &noise in noise_levels {
            let t = task.clone().with_noise(noise);
            for &seed in seeds {
                let cfg = RunConfig {
                    mc_evals,
                    seed,
                    ..base.clone()
                };
                out.push(ResourceCell {
                    popsize,
                    mc_evals,
                    noise_std: noise,
                    seed,
                    report: run_configs(strategy, &t, popsize, &cfg)?,
                });
            }
        }
    }
    Ok(out)
}
