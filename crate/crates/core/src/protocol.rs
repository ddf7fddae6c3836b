//! Tuning and benchmarking protocol: budgeted random search with one
//! refinement stage, multi-seed re-evaluation and grid sweeps.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evaluator::{run_configs, EvalReport, RunConfig};
use crate::rng::RngStream;
use crate::strategies::{ParamValue, StrategyConfig, StrategyKind};
use crate::tasks::TaskConfig;

const SAMPLER_KEY: u64 = 0x7475_6e65;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    LogUniform { low: f64, high: f64 },
    Uniform { low: f64, high: f64 },
    Categorical { values: Vec<ParamValue> },
}

impl Domain {
    pub fn validate(&self, name: &str) -> Result<()> {
        match self {
            Domain::LogUniform { low, high } if !(*low > 0.0 && low < high) => Err(Error::config(format!(
                "log-uniform `{name}` needs 0 < low < high, got [{low}, {high}]"
            ))),
            Domain::Uniform { low, high } if !(low < high && low.is_finite() && high.is_finite()) => {
                Err(Error::config(format!("uniform `{name}` needs low < high, got [{low}, {high}]")))
            }
            Domain::Categorical { values } if values.is_empty() => {
                Err(Error::config(format!("categorical `{name}` is empty")))
            }
            _ => Ok(()),
        }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> ParamValue {
        match self {
            Domain::LogUniform { low, high } => ParamValue::Real(rng.random_range(low.ln()..high.ln()).exp().clamp(*low, *high)),
            Domain::Uniform { low, high } => ParamValue::Real(rng.random_range(*low..*high)),
            Domain::Categorical { values } => values[rng.random_range(0..values.len())].clone(),
        }
    }

    pub fn contains(&self, v: &ParamValue) -> bool {
        match (self, v) {
            (Domain::LogUniform { low, high } | Domain::Uniform { low, high }, ParamValue::Real(x)) => {
                *low <= *x && *x <= *high
            }
            (Domain::Categorical { values }, v) => values.contains(v),
            _ => false,
        }
    }

    /// True when `self` lies inside `other`.
    pub fn is_subset_of(&self, other: &Domain) -> bool {
        match (self, other) {
            (
                Domain::LogUniform { low, high } | Domain::Uniform { low, high },
                Domain::LogUniform { low: l2, high: h2 } | Domain::Uniform { low: l2, high: h2 },
            ) => l2 <= low && high <= h2,
            (Domain::Categorical { values }, Domain::Categorical { values: v2 }) => values.iter().all(|v| v2.contains(v)),
            _ => false,
        }
    }
}

fn categorical(values: impl IntoIterator<Item = ParamValue>) -> Domain {
    Domain::Categorical {
        values: values.into_iter().collect(),
    }
}

fn steps(from: f64, to: f64, step: f64) -> Vec<ParamValue> {
    let n = ((to - from) / step).round() as usize;
    (0..=n)
        .map(|i| ParamValue::Real(((from + i as f64 * step) * 1e9).round() / 1e9))
        .collect()
}

/// Named hyperparameter domains.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub params: BTreeMap<String, Domain>,
}

impl SearchSpace {
    /// Documented tuning ranges of each strategy.
    pub fn default_for(kind: StrategyKind) -> Self {
        let mut p = BTreeMap::new();
        p.insert("sigma0".to_string(), Domain::LogUniform { low: 0.01, high: 0.15 });
        if kind.uses_gd() {
            p.insert("alpha0".to_string(), Domain::LogUniform { low: 0.005, high: 0.05 });
        }
        match kind {
            StrategyKind::Ars => {
                p.insert(
                    "shaping".into(),
                    categorical(["raw", "z_score", "centered_ranks"].map(ParamValue::from)),
                );
            }
            StrategyKind::Snes => {
                p.insert("beta".into(), categorical(steps(10.0, 40.0, 5.0)));
            }
            StrategyKind::SepCmaEs => {
                p.insert("elite_ratio".into(), categorical(steps(0.1, 0.5, 0.1)));
            }
            StrategyKind::GaussianGa => {
                p.insert("elite_ratio".into(), categorical(steps(0.0, 0.5, 0.1)));
            }
            StrategyKind::SamrGa | StrategyKind::GesmrGa => {
                p.insert("elite_ratio".into(), categorical(steps(0.0, 0.5, 0.1)));
                p.insert("meta_sigma_strength".into(), Domain::Uniform { low: 1.0, high: 3.0 });
            }
            StrategyKind::OpenaiEs | StrategyKind::Pgpe => {}
        }
        SearchSpace { params: p }
    }

    pub fn validate(&self) -> Result<()> {
        if self.params.is_empty() {
            return Err(Error::config("search space is empty"));
        }
        self.params.iter().try_for_each(|(k, d)| d.validate(k))
    }

    pub fn sample(&self, rng: &mut impl Rng) -> BTreeMap<String, ParamValue> {
        self.params.iter().map(|(k, d)| (k.clone(), d.sample(rng))).collect()
    }

    pub fn contains(&self, config: &BTreeMap<String, ParamValue>) -> bool {
        self.params
            .iter()
            .all(|(k, d)| config.get(k).is_some_and(|v| d.contains(v)))
    }

    pub fn is_subset_of(&self, other: &SearchSpace) -> bool {
        self.params
            .iter()
            .all(|(k, d)| other.params.get(k).is_some_and(|o| d.is_subset_of(o)))
    }
}

/// Shrinks every domain to the envelope of the given configurations.
/// Degenerate continuous envelopes are widened by 5% of the value on each
/// side, and everything is clipped to the original domain.
pub fn refine_space(space: &SearchSpace, top: &[BTreeMap<String, ParamValue>]) -> Result<SearchSpace> {
    if top.len() < 2 {
        return Err(Error::config("refinement needs at least two configurations"));
    }
    let mut out = BTreeMap::new();
    for (name, domain) in &space.params {
        let values: Vec<&ParamValue> = top
            .iter()
            .map(|c| c.get(name).ok_or_else(|| Error::config(format!("top configuration lacks `{name}`"))))
            .collect::<Result<_>>()?;
        let refined = match domain {
            Domain::LogUniform { low, high } | Domain::Uniform { low, high } => {
                let xs: Vec<f64> = values
                    .iter()
                    .map(|v| v.as_f64().ok_or_else(|| Error::config(format!("`{name}` value {v} is not numeric"))))
                    .collect::<Result<_>>()?;
                let mut lo = xs.iter().copied().fold(f64::INFINITY, f64::min);
                let mut hi = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if lo == hi {
                    let pad = if lo == 0.0 { 0.05 * (high - low) } else { 0.05 * lo.abs() };
                    lo -= pad;
                    hi += pad;
                }
                let (lo, hi) = (lo.max(*low), hi.min(*high));
                match domain {
                    Domain::LogUniform { .. } => Domain::LogUniform { low: lo, high: hi },
                    _ => Domain::Uniform { low: lo, high: hi },
                }
            }
            Domain::Categorical { values: all } => {
                Domain::Categorical {
                    values: all.iter().filter(|v| values.contains(v)).cloned().collect(),
                }
            }
        };
        out.insert(name.clone(), refined);
    }
    Ok(SearchSpace { params: out })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Budget {
    Default,
    Small,
    Medium,
    Large,
}

impl Budget {
    pub fn trials(self) -> usize {
        match self {
            Budget::Default => 0,
            Budget::Small => 20,
            Budget::Medium => 40,
            Budget::Large => 50,
        }
    }

    /// Trial count after which the space is refined.
    pub fn refine_after(self) -> Option<usize> {
        matches!(self, Budget::Large).then_some(40)
    }
}

impl FromStr for Budget {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "default" => Ok(Budget::Default),
            "small" => Ok(Budget::Small),
            "medium" => Ok(Budget::Medium),
            "large" => Ok(Budget::Large),
            other => Err(Error::config(format!("unknown budget `{other}`"))),
        }
    }
}

/// A strategy configured on a task with fixed run settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Problem {
    pub strategy: StrategyConfig,
    pub task: TaskConfig,
    pub popsize: usize,
    pub run: RunConfig,
    /// Concurrent trials or grid cells.
    #[serde(default = "one")]
    pub workers: usize,
}

fn one() -> usize {
    1
}

impl Problem {
    pub fn new(strategy: StrategyConfig, task: TaskConfig, popsize: usize, run: RunConfig) -> Self {
        Problem {
            strategy,
            task,
            popsize,
            run,
            workers: 1,
        }
    }

    pub fn with_params(&self, params: &BTreeMap<String, ParamValue>) -> Result<StrategyConfig> {
        let mut s = self.strategy.clone();
        for (k, v) in params {
            s.set_param(k, v)?;
        }
        Ok(s)
    }

    pub fn evaluate(&self, params: &BTreeMap<String, ParamValue>, seed: u64) -> Result<EvalReport> {
        let run = RunConfig {
            seed,
            ..self.run.clone()
        };
        run_configs(&self.with_params(params)?, &self.task, self.popsize, &run)
    }

    /// Hex SHA-256 of the problem's canonical JSON.
    pub fn digest(&self) -> String {
        let json = serde_json::to_string(self).expect("problem serializes");
        hex::encode(Sha256::digest(json.as_bytes()))
    }

    fn pool(&self) -> Result<rayon::ThreadPool> {
        rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers.max(1))
            .build()
            .map_err(|e| Error::config(format!("thread pool: {e}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub config: BTreeMap<String, ParamValue>,
    pub seed: u64,
    /// Held-out metric of the final incumbent.
    pub score: f64,
    /// Best held-out metric seen during the run.
    pub best_score: f64,
    pub incumbent_digest: String,
}

impl TrialRecord {
    fn from_report(trial: usize, config: BTreeMap<String, ParamValue>, seed: u64, r: &EvalReport) -> Result<Self> {
        if !r.final_metric.is_finite() {
            return Err(Error::NonFinite {
                what: "trial score",
                index: trial,
            });
        }
        let best_score = r
            .eval_points()
            .into_iter()
            .map(|(_, m)| m)
            .fold(r.final_metric, f64::max);
        Ok(TrialRecord {
            trial,
            config,
            seed,
            score: r.final_metric,
            best_score,
            incumbent_digest: r.incumbent_digest.clone(),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub best: TrialRecord,
    pub trials: Vec<TrialRecord>,
    /// Space used after refinement, if any.
    pub refined: Option<SearchSpace>,
}

fn argmax_trial(trials: &[TrialRecord]) -> Option<&TrialRecord> {
    trials
        .iter()
        .fold(None, |best: Option<&TrialRecord>, t| match best {
            Some(b) if b.score >= t.score => Some(b),
            _ => Some(t),
        })
}

fn run_trials(problem: &Problem, configs: Vec<(usize, BTreeMap<String, ParamValue>)>) -> Result<Vec<TrialRecord>> {
    let seed = problem.run.seed;
    problem.pool()?.install(|| {
        configs
            .into_par_iter()
            .map(|(i, c)| {
                let r = problem.evaluate(&c, seed)?;
                TrialRecord::from_report(i, c, seed, &r)
            })
            .collect()
    })
}

/// Random search over `space`. All trials share the problem's training
/// seed; configurations come from a sampler stream keyed by `seed`.
pub fn random_search(space: &SearchSpace, problem: &Problem, budget: Budget, seed: u64) -> Result<SearchResult> {
    if budget == Budget::Default {
        let r = problem.evaluate(&BTreeMap::new(), problem.run.seed)?;
        let best = TrialRecord::from_report(0, problem.strategy.params(), problem.run.seed, &r)?;
        return Ok(SearchResult {
            best,
            trials: Vec::new(),
            refined: None,
        });
    }
    space.validate()?;
    let sampler = RngStream::new(seed).split(SAMPLER_KEY);
    let draw = |sp: &SearchSpace, i: usize| sp.sample(&mut sampler.split(i as u64).generator());

    let first = budget.refine_after().unwrap_or(budget.trials());
    let mut trials = run_trials(problem, (0..first).map(|i| (i, draw(space, i))).collect())?;
    let mut refined = None;
    if first < budget.trials() {
        let mut ranked: Vec<&TrialRecord> = trials.iter().collect();
        ranked.sort_by(|a, b| b.score.total_cmp(&a.score).then(a.trial.cmp(&b.trial)));
        let top: Vec<BTreeMap<String, ParamValue>> = ranked.iter().take(10).map(|t| t.config.clone()).collect();
        let sp = refine_space(space, &top)?;
        trials.extend(run_trials(problem, (first..budget.trials()).map(|i| (i, draw(&sp, i))).collect())?);
        refined = Some(sp);
    }
    let best = argmax_trial(&trials).expect("non-empty budget").clone();
    Ok(SearchResult { best, trials, refined })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedSummary {
    pub scores: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
    pub stderr: f64,
    pub median: f64,
}

impl SeedSummary {
    pub fn from_scores(scores: Vec<f64>) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::config("summary of zero scores"));
        }
        let n = scores.len() as f64;
        let mean = scores.iter().sum::<f64>() / n;
        let std = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
        Ok(SeedSummary {
            median: median(&scores),
            stderr: std / n.sqrt(),
            mean,
            std,
            scores,
        })
    }
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Independent runs with seeds `0..num_seeds`.
pub fn multi_seed_eval(problem: &Problem, params: &BTreeMap<String, ParamValue>, num_seeds: usize) -> Result<SeedSummary> {
    if num_seeds < 2 {
        return Err(Error::config("multi-seed evaluation needs at least two seeds"));
    }
    seed_scores(problem, params, num_seeds).and_then(SeedSummary::from_scores)
}

fn seed_scores(problem: &Problem, params: &BTreeMap<String, ParamValue>, num_seeds: usize) -> Result<Vec<f64>> {
    problem.pool()?.install(|| {
        (0..num_seeds as u64)
            .into_par_iter()
            .map(|s| problem.evaluate(params, s).map(|r| r.final_metric))
            .collect()
    })
}

/// Grid axis over a strategy parameter, or over `noise_std` / `model_size` /
/// `popsize` of the problem itself.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub name: String,
    pub values: Vec<ParamValue>,
}

impl Axis {
    pub fn new(name: impl Into<String>, values: impl IntoIterator<Item = ParamValue>) -> Self {
        Axis {
            name: name.into(),
            values: values.into_iter().collect(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub assignment: BTreeMap<String, ParamValue>,
    pub summary: Option<SeedSummary>,
    pub error: Option<String>,
}

fn apply_assignment(problem: &Problem, assignment: &BTreeMap<String, ParamValue>) -> Result<(Problem, BTreeMap<String, ParamValue>)> {
    let mut p = problem.clone();
    let mut strategy_params = BTreeMap::new();
    for (k, v) in assignment {
        let num = || v.as_f64().ok_or_else(|| Error::config(format!("`{k}` expects a number")));
        match k.as_str() {
            "noise_std" => p.task = p.task.clone().with_noise(num()?),
            "model_size" => p.task = p.task.with_model_size(num()? as usize)?,
            "popsize" => p.popsize = num()? as usize,
            "generations" => p.run.generations = num()? as usize,
            "mc_evals" => p.run.mc_evals = num()? as usize,
            _ => {
                strategy_params.insert(k.clone(), v.clone());
            }
        }
    }
    Ok((p, strategy_params))
}

/// Full Cartesian product of `axes`, `seeds` runs per cell. A failing cell
/// records its error and the sweep continues.
pub fn grid_sweep(axes: &[Axis], problem: &Problem, seeds: usize) -> Result<Vec<GridCell>> {
    if axes.is_empty() || axes.iter().any(|a| a.values.is_empty()) {
        return Err(Error::config("grid axes must be non-empty"));
    }
    let mut assignments = vec![BTreeMap::new()];
    for axis in axes {
        assignments = assignments
            .into_iter()
            .flat_map(|a: BTreeMap<String, ParamValue>| {
                axis.values.iter().map(move |v| {
                    let mut next = a.clone();
                    next.insert(axis.name.clone(), v.clone());
                    next
                })
            })
            .collect();
    }
    Ok(assignments
        .into_iter()
        .map(|assignment| {
            let outcome = apply_assignment(problem, &assignment)
                .and_then(|(p, params)| seed_scores(&p, &params, seeds))
                .and_then(SeedSummary::from_scores);
            match outcome {
                Ok(s) => GridCell {
                    assignment,
                    summary: Some(s),
                    error: None,
                },
                Err(e) => GridCell {
                    assignment,
                    summary: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingCell {
    pub popsize: usize,
    pub model_size: usize,
    pub dim: usize,
    pub summary: Option<SeedSummary>,
    pub error: Option<String>,
}

/// Grid over population size and model size at a fixed generation count.
pub fn scaling_sweep(
    problem: &Problem,
    popsizes: &[usize],
    model_sizes: &[usize],
    generations: usize,
    seeds: usize,
) -> Result<Vec<ScalingCell>> {
    let mut out = Vec::new();
    for &m in model_sizes {
        let task = problem.task.with_model_size(m)?;
        let dim = task.build()?.dim();
        for &p in popsizes {
            let mut prob = problem.clone();
            prob.task = task.clone();
            prob.popsize = p;
            prob.run.generations = generations;
            let res = seed_scores(&prob, &BTreeMap::new(), seeds).and_then(SeedSummary::from_scores);
            let (summary, error) = match res {
                Ok(s) => (Some(s), None),
                Err(e) => (None, Some(e.to_string())),
            };
            out.push(ScalingCell {
                popsize: p,
                model_size: m,
                dim,
                summary,
                error,
            });
        }
    }
    Ok(out)
}

/// Running maximum of trial scores in trial order.
pub fn best_so_far(trials: &[TrialRecord]) -> Vec<f64> {
    let mut best = f64::NEG_INFINITY;
    trials
        .iter()
        .map(|t| {
            best = best.max(t.score);
            best
        })
        .collect()
}

/// Writes `trial_NNN.json` per trial and an `index.csv` with the flattened
/// configurations.
pub fn persist_trials(dir: &Path, trials: &[TrialRecord]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for t in trials {
        let path = dir.join(format!("trial_{:03}.json", t.trial));
        fs::write(&path, serde_json::to_string_pretty(t)?).map_err(|e| Error::io(&path, e))?;
    }
    let keys: BTreeSet<&String> = trials.iter().flat_map(|t| t.config.keys()).collect();
    let path = dir.join("index.csv");
    let mut w = csv::Writer::from_path(&path).map_err(|e| Error::io(&path, std::io::Error::other(e)))?;
    let mut header = vec!["trial".to_string(), "score".into(), "seed".into()];
    header.extend(keys.iter().map(|k| format!("config.{k}")));
    let csv_err = |e: csv::Error| Error::io(&path, std::io::Error::other(e));
    w.write_record(&header).map_err(csv_err)?;
    for t in trials {
        let mut row = vec![t.trial.to_string(), t.score.to_string(), t.seed.to_string()];
        row.extend(keys.iter().map(|k| t.config.get(*k).map(|v| v.to_string()).unwrap_or_default()));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Reads back every `trial_*.json` in `dir`, ordered by trial index.
pub fn load_trials(dir: &Path) -> Result<Vec<TrialRecord>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_trial = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("trial_") && n.ends_with(".json"));
        if is_trial {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            out.push(serde_json::from_str::<TrialRecord>(&text)?);
        }
    }
    out.sort_by_key(|t| t.trial);
    Ok(out)
}

/// Task given either by id (`"sphere:10"`) or as a full table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TaskRef {
    Id(String),
    Config(TaskConfig),
}

impl TaskRef {
    pub fn resolve(&self) -> Result<TaskConfig> {
        match self {
            TaskRef::Id(s) => s.parse(),
            TaskRef::Config(c) => Ok(c.clone()),
        }
    }
}

/// Declarative experiment description (TOML or JSON).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub strategy: StrategyKind,
    pub task: TaskRef,
    #[serde(default = "default_budget")]
    pub budget: Budget,
    #[serde(default)]
    pub popsize: Option<usize>,
    /// Run settings; the task's defaults apply when absent.
    #[serde(default)]
    pub run: Option<RunConfig>,
    /// Fixed strategy parameters applied before tuning.
    #[serde(default)]
    pub strategy_params: BTreeMap<String, ParamValue>,
    /// Replaces or adds domains of the default search space.
    #[serde(default)]
    pub space: BTreeMap<String, Domain>,
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    #[serde(default = "one")]
    pub workers: usize,
    #[serde(default)]
    pub out: Option<std::path::PathBuf>,
    #[serde(default)]
    pub data_dir: Option<std::path::PathBuf>,
}

fn default_budget() -> Budget {
    Budget::Small
}

fn default_seeds() -> usize {
    5
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let is_json = path.extension().is_some_and(|e| e == "json");
        if is_json {
            Ok(serde_json::from_str(&text)?)
        } else {
            toml::from_str(&text).map_err(|e| Error::Serialization(format!("{}: {e}", path.display())))
        }
    }

    pub fn problem(&self) -> Result<Problem> {
        let mut task = self.task.resolve()?;
        if let (Some(dir), crate::tasks::TaskKind::Classification(c)) = (&self.data_dir, &mut task.kind) {
            c.data_dir = dir.clone();
        }
        let mut strategy = StrategyConfig::default_for(self.strategy);
        for (k, v) in &self.strategy_params {
            strategy.set_param(k, v)?;
        }
        let spec = task.build()?.spec();
        let run = self.run.clone().unwrap_or_else(|| RunConfig {
            generations: spec.generations,
            eval_every: spec.eval_every,
            mc_evals: spec.mc_evals,
            ..RunConfig::default()
        });
        let mut p = Problem::new(strategy, task, self.popsize.unwrap_or(spec.popsize), run);
        p.workers = self.workers;
        Ok(p)
    }

    pub fn space(&self) -> SearchSpace {
        let mut s = SearchSpace::default_for(self.strategy);
        for (k, d) in &self.space {
            s.params.insert(k.clone(), d.clone());
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(pairs: &[(&str, ParamValue)]) -> BTreeMap<String, ParamValue> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
    }

    #[test]
    fn refine_envelope_and_restriction() {
        let mut space = SearchSpace::default_for(StrategyKind::GaussianGa);
        space.validate().unwrap();
        let top = vec![
            cfg(&[("sigma0", 0.02.into()), ("elite_ratio", 0.2.into())]),
            cfg(&[("sigma0", 0.09.into()), ("elite_ratio", 0.2.into())]),
            cfg(&[("sigma0", 0.05.into()), ("elite_ratio", 0.2.into())]),
        ];
        let r = refine_space(&space, &top).unwrap();
        assert_eq!(r.params["sigma0"], Domain::LogUniform { low: 0.02, high: 0.09 });
        assert_eq!(r.params["elite_ratio"], Domain::Categorical { values: vec![0.2.into()] });
        assert!(r.is_subset_of(&space));
        space.params.clear();
        assert!(space.validate().is_err());
    }

    #[test]
    fn degenerate_range_widens_then_clips() {
        let space = SearchSpace::default_for(StrategyKind::OpenaiEs);
        let top = vec![
            cfg(&[("sigma0", 0.15.into()), ("alpha0", 0.01.into())]),
            cfg(&[("sigma0", 0.15.into()), ("alpha0", 0.02.into())]),
        ];
        let r = refine_space(&space, &top).unwrap();
        match r.params["sigma0"] {
            Domain::LogUniform { low, high } => {
                assert!((low - 0.1425).abs() < 1e-12);
                assert_eq!(high, 0.15);
            }
            _ => panic!(),
        }
        assert!(refine_space(&space, &top[..1]).is_err());
    }

    #[test]
    fn seed_summary_statistics() {
        let s = SeedSummary::from_scores(vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(s.mean, 3.0);
        assert_eq!(s.median, 3.0);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-15);
        assert!((s.stderr - (2.0f64 / 5.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn budgets() {
        assert_eq!(
            [Budget::Default, Budget::Small, Budget::Medium, Budget::Large].map(Budget::trials),
            [0, 20, 40, 50]
        );
        assert_eq!(Budget::Large.refine_after(), Some(40));
        assert_eq!("medium".parse::<Budget>().unwrap(), Budget::Medium);
    }

    #[test]
    fn default_spaces_are_valid() {
        for kind in StrategyKind::ALL {
            SearchSpace::default_for(kind).validate().unwrap();
        }
        let snes = SearchSpace::default_for(StrategyKind::Snes);
        assert_eq!(snes.params["beta"], categorical(steps(10.0, 40.0, 5.0)));
        if let Domain::Categorical { values } = &snes.params["beta"] {
            assert_eq!(values.len(), 7);
        }
    }

    #[test]
    fn experiment_config_from_toml() {
        let text = r#"
            strategy = "openai_es"
            task = "sphere:4"
            budget = "small"
            popsize = 8
            seeds = 3

            [run]
            generations = 5

            [space.sigma0]
            kind = "uniform"
            low = 0.02
            high = 0.04
        "#;
        let e: ExperimentConfig = toml::from_str(text).unwrap();
        let p = e.problem().unwrap();
        assert_eq!(p.popsize, 8);
        assert_eq!(p.run.generations, 5);
        assert_eq!(e.space().params["sigma0"], Domain::Uniform { low: 0.02, high: 0.04 });
    }
}
