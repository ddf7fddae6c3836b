use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use evobench::evaluator::{budget_pairs, resource_sweep};
use evobench::protocol::{
    grid_sweep, multi_seed_eval, persist_trials, random_search, scaling_sweep, Axis, Budget,
    ExperimentConfig, Problem, TaskRef, TrialRecord,
};
use evobench::report::{
    self, best_so_far_curve, normalize_and_aggregate, Format, Leaderboard, PlotPoint, ScoreRow, Stat,
};
use evobench::strategies::{ParamValue, StrategyKind};
use evobench::tasks::classify::write_synthetic;
use evobench::Error;

#[derive(Parser)]
#[command(name = "neb", version, about = "Benchmark evolutionary optimizers on a task battery")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one strategy on one task.
    Run(RunArgs),
    /// Random-search hyperparameter tuning.
    Tune(TuneArgs),
    /// Re-evaluate a configuration over several seeds.
    Reeval(ReevalArgs),
    /// Cartesian sweep over parameters.
    Grid(GridArgs),
    /// Population size vs. evaluations per member at a fixed budget.
    Resources(ResourcesArgs),
    /// Population size vs. model size at fixed generations.
    Scaling(ScalingArgs),
    /// Aggregate score files into leaderboards and plot data.
    Report(ReportArgs),
    /// Write a small synthetic image classification dataset in IDX format.
    DataSynth(SynthArgs),
}

#[derive(Args, Clone)]
struct Common {
    #[arg(long)]
    strategy: Option<StrategyKind>,
    /// Task id, e.g. `sphere:10`, `cartpole`, `addition-short`.
    #[arg(long)]
    task: Option<String>,
    /// Experiment file (TOML or JSON); flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    popsize: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    eval_every: Option<usize>,
    #[arg(long)]
    mc_evals: Option<usize>,
    #[arg(long)]
    noise: Option<f64>,
    /// Directory holding the IDX files of the classification task.
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Strategy parameter override, `name=value`.
    #[arg(long = "set", value_parser = parse_kv)]
    set: Vec<(String, ParamValue)>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
    /// JSON-lines trajectory output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Include wall-clock timings in the trajectory.
    #[arg(long)]
    wall_clock: bool,
}

#[derive(Args)]
struct TuneArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    budget: Option<Budget>,
    #[arg(long, default_value = "out/tune")]
    out: PathBuf,
}

#[derive(Args)]
struct ReevalArgs {
    #[command(flatten)]
    common: Common,
    /// Trial record (e.g. `best.json` from `tune`) whose config is used.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, default_value = "out/reeval")]
    out: PathBuf,
}

#[derive(Args)]
struct GridArgs {
    #[command(flatten)]
    common: Common,
    /// Axis `name=v1,v2,...`; repeatable.
    #[arg(long = "axis", value_parser = parse_axis, required = true)]
    axes: Vec<Axis>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, default_value = "out/grid")]
    out: PathBuf,
}

#[derive(Args)]
struct ResourcesArgs {
    #[command(flatten)]
    common: Common,
    /// Evaluations per generation, population size times evaluations per member.
    #[arg(long, default_value_t = 256)]
    budget_evals: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
    evals: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "0,0.5")]
    noise_levels: Vec<f64>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, default_value = "out/resources")]
    out: PathBuf,
}

#[derive(Args)]
struct ScalingArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_delimiter = ',', default_value = "16,64,256")]
    pops: Vec<usize>,
    /// Model sizes (hidden width or problem dimension).
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, default_value = "out/scaling")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    /// Score csv files, or directories containing `scores.csv`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "out/report")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 2000)]
    train: usize,
    #[arg(long, default_value_t = 500)]
    test: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn parse_value(v: &str) -> ParamValue {
    v.parse::<f64>().map(ParamValue::Real).unwrap_or_else(|_| ParamValue::from(v))
}

fn parse_kv(s: &str) -> Result<(String, ParamValue), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    Ok((k.trim().to_string(), parse_value(v.trim())))
}

fn parse_axis(s: &str) -> Result<Axis, String> {
    let (k, vs) = s.split_once('=').ok_or_else(|| format!("expected name=v1,v2, got `{s}`"))?;
    Ok(Axis::new(k.trim(), vs.split(',').map(|v| parse_value(v.trim()))))
}

impl Common {
    fn experiment(&self) -> anyhow::Result<ExperimentConfig> {
        let mut e = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => {
                let (Some(strategy), Some(task)) = (self.strategy, &self.task) else {
                    return Err(Error::config("--strategy and --task are required without --config").into());
                };
                ExperimentConfig {
                    strategy,
                    task: TaskRef::Id(task.clone()),
                    budget: Budget::Small,
                    popsize: None,
                    run: None,
                    strategy_params: BTreeMap::new(),
                    space: BTreeMap::new(),
                    seeds: 5,
                    workers: 1,
                    out: None,
                    data_dir: None,
                }
            }
        };
        if let Some(s) = self.strategy {
            e.strategy = s;
        }
        if let Some(t) = &self.task {
            e.task = TaskRef::Id(t.clone());
        }
        if self.popsize.is_some() {
            e.popsize = self.popsize;
        }
        if self.data_dir.is_some() {
            e.data_dir = self.data_dir.clone();
        }
        e.strategy_params.extend(self.set.iter().cloned());
        Ok(e)
    }

    fn problem(&self) -> anyhow::Result<(ExperimentConfig, Problem)> {
        let e = self.experiment()?;
        let mut p = e.problem()?;
        if let Some(v) = self.seed {
            p.run.seed = v;
        }
        if let Some(v) = self.threads {
            p.run.threads = v;
        }
        if let Some(v) = self.generations {
            p.run.generations = v;
        }
        if let Some(v) = self.eval_every {
            p.run.eval_every = v;
        }
        if let Some(v) = self.mc_evals {
            p.run.mc_evals = v;
        }
        if let Some(v) = self.noise {
            p.task = p.task.with_noise(v);
        }
        Ok((e, p))
    }
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> anyhow::Result<()> {
    report::write_file(path, serde_json::to_string_pretty(value)?.as_bytes())?;
    Ok(())
}

fn score_rows(problem: &Problem, scores: &[f64]) -> Vec<ScoreRow> {
    scores
        .iter()
        .enumerate()
        .map(|(s, v)| ScoreRow {
            strategy: problem.strategy.kind.name().to_string(),
            task: problem.task.id(),
            seed: s as u64,
            score: *v,
        })
        .collect()
}

fn cmd_run(a: RunArgs) -> anyhow::Result<()> {
    let (_, p) = a.common.problem()?;
    let r = p.evaluate(&BTreeMap::new(), p.run.seed)?;
    if let Some(out) = &a.out {
        report::write_file(out, r.to_jsonl(a.wall_clock)?.as_bytes())?;
    }
    println!(
        "{} on {} (d={}, pop={}, seed={}): final metric {} | initial {} | incumbent {}",
        r.strategy, r.task, r.dim, r.popsize, r.seed, r.final_metric, r.initial_metric, &r.incumbent_digest[..16]
    );
    Ok(())
}

fn cmd_tune(a: TuneArgs) -> anyhow::Result<()> {
    let (e, p) = a.common.problem()?;
    let budget = a.budget.unwrap_or(e.budget);
    let res = random_search(&e.space(), &p, budget, p.run.seed)?;
    persist_trials(&a.out.join("trials"), &res.trials)?;
    write_json(&a.out.join("best.json"), &res.best)?;
    if let Some(sp) = &res.refined {
        write_json(&a.out.join("refined_space.json"), sp)?;
    }
    let scores: Vec<f64> = res.trials.iter().map(|t| t.score).collect();
    let points: Vec<PlotPoint> = best_so_far_curve(&scores)
        .into_iter()
        .enumerate()
        .map(|(i, y)| PlotPoint {
            plot: format!("tuning:{}", p.task.id()),
            series: p.strategy.kind.name().to_string(),
            x: (i + 1) as f64,
            y,
        })
        .collect();
    report::write_file(&a.out.join("plotdata.csv"), &report::render_plot(&points, &p.digest())?)?;
    println!(
        "{} trials, best trial {} score {} config {}",
        res.trials.len(),
        res.best.trial,
        res.best.score,
        serde_json::to_string(&res.best.config)?
    );
    Ok(())
}

fn cmd_reeval(a: ReevalArgs) -> anyhow::Result<()> {
    let (e, p) = a.common.problem()?;
    let params = match &a.params {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str::<TrialRecord>(&text)?.config
        }
        None => BTreeMap::new(),
    };
    let seeds = a.seeds.unwrap_or(e.seeds);
    let summary = multi_seed_eval(&p, &params, seeds)?;
    let rows = score_rows(&p, &summary.scores);
    report::emit(&rows, Format::Csv, &a.out, &p.digest())?;
    write_json(&a.out.join("summary.json"), &summary)?;
    println!(
        "{} seeds: mean {} stderr {} median {}",
        seeds, summary.mean, summary.stderr, summary.median
    );
    Ok(())
}

fn cmd_grid(a: GridArgs) -> anyhow::Result<()> {
    let (e, p) = a.common.problem()?;
    let cells = grid_sweep(&a.axes, &p, a.seeds.unwrap_or(e.seeds))?;
    write_json(&a.out.join("grid.json"), &cells)?;
    for c in &cells {
        let label = serde_json::to_string(&c.assignment)?;
        match (&c.summary, &c.error) {
            (Some(s), _) => println!("{label}: median {} mean {}", s.median, s.mean),
            (_, Some(err)) => println!("{label}: failed: {err}"),
            _ => {}
        }
    }
    Ok(())
}

fn cmd_resources(a: ResourcesArgs) -> anyhow::Result<()> {
    let (e, p) = a.common.problem()?;
    let pairs = budget_pairs(a.budget_evals, &a.evals)?;
    let seeds: Vec<u64> = (0..a.seeds.unwrap_or(e.seeds) as u64).collect();
    let cells = resource_sweep(&p.strategy, &p.task, &pairs, &a.noise_levels, &seeds, &p.run)?;
    let points: Vec<PlotPoint> = cells
        .iter()
        .map(|c| PlotPoint {
            plot: format!("noise={}", c.noise_std),
            series: format!("pop={},evals={}", c.popsize, c.mc_evals),
            x: c.seed as f64,
            y: c.report.final_metric,
        })
        .collect();
    report::write_file(&a.out.join("plotdata.csv"), &report::render_plot(&points, &p.digest())?)?;
    for pt in &points {
        println!("{} {} seed {}: {}", pt.plot, pt.series, pt.x, pt.y);
    }
    Ok(())
}

fn cmd_scaling(a: ScalingArgs) -> anyhow::Result<()> {
    let (e, p) = a.common.problem()?;
    if a.sizes.is_empty() {
        bail!(Error::config("--sizes needs at least one model size"));
    }
    let cells = scaling_sweep(&p, &a.pops, &a.sizes, p.run.generations, a.seeds.unwrap_or(e.seeds))?;
    write_json(&a.out.join("scaling.json"), &cells)?;
    for c in &cells {
        match (&c.summary, &c.error) {
            (Some(s), _) => println!("pop {} size {} (d={}): median {}", c.popsize, c.model_size, c.dim, s.median),
            (_, Some(err)) => println!("pop {} size {}: failed: {err}", c.popsize, c.model_size),
            _ => {}
        }
    }
    Ok(())
}

fn cmd_report(a: ReportArgs) -> anyhow::Result<()> {
    let mut rows = Vec::new();
    let mut digests = Vec::new();
    for input in &a.inputs {
        let path = if input.is_dir() { input.join(Format::Csv.file_name()) } else { input.clone() };
        let bytes = std::fs::read(&path).map_err(|e| Error::io(&path, e))?;
        let (r, d) = report::parse(&bytes, Format::Csv)?;
        rows.extend(r);
        digests.extend(d);
    }
    digests.sort();
    digests.dedup();
    let digest = match digests.as_slice() {
        [one] => one.clone(),
        many => hex::encode(Sha256::digest(many.join(",").as_bytes())),
    };
    let boards = Leaderboard::from_scores(&rows)?;
    report::write_file(&a.out.join("leaderboard.csv"), &report::render_leaderboards(&boards, &digest)?)?;
    for fmt in [Format::Csv, Format::Jsonl, Format::Plotdata] {
        report::emit(&rows, fmt, &a.out, &digest)?;
    }
    for b in &boards {
        println!("{}", b.task);
        for (i, r) in b.rows.iter().enumerate() {
            println!("  {:>2}. {:<12} mean {:.6} ± {:.6}  median {:.6}", i + 1, r.strategy, r.mean, r.stderr, r.median);
        }
    }
    if boards.iter().all(|b| b.rows.len() >= 2) {
        let aggs = [
            normalize_and_aggregate(&boards, Stat::Median)?,
            normalize_and_aggregate(&boards, Stat::Mean)?,
        ];
        report::write_file(&a.out.join("aggregate.csv"), &report::render_aggregates(&aggs, &digest)?)?;
        println!("normalized median performance");
        for (s, v) in &aggs[0].ranking {
            println!("  {s:<12} {v:.4}");
        }
    }
    Ok(())
}

fn cmd_synth(a: SynthArgs) -> anyhow::Result<()> {
    let cfg = write_synthetic(&a.out, a.train, a.test, a.seed)?;
    println!("wrote {} train / {} test images to {}", a.train, a.test, cfg.data_dir.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let res = match cli.cmd {
        Cmd::Run(a) => cmd_run(a),
        Cmd::Tune(a) => cmd_tune(a),
        Cmd::Reeval(a) => cmd_reeval(a),
        Cmd::Grid(a) => cmd_grid(a),
        Cmd::Resources(a) => cmd_resources(a),
        Cmd::Scaling(a) => cmd_scaling(a),
        Cmd::Report(a) => cmd_report(a),
        Cmd::DataSynth(a) => cmd_synth(a),
    };
    match res {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = e.downcast_ref::<Error>().map_or(1, Error::exit_code);
            ExitCode::from(code as u8)
        }
    }
}
