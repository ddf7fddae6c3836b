//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! `ACCEPTANCE_ONLY=3,7 cargo test --test acceptance` runs a subset.

use std::collections::BTreeMap;
use std::sync::OnceLock;
use std::time::Instant;

use evobench::evaluator::{budget_pairs, resource_sweep, run_configs, RunConfig};
use evobench::protocol::{
    grid_sweep, median, multi_seed_eval, random_search, refine_space, Axis, Budget, Domain, Problem, SearchResult,
    SearchSpace,
};
use evobench::report::{best_so_far_curve, normalize_and_aggregate, Leaderboard, ScoreRow, Stat};
use evobench::shaping::{centered_ranks, range_norm, softmax_utility, z_score, RangeMode};
use evobench::strategies::{fd_gradient, ParamValue};
use evobench::tasks::bbob::{BbobConfig, BbobFunction};
use evobench::tasks::classify::write_synthetic;
use evobench::tasks::idx::{parse, serialize, IdxArray, IdxError};
use evobench::tasks::{AdditionConfig, CartPoleConfig, TaskKind};
use evobench::{RngStream, StrategyConfig, StrategyKind, TaskConfig};
use rand::Rng;

type Res<T> = Result<T, Box<dyn std::error::Error>>;

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: impl Into<String>) -> Res<Verdict> {
    Ok(Verdict {
        pass,
        detail: detail.into(),
    })
}

fn run(generations: usize) -> RunConfig {
    RunConfig {
        generations,
        eval_every: 0,
        ..RunConfig::default()
    }
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
}

// 1 ---------------------------------------------------------------------

fn fd_gradient_fidelity() -> Res<Verdict> {
    let d = 10;
    let n = 100_000;
    let sigma = 0.05;
    let a: Vec<f64> = (0..d).map(|i| 1.0 + i as f64).collect();
    let x0: Vec<f64> = (0..d).map(|i| 1.5 - 0.3 * i as f64).collect();
    let mut cfg = StrategyConfig::default_for(StrategyKind::OpenaiEs);
    cfg.sigma0 = sigma;
    let es = cfg.build(d, n)?;
    let state = es.initialize(&x0, &RngStream::new(11))?;
    let cands = es.ask(&state, &RngStream::new(11).split(1), n)?;
    let values: Vec<f64> = cands
        .iter()
        .map(|c| c.params.iter().zip(&a).map(|(x, ai)| ai * x * x).sum())
        .collect();
    let eps: Vec<&[f64]> = cands
        .iter()
        .map(|c| c.perturbation.as_deref().ok_or("missing perturbation"))
        .collect::<Result<_, _>>()?;
    let g = fd_gradient(&values, &eps, &vec![sigma; d]);
    let exact: Vec<f64> = x0.iter().zip(&a).map(|(x, ai)| 2.0 * ai * x).collect();
    let err = g.iter().zip(&exact).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let rel = err / exact.iter().map(|v| v * v).sum::<f64>().sqrt();
    verdict(rel < 0.02, format!("relative l2 error {rel:.4} (< 0.02)"))
}

// 2 ---------------------------------------------------------------------

fn shaping_suite() -> Res<Verdict> {
    let tol = 1e-9;
    let mut failures = Vec::new();
    let mut check = |name: &str, ok: bool| {
        if !ok {
            failures.push(name.to_string());
        }
    };
    let s15 = 1.5f64.sqrt();
    check("centered ranks", close(&centered_ranks(&[0.1, 0.5, 0.3, 0.2])?, &[0.25, -0.5, -0.25, 0.0], tol));
    check("centered ranks singleton", close(&centered_ranks(&[7.0])?, &[-0.5], tol));
    check("z-score", close(&z_score(&[1.0, 2.0, 3.0])?, &[-s15, 0.0, s15], tol));
    check("z-score constant", close(&z_score(&[4.0, 4.0, 4.0])?, &[0.0; 3], tol));
    check("range intended", close(&range_norm(&[2.0, 4.0, 6.0], RangeMode::Intended)?, &[-1.0, 0.0, 1.0], tol));
    check("range literal", close(&range_norm(&[2.0, 4.0, 6.0], RangeMode::Literal)?, &[2.0, 3.0, 4.0], tol));
    check("range two-point", close(&range_norm(&[-1.0, 1.0], RangeMode::Intended)?, &[-1.0, 1.0], tol));
    check(
        "softmax beta 20",
        close(
            &softmax_utility(&[1.0, 2.0, 3.0, 4.0], 20.0)?,
            &[3.038411675056506e-07, 4.509402753492875e-05, 0.006692547083117351, 0.9932620550481802],
            tol,
        ),
    );
    check("softmax singleton", close(&softmax_utility(&[3.0], 20.0)?, &[1.0], tol));
    check("softmax cold limit", close(&softmax_utility(&[1.0, 5.0, 2.0], 1e-12)?, &[1.0 / 3.0; 3], 1e-9));

    let root = RngStream::new(2024);
    let mut violations = 0;
    for i in 0..1000u64 {
        let mut rng = root.split(i).generator();
        let n = rng.random_range(2..40);
        let f: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let g: Vec<f64> = f.iter().map(|v: &f64| v.powi(3) + v.exp()).collect();
        let beta = rng.random_range(0.5..40.0);
        let ok = centered_ranks(&f)? == centered_ranks(&g)?
            && close(&softmax_utility(&f, beta)?, &softmax_utility(&g, beta)?, 1e-12)
            && z_score(&f)?.iter().sum::<f64>().abs() < 1e-9
            && (softmax_utility(&f, beta)?.iter().sum::<f64>() - 1.0).abs() < 1e-12;
        if !ok {
            violations += 1;
        }
    }
    check("monotone invariance", violations == 0);
    let pass = failures.is_empty();
    verdict(
        pass,
        if pass {
            "10 formula fixtures and 1000 invariance instances".to_string()
        } else {
            format!("failed: {}", failures.join(", "))
        },
    )
}

// 3 ---------------------------------------------------------------------

fn convergence_battery() -> Res<Verdict> {
    let task: TaskConfig = "sphere:10".parse()?;
    let mut lines = Vec::new();
    let mut pass = true;
    for kind in StrategyKind::ALL {
        let p = Problem::new(StrategyConfig::default_for(kind), task.clone(), 32, run(2000));
        let s = multi_seed_eval(&p, &BTreeMap::new(), 3)?;
        let f = -s.median;
        let target = if kind == StrategyKind::SepCmaEs { 1e-6 } else { 1e-2 };
        pass &= f <= target;
        lines.push(format!("{}={f:.1e}", kind.name()));
    }
    verdict(pass, lines.join(" "))
}

// 4 and 5 share one Large-budget search per (strategy, task). A Small
// search draws the same configurations as the first 20 Large trials.

struct BatteryTask {
    task: TaskConfig,
    popsize: usize,
    generations: usize,
}

fn battery() -> Vec<BatteryTask> {
    let bbob = |f: &str| BatteryTask {
        task: format!("{f}:10").parse().expect("bbob id"),
        popsize: 32,
        generations: 100,
    };
    vec![
        bbob("sphere"),
        bbob("rastrigin"),
        bbob("rosenbrock"),
        BatteryTask {
            task: TaskConfig::new(TaskKind::Addition(desk_addition())),
            popsize: 16,
            generations: 500,
        },
        BatteryTask {
            task: TaskConfig::new(TaskKind::CartPole(CartPoleConfig {
                hidden: vec![16],
                eval_episodes: 4,
                ..CartPoleConfig::default()
            })),
            popsize: 32,
            generations: 50,
        },
    ]
}

fn desk_addition() -> AdditionConfig {
    AdditionConfig::short()
}

struct BatteryRun {
    task: String,
    strategy: StrategyKind,
    problem: Problem,
    search: SearchResult,
}

fn battery_runs() -> &'static Result<Vec<BatteryRun>, String> {
    static CELL: OnceLock<Result<Vec<BatteryRun>, String>> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut out = Vec::new();
        for bt in battery() {
            for kind in StrategyKind::ALL {
                let problem = Problem::new(
                    StrategyConfig::default_for(kind),
                    bt.task.clone(),
                    bt.popsize,
                    run(bt.generations),
                );
                let search = random_search(&SearchSpace::default_for(kind), &problem, Budget::Large, 1)
                    .map_err(|e| format!("{} on {}: {e}", kind.name(), bt.task.id()))?;
                out.push(BatteryRun {
                    task: bt.task.id(),
                    strategy: kind,
                    problem,
                    search,
                });
            }
        }
        Ok(out)
    })
}

fn battery_or_err() -> Res<&'static [BatteryRun]> {
    battery_runs().as_ref().map(Vec::as_slice).map_err(|e| e.clone().into())
}

fn es_vs_ga() -> Res<Verdict> {
    let runs = battery_or_err()?;
    let mut rows = Vec::new();
    for r in runs {
        let small = &r.search.trials[..Budget::Small.trials()];
        let best = small
            .iter()
            .fold(&small[0], |b, t| if t.score > b.score { t } else { b });
        let s = multi_seed_eval(&r.problem, &best.config, 3)?;
        rows.extend(s.scores.iter().enumerate().map(|(seed, score)| ScoreRow {
            strategy: r.strategy.name().into(),
            task: r.task.clone(),
            seed: seed as u64,
            score: *score,
        }));
    }
    let agg = normalize_and_aggregate(&Leaderboard::from_scores(&rows)?, Stat::Median)?;
    let group = |ga: bool| {
        let v: Vec<f64> = StrategyKind::ALL
            .iter()
            .filter(|k| k.is_ga() == ga)
            .filter_map(|k| agg.score(k.name()))
            .collect();
        median(&v)
    };
    let (es, ga) = (group(false), group(true));
    let ranking: Vec<String> = agg.ranking.iter().map(|(s, v)| format!("{s}={v:.2}")).collect();
    verdict(es > ga, format!("ES {es:.3} vs GA {ga:.3}; {}", ranking.join(" ")))
}

fn budget_saturation() -> Res<Verdict> {
    let runs = battery_or_err()?;
    let mut tasks: Vec<&str> = runs.iter().map(|r| r.task.as_str()).collect();
    tasks.dedup();
    let curves: BTreeMap<(&str, StrategyKind), Vec<f64>> = runs
        .iter()
        .map(|r| {
            let scores: Vec<f64> = r.search.trials.iter().map(|t| t.score).collect();
            ((r.task.as_str(), r.strategy), best_so_far_curve(&scores))
        })
        .collect();
    // Per task, curves are normalized by the band between the worst first
    // trial and the best final value across strategies.
    let mut saturated = 0;
    let mut lines = Vec::new();
    for kind in StrategyKind::ALL {
        let (mut at20, mut at50) = (0.0, 0.0);
        for t in &tasks {
            let lo = StrategyKind::ALL
                .iter()
                .map(|k| curves[&(*t, *k)][0])
                .fold(f64::INFINITY, f64::min);
            let hi = StrategyKind::ALL
                .iter()
                .map(|k| curves[&(*t, *k)][49])
                .fold(f64::NEG_INFINITY, f64::max);
            let c = &curves[&(*t, kind)];
            let norm = |v: f64| if hi > lo { (v - lo) / (hi - lo) } else { 1.0 };
            at20 += norm(c[19]) / tasks.len() as f64;
            at50 += norm(c[49]) / tasks.len() as f64;
        }
        let ok = at20 >= 0.95 * at50;
        saturated += ok as usize;
        lines.push(format!("{}={:.3}/{:.3}", kind.name(), at20, at50));
    }
    verdict(
        saturated >= 6,
        format!("{saturated}/8 strategies at >= 95% by trial 20; {}", lines.join(" ")),
    )
}

// 6 ---------------------------------------------------------------------

fn resource_allocation() -> Res<Verdict> {
    let pairs = budget_pairs(256, &[1, 8])?;
    let seeds = [0, 1, 2];
    let cells = resource_sweep(
        &StrategyConfig::default_for(StrategyKind::OpenaiEs),
        &"sphere:10".parse()?,
        &pairs,
        &[0.0, 0.5],
        &seeds,
        &run(100),
    )?;
    let med = |p: usize, noise: f64| {
        let v: Vec<f64> = cells
            .iter()
            .filter(|c| c.popsize == p && c.noise_std == noise)
            .map(|c| c.report.final_metric)
            .collect();
        median(&v)
    };
    let mut pass = true;
    let mut lines = Vec::new();
    for noise in [0.0, 0.5] {
        let (big, small) = (med(256, noise), med(32, noise));
        pass &= big >= small;
        lines.push(format!("noise {noise}: (256,1) {big:.3e} vs (32,8) {small:.3e}"));
    }
    verdict(pass, lines.join("; "))
}

// 7 ---------------------------------------------------------------------

fn mean_decay() -> Res<Verdict> {
    let task = TaskConfig::new(TaskKind::Bbob(BbobConfig {
        function: BbobFunction::Sphere,
        dim: 20,
        shift_seed: Some(3),
    }));
    let problem = Problem::new(StrategyConfig::default_for(StrategyKind::OpenaiEs), task, 32, run(300));
    let lambdas = [0.0, 1e-3, 1e-2, 1e-1];
    let cells = grid_sweep(&[Axis::new("mean_decay", lambdas.map(ParamValue::from))], &problem, 3)?;
    let meds: Vec<f64> = cells
        .iter()
        .map(|c| c.summary.as_ref().map(|s| s.median).ok_or("grid cell failed"))
        .collect::<Result<_, _>>()?;
    let best_small = meds[..3].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let detail: Vec<String> = lambdas.iter().zip(&meds).map(|(l, m)| format!("{l}: {m:.3e}")).collect();
    verdict(meds[3] < best_small, detail.join(", "))
}

// 8 ---------------------------------------------------------------------

fn population_scaling() -> Res<Verdict> {
    let tasks = [
        ("sphere:10".parse::<TaskConfig>()?),
        TaskConfig::new(TaskKind::Addition(desk_addition())),
    ];
    let mut pass = true;
    let mut lines = Vec::new();
    for task in tasks {
        let mut meds = Vec::new();
        for pop in [16, 64, 256] {
            let p = Problem::new(StrategyConfig::default_for(StrategyKind::OpenaiEs), task.clone(), pop, run(300));
            meds.push(multi_seed_eval(&p, &BTreeMap::new(), 3)?.median);
        }
        pass &= meds.windows(2).all(|w| w[0] <= w[1]);
        lines.push(format!("{}: {:.4e} <= {:.4e} <= {:.4e}", task.id(), meds[0], meds[1], meds[2]));
    }
    verdict(pass, lines.join("; "))
}

// 9 ---------------------------------------------------------------------

fn determinism() -> Res<Verdict> {
    let dir = tempfile::tempdir()?;
    let mut classify = write_synthetic(dir.path(), 200, 100, 5)?;
    classify.hidden = vec![6];
    classify.batch = 32;
    let tasks = [
        "sphere:6".parse::<TaskConfig>()?,
        "rastrigin:6".parse::<TaskConfig>()?.with_noise(0.3),
        TaskConfig::new(TaskKind::CartPole(CartPoleConfig {
            hidden: vec![8],
            episode_steps: 100,
            ..CartPoleConfig::default()
        })),
        TaskConfig::new(TaskKind::Addition(AdditionConfig {
            seq_len: 20,
            batch: 8,
            eval_batch: 16,
            ..desk_addition()
        })),
        TaskConfig::new(TaskKind::Classification(classify)),
    ];
    let picker = RngStream::new(99);
    let mut lines = Vec::new();
    let mut pass = true;
    for i in 0..8 {
        let mut rng = picker.split(i).generator();
        let kind = StrategyKind::ALL[rng.random_range(0..StrategyKind::ALL.len())];
        let task = &tasks[rng.random_range(0..tasks.len())];
        let cfg = |threads| RunConfig {
            generations: 12,
            eval_every: 3,
            mc_evals: 2,
            seed: rng_seed(i),
            threads,
            record_evals: true,
            init_mean: None,
        };
        let strategy = StrategyConfig::default_for(kind);
        let a = run_configs(&strategy, task, 16, &cfg(1))?.to_jsonl(false)?;
        let b = run_configs(&strategy, task, 16, &cfg(8))?.to_jsonl(false)?;
        pass &= a == b;
        lines.push(format!("{}@{}", kind.name(), task.id()));
    }
    verdict(pass, format!("threads 1 vs 8 identical for {}", lines.join(", ")))
}

fn rng_seed(i: u64) -> u64 {
    1000 + 17 * i
}

// 10 --------------------------------------------------------------------

fn addition_learnability() -> Res<Verdict> {
    let task = TaskConfig::new(TaskKind::Addition(AdditionConfig {
        eval_batch: 1024,
        ..desk_addition()
    }));
    let kind = StrategyKind::OpenaiEs;
    let problem = Problem::new(StrategyConfig::default_for(kind), task, 128, run(1500));
    let search = random_search(&SearchSpace::default_for(kind), &problem, Budget::Small, 0)?;
    let mae = -search.best.score;
    verdict(
        mae < 1.0 / 3.0,
        format!("test MAE {mae:.4} (< 0.3333) with {:?}", search.best.config),
    )
}

// 11 --------------------------------------------------------------------

fn protocol_mechanics() -> Res<Verdict> {
    let kind = StrategyKind::Ars;
    let space = SearchSpace::default_for(kind);
    let problem = Problem::new(StrategyConfig::default_for(kind), "sphere:3".parse()?, 8, run(5));
    let res = random_search(&space, &problem, Budget::Large, 4)?;
    let refined = res.refined.as_ref().ok_or("no refinement stage")?;
    let contained = res.trials[40..].iter().all(|t| refined.contains(&t.config));
    let indexed = res.trials.iter().enumerate().all(|(i, t)| t.trial == i);

    let root = RngStream::new(77);
    let mut violations = 0;
    for i in 0..500u64 {
        let mut rng = root.split(i).generator();
        let mut original = SearchSpace::default();
        for j in 0..rng.random_range(1..5) {
            let low: f64 = rng.random_range(0.001..1.0);
            let high = low * rng.random_range(1.01..100.0);
            let d = match rng.random_range(0..3) {
                0 => Domain::LogUniform { low, high },
                1 => Domain::Uniform { low: -high, high },
                _ => Domain::Categorical {
                    values: (0..rng.random_range(1..6)).map(|v| ParamValue::from(v as f64)).collect(),
                },
            };
            original.params.insert(format!("p{j}"), d);
        }
        let top: Vec<_> = (0..rng.random_range(2..11)).map(|_| original.sample(&mut rng)).collect();
        let r = refine_space(&original, &top)?;
        if !(r.is_subset_of(&original) && top.iter().all(|c| r.contains(c)) && r.validate().is_ok()) {
            violations += 1;
        }
    }
    verdict(
        res.trials.len() == 50 && contained && indexed && violations == 0,
        format!(
            "{} trials, trials 41-50 in refined space: {contained}, refine containment violations {violations}/500",
            res.trials.len()
        ),
    )
}

// 12 --------------------------------------------------------------------

fn idx_fixtures() -> Res<Verdict> {
    let labels = serialize(&IdxArray::new(vec![5], vec![0, 1, 2, 3, 9])?)?;
    let images = serialize(&IdxArray::new(vec![2, 2, 3], (0..12).collect())?)?;
    let matrix = serialize(&IdxArray::new(vec![3, 4], vec![7; 12])?)?;
    let with = |base: &[u8], f: &dyn Fn(&mut Vec<u8>)| {
        let mut b = base.to_vec();
        f(&mut b);
        b
    };
    let overflow: Vec<u8> = [0x0000_0803u32, u32::MAX, u32::MAX, u32::MAX]
        .iter()
        .flat_map(|v| v.to_be_bytes())
        .collect();

    type Check = fn(&Result<IdxArray, IdxError>) -> bool;
    let ok: Check = |r| r.is_ok();
    let magic: Check = |r| matches!(r, Err(IdxError::BadMagic(_)));
    let header: Check = |r| matches!(r, Err(IdxError::HeaderTruncated(_)));
    let short: Check = |r| matches!(r, Err(IdxError::Truncated { .. }));
    let long: Check = |r| matches!(r, Err(IdxError::TrailingBytes { .. }));
    let over: Check = |r| matches!(r, Err(IdxError::DimensionOverflow { .. }));

    let fixtures: Vec<(&str, Vec<u8>, Check)> = vec![
        ("labels", labels.clone(), ok),
        ("images", images.clone(), ok),
        ("matrix", matrix.clone(), ok),
        ("float dtype", with(&images, &|b| b[2] = 0x0D), magic),
        ("nonzero prefix", with(&labels, &|b| b[0] = 1), magic),
        ("zero dims", with(&labels, &|b| b[3] = 0), magic),
        ("four dims", with(&images, &|b| b[3] = 4), magic),
        ("empty", Vec::new(), header),
        ("three bytes", labels[..3].to_vec(), header),
        ("dims cut", images[..10].to_vec(), header),
        ("payload cut", images[..images.len() - 1].to_vec(), short),
        ("header only", images[..16].to_vec(), short),
        ("trailing byte", with(&matrix, &|b| b.push(0)), long),
        ("dimension overflow", overflow, over),
    ];
    let wrong: Vec<&str> = fixtures
        .iter()
        .filter(|(_, bytes, check)| !check(&parse(bytes)))
        .map(|(name, _, _)| *name)
        .collect();
    let round_trip = parse(&images)? == IdxArray::new(vec![2, 2, 3], (0..12).collect())?;
    verdict(
        wrong.is_empty() && round_trip,
        format!("{}/{} fixtures classified correctly {wrong:?}", fixtures.len() - wrong.len(), fixtures.len()),
    )
}

// -----------------------------------------------------------------------

fn main() {
    let criteria: [(u32, &str, fn() -> Res<Verdict>); 12] = [
        (1, "finite-difference gradient fidelity", fd_gradient_fidelity),
        (2, "fitness shaping formulas and invariances", shaping_suite),
        (3, "convergence battery on the 10-d sphere", convergence_battery),
        (4, "ES group outperforms GA group after small-budget tuning", es_vs_ga),
        (5, "tuning budget saturates by trial 20", budget_saturation),
        (6, "larger population beats more evaluations per member", resource_allocation),
        (7, "strong mean decay hurts", mean_decay),
        (8, "final score weakly improves with population size", population_scaling),
        (9, "thread-count independent trajectories", determinism),
        (10, "addition task learnable below the constant-predictor MAE", addition_learnability),
        (11, "protocol mechanics and refinement containment", protocol_mechanics),
        (12, "IDX parser fixtures", idx_fixtures),
    ];
    let only: Option<Vec<u32>> = std::env::var("ACCEPTANCE_ONLY")
        .ok()
        .map(|s| s.split(',').filter_map(|v| v.trim().parse().ok()).collect());
    let mut failed = 0;
    for (id, name, f) in criteria {
        if only.as_ref().is_some_and(|o| !o.contains(&id)) {
            continue;
        }
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(v) => (v.pass, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !pass as usize;
        println!(
            "[{}] criterion {id:>2}: {name} ({:.1}s) | {detail}",
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
