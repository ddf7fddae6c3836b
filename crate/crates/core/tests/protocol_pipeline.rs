//! Tuning, persistence and reporting wired together.

use std::collections::BTreeMap;

use evobench::evaluator::RunConfig;
use evobench::protocol::{
    grid_sweep, load_trials, persist_trials, random_search, Axis, Budget, ExperimentConfig, Problem, SearchSpace,
};
use evobench::report::{self, Format, Leaderboard, ScoreRow};
use evobench::{StrategyConfig, StrategyKind, TaskConfig};

fn problem(kind: StrategyKind) -> Problem {
    Problem::new(
        StrategyConfig::default_for(kind),
        "sphere:4".parse::<TaskConfig>().unwrap(),
        8,
        RunConfig {
            generations: 8,
            eval_every: 0,
            ..RunConfig::default()
        },
    )
}

#[test]
fn small_budget_matches_first_trials_of_large() {
    let kind = StrategyKind::Snes;
    let space = SearchSpace::default_for(kind);
    let small = random_search(&space, &problem(kind), Budget::Small, 3).unwrap();
    let large = random_search(&space, &problem(kind), Budget::Large, 3).unwrap();
    assert_eq!(small.trials.len(), 20);
    assert_eq!(large.trials.len(), 50);
    assert_eq!(small.trials[..], large.trials[..20]);
}

#[test]
fn default_budget_runs_the_default_config_once() {
    let kind = StrategyKind::OpenaiEs;
    let res = random_search(&SearchSpace::default_for(kind), &problem(kind), Budget::Default, 0).unwrap();
    assert!(res.trials.is_empty());
    assert_eq!(res.best.config, StrategyConfig::default_for(kind).params());
}

#[test]
fn search_is_independent_of_worker_count() {
    let kind = StrategyKind::GaussianGa;
    let space = SearchSpace::default_for(kind);
    let mut p = problem(kind);
    let a = random_search(&space, &p, Budget::Small, 9).unwrap();
    p.workers = 3;
    let b = random_search(&space, &p, Budget::Small, 9).unwrap();
    assert_eq!(a, b);
}

#[test]
fn trials_persist_and_reload() {
    let kind = StrategyKind::Ars;
    let res = random_search(&SearchSpace::default_for(kind), &problem(kind), Budget::Small, 1).unwrap();
    let dir = tempfile::tempdir().unwrap();
    persist_trials(dir.path(), &res.trials).unwrap();
    assert_eq!(load_trials(dir.path()).unwrap(), res.trials);
    let index = std::fs::read_to_string(dir.path().join("index.csv")).unwrap();
    assert_eq!(index.lines().count(), 21);
    assert!(index.starts_with("trial,score,seed,config.alpha0,config.shaping,config.sigma0"));
}

#[test]
fn grid_records_failing_cells_and_continues() {
    let axes = [Axis::new("popsize", [8.0, 7.0].map(Into::into))];
    let cells = grid_sweep(&axes, &problem(StrategyKind::OpenaiEs), 2).unwrap();
    assert_eq!(cells.len(), 2);
    assert!(cells[0].summary.is_some());
    assert!(cells[1].summary.is_none());
    assert!(cells[1].error.as_ref().unwrap().contains("even"), "{:?}", cells[1].error);
}

#[test]
fn grid_cardinality_is_the_product_of_axes() {
    let axes = [
        Axis::new("mean_decay", [0.0, 0.01, 0.1].map(Into::into)),
        Axis::new("shaping", ["raw", "z_score"].map(Into::into)),
    ];
    assert_eq!(grid_sweep(&axes, &problem(StrategyKind::OpenaiEs), 2).unwrap().len(), 6);
}

#[test]
fn experiment_file_drives_a_problem() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    std::fs::write(
        &path,
        r#"{"strategy": "sep_cma_es", "task": "rosenbrock:3", "popsize": 12,
            "run": {"generations": 4}, "strategy_params": {"elite_ratio": 0.3}}"#,
    )
    .unwrap();
    let e = ExperimentConfig::load(&path).unwrap();
    let p = e.problem().unwrap();
    assert_eq!(p.strategy.elite_ratio, 0.3);
    assert_eq!(p.evaluate(&BTreeMap::new(), 0).unwrap().records.len(), 4);
}

#[test]
fn emitted_reports_are_byte_stable_and_parse_back() {
    let rows: Vec<ScoreRow> = (0..6)
        .map(|i| ScoreRow {
            strategy: ["a", "b", "c"][i % 3].into(),
            task: "t".into(),
            seed: i as u64,
            score: 1.0 / (i as f64 + 3.0),
        })
        .collect();
    let dir = tempfile::tempdir().unwrap();
    for fmt in [Format::Csv, Format::Jsonl] {
        let path = report::emit(&rows, fmt, dir.path(), "cafe").unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert_eq!(bytes, report::render(&rows, fmt, "cafe").unwrap());
        assert_eq!(report::parse(&bytes, fmt).unwrap(), (rows.clone(), Some("cafe".into())));
    }
    let boards = Leaderboard::from_scores(&rows).unwrap();
    assert_eq!(boards[0].rows.len(), 3);
    assert_eq!(boards[0].rows[0].strategy, "a");
}
