//! Leaderboards, cross-task aggregation and tabular output.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::{median, SeedSummary};

/// Final score of one (strategy, task, seed) run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreRow {
    pub strategy: String,
    pub task: String,
    pub seed: u64,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeaderRow {
    pub strategy: String,
    pub mean: f64,
    pub stderr: f64,
    pub median: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Leaderboard {
    pub task: String,
    pub rows: Vec<LeaderRow>,
}

impl Leaderboard {
    /// Sorts rows by mean, best first; ties keep name order.
    pub fn new(task: impl Into<String>, mut rows: Vec<LeaderRow>) -> Result<Self> {
        let task = task.into();
        let mut names: Vec<&str> = rows.iter().map(|r| r.strategy.as_str()).collect();
        names.sort_unstable();
        if names.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::config(format!("duplicate strategy in leaderboard for `{task}`")));
        }
        rows.sort_by(|a, b| b.mean.total_cmp(&a.mean).then_with(|| a.strategy.cmp(&b.strategy)));
        Ok(Leaderboard { task, rows })
    }

    /// One leaderboard per task, built from per-seed rows.
    pub fn from_scores(rows: &[ScoreRow]) -> Result<Vec<Leaderboard>> {
        let mut grouped: BTreeMap<&str, BTreeMap<&str, Vec<f64>>> = BTreeMap::new();
        for r in rows {
            grouped
                .entry(&r.task)
                .or_default()
                .entry(&r.strategy)
                .or_default()
                .push(r.score);
        }
        grouped
            .into_iter()
            .map(|(task, by_strategy)| {
                let rows = by_strategy
                    .into_iter()
                    .map(|(s, scores)| {
                        let sum = SeedSummary::from_scores(scores)?;
                        Ok(LeaderRow {
                            strategy: s.to_string(),
                            mean: sum.mean,
                            stderr: sum.stderr,
                            median: sum.median,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Leaderboard::new(task, rows)
            })
            .collect()
    }
}

/// Which per-task statistic is normalized.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stat {
    Mean,
    Median,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateScore {
    pub stat: Stat,
    /// task -> strategy -> normalized score in [0, 1].
    pub per_task: BTreeMap<String, BTreeMap<String, f64>>,
    /// (strategy, median normalized score), best first.
    pub ranking: Vec<(String, f64)>,
}

impl AggregateScore {
    pub fn score(&self, strategy: &str) -> Option<f64> {
        self.ranking.iter().find(|(s, _)| s == strategy).map(|(_, v)| *v)
    }
}

/// Per-task min-max normalization across strategies, then the median over
/// tasks. A task where all strategies tie gives everyone 0.5.
pub fn normalize_and_aggregate(boards: &[Leaderboard], stat: Stat) -> Result<AggregateScore> {
    if boards.is_empty() {
        return Err(Error::config("aggregation needs at least one task"));
    }
    let mut per_task = BTreeMap::new();
    let mut by_strategy: BTreeMap<String, Vec<f64>> = BTreeMap::new();
    for b in boards {
        if b.rows.len() < 2 {
            return Err(Error::config(format!("task `{}` needs at least two strategies", b.task)));
        }
        let value = |r: &LeaderRow| match stat {
            Stat::Mean => r.mean,
            Stat::Median => r.median,
        };
        let lo = b.rows.iter().map(value).fold(f64::INFINITY, f64::min);
        let hi = b.rows.iter().map(value).fold(f64::NEG_INFINITY, f64::max);
        let mut norm = BTreeMap::new();
        for r in &b.rows {
            let v = if hi > lo { (value(r) - lo) / (hi - lo) } else { 0.5 };
            norm.insert(r.strategy.clone(), v);
            by_strategy.entry(r.strategy.clone()).or_default().push(v);
        }
        per_task.insert(b.task.clone(), norm);
    }
    let mut ranking: Vec<(String, f64)> = by_strategy.into_iter().map(|(s, v)| (s, median(&v))).collect();
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(AggregateScore { stat, per_task, ranking })
}

/// Running maximum.
pub fn best_so_far_curve(scores: &[f64]) -> Vec<f64> {
    scores
        .iter()
        .scan(f64::NEG_INFINITY, |best, s| {
            *best = best.max(*s);
            Some(*best)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Jsonl,
    Plotdata,
}

impl Format {
    pub fn file_name(self) -> &'static str {
        match self {
            Format::Csv => "scores.csv",
            Format::Jsonl => "scores.jsonl",
            Format::Plotdata => "plotdata.csv",
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Format::Csv),
            "jsonl" => Ok(Format::Jsonl),
            "plotdata" => Ok(Format::Plotdata),
            other => Err(Error::config(format!("unknown format `{other}`"))),
        }
    }
}

/// One point of a long-format plot table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotPoint {
    pub plot: String,
    pub series: String,
    pub x: f64,
    pub y: f64,
}

#[derive(Serialize, Deserialize)]
struct ScoreLine {
    strategy: String,
    task: String,
    seed: u64,
    score: f64,
    config_digest: String,
}

#[derive(Serialize, Deserialize)]
struct PlotLine {
    plot: String,
    series: String,
    x: f64,
    y: f64,
    config_digest: String,
}

fn csv_bytes<T: Serialize>(header: &[&str], items: impl IntoIterator<Item = T>) -> Result<Vec<u8>> {
    let ser = |e: csv::Error| Error::Serialization(e.to_string());
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
    w.write_record(header).map_err(ser)?;
    for it in items {
        w.serialize(it).map_err(ser)?;
    }
    w.into_inner().map_err(|e| Error::Serialization(e.to_string()))
}

/// Renders score rows in `format`. Plot data puts each task on its own
/// plot with seeds on the x axis.
pub fn render(rows: &[ScoreRow], format: Format, digest: &str) -> Result<Vec<u8>> {
    let line = |r: &ScoreRow| ScoreLine {
        strategy: r.strategy.clone(),
        task: r.task.clone(),
        seed: r.seed,
        score: r.score,
        config_digest: digest.to_string(),
    };
    match format {
        Format::Csv => csv_bytes(&["strategy", "task", "seed", "score", "config_digest"], rows.iter().map(line)),
        Format::Jsonl => {
            let mut out = Vec::new();
            for r in rows {
                serde_json::to_writer(&mut out, &line(r))?;
                out.push(b'\n');
            }
            Ok(out)
        }
        Format::Plotdata => {
            let points: Vec<PlotPoint> = rows
                .iter()
                .map(|r| PlotPoint {
                    plot: r.task.clone(),
                    series: r.strategy.clone(),
                    x: r.seed as f64,
                    y: r.score,
                })
                .collect();
            render_plot(&points, digest)
        }
    }
}

pub fn render_plot(points: &[PlotPoint], digest: &str) -> Result<Vec<u8>> {
    csv_bytes(
        &["plot", "series", "x", "y", "config_digest"],
        points.iter().map(|p| PlotLine {
            plot: p.plot.clone(),
            series: p.series.clone(),
            x: p.x,
            y: p.y,
            config_digest: digest.to_string(),
        }),
    )
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Writes `rows` into `dir` under the format's file name.
pub fn emit(rows: &[ScoreRow], format: Format, dir: &Path, digest: &str) -> Result<PathBuf> {
    let path = dir.join(format.file_name());
    write_file(&path, &render(rows, format, digest)?)?;
    Ok(path)
}

/// Parses csv or jsonl output back into rows and the embedded digest.
pub fn parse(bytes: &[u8], format: Format) -> Result<(Vec<ScoreRow>, Option<String>)> {
    let lines: Vec<ScoreLine> = match format {
        Format::Csv => csv::Reader::from_reader(bytes)
            .deserialize()
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Serialization(e.to_string()))?,
        Format::Jsonl => bytes
            .split(|b| *b == b'\n')
            .filter(|l| !l.is_empty())
            .map(serde_json::from_slice)
            .collect::<std::result::Result<_, _>>()?,
        Format::Plotdata => return Err(Error::config("plot data is not parsed back into score rows")),
    };
    let digest = lines.first().map(|l| l.config_digest.clone());
    let rows = lines
        .into_iter()
        .map(|l| ScoreRow {
            strategy: l.strategy,
            task: l.task,
            seed: l.seed,
            score: l.score,
        })
        .collect();
    Ok((rows, digest))
}

pub fn parse_plot(bytes: &[u8]) -> Result<Vec<PlotPoint>> {
    let lines: Vec<PlotLine> = csv::Reader::from_reader(bytes)
        .deserialize()
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Serialization(e.to_string()))?;
    Ok(lines
        .into_iter()
        .map(|l| PlotPoint {
            plot: l.plot,
            series: l.series,
            x: l.x,
            y: l.y,
        })
        .collect())
}

/// Leaderboards as a flat csv table.
pub fn render_leaderboards(boards: &[Leaderboard], digest: &str) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Line<'a> {
        task: &'a str,
        rank: usize,
        strategy: &'a str,
        mean: f64,
        stderr: f64,
        median: f64,
        config_digest: &'a str,
    }
    let lines = boards.iter().flat_map(|b| {
        b.rows.iter().enumerate().map(move |(i, r)| Line {
            task: &b.task,
            rank: i + 1,
            strategy: &r.strategy,
            mean: r.mean,
            stderr: r.stderr,
            median: r.median,
            config_digest: digest,
        })
    });
    csv_bytes(&["task", "rank", "strategy", "mean", "stderr", "median", "config_digest"], lines)
}

/// Aggregate rankings as csv, one row per (stat, strategy).
pub fn render_aggregates(aggs: &[AggregateScore], digest: &str) -> Result<Vec<u8>> {
    #[derive(Serialize)]
    struct Line<'a> {
        stat: Stat,
        rank: usize,
        strategy: &'a str,
        normalized_median: f64,
        config_digest: &'a str,
    }
    let lines = aggs.iter().flat_map(|a| {
        a.ranking.iter().enumerate().map(move |(i, (s, v))| Line {
            stat: a.stat,
            rank: i + 1,
            strategy: s,
            normalized_median: *v,
            config_digest: digest,
        })
    });
    csv_bytes(&["stat", "rank", "strategy", "normalized_median", "config_digest"], lines)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn board(task: &str, means: &[(&str, f64)]) -> Leaderboard {
        let rows = means
            .iter()
            .map(|(s, m)| LeaderRow {
                strategy: s.to_string(),
                mean: *m,
                stderr: 0.0,
                median: *m,
            })
            .collect();
        Leaderboard::new(task, rows).unwrap()
    }

    #[test]
    fn two_task_hand_example() {
        let b = [board("t1", &[("A", 1.0), ("B", 3.0)]), board("t2", &[("A", 10.0), ("B", 0.0)])];
        let agg = normalize_and_aggregate(&b, Stat::Mean).unwrap();
        assert_eq!(agg.per_task["t1"]["A"], 0.0);
        assert_eq!(agg.per_task["t1"]["B"], 1.0);
        assert_eq!(agg.per_task["t2"]["A"], 1.0);
        assert_eq!(agg.score("A"), Some(0.5));
        assert_eq!(agg.score("B"), Some(0.5));
    }

    #[test]
    fn single_task_is_its_normalization() {
        let b = [board("t", &[("A", 2.0), ("B", 4.0), ("C", 3.0)])];
        let agg = normalize_and_aggregate(&b, Stat::Mean).unwrap();
        assert_eq!(agg.ranking, vec![("B".into(), 1.0), ("C".into(), 0.5), ("A".into(), 0.0)]);
    }

    #[test]
    fn constant_task_gives_half() {
        let b = [board("t", &[("A", 2.0), ("B", 2.0)])];
        let agg = normalize_and_aggregate(&b, Stat::Median).unwrap();
        assert_eq!(agg.score("A"), Some(0.5));
        assert!(normalize_and_aggregate(&[], Stat::Mean).is_err());
        assert!(normalize_and_aggregate(&[board("t", &[("A", 1.0)])], Stat::Mean).is_err());
    }

    #[test]
    fn leaderboard_sorted_by_mean() {
        let b = board("t", &[("A", 1.0), ("B", 3.0), ("C", 2.0)]);
        let names: Vec<&str> = b.rows.iter().map(|r| r.strategy.as_str()).collect();
        assert_eq!(names, ["B", "C", "A"]);
    }

    #[test]
    fn running_max() {
        assert_eq!(best_so_far_curve(&[3.0, 1.0, 4.0, 1.0, 5.0]), vec![3.0, 3.0, 4.0, 4.0, 5.0]);
        assert_eq!(best_so_far_curve(&[1.0, 2.0]), vec![1.0, 2.0]);
    }

    #[test]
    fn empty_csv_is_header_only() {
        let bytes = render(&[], Format::Csv, "abc").unwrap();
        assert_eq!(String::from_utf8(bytes).unwrap(), "strategy,task,seed,score,config_digest\n");
    }

    #[test]
    fn emit_writes_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let rows = vec![ScoreRow {
            strategy: "pgpe".into(),
            task: "sphere:10".into(),
            seed: 2,
            score: -0.1,
        }];
        let p = emit(&rows, Format::Plotdata, dir.path(), "d").unwrap();
        let first = fs::read(&p).unwrap();
        emit(&rows, Format::Plotdata, dir.path(), "d").unwrap();
        assert_eq!(first, fs::read(&p).unwrap());
        let pts = parse_plot(&first).unwrap();
        assert_eq!(pts[0].y, -0.1);
    }

    fn arb_rows() -> impl Strategy<Value = Vec<ScoreRow>> {
        prop::collection::vec(
            ("[a-z_]{1,8}", "[a-z:0-9]{1,8}", any::<u64>(), -1e300f64..1e300),
            0..20,
        )
        .prop_map(|v| {
            v.into_iter()
                .map(|(strategy, task, seed, score)| ScoreRow { strategy, task, seed, score })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn csv_and_jsonl_round_trip(rows in arb_rows(), tiny in any::<f64>().prop_filter("finite", |v| v.is_finite())) {
            let mut rows = rows;
            rows.push(ScoreRow { strategy: "x".into(), task: "y".into(), seed: 0, score: tiny });
            for fmt in [Format::Csv, Format::Jsonl] {
                let bytes = render(&rows, fmt, "0123").unwrap();
                let (back, digest) = parse(&bytes, fmt).unwrap();
                prop_assert_eq!(&back, &rows);
                prop_assert_eq!(digest.as_deref(), Some("0123"));
            }
        }
    }
}
