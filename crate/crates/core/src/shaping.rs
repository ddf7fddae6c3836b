//! Fitness shaping transforms.
//!
//! Inputs are canonical (larger is better) fitness vectors. The centered-rank
//! transform assigns rank 0 to the best member, so its output is
//! loss-oriented: a smaller shaped value means a better candidate. Ties get
//! the average of the ranks they span.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapingKind {
    Raw,
    CenteredRanks,
    ZScore,
    RangeNorm,
    /// Softmax over ascending ranks; temperature is carried separately.
    SoftmaxUtility,
}

impl ShapingKind {
    pub const ALL: [ShapingKind; 5] = [
        ShapingKind::Raw,
        ShapingKind::CenteredRanks,
        ShapingKind::ZScore,
        ShapingKind::RangeNorm,
        ShapingKind::SoftmaxUtility,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ShapingKind::Raw => "raw",
            ShapingKind::CenteredRanks => "centered_ranks",
            ShapingKind::ZScore => "z_score",
            ShapingKind::RangeNorm => "range_norm",
            ShapingKind::SoftmaxUtility => "softmax_utility",
        }
    }
}

impl fmt::Display for ShapingKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ShapingKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown fitness shaping `{s}`")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangeMode {
    /// `2 (f - min) / (max - min) - 1`, spanning exactly [-1, 1].
    #[default]
    Intended,
    /// `2 (f - min) / (max - min) + min`, the formula as commonly printed.
    Literal,
}

/// Average ranks with rank 0 for the largest value.
pub fn descending_ranks(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| f[b].total_cmp(&f[a]));
    let mut ranks = vec![0.0; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && f[order[end]] == f[order[start]] {
            end += 1;
        }
        let avg = (start + end - 1) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = avg;
        }
        start = end;
    }
    ranks
}

pub fn centered_ranks(f: &[f64]) -> Result<Vec<f64>> {
    ensure_finite(f, "fitness")?;
    if f.is_empty() {
        return Err(Error::config("centered ranks of an empty population"));
    }
    let n = f.len() as f64;
    Ok(descending_ranks(f).into_iter().map(|r| r / n - 0.5).collect())
}

fn mean_and_std(f: &[f64]) -> (f64, f64) {
    let n = f.len() as f64;
    let mean = f.iter().sum::<f64>() / n;
    let var = f.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Standardization with the population standard deviation.
pub fn z_score(f: &[f64]) -> Result<Vec<f64>> {
    ensure_finite(f, "fitness")?;
    if f.is_empty() {
        return Ok(Vec::new());
    }
    let (mean, std) = mean_and_std(f);
    if std == 0.0 {
        return Ok(vec![0.0; f.len()]);
    }
    Ok(f.iter().map(|x| (x - mean) / std).collect())
}

pub fn range_norm(f: &[f64], mode: RangeMode) -> Result<Vec<f64>> {
    ensure_finite(f, "fitness")?;
    let min = f.iter().copied().fold(f64::INFINITY, f64::min);
    let max = f.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if f.is_empty() {
        return Ok(Vec::new());
    }
    if max == min {
        return Ok(match mode {
            RangeMode::Intended => vec![0.0; f.len()],
            RangeMode::Literal => vec![min; f.len()],
        });
    }
    let span = max - min;
    Ok(f.iter()
        .map(|x| {
            let unit = 2.0 * (x - min) / span;
            match mode {
                RangeMode::Intended => unit - 1.0,
                RangeMode::Literal => unit + min,
            }
        })
        .collect())
}

/// Softmax weights over ascending ranks: the worst member has rank 0 and the
/// best rank N-1, so the best member receives the largest weight.
pub fn softmax_utility(f: &[f64], beta: f64) -> Result<Vec<f64>> {
    ensure_finite(f, "fitness")?;
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::config(format!("softmax temperature must be positive, got {beta}")));
    }
    if f.is_empty() {
        return Err(Error::config("softmax utility of an empty population"));
    }
    let n = f.len() as f64;
    let logits: Vec<f64> = descending_ranks(f)
        .into_iter()
        .map(|r| beta * ((n - 1.0 - r) / n - 0.5))
        .collect();
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// A configured transform.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Shaper {
    pub kind: ShapingKind,
    pub beta: f64,
    pub range_mode: RangeMode,
}

impl Shaper {
    pub fn new(kind: ShapingKind) -> Self {
        Shaper {
            kind,
            beta: 20.0,
            range_mode: RangeMode::Intended,
        }
    }

    /// Output of the configured formula, unmodified.
    pub fn apply(&self, f: &[f64]) -> Result<Vec<f64>> {
        match self.kind {
            ShapingKind::Raw => {
                ensure_finite(f, "fitness")?;
                Ok(f.to_vec())
            }
            ShapingKind::CenteredRanks => centered_ranks(f),
            ShapingKind::ZScore => z_score(f),
            ShapingKind::RangeNorm => range_norm(f, self.range_mode),
            ShapingKind::SoftmaxUtility => softmax_utility(f, self.beta),
        }
    }

    /// Re-orients shaped values so that smaller means better. Centered ranks
    /// already are; every other transform preserves the canonical direction
    /// and is negated.
    pub fn to_loss(&self, shaped: &[f64]) -> Vec<f64> {
        match self.kind {
            ShapingKind::CenteredRanks => shaped.to_vec(),
            _ => shaped.iter().map(|v| -v).collect(),
        }
    }

    pub fn to_utility(&self, shaped: &[f64]) -> Vec<f64> {
        self.to_loss(shaped).into_iter().map(|v| -v).collect()
    }
}
