//! The hand-designed optimizers: four finite-difference ES, one
//! estimation-of-distribution ES and three Gaussian GAs.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::asktell::{SearchDistribution, Strategy};
use crate::error::{Error, Result};
use crate::gradopt::{GdConfig, GdState, OptimizerKind};
use crate::shaping::{RangeMode, Shaper, ShapingKind};

mod ars;
mod gaussian_ga;
mod gesmr_ga;
mod openai_es;
mod pgpe;
mod samr_ga;
mod sep_cma;
mod snes;

pub use ars::Ars;
pub use gaussian_ga::{ArchiveState, GaussianGa, Parent};
pub use gesmr_ga::GesmrGa;
pub use openai_es::{fd_gradient, OpenAiEs};
pub use pgpe::{pair_gradients, Pgpe};
pub use samr_ga::SamrGa;
pub use sep_cma::{SepCmaEs, SepCmaState};
pub use snes::{log_rank_utilities, Snes};

/// Lower bound on distribution scales; keeps them strictly positive once a
/// run has converged to machine precision.
pub const MIN_SIGMA: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StrategyKind {
    OpenaiEs,
    Pgpe,
    Ars,
    Snes,
    SepCmaEs,
    GaussianGa,
    SamrGa,
    GesmrGa,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 8] = [
        StrategyKind::OpenaiEs,
        StrategyKind::Pgpe,
        StrategyKind::Ars,
        StrategyKind::Snes,
        StrategyKind::SepCmaEs,
        StrategyKind::GaussianGa,
        StrategyKind::SamrGa,
        StrategyKind::GesmrGa,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::OpenaiEs => "openai_es",
            StrategyKind::Pgpe => "pgpe",
            StrategyKind::Ars => "ars",
            StrategyKind::Snes => "snes",
            StrategyKind::SepCmaEs => "sep_cma_es",
            StrategyKind::GaussianGa => "gaussian_ga",
            StrategyKind::SamrGa => "samr_ga",
            StrategyKind::GesmrGa => "gesmr_ga",
        }
    }

    pub fn is_ga(self) -> bool {
        matches!(
            self,
            StrategyKind::GaussianGa | StrategyKind::SamrGa | StrategyKind::GesmrGa
        )
    }

    /// Finite-difference family driven by a gradient-descent optimizer.
    pub fn uses_gd(self) -> bool {
        matches!(self, StrategyKind::OpenaiEs | StrategyKind::Pgpe | StrategyKind::Ars)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown strategy `{s}`")))
    }
}

/// A tunable hyperparameter value.
#[derive(Clone, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ParamValue {
    Real(f64),
    Text(String),
}

impl ParamValue {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            ParamValue::Real(v) => Some(*v),
            ParamValue::Text(_) => None,
        }
    }

    pub fn as_str(&self) -> Option<&str> {
        match self {
            ParamValue::Text(s) => Some(s),
            ParamValue::Real(_) => None,
        }
    }
}

impl fmt::Display for ParamValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamValue::Real(v) => write!(f, "{v}"),
            ParamValue::Text(s) => f.write_str(s),
        }
    }
}

impl From<f64> for ParamValue {
    fn from(v: f64) -> Self {
        ParamValue::Real(v)
    }
}

impl From<&str> for ParamValue {
    fn from(v: &str) -> Self {
        ParamValue::Text(v.to_string())
    }
}

/// Hyperparameters of one optimizer.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub sigma0: f64,
    pub shaping: ShapingKind,
    #[serde(default)]
    pub range_mode: RangeMode,
    #[serde(default)]
    pub gd: GdConfig,
    /// Elite fraction (Sep-CMA-ES, GAs).
    pub elite_ratio: f64,
    /// Softmax temperature for the SNES utility.
    pub beta: f64,
    /// Multiplicative meta-perturbation of mutation rates (SAMR, GESMR).
    pub meta_sigma_strength: f64,
    /// ARS: number of top directions; `None` means `ceil(N / 4)`.
    #[serde(default)]
    pub top_directions: Option<usize>,
    /// GESMR: number of mutation-rate groups; `None` picks a divisor of N-1
    /// close to `sqrt(N - 1)`.
    #[serde(default)]
    pub groups: Option<usize>,
    /// PGPE: initial learning rate of the sigma update.
    pub sigma_lr: f64,
}

impl StrategyConfig {
    /// Documented default configuration of each strategy.
    pub fn default_for(kind: StrategyKind) -> Self {
        let base = StrategyConfig {
            kind,
            sigma0: 0.05,
            shaping: ShapingKind::CenteredRanks,
            range_mode: RangeMode::Intended,
            gd: GdConfig::default(),
            elite_ratio: 0.5,
            beta: 20.0,
            meta_sigma_strength: 2.0,
            top_directions: None,
            groups: None,
            sigma_lr: 0.1,
        };
        match kind {
            StrategyKind::OpenaiEs | StrategyKind::Pgpe => base,
            StrategyKind::Ars => StrategyConfig {
                shaping: ShapingKind::Raw,
                ..base
            },
            StrategyKind::Snes => StrategyConfig { sigma0: 0.1, ..base },
            StrategyKind::SepCmaEs => StrategyConfig { sigma0: 0.1, ..base },
            StrategyKind::GaussianGa => StrategyConfig {
                sigma0: 0.02,
                elite_ratio: 0.1,
                ..base
            },
            StrategyKind::SamrGa | StrategyKind::GesmrGa => StrategyConfig {
                sigma0: 0.05,
                elite_ratio: 0.1,
                meta_sigma_strength: 1.5,
                ..base
            },
        }
    }

    pub fn shaper(&self) -> Shaper {
        Shaper {
            kind: self.shaping,
            beta: self.beta,
            range_mode: self.range_mode,
        }
    }

    /// Number of archive parents / elites for a population of `n`.
    pub fn elite_count(&self, n: usize) -> usize {
        ((self.elite_ratio * n as f64).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::config(format!("sigma0 must be positive, got {}", self.sigma0)));
        }
        if !(0.0..=1.0).contains(&self.elite_ratio) {
            return Err(Error::config(format!("elite_ratio must lie in [0, 1], got {}", self.elite_ratio)));
        }
        if !(self.beta > 0.0) {
            return Err(Error::config("beta must be positive"));
        }
        if self.kind.uses_gd() {
            self.gd.validate()?;
        }
        Ok(())
    }

    /// Sets one named hyperparameter.
    pub fn set_param(&mut self, name: &str, value: &ParamValue) -> Result<()> {
        let real = || {
            value
                .as_f64()
                .ok_or_else(|| Error::config(format!("`{name}` expects a number, got `{value}`")))
        };
        let text = || {
            value
                .as_str()
                .ok_or_else(|| Error::config(format!("`{name}` expects a name, got `{value}`")))
        };
        match name {
            "sigma0" => self.sigma0 = real()?,
            "alpha0" => self.gd.alpha0 = real()?,
            "elite_ratio" => self.elite_ratio = real()?,
            "beta" => {
                self.beta = real()?;
                if self.kind == StrategyKind::Snes {
                    self.shaping = ShapingKind::SoftmaxUtility;
                }
            }
            "meta_sigma_strength" => self.meta_sigma_strength = real()?,
            "mean_decay" => self.gd.mean_decay = real()?,
            "lr_decay" => self.gd.lr_decay = real()?,
            "sigma_decay" => self.gd.sigma_decay = real()?,
            "sigma_limit" => self.gd.sigma_limit = real()?,
            "sigma_lr" => self.sigma_lr = real()?,
            "shaping" => self.shaping = text()?.parse()?,
            "optimizer" => self.gd.kind = text()?.parse::<OptimizerKind>()?,
            "top_directions" => self.top_directions = Some(real()? as usize),
            "groups" => self.groups = Some(real()? as usize),
            other => return Err(Error::config(format!("unknown strategy parameter `{other}`"))),
        }
        Ok(())
    }

    /// Flattened view of the tunable fields.
    pub fn params(&self) -> BTreeMap<String, ParamValue> {
        let mut m = BTreeMap::new();
        m.insert("sigma0".into(), self.sigma0.into());
        m.insert("shaping".into(), self.shaping.name().into());
        if self.kind.uses_gd() {
            m.insert("alpha0".into(), self.gd.alpha0.into());
            m.insert("optimizer".into(), self.gd.kind.name().into());
            m.insert("mean_decay".into(), self.gd.mean_decay.into());
        }
        match self.kind {
            StrategyKind::Snes => {
                m.insert("beta".into(), self.beta.into());
            }
            StrategyKind::SepCmaEs | StrategyKind::GaussianGa => {
                m.insert("elite_ratio".into(), self.elite_ratio.into());
            }
            StrategyKind::SamrGa | StrategyKind::GesmrGa => {
                m.insert("elite_ratio".into(), self.elite_ratio.into());
                m.insert("meta_sigma_strength".into(), self.meta_sigma_strength.into());
            }
            _ => {}
        }
        m
    }

    /// Instantiates the optimizer for a `dim`-dimensional problem sampled
    /// `popsize` candidates at a time.
    pub fn build(&self, dim: usize, popsize: usize) -> Result<Box<dyn Strategy>> {
        self.validate()?;
        if dim == 0 {
            return Err(Error::config("problem dimension must be >= 1"));
        }
        if popsize == 0 {
            return Err(Error::config("population size must be >= 1"));
        }
        let cfg = self.clone();
        Ok(match self.kind {
            StrategyKind::OpenaiEs => Box::new(OpenAiEs::new(cfg, dim, popsize)?),
            StrategyKind::Pgpe => Box::new(Pgpe::new(cfg, dim, popsize)?),
            StrategyKind::Ars => Box::new(Ars::new(cfg, dim, popsize)?),
            StrategyKind::Snes => Box::new(Snes::new(cfg, dim, popsize)?),
            StrategyKind::SepCmaEs => Box::new(SepCmaEs::new(cfg, dim, popsize)?),
            StrategyKind::GaussianGa => Box::new(GaussianGa::new(cfg, dim, popsize)?),
            StrategyKind::SamrGa => Box::new(SamrGa::new(cfg, dim, popsize)?),
            StrategyKind::GesmrGa => Box::new(GesmrGa::new(cfg, dim, popsize)?),
        })
    }
}

/// State shared by the finite-difference strategies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteDiffState {
    pub dist: SearchDistribution,
    pub gd: GdState,
    /// PGPE sigma learning rate for the next step.
    pub sigma_lr: f64,
    /// PGPE running reward baseline.
    pub baseline: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum StrategyInner {
    FiniteDiff(FiniteDiffState),
    Snes(SearchDistribution),
    SepCma(SepCmaState),
    Archive(ArchiveState),
}

impl StrategyInner {
    /// Search distribution of the ES family.
    pub fn distribution(&self) -> Option<SearchDistribution> {
        match self {
            StrategyInner::FiniteDiff(s) => Some(s.dist.clone()),
            StrategyInner::Snes(d) => Some(d.clone()),
            StrategyInner::SepCma(s) => Some(s.distribution()),
            StrategyInner::Archive(_) => None,
        }
    }

    pub fn archive(&self) -> Option<&ArchiveState> {
        match self {
            StrategyInner::Archive(a) => Some(a),
            _ => None,
        }
    }
}

pub(crate) fn antithetic_pairs(popsize: usize) -> Result<usize> {
    if popsize % 2 == 1 {
        return Err(Error::OddPopulation(popsize));
    }
    Ok(popsize / 2)
}

/// Mirrored candidates `mean ± sigma ∘ z`, pair `k` drawn from `stream.split(k)`.
pub(crate) fn sample_antithetic(
    dist: &SearchDistribution,
    stream: &crate::rng::RngStream,
    popsize: usize,
) -> Result<Vec<crate::asktell::Candidate>> {
    let pairs = antithetic_pairs(popsize)?;
    let d = dist.dim();
    let mut out = Vec::with_capacity(popsize);
    for k in 0..pairs {
        let z = stream.split(k as u64).normal_vec(d);
        let neg: Vec<f64> = z.iter().map(|v| -v).collect();
        for (offset, eps) in [(0, z), (1, neg)] {
            let params = dist
                .mean
                .iter()
                .zip(&dist.sigma)
                .zip(&eps)
                .map(|((m, s), e)| m + s * e)
                .collect();
            let mut c = crate::asktell::Candidate::new(2 * k + offset, params);
            c.perturbation = Some(eps);
            out.push(c);
        }
    }
    Ok(out)
}

pub(crate) fn perturbation(c: &crate::asktell::Candidate, d: usize) -> Result<&[f64]> {
    match &c.perturbation {
        Some(p) if p.len() == d => Ok(p),
        Some(p) => Err(Error::DimensionMismatch {
            expected: d,
            found: p.len(),
        }),
        None => Err(Error::config(format!("candidate {} carries no perturbation", c.tag))),
    }
}

pub(crate) fn shaped(pop: &crate::asktell::Population) -> &[f64] {
    pop.shaped_fitness.as_deref().unwrap_or(&pop.raw_fitness)
}
