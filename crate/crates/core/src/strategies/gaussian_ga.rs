use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asktell::{Candidate, Population, Strategy, StrategyState};
use crate::error::{Error, Result};
use crate::rng::{normal, RngStream, StreamRng};

use super::{StrategyConfig, StrategyInner};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Parent {
    pub params: Vec<f64>,
    pub fitness: f64,
    pub mutation_rate: f64,
}

/// Elite archive of the GA family, sorted by fitness descending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArchiveState {
    pub parents: Vec<Parent>,
    pub capacity: usize,
    /// Centre of the first generation.
    pub init_mean: Vec<f64>,
    /// GESMR per-group mutation rates for the next generation.
    pub group_rates: Vec<f64>,
}

impl ArchiveState {
    pub fn best(&self) -> Option<&Parent> {
        self.parents.first()
    }
}

pub(super) fn archive<'a>(state: &'a StrategyState, name: &'static str) -> Result<&'a ArchiveState> {
    match &state.inner {
        StrategyInner::Archive(a) => Ok(a),
        _ => Err(Error::StateMismatch(name)),
    }
}

pub(super) fn init_archive(
    dim: usize,
    capacity: usize,
    init_mean: &[f64],
    group_rates: Vec<f64>,
    stream: &RngStream,
) -> Result<StrategyState> {
    if init_mean.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: init_mean.len(),
        });
    }
    Ok(StrategyState {
        generation: 0,
        dim,
        best_so_far: None,
        inner: StrategyInner::Archive(ArchiveState {
            parents: Vec::new(),
            capacity,
            init_mean: init_mean.to_vec(),
            group_rates,
        }),
        tell_stream: stream.clone(),
    })
}

/// Picks a uniform parent (or the initial mean when the archive is empty).
pub(super) fn pick_parent<'a>(a: &'a ArchiveState, rng: &mut StreamRng) -> (Option<usize>, &'a [f64], Option<f64>) {
    if a.parents.is_empty() {
        (None, &a.init_mean, None)
    } else {
        let idx = rng.random_range(0..a.parents.len());
        let p = &a.parents[idx];
        (Some(idx), &p.params, Some(p.mutation_rate))
    }
}

pub(super) fn mutate(base: &[f64], sigma: f64, rng: &mut StreamRng) -> Vec<f64> {
    base.iter().map(|b| b + sigma * normal(rng)).collect()
}

/// Merges children into the archive and keeps the top `capacity`. Existing
/// parents precede children on exact ties, and children keep tag order.
pub(super) fn select(a: &ArchiveState, children: impl Iterator<Item = Parent>) -> ArchiveState {
    let mut pool: Vec<Parent> = a.parents.clone();
    pool.extend(children);
    pool.sort_by(|x, y| y.fitness.total_cmp(&x.fitness));
    pool.truncate(a.capacity);
    ArchiveState {
        parents: pool,
        ..a.clone()
    }
}

pub(super) fn ga_incumbent(state: &StrategyState) -> Vec<f64> {
    match state.inner.archive() {
        Some(a) => a.best().map(|p| p.params.clone()).unwrap_or_else(|| a.init_mean.clone()),
        None => Vec::new(),
    }
}

/// Truncation-selection GA with fixed isotropic Gaussian mutation.
#[derive(Debug)]
pub struct GaussianGa {
    cfg: StrategyConfig,
    dim: usize,
    popsize: usize,
}

impl GaussianGa {
    pub fn new(cfg: StrategyConfig, dim: usize, popsize: usize) -> Result<Self> {
        Ok(GaussianGa { cfg, dim, popsize })
    }
}

impl Strategy for GaussianGa {
    fn name(&self) -> &'static str {
        "gaussian_ga"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn popsize(&self) -> usize {
        self.popsize
    }

    fn initialize(&self, init_mean: &[f64], stream: &RngStream) -> Result<StrategyState> {
        init_archive(self.dim, self.cfg.elite_count(self.popsize), init_mean, Vec::new(), stream)
    }

    fn ask(&self, state: &StrategyState, stream: &RngStream, popsize: usize) -> Result<Vec<Candidate>> {
        self.check_state(state)?;
        self.check_popsize(popsize)?;
        let a = archive(state, self.name())?;
        Ok((0..popsize)
            .map(|i| {
                let mut rng = stream.split(i as u64).generator();
                let (parent, base, _) = pick_parent(a, &mut rng);
                let mut c = Candidate::new(i, mutate(base, self.cfg.sigma0, &mut rng));
                c.parent = parent;
                c.mutation_rate = Some(self.cfg.sigma0);
                c
            })
            .collect())
    }

    fn shape(&self, raw: &[f64]) -> Result<Vec<f64>> {
        Ok(raw.to_vec())
    }

    fn update(&self, state: &StrategyState, pop: &Population) -> Result<StrategyInner> {
        let a = archive(state, self.name())?;
        let children = pop.candidates.iter().zip(&pop.raw_fitness).map(|(c, &f)| Parent {
            params: c.params.clone(),
            fitness: f,
            mutation_rate: self.cfg.sigma0,
        });
        Ok(StrategyInner::Archive(select(a, children)))
    }

    fn incumbent(&self, state: &StrategyState) -> Vec<f64> {
        ga_incumbent(state)
    }
}
