use rand::Rng;

use crate::asktell::{Candidate, Population, Strategy, StrategyState};
use crate::error::{Error, Result};
use crate::rng::RngStream;

use super::gaussian_ga::{archive, ga_incumbent, init_archive, mutate, pick_parent, select, Parent};
use super::{StrategyConfig, StrategyInner};

/// Self-adaptive mutation-rate GA: each child inherits its parent's rate
/// scaled by `m^u`, `u ∈ {−1, +1}`, and rates are selected jointly with
/// the solutions they produced.
#[derive(Debug)]
pub struct SamrGa {
    cfg: StrategyConfig,
    dim: usize,
    popsize: usize,
}

impl SamrGa {
    pub fn new(cfg: StrategyConfig, dim: usize, popsize: usize) -> Result<Self> {
        if !(cfg.meta_sigma_strength >= 1.0) {
            return Err(Error::config(format!(
                "meta_sigma_strength must be >= 1, got {}",
                cfg.meta_sigma_strength
            )));
        }
        Ok(SamrGa { cfg, dim, popsize })
    }
}

/// `sigma_parent * m^u`.
pub fn perturb_rate(sigma_parent: f64, m: f64, u: f64) -> f64 {
    sigma_parent * m.powf(u)
}

impl Strategy for SamrGa {
    fn name(&self) -> &'static str {
        "samr_ga"
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
                let (parent, base, rate) = pick_parent(a, &mut rng);
                let u = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let sigma = perturb_rate(rate.unwrap_or(self.cfg.sigma0), self.cfg.meta_sigma_strength, u);
                let mut c = Candidate::new(i, mutate(base, sigma, &mut rng));
                c.parent = parent;
                c.mutation_rate = Some(sigma);
                c
            })
            .collect())
    }

    fn shape(&self, raw: &[f64]) -> Result<Vec<f64>> {
        Ok(raw.to_vec())
    }

    fn update(&self, state: &StrategyState, pop: &Population) -> Result<StrategyInner> {
        let a = archive(state, self.name())?;
        let children = pop
            .candidates
            .iter()
            .zip(&pop.raw_fitness)
            .map(|(c, &f)| {
                Ok(Parent {
                    params: c.params.clone(),
                    fitness: f,
                    mutation_rate: c
                        .mutation_rate
                        .ok_or_else(|| Error::config(format!("candidate {} carries no mutation rate", c.tag)))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(StrategyInner::Archive(select(a, children.into_iter())))
    }

    fn incumbent(&self, state: &StrategyState) -> Vec<f64> {
        ga_incumbent(state)
    }
}
