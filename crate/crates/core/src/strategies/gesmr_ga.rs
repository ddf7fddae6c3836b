//! Group-elite selection of mutation rates.
//!
//! Tag 0 is the elite slot (best archive member, unmutated). Tags `1..N`
//! are split into K contiguous groups; group k mutates with rate σ_k.
//! After evaluation each σ_k is scored by the best fitness improvement over
//! the parent within its group, the top half survive, and survivors are
//! perturbed by `m^u`, `u ~ U(−1, 1)`, to refill all K rates.

use rand::Rng;

use crate::asktell::{Candidate, Population, Strategy, StrategyState};
use crate::error::{Error, Result};
use crate::rng::RngStream;

use super::gaussian_ga::{archive, ga_incumbent, init_archive, mutate, pick_parent, select, Parent};
use super::{StrategyConfig, StrategyInner};

#[derive(Debug)]
pub struct GesmrGa {
    cfg: StrategyConfig,
    dim: usize,
    popsize: usize,
    groups: usize,
}

/// Divisor of `n - 1` closest to `floor(sqrt(n - 1))`, smaller on ties.
pub fn default_groups(n: usize) -> usize {
    let m = n.saturating_sub(1).max(1);
    let target = (m as f64).sqrt().floor() as usize;
    (1..=m)
        .filter(|k| m % k == 0)
        .min_by_key(|&k| (k.abs_diff(target), k))
        .unwrap_or(1)
}

impl GesmrGa {
    pub fn new(cfg: StrategyConfig, dim: usize, popsize: usize) -> Result<Self> {
        if !(cfg.meta_sigma_strength >= 1.0) {
            return Err(Error::config(format!(
                "meta_sigma_strength must be >= 1, got {}",
                cfg.meta_sigma_strength
            )));
        }
        if popsize < 2 {
            return Err(Error::config("gesmr_ga needs N >= 2 (one elite slot plus children)"));
        }
        let groups = cfg.groups.unwrap_or_else(|| default_groups(popsize));
        if groups == 0 || (popsize - 1) % groups != 0 {
            return Err(Error::config(format!(
                "gesmr_ga group count {groups} must divide N-1 = {}",
                popsize - 1
            )));
        }
        Ok(GesmrGa {
            cfg,
            dim,
            popsize,
            groups,
        })
    }

    pub fn groups(&self) -> usize {
        self.groups
    }

    fn group_of(&self, tag: usize) -> usize {
        (tag - 1) / ((self.popsize - 1) / self.groups)
    }
}

/// New group rates from per-group scores: the top `max(1, K/2)` rates
/// survive and are perturbed round-robin by `m^{u_j}`.
pub fn refill_rates(rates: &[f64], scores: &[f64], m: f64, us: &[f64]) -> Vec<f64> {
    let k = rates.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    let survivors = &order[..(k / 2).max(1)];
    (0..k)
        .map(|j| rates[survivors[j % survivors.len()]] * m.powf(us[j]))
        .collect()
}

impl Strategy for GesmrGa {
    fn name(&self) -> &'static str {
        "gesmr_ga"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn popsize(&self) -> usize {
        self.popsize
    }

    fn initialize(&self, init_mean: &[f64], stream: &RngStream) -> Result<StrategyState> {
        init_archive(
            self.dim,
            self.cfg.elite_count(self.popsize),
            init_mean,
            vec![self.cfg.sigma0; self.groups],
            stream,
        )
    }

    fn ask(&self, state: &StrategyState, stream: &RngStream, popsize: usize) -> Result<Vec<Candidate>> {
        self.check_state(state)?;
        self.check_popsize(popsize)?;
        let a = archive(state, self.name())?;
        if a.group_rates.len() != self.groups {
            return Err(Error::StateMismatch("gesmr_ga"));
        }
        let mut out = Vec::with_capacity(popsize);
        let elite = a.best().map(|p| p.params.clone()).unwrap_or_else(|| a.init_mean.clone());
        let mut c = Candidate::new(0, elite);
        c.parent = a.best().map(|_| 0);
        out.push(c);
        for i in 1..popsize {
            let mut rng = stream.split(i as u64).generator();
            let group = self.group_of(i);
            let sigma = a.group_rates[group];
            let (parent, base, _) = pick_parent(a, &mut rng);
            let mut c = Candidate::new(i, mutate(base, sigma, &mut rng));
            c.parent = parent;
            c.group = Some(group);
            c.mutation_rate = Some(sigma);
            out.push(c);
        }
        Ok(out)
    }

    fn shape(&self, raw: &[f64]) -> Result<Vec<f64>> {
        Ok(raw.to_vec())
    }

    fn update(&self, state: &StrategyState, pop: &Population) -> Result<StrategyInner> {
        let a = archive(state, self.name())?;
        let mut scores = vec![f64::NEG_INFINITY; self.groups];
        let mut children = Vec::with_capacity(pop.len());
        for (c, &f) in pop.candidates.iter().zip(&pop.raw_fitness) {
            let Some(group) = c.group else {
                continue; // elite slot
            };
            if group >= self.groups {
                return Err(Error::config(format!("candidate {} has group {group} >= {}", c.tag, self.groups)));
            }
            let parent_fitness = c.parent.and_then(|p| a.parents.get(p)).map_or(0.0, |p| p.fitness);
            scores[group] = scores[group].max(f - parent_fitness);
            children.push(Parent {
                params: c.params.clone(),
                fitness: f,
                mutation_rate: c.mutation_rate.unwrap_or(a.group_rates[group]),
            });
        }
        let mut rng = state.tell_stream.split(state.generation).generator();
        let us: Vec<f64> = (0..self.groups).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let mut next = select(a, children.into_iter());
        next.group_rates = refill_rates(&a.group_rates, &scores, self.cfg.meta_sigma_strength, &us);
        Ok(StrategyInner::Archive(next))
    }

    fn incumbent(&self, state: &StrategyState) -> Vec<f64> {
        ga_incumbent(state)
    }
}
