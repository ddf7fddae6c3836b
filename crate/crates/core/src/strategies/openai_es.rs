use crate::asktell::{Candidate, Population, SearchDistribution, Strategy, StrategyState};
use crate::error::{Error, Result};
use crate::gradopt::{apply_mean_decay, decay_sigma, gd_step, GdState};
use crate::rng::RngStream;
use crate::shaping::ShapingKind;

use super::{
    antithetic_pairs, perturbation, sample_antithetic, shaped, FiniteDiffState, StrategyConfig, StrategyInner,
};

/// Monte-Carlo estimate `(1 / (N σ)) Σ_i v_i ε_i` of the gradient of the
/// Gaussian-smoothed objective whose samples are `values`.
pub fn fd_gradient(values: &[f64], perturbations: &[&[f64]], sigma: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mut g = vec![0.0; sigma.len()];
    for (v, eps) in values.iter().zip(perturbations) {
        for (gj, e) in g.iter_mut().zip(eps.iter()) {
            *gj += v * e;
        }
    }
    for (gj, s) in g.iter_mut().zip(sigma) {
        *gj /= n * s;
    }
    g
}

/// OpenAI-ES: antithetic sampling, shaped-fitness gradient estimate,
/// gradient-descent update of the mean.
#[derive(Debug)]
pub struct OpenAiEs {
    cfg: StrategyConfig,
    dim: usize,
    popsize: usize,
}

impl OpenAiEs {
    pub fn new(cfg: StrategyConfig, dim: usize, popsize: usize) -> Result<Self> {
        antithetic_pairs(popsize)?;
        if cfg.shaping == ShapingKind::SoftmaxUtility {
            return Err(Error::config("openai_es does not use softmax utilities"));
        }
        Ok(OpenAiEs { cfg, dim, popsize })
    }
}

pub(super) fn fd_state<'a>(state: &'a StrategyState, name: &'static str) -> Result<&'a FiniteDiffState> {
    match &state.inner {
        StrategyInner::FiniteDiff(s) => Ok(s),
        _ => Err(Error::StateMismatch(name)),
    }
}

pub(super) fn fd_initialize(cfg: &StrategyConfig, dim: usize, init_mean: &[f64], stream: &RngStream) -> Result<StrategyState> {
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
        inner: StrategyInner::FiniteDiff(FiniteDiffState {
            dist: SearchDistribution::isotropic(init_mean.to_vec(), cfg.sigma0)?,
            gd: GdState::new(&cfg.gd, dim),
            sigma_lr: cfg.sigma_lr,
            baseline: None,
        }),
        tell_stream: stream.clone(),
    })
}

/// Descent step on the mean followed by mean decay and sigma decay.
pub(super) fn descend(cfg: &StrategyConfig, st: &FiniteDiffState, grad: &[f64], sigma: Vec<f64>) -> Result<FiniteDiffState> {
    let (mean, gd) = gd_step(&cfg.gd, &st.gd, &st.dist.mean, grad)?;
    let mean = apply_mean_decay(&mean, cfg.gd.mean_decay);
    let sigma = decay_sigma(&sigma, cfg.gd.sigma_decay, cfg.gd.sigma_limit.max(super::MIN_SIGMA));
    Ok(FiniteDiffState {
        dist: SearchDistribution { mean, sigma },
        gd,
        sigma_lr: st.sigma_lr,
        baseline: st.baseline,
    })
}

impl Strategy for OpenAiEs {
    fn name(&self) -> &'static str {
        "openai_es"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn popsize(&self) -> usize {
        self.popsize
    }

    fn initialize(&self, init_mean: &[f64], stream: &RngStream) -> Result<StrategyState> {
        fd_initialize(&self.cfg, self.dim, init_mean, stream)
    }

    fn ask(&self, state: &StrategyState, stream: &RngStream, popsize: usize) -> Result<Vec<Candidate>> {
        self.check_state(state)?;
        self.check_popsize(popsize)?;
        sample_antithetic(&fd_state(state, self.name())?.dist, stream, popsize)
    }

    fn shape(&self, raw: &[f64]) -> Result<Vec<f64>> {
        self.cfg.shaper().apply(raw)
    }

    fn update(&self, state: &StrategyState, pop: &Population) -> Result<StrategyInner> {
        let st = fd_state(state, self.name())?;
        antithetic_pairs(pop.len())?;
        let loss = self.cfg.shaper().to_loss(shaped(pop));
        let eps = pop
            .candidates
            .iter()
            .map(|c| perturbation(c, self.dim))
            .collect::<Result<Vec<_>>>()?;
        let grad = fd_gradient(&loss, &eps, &st.dist.sigma);
        Ok(StrategyInner::FiniteDiff(descend(&self.cfg, st, &grad, st.dist.sigma.clone())?))
    }

    fn incumbent(&self, state: &StrategyState) -> Vec<f64> {
        state.inner.distribution().map(|d| d.mean).unwrap_or_default()
    }
}
