use crate::asktell::{Candidate, Population, Strategy, StrategyState};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::shaping::ShapingKind;

use super::openai_es::{descend, fd_initialize, fd_state};
use super::{antithetic_pairs, perturbation, sample_antithetic, shaped, StrategyConfig, StrategyInner, MIN_SIGMA};

const BASELINE_MOMENTUM: f64 = 0.9;
/// Largest relative change of any sigma coordinate in one update.
pub const SIGMA_MAX_CHANGE: f64 = 0.2;

/// Pair-difference gradients of symmetric sampling.
///
/// With `plus[k] = F(θ + σ∘z_k)` and `minus[k] = F(θ − σ∘z_k)`, returns the
/// mean gradient `(1/P) Σ (f⁺ − f⁻)/2 · z` and the per-dimension sigma
/// gradient `(1/P) Σ ((f⁺ + f⁻)/2 − b) (z² − 1) σ`.
pub fn pair_gradients(plus: &[f64], minus: &[f64], z: &[&[f64]], sigma: &[f64], baseline: f64) -> (Vec<f64>, Vec<f64>) {
    let p = plus.len() as f64;
    let d = sigma.len();
    let mut g_mean = vec![0.0; d];
    let mut g_sigma = vec![0.0; d];
    for ((fp, fm), zk) in plus.iter().zip(minus).zip(z) {
        let diff = (fp - fm) / 2.0;
        let avg = (fp + fm) / 2.0 - baseline;
        for j in 0..d {
            g_mean[j] += diff * zk[j];
            g_sigma[j] += avg * (zk[j] * zk[j] - 1.0) * sigma[j];
        }
    }
    for j in 0..d {
        g_mean[j] /= p;
        g_sigma[j] /= p;
    }
    (g_mean, g_sigma)
}

/// PGPE with symmetric sampling and per-dimension sigma adaptation.
#[derive(Debug)]
pub struct Pgpe {
    cfg: StrategyConfig,
    dim: usize,
    popsize: usize,
}

impl Pgpe {
    pub fn new(cfg: StrategyConfig, dim: usize, popsize: usize) -> Result<Self> {
        antithetic_pairs(popsize)?;
        if cfg.shaping == ShapingKind::SoftmaxUtility {
            return Err(Error::config("pgpe does not use softmax utilities"));
        }
        if !(cfg.sigma_lr >= 0.0) {
            return Err(Error::config("sigma_lr must be non-negative"));
        }
        Ok(Pgpe { cfg, dim, popsize })
    }
}

impl Strategy for Pgpe {
    fn name(&self) -> &'static str {
        "pgpe"
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
        let pairs = antithetic_pairs(pop.len())?;
        let loss = self.cfg.shaper().to_loss(shaped(pop));
        let plus: Vec<f64> = (0..pairs).map(|k| loss[2 * k]).collect();
        let minus: Vec<f64> = (0..pairs).map(|k| loss[2 * k + 1]).collect();
        let z = (0..pairs)
            .map(|k| perturbation(&pop.candidates[2 * k], self.dim))
            .collect::<Result<Vec<_>>>()?;
        let batch_mean = plus.iter().chain(&minus).sum::<f64>() / (2 * pairs) as f64;
        let baseline = st.baseline.unwrap_or(batch_mean);
        let sigma = &st.dist.sigma;
        let (g_mean, g_sigma) = pair_gradients(&plus, &minus, &z, sigma, baseline);

        let floor = self.cfg.gd.sigma_limit.max(MIN_SIGMA);
        let new_sigma: Vec<f64> = sigma
            .iter()
            .zip(&g_sigma)
            .map(|(s, g)| {
                let stepped = s - st.sigma_lr * g;
                stepped
                    .clamp(s * (1.0 - SIGMA_MAX_CHANGE), s * (1.0 + SIGMA_MAX_CHANGE))
                    .max(floor)
            })
            .collect();
        let mut next = descend(&self.cfg, st, &g_mean, new_sigma)?;
        next.sigma_lr = st.sigma_lr * self.cfg.gd.lr_decay;
        next.baseline = Some(BASELINE_MOMENTUM * baseline + (1.0 - BASELINE_MOMENTUM) * batch_mean);
        Ok(StrategyInner::FiniteDiff(next))
    }

    fn incumbent(&self, state: &StrategyState) -> Vec<f64> {
        state.inner.distribution().map(|d| d.mean).unwrap_or_default()
    }
}
