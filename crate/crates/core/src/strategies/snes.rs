use crate::asktell::{Candidate, Population, SearchDistribution, Strategy, StrategyState};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::shaping::{descending_ranks, ShapingKind};

use super::{perturbation, shaped, StrategyConfig, StrategyInner, MIN_SIGMA};

/// Reference rank-based utilities: `max(0, ln(N/2 + 1) − ln k)` normalized to
/// sum one, minus `1/N`, for the k-th best member (k starting at 1).
pub fn log_rank_utilities(f: &[f64]) -> Vec<f64> {
    let n = f.len() as f64;
    let raw: Vec<f64> = descending_ranks(f)
        .into_iter()
        .map(|r| ((n / 2.0 + 1.0).ln() - (r + 1.0).ln()).max(0.0))
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|u| u / total - 1.0 / n).collect()
}

/// Separable natural evolution strategy.
#[derive(Debug)]
pub struct Snes {
    cfg: StrategyConfig,
    dim: usize,
    popsize: usize,
    lr_mean: f64,
    lr_sigma: f64,
}

impl Snes {
    pub fn new(cfg: StrategyConfig, dim: usize, popsize: usize) -> Result<Self> {
        if popsize < 2 {
            return Err(Error::config("snes needs N >= 2"));
        }
        if !matches!(cfg.shaping, ShapingKind::CenteredRanks | ShapingKind::SoftmaxUtility) {
            return Err(Error::config(format!(
                "snes uses centered_ranks (reference log-rank utilities) or softmax_utility, not {}",
                cfg.shaping
            )));
        }
        let d = dim as f64;
        Ok(Snes {
            cfg,
            dim,
            popsize,
            lr_mean: 1.0,
            lr_sigma: (3.0 + d.ln()) / (5.0 * d.sqrt()),
        })
    }

    pub fn learning_rates(&self) -> (f64, f64) {
        (self.lr_mean, self.lr_sigma)
    }
}

fn dist<'a>(state: &'a StrategyState) -> Result<&'a SearchDistribution> {
    match &state.inner {
        StrategyInner::Snes(d) => Ok(d),
        _ => Err(Error::StateMismatch("snes")),
    }
}

/// Natural-gradient step given utility weights `w` and standardized samples.
pub(super) fn snes_step(dist: &SearchDistribution, w: &[f64], s: &[&[f64]], lr_mean: f64, lr_sigma: f64) -> SearchDistribution {
    let d = dist.dim();
    let mut g_mu = vec![0.0; d];
    let mut g_sigma = vec![0.0; d];
    for (wi, si) in w.iter().zip(s) {
        for j in 0..d {
            g_mu[j] += wi * si[j];
            g_sigma[j] += wi * (si[j] * si[j] - 1.0);
        }
    }
    let mean = (0..d).map(|j| dist.mean[j] + lr_mean * dist.sigma[j] * g_mu[j]).collect();
    let sigma = (0..d)
        .map(|j| (dist.sigma[j] * (lr_sigma / 2.0 * g_sigma[j]).exp()).clamp(MIN_SIGMA, f64::MAX))
        .collect();
    SearchDistribution { mean, sigma }
}

impl Strategy for Snes {
    fn name(&self) -> &'static str {
        "snes"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn popsize(&self) -> usize {
        self.popsize
    }

    fn initialize(&self, init_mean: &[f64], stream: &RngStream) -> Result<StrategyState> {
        if init_mean.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: init_mean.len(),
            });
        }
        Ok(StrategyState {
            generation: 0,
            dim: self.dim,
            best_so_far: None,
            inner: StrategyInner::Snes(SearchDistribution::isotropic(init_mean.to_vec(), self.cfg.sigma0)?),
            tell_stream: stream.clone(),
        })
    }

    fn ask(&self, state: &StrategyState, stream: &RngStream, popsize: usize) -> Result<Vec<Candidate>> {
        self.check_state(state)?;
        self.check_popsize(popsize)?;
        let dist = dist(state)?;
        Ok((0..popsize)
            .map(|i| {
                let s = stream.split(i as u64).normal_vec(self.dim);
                let params = (0..self.dim).map(|j| dist.mean[j] + dist.sigma[j] * s[j]).collect();
                let mut c = Candidate::new(i, params);
                c.perturbation = Some(s);
                c
            })
            .collect())
    }

    fn shape(&self, raw: &[f64]) -> Result<Vec<f64>> {
        match self.cfg.shaping {
            ShapingKind::SoftmaxUtility => self.cfg.shaper().apply(raw),
            _ => Ok(log_rank_utilities(raw)),
        }
    }

    fn update(&self, state: &StrategyState, pop: &Population) -> Result<StrategyInner> {
        let dist = dist(state)?;
        let w = shaped(pop);
        let s = pop
            .candidates
            .iter()
            .map(|c| perturbation(c, self.dim))
            .collect::<Result<Vec<_>>>()?;
        Ok(StrategyInner::Snes(snes_step(dist, w, &s, self.lr_mean, self.lr_sigma)))
    }

    fn incumbent(&self, state: &StrategyState) -> Vec<f64> {
        state.inner.distribution().map(|d| d.mean).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::StrategyKind;

    #[test]
    fn reference_learning_rate() {
        let s = Snes::new(StrategyConfig::default_for(StrategyKind::Snes), 10, 16).unwrap();
        let (m, sg) = s.learning_rates();
        assert_eq!(m, 1.0);
        assert!((sg - (3.0 + 10f64.ln()) / (5.0 * 10f64.sqrt())).abs() < 1e-15);
    }

    #[test]
    fn log_rank_utilities_sum_to_zero_and_favor_best() {
        let u = log_rank_utilities(&[0.1, 0.9, 0.5, 0.3, 0.7, 0.2]);
        assert!(u.iter().sum::<f64>().abs() < 1e-12);
        let best = u.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert_eq!(best, 1);
    }

    #[test]
    fn one_hot_weight_moves_mean_to_sample() {
        let dist = SearchDistribution::new(vec![1.0, -1.0], vec![0.5, 2.0]).unwrap();
        let s1 = [0.3, -0.4];
        let s2 = [1.0, 1.0];
        let next = snes_step(&dist, &[1.0, 0.0], &[&s1, &s2], 1.0, 0.2);
        assert!((next.mean[0] - (1.0 + 0.5 * 0.3)).abs() < 1e-15);
        assert!((next.mean[1] - (-1.0 + 2.0 * -0.4)).abs() < 1e-15);
        assert!(next.sigma.iter().all(|v| *v > 0.0));
    }

    #[test]
    fn uniform_weights_keep_sigma_nearly_fixed() {
        let d = 5;
        let n = 10_000;
        let dist = SearchDistribution::isotropic(vec![0.0; d], 0.3).unwrap();
        let samples: Vec<Vec<f64>> = (0..n).map(|i| RngStream::new(77).split(i).normal_vec(d)).collect();
        let refs: Vec<&[f64]> = samples.iter().map(|v| v.as_slice()).collect();
        let lr_sigma = (3.0 + (d as f64).ln()) / (5.0 * (d as f64).sqrt());
        let next = snes_step(&dist, &vec![1.0 / n as f64; n as usize], &refs, 1.0, lr_sigma);
        for s in next.sigma {
            assert!((s / 0.3 - 1.0).abs() < 0.02, "{s}");
        }
    }

    #[test]
    fn rejects_unsupported_shaping() {
        let mut cfg = StrategyConfig::default_for(StrategyKind::Snes);
        cfg.shaping = ShapingKind::ZScore;
        assert!(cfg.build(3, 8).is_err());
    }
}
