//! Separable CMA-ES: CMA-ES restricted to a diagonal covariance, with the
//! covariance learning rate enlarged by `(d + 2) / 3`.

use serde::{Deserialize, Serialize};

use crate::asktell::{Candidate, Population, SearchDistribution, Strategy, StrategyState};
use crate::error::{Error, Result};
use crate::rng::RngStream;

use super::{StrategyConfig, StrategyInner, MIN_SIGMA};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SepCmaState {
    pub mean: Vec<f64>,
    /// Global step size.
    pub step: f64,
    /// Diagonal of the covariance matrix.
    pub diag_c: Vec<f64>,
    pub path_c: Vec<f64>,
    pub path_sigma: Vec<f64>,
}

impl SepCmaState {
    /// Per-coordinate sampling scale `step * sqrt(c)`.
    pub fn distribution(&self) -> SearchDistribution {
        SearchDistribution {
            mean: self.mean.clone(),
            sigma: self
                .diag_c
                .iter()
                .map(|c| (self.step * c.sqrt()).max(MIN_SIGMA))
                .collect(),
        }
    }
}

#[derive(Debug)]
pub struct SepCmaEs {
    cfg: StrategyConfig,
    dim: usize,
    popsize: usize,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_cov: f64,
    chi_n: f64,
}

impl SepCmaEs {
    pub fn new(cfg: StrategyConfig, dim: usize, popsize: usize) -> Result<Self> {
        let mu = (cfg.elite_ratio * popsize as f64).round() as usize;
        if mu == 0 {
            return Err(Error::config(format!(
                "sep_cma_es elite count round({} * {popsize}) is zero",
                cfg.elite_ratio
            )));
        }
        let raw: Vec<f64> = (1..=mu).map(|i| (mu as f64 + 0.5).ln() - (i as f64).ln()).collect();
        let total: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();

        let n = dim as f64;
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = 4.0 / (n + 4.0);
        let mu_cov = mu_eff;
        let c_cov_full = (1.0 / mu_cov) * 2.0 / (n + 2f64.sqrt()).powi(2)
            + (1.0 - 1.0 / mu_cov) * ((2.0 * mu_cov - 1.0) / ((n + 2.0).powi(2) + mu_cov)).min(1.0);
        let c_cov = (c_cov_full * (n + 2.0) / 3.0).min(1.0);
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));
        Ok(SepCmaEs {
            cfg,
            dim,
            popsize,
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_cov,
            chi_n,
        })
    }

    pub fn elite_count(&self) -> usize {
        self.weights.len()
    }

    fn state<'a>(&self, state: &'a StrategyState) -> Result<&'a SepCmaState> {
        match &state.inner {
            StrategyInner::SepCma(s) => Ok(s),
            _ => Err(Error::StateMismatch("sep_cma_es")),
        }
    }
}

impl Strategy for SepCmaEs {
    fn name(&self) -> &'static str {
        "sep_cma_es"
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
            inner: StrategyInner::SepCma(SepCmaState {
                mean: init_mean.to_vec(),
                step: self.cfg.sigma0,
                diag_c: vec![1.0; self.dim],
                path_c: vec![0.0; self.dim],
                path_sigma: vec![0.0; self.dim],
            }),
            tell_stream: stream.clone(),
        })
    }

    fn ask(&self, state: &StrategyState, stream: &RngStream, popsize: usize) -> Result<Vec<Candidate>> {
        self.check_state(state)?;
        self.check_popsize(popsize)?;
        let dist = self.state(state)?.distribution();
        Ok((0..popsize)
            .map(|i| {
                let z = stream.split(i as u64).normal_vec(self.dim);
                let params = (0..self.dim).map(|j| dist.mean[j] + dist.sigma[j] * z[j]).collect();
                let mut c = Candidate::new(i, params);
                c.perturbation = Some(z);
                c
            })
            .collect())
    }

    /// Elite weighting is rank-based; the raw fitness is passed through.
    fn shape(&self, raw: &[f64]) -> Result<Vec<f64>> {
        Ok(raw.to_vec())
    }

    fn update(&self, state: &StrategyState, pop: &Population) -> Result<StrategyInner> {
        let st = self.state(state)?;
        let n = self.dim;
        let mu = self.elite_count();
        if pop.len() < mu {
            return Err(Error::config(format!("population of {} is smaller than {mu} elites", pop.len())));
        }
        let mut order: Vec<usize> = (0..pop.len()).collect();
        order.sort_by(|&a, &b| pop.raw_fitness[b].total_cmp(&pop.raw_fitness[a]).then(a.cmp(&b)));

        // y_i = (x_i - m) / step
        let ys: Vec<Vec<f64>> = order[..mu]
            .iter()
            .map(|&i| {
                pop.candidates[i]
                    .params
                    .iter()
                    .zip(&st.mean)
                    .map(|(x, m)| (x - m) / st.step)
                    .collect()
            })
            .collect();
        let mut y_w = vec![0.0; n];
        for (w, y) in self.weights.iter().zip(&ys) {
            for j in 0..n {
                y_w[j] += w * y[j];
            }
        }
        let mean: Vec<f64> = (0..n).map(|j| st.mean[j] + st.step * y_w[j]).collect();

        let cs = self.c_sigma;
        let norm_s = (cs * (2.0 - cs) * self.mu_eff).sqrt();
        let path_sigma: Vec<f64> = (0..n)
            .map(|j| (1.0 - cs) * st.path_sigma[j] + norm_s * y_w[j] / st.diag_c[j].sqrt())
            .collect();
        let ps_norm = path_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let g = (state.generation + 1) as i32;
        let h_sigma = if ps_norm / (1.0 - (1.0 - cs).powi(2 * g)).sqrt() < (1.4 + 2.0 / (n as f64 + 1.0)) * self.chi_n {
            1.0
        } else {
            0.0
        };

        let cc = self.c_c;
        let norm_c = (cc * (2.0 - cc) * self.mu_eff).sqrt();
        let path_c: Vec<f64> = (0..n)
            .map(|j| (1.0 - cc) * st.path_c[j] + h_sigma * norm_c * y_w[j])
            .collect();

        let c_cov = self.c_cov;
        let mu_cov = self.mu_eff;
        let diag_c: Vec<f64> = (0..n)
            .map(|j| {
                let rank_mu: f64 = self.weights.iter().zip(&ys).map(|(w, y)| w * y[j] * y[j]).sum();
                let rank_one = path_c[j] * path_c[j] + (1.0 - h_sigma) * cc * (2.0 - cc) * st.diag_c[j];
                let c = (1.0 - c_cov) * st.diag_c[j] + c_cov / mu_cov * rank_one + c_cov * (1.0 - 1.0 / mu_cov) * rank_mu;
                c.clamp(1e-20, 1e20)
            })
            .collect();

        let step = st.step * ((cs / self.d_sigma) * (ps_norm / self.chi_n - 1.0)).exp();
        let floor = MIN_SIGMA / diag_c.iter().copied().fold(f64::INFINITY, f64::min).sqrt();
        let step = step.clamp(floor.max(f64::MIN_POSITIVE), 1e100);

        Ok(StrategyInner::SepCma(SepCmaState {
            mean,
            step,
            diag_c,
            path_c,
            path_sigma,
        }))
    }

    fn incumbent(&self, state: &StrategyState) -> Vec<f64> {
        state.inner.distribution().map(|d| d.mean).unwrap_or_default()
    }
}
