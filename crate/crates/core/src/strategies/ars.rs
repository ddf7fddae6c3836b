use crate::asktell::{Candidate, Population, Strategy, StrategyState};
use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::shaping::ShapingKind;

use super::openai_es::{descend, fd_initialize, fd_state};
use super::{antithetic_pairs, perturbation, sample_antithetic, shaped, StrategyConfig, StrategyInner};

/// Augmented Random Search: antithetic directions, top-b selection by
/// `max(f⁺, f⁻)`, step normalized by the standard deviation of the used
/// returns.
#[derive(Debug)]
pub struct Ars {
    cfg: StrategyConfig,
    dim: usize,
    popsize: usize,
    top: usize,
}

impl Ars {
    pub fn new(cfg: StrategyConfig, dim: usize, popsize: usize) -> Result<Self> {
        let pairs = antithetic_pairs(popsize)?;
        if !matches!(cfg.shaping, ShapingKind::Raw | ShapingKind::ZScore | ShapingKind::CenteredRanks) {
            return Err(Error::config(format!("ars supports raw, z_score and centered_ranks, not {}", cfg.shaping)));
        }
        let top = cfg.top_directions.unwrap_or(popsize.div_ceil(4));
        if top == 0 || top > pairs {
            return Err(Error::config(format!("ars top directions b={top} must lie in [1, N/2={pairs}]")));
        }
        Ok(Ars { cfg, dim, popsize, top })
    }

    pub fn top_directions(&self) -> usize {
        self.top
    }
}

/// Ascent direction `(1 / (b σ_R)) Σ_{top b} (u⁺ − u⁻) δ`, where directions
/// are ranked by `max(f⁺, f⁻)` on `raw` and `u` are the transformed returns.
/// Returns the zero vector when the used returns have no spread.
pub(super) fn ars_direction(raw: &[f64], utility: &[f64], deltas: &[&[f64]], top: usize) -> Vec<f64> {
    let pairs = deltas.len();
    let d = deltas.first().map_or(0, |x| x.len());
    let mut order: Vec<usize> = (0..pairs).collect();
    let score = |k: usize| raw[2 * k].max(raw[2 * k + 1]);
    order.sort_by(|&a, &b| score(b).total_cmp(&score(a)).then(a.cmp(&b)));
    let used = &order[..top];

    let vals: Vec<f64> = used.iter().flat_map(|&k| [utility[2 * k], utility[2 * k + 1]]).collect();
    let mean = vals.iter().sum::<f64>() / vals.len() as f64;
    let std = (vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / vals.len() as f64).sqrt();
    let mut g = vec![0.0; d];
    if std == 0.0 {
        return g;
    }
    for &k in used {
        let diff = utility[2 * k] - utility[2 * k + 1];
        for (gj, dj) in g.iter_mut().zip(deltas[k]) {
            *gj += diff * dj;
        }
    }
    let scale = 1.0 / (top as f64 * std);
    g.iter_mut().for_each(|v| *v *= scale);
    g
}

impl Strategy for Ars {
    fn name(&self) -> &'static str {
        "ars"
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
        if self.top > pairs {
            return Err(Error::config(format!("ars top directions b={} exceeds N/2={pairs}", self.top)));
        }
        let utility = self.cfg.shaper().to_utility(shaped(pop));
        let deltas = (0..pairs)
            .map(|k| perturbation(&pop.candidates[2 * k], self.dim))
            .collect::<Result<Vec<_>>>()?;
        let ascent = ars_direction(&pop.raw_fitness, &utility, &deltas, self.top);
        let loss_grad: Vec<f64> = ascent.iter().map(|g| -g).collect();
        Ok(StrategyInner::FiniteDiff(descend(&self.cfg, st, &loss_grad, st.dist.sigma.clone())?))
    }

    fn incumbent(&self, state: &StrategyState) -> Vec<f64> {
        state.inner.distribution().map(|d| d.mean).unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::strategies::{fd_gradient, StrategyKind};

    #[test]
    fn equal_returns_give_no_update() {
        let g = ars_direction(&[1.0; 4], &[1.0; 4], &[&[1.0, 2.0], &[0.5, -1.0]], 2);
        assert_eq!(g, vec![0.0, 0.0]);
    }

    #[test]
    fn top_one_uses_only_best_direction() {
        // returns (2, 0) and (1, 1); b = 1 keeps direction 1 only, σ_R = std{2, 0} = 1
        let d1 = [0.3, -0.7];
        let d2 = [5.0, 5.0];
        let raw = [2.0, 0.0, 1.0, 1.0];
        let g = ars_direction(&raw, &raw, &[&d1, &d2], 1);
        assert_eq!(g, vec![2.0 * 0.3, 2.0 * -0.7]);
    }

    #[test]
    fn all_directions_reduce_to_scaled_fd_gradient() {
        let deltas: Vec<Vec<f64>> = (0..4).map(|k| RngStream::new(k).normal_vec(3)).collect();
        let raw = [3.0, -1.0, 0.5, 0.25, 2.0, 2.5, -4.0, 1.0];
        let sigma = 0.1;
        let refs: Vec<&[f64]> = deltas.iter().map(|v| v.as_slice()).collect();
        let g_ars = ars_direction(&raw, &raw, &refs, 4);

        let neg: Vec<Vec<f64>> = deltas.iter().map(|v| v.iter().map(|x| -x).collect()).collect();
        let eps: Vec<&[f64]> = (0..8).map(|i| if i % 2 == 0 { refs[i / 2] } else { neg[i / 2].as_slice() }).collect();
        let g_fd = fd_gradient(&raw, &eps, &[sigma; 3]);

        let mean = raw.iter().sum::<f64>() / 8.0;
        let std_r = (raw.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 8.0).sqrt();
        for j in 0..3 {
            assert!((g_ars[j] - g_fd[j] * 2.0 * sigma / std_r).abs() < 1e-12);
        }
    }

    #[test]
    fn too_many_directions_rejected() {
        let mut cfg = StrategyConfig::default_for(StrategyKind::Ars);
        cfg.top_directions = Some(5);
        assert!(cfg.build(2, 8).is_err());
        cfg.top_directions = None;
        let s = cfg.build(2, 8).unwrap();
        assert_eq!(s.popsize(), 8);
    }
}
