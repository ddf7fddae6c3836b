//! Gradient-descent optimizers for the search-distribution mean, plus the
//! learning-rate, perturbation-strength and mean-decay schedules.
//!
//! All optimizers *descend*: callers pass the gradient of a loss.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_finite, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OptimizerKind {
    Sgd,
    Adam,
    #[serde(rename = "clipup")]
    ClipUp,
    Adan,
}

impl OptimizerKind {
    pub const ALL: [OptimizerKind; 4] = [
        OptimizerKind::Sgd,
        OptimizerKind::Adam,
        OptimizerKind::ClipUp,
        OptimizerKind::Adan,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
            OptimizerKind::ClipUp => "clipup",
            OptimizerKind::Adan => "adan",
        }
    }
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        OptimizerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::config(format!("unknown optimizer `{s}`")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GdConfig {
    pub kind: OptimizerKind,
    pub alpha0: f64,
    pub lr_decay: f64,
    pub sigma_decay: f64,
    pub sigma_limit: f64,
    pub mean_decay: f64,
    /// ClipUp momentum.
    pub momentum: f64,
    /// ClipUp velocity cap; `None` means `2 * alpha0`.
    pub max_speed: Option<f64>,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adan_betas: [f64; 3],
    pub eps: f64,
}

impl Default for GdConfig {
    fn default() -> Self {
        GdConfig {
            kind: OptimizerKind::Adam,
            alpha0: 0.02,
            lr_decay: 0.999,
            sigma_decay: 0.999,
            sigma_limit: 0.0,
            mean_decay: 0.0,
            momentum: 0.9,
            max_speed: None,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adan_betas: [0.98, 0.92, 0.99],
            eps: 1e-8,
        }
    }
}

impl GdConfig {
    pub fn with_kind(kind: OptimizerKind, alpha0: f64) -> Self {
        GdConfig {
            kind,
            alpha0,
            ..GdConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha0 > 0.0 && self.alpha0.is_finite()) {
            return Err(Error::config("alpha0 must be positive"));
        }
        for (name, v) in [("lr_decay", self.lr_decay), ("sigma_decay", self.sigma_decay)] {
            if !(v > 0.0 && v <= 1.0) {
                return Err(Error::config(format!("{name} must lie in (0, 1], got {v}")));
            }
        }
        if !(0.0..1.0).contains(&self.mean_decay) {
            return Err(Error::config(format!("mean_decay must lie in [0, 1), got {}", self.mean_decay)));
        }
        if !(self.sigma_limit >= 0.0) {
            return Err(Error::config("sigma_limit must be non-negative"));
        }
        Ok(())
    }

    pub fn max_speed(&self) -> f64 {
        self.max_speed.unwrap_or(2.0 * self.alpha0)
    }
}

/// Optimizer moments and schedule position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GdState {
    pub t: u64,
    /// Learning rate for the next step.
    pub lr: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub n: Vec<f64>,
    pub prev_grad: Option<Vec<f64>>,
}

impl GdState {
    pub fn new(cfg: &GdConfig, d: usize) -> Self {
        GdState {
            t: 0,
            lr: cfg.alpha0,
            m: vec![0.0; d],
            v: vec![0.0; d],
            n: vec![0.0; d],
            prev_grad: None,
        }
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// One descent step on `theta` with the configured optimizer at the current
/// learning rate, followed by the exponential learning-rate decay.
pub fn gd_step(cfg: &GdConfig, st: &GdState, theta: &[f64], grad: &[f64]) -> Result<(Vec<f64>, GdState)> {
    if theta.len() != grad.len() || st.m.len() != theta.len() {
        return Err(Error::DimensionMismatch {
            expected: theta.len(),
            found: grad.len(),
        });
    }
    ensure_finite(grad, "gradient")?;
    let lr = st.lr;
    let mut next = st.clone();
    next.t = st.t + 1;
    next.lr = st.lr * cfg.lr_decay;
    let step: Vec<f64> = match cfg.kind {
        OptimizerKind::Sgd => grad.iter().map(|g| lr * g).collect(),
        OptimizerKind::Adam => {
            let (b1, b2) = (cfg.adam_beta1, cfg.adam_beta2);
            let t = next.t as i32;
            let c1 = 1.0 - b1.powi(t);
            let c2 = 1.0 - b2.powi(t);
            grad.iter()
                .enumerate()
                .map(|(i, &g)| {
                    next.m[i] = b1 * st.m[i] + (1.0 - b1) * g;
                    next.v[i] = b2 * st.v[i] + (1.0 - b2) * g * g;
                    lr * (next.m[i] / c1) / ((next.v[i] / c2).sqrt() + cfg.eps)
                })
                .collect()
        }
        OptimizerKind::ClipUp => {
            let gn = norm(grad);
            let scale = if gn > 0.0 { lr / gn } else { 0.0 };
            for (i, &g) in grad.iter().enumerate() {
                next.m[i] = cfg.momentum * st.m[i] + scale * g;
            }
            let speed = norm(&next.m);
            let cap = cfg.max_speed();
            if speed > cap {
                for v in &mut next.m {
                    *v *= cap / speed;
                }
            }
            next.m.clone()
        }
        OptimizerKind::Adan => {
            let [b1, b2, b3] = cfg.adan_betas;
            let t = next.t as i32;
            let c1 = 1.0 - b1.powi(t);
            let c2 = 1.0 - b2.powi(t);
            let c3 = 1.0 - b3.powi(t);
            let prev = st.prev_grad.clone().unwrap_or_else(|| grad.to_vec());
            let step = grad
                .iter()
                .enumerate()
                .map(|(i, &g)| {
                    let diff = g - prev[i];
                    next.m[i] = b1 * st.m[i] + (1.0 - b1) * g;
                    next.v[i] = b2 * st.v[i] + (1.0 - b2) * diff;
                    let u = g + b2 * diff;
                    next.n[i] = b3 * st.n[i] + (1.0 - b3) * u * u;
                    let num = next.m[i] / c1 + b2 * next.v[i] / c2;
                    lr * num / ((next.n[i] / c3).sqrt() + cfg.eps)
                })
                .collect();
            next.prev_grad = Some(grad.to_vec());
            step
        }
    };
    let theta_next = theta.iter().zip(&step).map(|(t, s)| t - s).collect();
    Ok((theta_next, next))
}

/// `(1 - lambda) * theta`.
pub fn apply_mean_decay(theta: &[f64], lambda: f64) -> Vec<f64> {
    if lambda == 0.0 {
        return theta.to_vec();
    }
    theta.iter().map(|t| (1.0 - lambda) * t).collect()
}

/// `max(sigma * decay, limit)` elementwise.
pub fn decay_sigma(sigma: &[f64], sigma_decay: f64, sigma_limit: f64) -> Vec<f64> {
    sigma.iter().map(|s| (s * sigma_decay).max(sigma_limit)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg(kind: OptimizerKind, alpha0: f64) -> GdConfig {
        GdConfig {
            lr_decay: 1.0,
            ..GdConfig::with_kind(kind, alpha0)
        }
    }

    #[test]
    fn sgd_plain_step() {
        let c = cfg(OptimizerKind::Sgd, 0.1);
        let (theta, _) = gd_step(&c, &GdState::new(&c, 2), &[1.0, 1.0], &[1.0, -1.0]).unwrap();
        assert_abs_diff_eq!(theta[0], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(theta[1], 1.1, epsilon = 1e-15);
    }

    #[test]
    fn adam_first_step_has_learning_rate_magnitude() {
        let c = cfg(OptimizerKind::Adam, 0.01);
        let (theta, st) = gd_step(&c, &GdState::new(&c, 1), &[0.0], &[1.0]).unwrap();
        // m_hat = v_hat = 1  =>  step = 0.01 / (1 + 1e-8)
        assert_abs_diff_eq!(theta[0], -0.01 / (1.0 + 1e-8), epsilon = 1e-15);
        assert_eq!(st.t, 1);
    }

    #[test]
    fn clipup_normalizes_then_scales() {
        let c = GdConfig {
            momentum: 0.0,
            max_speed: Some(0.15),
            ..cfg(OptimizerKind::ClipUp, 0.1)
        };
        let (theta, st) = gd_step(&c, &GdState::new(&c, 2), &[0.0, 0.0], &[3.0, 4.0]).unwrap();
        assert_abs_diff_eq!(theta[0], -0.06, epsilon = 1e-15);
        assert_abs_diff_eq!(theta[1], -0.08, epsilon = 1e-15);
        assert_abs_diff_eq!(norm(&st.m), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn clipup_speed_is_capped() {
        let c = GdConfig {
            max_speed: Some(0.15),
            ..cfg(OptimizerKind::ClipUp, 0.1)
        };
        let mut st = GdState::new(&c, 3);
        let mut theta = vec![0.0; 3];
        for k in 0..50 {
            let g = [1.0 + k as f64, -2.0, 0.5];
            let (next, s) = gd_step(&c, &st, &theta, &g).unwrap();
            let step: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
            assert!(norm(&step) <= 0.15 + 1e-12);
            theta = next;
            st = s;
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        for kind in OptimizerKind::ALL {
            let c = cfg(kind, 0.05);
            let (theta, _) = gd_step(&c, &GdState::new(&c, 3), &[1.0, -2.0, 3.0], &[0.0; 3]).unwrap();
            assert_eq!(theta, vec![1.0, -2.0, 3.0], "{kind}");
        }
    }

    #[test]
    fn quadratic_descends_for_every_kind() {
        for kind in OptimizerKind::ALL {
            let c = GdConfig::with_kind(kind, 0.01);
            let mut theta = vec![0.6, -0.8];
            let mut st = GdState::new(&c, 2);
            let start = norm(&theta);
            let mut last = start;
            for step in 0..100 {
                let grad: Vec<f64> = theta.iter().map(|t| 2.0 * t).collect();
                let (next, s) = gd_step(&c, &st, &theta, &grad).unwrap();
                theta = next;
                st = s;
                if step < 10 {
                    assert!(norm(&theta) < last, "{kind} step {step}");
                }
                last = norm(&theta);
            }
            assert!(last < start, "{kind}: {last} >= {start}");
        }
    }

    #[test]
    fn learning_rate_decays_geometrically() {
        let c = GdConfig::with_kind(OptimizerKind::Sgd, 0.05);
        let mut st = GdState::new(&c, 1);
        let mut theta = vec![0.0];
        for _ in 0..20 {
            let before = st.lr;
            let (t, s) = gd_step(&c, &st, &theta, &[1.0]).unwrap();
            assert_abs_diff_eq!(s.lr / before, 0.999, epsilon = 1e-15);
            theta = t;
            st = s;
        }
        assert_abs_diff_eq!(st.lr, 0.05 * 0.999f64.powi(20), epsilon = 1e-15);
    }

    #[test]
    fn non_finite_gradient_is_rejected() {
        let c = GdConfig::default();
        let err = gd_step(&c, &GdState::new(&c, 2), &[0.0, 0.0], &[1.0, f64::NAN]).unwrap_err();
        assert!(matches!(err, Error::NonFinite { index: 1, .. }));
    }

    #[test]
    fn mean_decay() {
        assert_eq!(apply_mean_decay(&[1.0, -2.0], 0.0), vec![1.0, -2.0]);
        let d = apply_mean_decay(&[1.0, -2.0], 0.01);
        assert_abs_diff_eq!(d[0], 0.99, epsilon = 1e-15);
        assert_abs_diff_eq!(d[1], -1.98, epsilon = 1e-15);
        let mut x = vec![3.0];
        for _ in 0..25 {
            x = apply_mean_decay(&x, 0.1);
        }
        assert_abs_diff_eq!(x[0], 3.0 * 0.9f64.powi(25), epsilon = 1e-12);
    }

    #[test]
    fn sigma_decay_and_floor() {
        assert_eq!(decay_sigma(&[0.1, 0.2], 1.0, 0.0), vec![0.1, 0.2]);
        assert_abs_diff_eq!(decay_sigma(&[0.1], 0.999, 0.0)[0], 0.0999, epsilon = 1e-15);
        assert_eq!(decay_sigma(&[0.01], 0.5, 0.01), vec![0.01]);
    }

    #[test]
    fn optimizer_names() {
        for kind in OptimizerKind::ALL {
            assert_eq!(kind.name().parse::<OptimizerKind>().unwrap(), kind);
            let json = serde_json::to_string(&kind).unwrap();
            assert_eq!(json, format!("\"{}\"", kind.name()));
        }
    }
}
