//! Small neural substrates evolved as flat parameter vectors.
//!
//! Tensors are stored row-major in declaration order. A dense layer is a
//! weight `[out, in]` followed by a bias `[out]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorSpec {
    pub name: String,
    pub shape: Vec<usize>,
}

impl TensorSpec {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Ordered list of named tensors packed into one vector.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterLayout {
    pub tensors: Vec<TensorSpec>,
}

impl ParameterLayout {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, name: impl Into<String>, shape: &[usize]) {
        self.tensors.push(TensorSpec {
            name: name.into(),
            shape: shape.to_vec(),
        });
    }

    pub fn total_dim(&self) -> usize {
        self.tensors.iter().map(TensorSpec::len).sum()
    }

    pub fn unflatten(&self, v: &[f64]) -> Result<Vec<Tensor>> {
        self.check(v)?;
        let mut offset = 0;
        Ok(self
            .tensors
            .iter()
            .map(|t| {
                let n = t.len();
                let data = v[offset..offset + n].to_vec();
                offset += n;
                Tensor {
                    name: t.name.clone(),
                    shape: t.shape.clone(),
                    data,
                }
            })
            .collect())
    }

    pub fn flatten(&self, tensors: &[Tensor]) -> Result<Vec<f64>> {
        if tensors.len() != self.tensors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.tensors.len(),
                found: tensors.len(),
            });
        }
        let mut out = Vec::with_capacity(self.total_dim());
        for (spec, t) in self.tensors.iter().zip(tensors) {
            if spec.shape != t.shape || t.data.len() != spec.len() {
                return Err(Error::config(format!(
                    "tensor `{}` has shape {:?} with {} values, layout expects `{}` {:?}",
                    t.name,
                    t.shape,
                    t.data.len(),
                    spec.name,
                    spec.shape
                )));
            }
            out.extend_from_slice(&t.data);
        }
        Ok(out)
    }

    pub fn check(&self, v: &[f64]) -> Result<()> {
        if v.len() != self.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim(),
                found: v.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Tanh,
    Relu,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Relu => x.max(0.0),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Head {
    Identity,
    Tanh,
    /// Index of the largest logit (first on ties).
    Argmax,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MlpSpec {
    /// `[input, hidden..., output]`.
    pub sizes: Vec<usize>,
    pub activation: Activation,
    pub head: Head,
}

impl MlpSpec {
    pub fn new(sizes: Vec<usize>, activation: Activation, head: Head) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config(format!("mlp sizes {sizes:?} need input and output widths >= 1")));
        }
        Ok(MlpSpec { sizes, activation, head })
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().expect("validated non-empty")
    }

    pub fn layout(&self) -> ParameterLayout {
        let mut l = ParameterLayout::new();
        for (i, w) in self.sizes.windows(2).enumerate() {
            l.push(format!("w{i}"), &[w[1], w[0]]);
            l.push(format!("b{i}"), &[w[1]]);
        }
        l
    }

    pub fn total_dim(&self) -> usize {
        self.sizes.windows(2).map(|w| w[1] * w[0] + w[1]).sum()
    }

    /// Output layer activations before the head.
    pub fn logits(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        if params.len() != self.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim(),
                found: params.len(),
            });
        }
        if x.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        let layers = self.sizes.len() - 1;
        let mut cur = x.to_vec();
        let mut offset = 0;
        for (i, w) in self.sizes.windows(2).enumerate() {
            let (n_in, n_out) = (w[0], w[1]);
            let weights = &params[offset..offset + n_in * n_out];
            let bias = &params[offset + n_in * n_out..offset + n_in * n_out + n_out];
            offset += n_in * n_out + n_out;
            let mut next: Vec<f64> = weights
                .chunks_exact(n_in)
                .zip(bias)
                .map(|(row, b)| b + row.iter().zip(&cur).map(|(a, c)| a * c).sum::<f64>())
                .collect();
            if i + 1 < layers {
                for v in &mut next {
                    *v = self.activation.apply(*v);
                }
            }
            cur = next;
        }
        Ok(cur)
    }

    /// Forward pass with the head applied. The argmax head yields a single
    /// value holding the chosen index.
    pub fn forward(&self, params: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let logits = self.logits(params, x)?;
        Ok(match self.head {
            Head::Identity => logits,
            Head::Tanh => logits.into_iter().map(f64::tanh).collect(),
            Head::Argmax => vec![argmax(&logits) as f64],
        })
    }
}

/// Index of the maximum; ties resolve to the lowest index.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

/// Single-layer GRU with a linear scalar readout of the final hidden state.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GruSpec {
    pub input_dim: usize,
    pub hidden: usize,
}

impl GruSpec {
    pub fn new(input_dim: usize, hidden: usize) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::config("gru input and hidden widths must be >= 1"));
        }
        Ok(GruSpec { input_dim, hidden })
    }

    /// Gates are ordered reset, update, candidate.
    pub fn layout(&self) -> ParameterLayout {
        let (i, h) = (self.input_dim, self.hidden);
        let mut l = ParameterLayout::new();
        for g in ["r", "z", "n"] {
            l.push(format!("w_{g}"), &[h, i]);
            l.push(format!("u_{g}"), &[h, h]);
            l.push(format!("b_{g}"), &[h]);
        }
        l.push("w_out", &[1, h]);
        l.push("b_out", &[1]);
        l
    }

    pub fn total_dim(&self) -> usize {
        3 * (self.hidden * self.input_dim + self.hidden * self.hidden + self.hidden) + self.hidden + 1
    }

    fn gate_block(&self) -> usize {
        self.hidden * self.input_dim + self.hidden * self.hidden + self.hidden
    }

    /// Runs the recurrence over `seq` (timesteps of `input_dim` values each).
    pub fn forward(&self, params: &[f64], seq: &[Vec<f64>]) -> Result<f64> {
        let (ni, nh) = (self.input_dim, self.hidden);
        if params.len() != self.total_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.total_dim(),
                found: params.len(),
            });
        }
        if seq.is_empty() {
            return Err(Error::config("gru forward needs a non-empty sequence"));
        }
        let block = self.gate_block();
        let gate = |g: usize| {
            let p = &params[g * block..(g + 1) * block];
            (&p[..nh * ni], &p[nh * ni..nh * ni + nh * nh], &p[nh * ni + nh * nh..])
        };
        let (wr, ur, br) = gate(0);
        let (wz, uz, bz) = gate(1);
        let (wn, un, bn) = gate(2);
        let readout = &params[3 * block..];

        let mut h = vec![0.0; nh];
        let mut r = vec![0.0; nh];
        let mut z = vec![0.0; nh];
        let mut rh = vec![0.0; nh];
        for x in seq {
            if x.len() != ni {
                return Err(Error::DimensionMismatch { expected: ni, found: x.len() });
            }
            for k in 0..nh {
                let (rows_i, rows_h) = (k * ni..(k + 1) * ni, k * nh..(k + 1) * nh);
                r[k] = sigmoid(br[k] + dot(&wr[rows_i.clone()], x) + dot(&ur[rows_h.clone()], &h));
                z[k] = sigmoid(bz[k] + dot(&wz[rows_i], x) + dot(&uz[rows_h], &h));
                rh[k] = r[k] * h[k];
            }
            for k in 0..nh {
                let cand = tanh(bn[k] + dot(&wn[k * ni..(k + 1) * ni], x) + dot(&un[k * nh..(k + 1) * nh], &rh));
                h[k] += z[k] * (cand - h[k]);
            }
        }
        Ok(readout[nh] + dot(&readout[..nh], &h))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn tanh(x: f64) -> f64 {
    // Through exp, which is noticeably cheaper than libm's tanh here.
    1.0 - 2.0 / ((2.0 * x).exp() + 1.0)
}
