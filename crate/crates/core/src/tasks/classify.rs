//! Image classification with an MLP over IDX-formatted data.

use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::asktell::FitnessDirection;
use crate::error::{Error, Result};
use crate::networks::{argmax, Activation, Head, MlpSpec};
use crate::rng::RngStream;

use super::idx::{self, IdxArray};
use super::{EvalContext, MetricKind, Outcome, Task, TaskSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ClassifyConfig {
    pub data_dir: PathBuf,
    pub train_images: String,
    pub train_labels: String,
    pub test_images: String,
    pub test_labels: String,
    pub classes: usize,
    pub hidden: Vec<usize>,
    pub batch: usize,
    /// Evaluate accuracy on the first `n` test items only.
    pub eval_samples: Option<usize>,
    pub popsize: usize,
    pub generations: usize,
}

impl Default for ClassifyConfig {
    fn default() -> Self {
        ClassifyConfig {
            data_dir: PathBuf::from("data/mnist"),
            train_images: "train-images-idx3-ubyte".into(),
            train_labels: "train-labels-idx1-ubyte".into(),
            test_images: "t10k-images-idx3-ubyte".into(),
            test_labels: "t10k-labels-idx1-ubyte".into(),
            classes: 10,
            hidden: vec![12, 12],
            batch: 256,
            eval_samples: None,
            popsize: 256,
            generations: 200,
        }
    }
}

/// Images (flattened bytes) with labels.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub pixels: Vec<u8>,
    pub item_len: usize,
    pub labels: Vec<u8>,
}

impl Dataset {
    pub fn new(images: IdxArray, labels: IdxArray, classes: usize) -> Result<Self> {
        if images.shape.len() < 2 || labels.shape.len() != 1 {
            return Err(Error::config(format!(
                "expected images [n, ...] and labels [n], got {:?} and {:?}",
                images.shape, labels.shape
            )));
        }
        if images.items() != labels.items() {
            return Err(Error::DimensionMismatch {
                expected: images.items(),
                found: labels.items(),
            });
        }
        if let Some(&bad) = labels.data.iter().find(|&&l| l as usize >= classes) {
            return Err(Error::InvalidLabel {
                label: bad as usize,
                classes,
            });
        }
        Ok(Dataset {
            item_len: images.item_len(),
            pixels: images.data,
            labels: labels.data,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Pixels of item `i` scaled to `[0, 1]`.
    pub fn image(&self, i: usize) -> Vec<f64> {
        self.pixels[i * self.item_len..(i + 1) * self.item_len]
            .iter()
            .map(|&p| p as f64 / 255.0)
            .collect()
    }
}

/// Mean cross-entropy of `logits` rows against `labels`.
pub fn cross_entropy(logits: &[Vec<f64>], labels: &[usize]) -> Result<f64> {
    let mut total = 0.0;
    for (row, &y) in logits.iter().zip(labels) {
        if y >= row.len() {
            return Err(Error::InvalidLabel {
                label: y,
                classes: row.len(),
            });
        }
        let m = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = m + row.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
        total += lse - row[y];
    }
    Ok(total / logits.len() as f64)
}

/// Fraction of rows whose argmax (lowest index on ties) equals the label.
pub fn accuracy(logits: &[Vec<f64>], labels: &[usize]) -> f64 {
    let hits = logits.iter().zip(labels).filter(|(row, &y)| argmax(row) == y).count();
    hits as f64 / logits.len() as f64
}

#[derive(Clone, Debug)]
pub struct ClassifyTask {
    cfg: ClassifyConfig,
    net: MlpSpec,
    train: Arc<Dataset>,
    test: Arc<Dataset>,
}

fn read_idx(path: &Path) -> Result<IdxArray> {
    if !path.exists() {
        return Err(Error::TaskDataMissing {
            path: path.to_path_buf(),
            hint: "download the four MNIST IDX files (train/t10k images and labels), gunzip them into \
                   the data directory, or create a synthetic stand-in with `neb data-synth --out <dir>`"
                .into(),
        });
    }
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(idx::parse(&bytes)?)
}

impl ClassifyTask {
    pub fn load(cfg: ClassifyConfig) -> Result<Self> {
        let dir = &cfg.data_dir;
        let train = Dataset::new(
            read_idx(&dir.join(&cfg.train_images))?,
            read_idx(&dir.join(&cfg.train_labels))?,
            cfg.classes,
        )?;
        let test = Dataset::new(
            read_idx(&dir.join(&cfg.test_images))?,
            read_idx(&dir.join(&cfg.test_labels))?,
            cfg.classes,
        )?;
        Self::from_datasets(cfg, train, test)
    }

    pub fn from_datasets(cfg: ClassifyConfig, train: Dataset, test: Dataset) -> Result<Self> {
        if train.is_empty() || test.is_empty() {
            return Err(Error::config("classification splits must be non-empty"));
        }
        if train.item_len != test.item_len {
            return Err(Error::DimensionMismatch {
                expected: train.item_len,
                found: test.item_len,
            });
        }
        if cfg.batch == 0 {
            return Err(Error::config("batch must be >= 1"));
        }
        let mut sizes = vec![train.item_len];
        sizes.extend(&cfg.hidden);
        sizes.push(cfg.classes);
        let net = MlpSpec::new(sizes, Activation::Tanh, Head::Argmax)?;
        Ok(ClassifyTask {
            cfg,
            net,
            train: Arc::new(train),
            test: Arc::new(test),
        })
    }

    pub fn network(&self) -> &MlpSpec {
        &self.net
    }

    fn logits(&self, params: &[f64], data: &Dataset, items: impl Iterator<Item = usize>) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in items {
            rows.push(self.net.logits(params, &data.image(i))?);
            labels.push(data.labels[i] as usize);
        }
        Ok((rows, labels))
    }

    pub fn test_accuracy(&self, params: &[f64]) -> Result<f64> {
        let n = self.cfg.eval_samples.unwrap_or(self.test.len()).min(self.test.len());
        let (rows, labels) = self.logits(params, &self.test, 0..n)?;
        Ok(accuracy(&rows, &labels))
    }
}

impl Task for ClassifyTask {
    fn spec(&self) -> TaskSpec {
        TaskSpec {
            id: "classification".into(),
            direction: FitnessDirection::Minimize,
            popsize: self.cfg.popsize,
            generations: self.cfg.generations,
            mc_evals: 1,
            eval_metric: MetricKind::TestAccuracy,
            init_range: (0.0, 0.0),
            eval_every: (self.cfg.generations / 100).max(1),
        }
    }

    fn dim(&self) -> usize {
        self.net.total_dim()
    }

    /// Cross-entropy on a training mini-batch shared within the generation.
    fn evaluate(&self, params: &[f64], ctx: &EvalContext) -> Result<Outcome> {
        let mut rng = ctx.shared.generator();
        let n = self.train.len();
        let items: Vec<usize> = (0..self.cfg.batch).map(|_| rng.random_range(0..n)).collect();
        let (rows, labels) = self.logits(params, &self.train, items.into_iter())?;
        Ok(Outcome::value(cross_entropy(&rows, &labels)?))
    }

    fn eval_metric(&self, params: &[f64], _stream: &RngStream) -> Result<f64> {
        self.test_accuracy(params)
    }

    fn boxed_clone(&self) -> Box<dyn Task> {
        Box::new(self.clone())
    }
}

/// Writes a synthetic 28x28, 10-class dataset in IDX format: each class is a
/// fixed random blob pattern, and items add pixel noise and a small shift.
pub fn write_synthetic(dir: &Path, n_train: usize, n_test: usize, seed: u64) -> Result<ClassifyConfig> {
    const SIDE: usize = 28;
    let classes = 10;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let stream = RngStream::new(seed);
    let mut proto_rng = stream.split(0).generator();
    let protos: Vec<Vec<f64>> = (0..classes)
        .map(|_| {
            let centers: Vec<(f64, f64)> = (0..3)
                .map(|_| (proto_rng.random_range(6.0..22.0), proto_rng.random_range(6.0..22.0)))
                .collect();
            (0..SIDE * SIDE)
                .map(|p| {
                    let (r, c) = ((p / SIDE) as f64, (p % SIDE) as f64);
                    centers
                        .iter()
                        .map(|(cr, cc)| (-((r - cr).powi(2) + (c - cc).powi(2)) / 8.0).exp())
                        .sum::<f64>()
                        .min(1.0)
                })
                .collect()
        })
        .collect();
    let make = |n: usize, key: u64| -> (IdxArray, IdxArray) {
        let mut rng = stream.split(key).generator();
        let mut pixels = Vec::with_capacity(n * SIDE * SIDE);
        let mut labels = Vec::with_capacity(n);
        for i in 0..n {
            let y = i % classes;
            let (dr, dc) = (rng.random_range(-1i64..=1), rng.random_range(-1i64..=1));
            for p in 0..SIDE * SIDE {
                let (r, c) = ((p / SIDE) as i64 - dr, (p % SIDE) as i64 - dc);
                let base = if (0..SIDE as i64).contains(&r) && (0..SIDE as i64).contains(&c) {
                    protos[y][r as usize * SIDE + c as usize]
                } else {
                    0.0
                };
                let v = (base + rng.random_range(-0.25..0.25)).clamp(0.0, 1.0);
                pixels.push((v * 255.0).round() as u8);
            }
            labels.push(y as u8);
        }
        (
            IdxArray::new(vec![n, SIDE, SIDE], pixels).expect("consistent shape"),
            IdxArray::new(vec![n], labels).expect("consistent shape"),
        )
    };
    let cfg = ClassifyConfig {
        data_dir: dir.to_path_buf(),
        ..ClassifyConfig::default()
    };
    let (tri, trl) = make(n_train, 1);
    let (tei, tel) = make(n_test, 2);
    for (name, arr) in [
        (&cfg.train_images, tri),
        (&cfg.train_labels, trl),
        (&cfg.test_images, tei),
        (&cfg.test_labels, tel),
    ] {
        let path = dir.join(name);
        fs::write(&path, idx::serialize(&arr)?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(cfg)
}
