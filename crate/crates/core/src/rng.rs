//! Hierarchical, counter-based random streams.
//!
//! A stream is identified by a root seed and a path of indices. Its
//! generator is a ChaCha keystream whose key is the SHA-256 digest of
//! `(seed, path)`, so draws depend only on the identity of the stream and
//! never on the order in which sibling streams are consumed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub type StreamRng = ChaCha8Rng;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    seed: u64,
    path: Vec<u64>,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        RngStream {
            seed,
            path: Vec::new(),
        }
    }

    /// Child stream with `index` appended to the path.
    pub fn split(&self, index: u64) -> Self {
        let mut path = Vec::with_capacity(self.path.len() + 1);
        path.extend_from_slice(&self.path);
        path.push(index);
        RngStream {
            seed: self.seed,
            path,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    fn key(&self) -> [u8; 32] {
        let mut hasher = Sha256::new();
        hasher.update(b"evobench.rng.v1");
        hasher.update(self.seed.to_le_bytes());
        hasher.update((self.path.len() as u64).to_le_bytes());
        for index in &self.path {
            hasher.update(index.to_le_bytes());
        }
        hasher.finalize().into()
    }

    /// Fresh generator positioned at the start of this stream.
    pub fn generator(&self) -> StreamRng {
        ChaCha8Rng::from_seed(self.key())
    }

    /// `d` standard normal draws from the start of this stream.
    pub fn normal_vec(&self, d: usize) -> Vec<f64> {
        let mut rng = self.generator();
        (0..d).map(|_| rng.sample(StandardNormal)).collect()
    }
}

pub(crate) fn normal(rng: &mut StreamRng) -> f64 {
    rng.sample(StandardNormal)
}
