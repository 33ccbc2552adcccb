//! Reproducible random streams.
//!
//! Algorithm identity (pinned, part of the reproducibility contract):
//!
//! * generator: ChaCha20 as implemented by `rand_chacha` (block function, 64-bit
//!   word position, 64-bit stream id);
//! * key: the 64-bit seed in little-endian order followed by 24 zero bytes;
//! * root stream id: 0;
//! * `split(label)`: same key, stream id = first 8 bytes (little-endian) of
//!   `SHA-256(seed_le || parent_stream_le || label)`;
//! * `uniform()`: `(next_u64() >> 11) * 2^-53`, in `[0, 1)`;
//! * `index(n)`: rejection sampling on `next_u64()` below the largest multiple
//!   of `n`, then `% n`;
//! * `normal()`: Box-Muller, `sqrt(-2 ln(1 - u1)) * cos(2π u2)`.
//!
//! None of these steps touch platform-dependent arithmetic, so draws are
//! bit-identical across targets.

use rand_chacha::ChaCha20Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    inner: ChaCha20Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::with_stream(seed, 0)
    }

    fn with_stream(seed: u64, stream: u64) -> Self {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&seed.to_le_bytes());
        let mut inner = ChaCha20Rng::from_seed(key);
        inner.set_stream(stream);
        Self { seed, stream, inner }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream
    }

    /// Derives an independent, reproducible substream. The parent is not advanced.
    pub fn split(&self, label: &str) -> Self {
        let mut h = Sha256::new();
        h.update(self.seed.to_le_bytes());
        h.update(self.stream.to_le_bytes());
        h.update(label.as_bytes());
        let digest = h.finalize();
        let mut id = [0u8; 8];
        id.copy_from_slice(&digest[..8]);
        Self::with_stream(self.seed, u64::from_le_bytes(id))
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform draw in `[0, 1)` with 53 random bits.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `(0, 1]`; safe to pass to `ln`.
    #[inline]
    pub fn uniform_open0(&mut self) -> f64 {
        1.0 - self.uniform()
    }

    /// Standard normal draw via the Box-Muller cosine branch (one draw per call).
    pub fn normal(&mut self) -> f64 {
        let u1 = self.uniform_open0();
        let u2 = self.uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Uniform index in `0..n`. Panics when `n == 0`.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        assert!(n > 0, "index() over an empty range");
        let n = n as u64;
        let zone = u64::MAX - (u64::MAX % n);
        loop {
            let v = self.next_u64();
            if v < zone {
                return (v % n) as usize;
            }
        }
    }
}
