//! Seeded Gaussian sampling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::Mat;

/// ChaCha stream id reserved for sketching randomness.
const SKETCH_STREAM: u64 = 1;

/// Deterministic stream of standard normal variates.
///
/// Every randomized routine owns one stream built from an explicit seed and
/// draws from it sequentially, so a fixed seed fixes every sketch.
#[derive(Debug, Clone)]
pub struct GaussianStream {
    rng: ChaCha8Rng,
    drawn: u64,
}

impl GaussianStream {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            drawn: 0,
        }
    }

    /// Stream used by the randomized rounding and estimation routines.
    ///
    /// It is a separate ChaCha stream under the same key as [`Self::new`], so
    /// a sketch seeded with `s` is independent of a test tensor generated
    /// from the same `s` (otherwise the sketch would reproduce that tensor's
    /// factors exactly).
    pub fn sketch(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(SKETCH_STREAM);
        Self { rng, drawn: 0 }
    }

    /// Number of variates produced so far.
    pub fn drawn(&self) -> u64 {
        self.drawn
    }

    pub fn sample(&mut self) -> f64 {
        self.drawn += 1;
        StandardNormal.sample(&mut self.rng)
    }

    /// `rows x cols` matrix of i.i.d. N(0, 1) entries, filled column by column.
    pub fn matrix(&mut self, rows: usize, cols: usize) -> Mat {
        let data: Vec<f64> = (0..rows * cols).map(|_| self.sample()).collect();
        Mat::from_vec(rows, cols, data)
    }

    /// Vector of i.i.d. N(0, scale^2) entries.
    pub fn scaled_vec(&mut self, len: usize, scale: f64) -> Vec<f64> {
        (0..len).map(|_| scale * self.sample()).collect()
    }
}

/// `rows x cols` Gaussian matrix determined by `seed`.
pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> Mat {
    GaussianStream::new(seed).matrix(rows, cols)
}
