//! Training-time augmentation: instance CutMix and global scale / rotation.
//!
//! Randomness comes from [`RngStream`] only, so a `(inputs, seed)` pair fully
//! determines every output bit.

mod bank;
mod cutmix;
mod instances;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::pcio::PointCloud;

pub use bank::InstanceBank;
pub use cutmix::{instance_cutmix, CutMixConfig, CutMixSummary};
pub use instances::{extract_instances, link_components, ExtractConfig, Instance};

/// Seeded ChaCha8 stream.
///
/// `RngStream::new(seed)` is ChaCha8 seeded through `seed_from_u64` on stream 0;
/// [`RngStream::for_frame`] selects ChaCha stream `frame` under the same key,
/// giving independent, reproducible per-frame sequences.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    rng: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64) -> Self {
        Self::for_frame(seed, 0)
    }

    pub fn for_frame(seed: u64, frame: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(frame);
        Self { seed, rng }
    }

    #[inline]
    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Uniform in `[lo, hi)`.
    #[inline]
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    #[inline]
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n as u64) as usize
    }

    #[inline]
    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }
}

/// Lower and upper bound of the random scale factor.
pub const SCALE_RANGE: (f64, f64) = (0.95, 1.05);

/// Scales positions by `scale` about the origin, then rotates them by `angle`
/// radians about +Z. Features and labels are untouched.
pub fn scale_rotate(cloud: &PointCloud, scale: f64, angle: f64) -> Result<PointCloud> {
    let (sin, cos) = angle.sin_cos();
    let positions = cloud
        .positions()
        .iter()
        .map(|p| {
            let [x, y, z] = p.map(|v| v as f64 * scale);
            [(cos * x - sin * y) as f32, (sin * x + cos * y) as f32, z as f32]
        })
        .collect();
    PointCloud::new(positions, cloud.features().clone(), cloud.labels().map(<[u32]>::to_vec))
}

/// Global augmentation: `s ~ U[0.95, 1.05]` then `theta ~ U[0, 2 pi)`, drawn in
/// that order. Returns the cloud with the sampled `(s, theta)`.
pub fn global_scale_rotate(cloud: &PointCloud, rng: &mut RngStream) -> Result<(PointCloud, f64, f64)> {
    let s = rng.uniform(SCALE_RANGE.0, SCALE_RANGE.1);
    let theta = rng.uniform(0.0, std::f64::consts::TAU);
    Ok((scale_rotate(cloud, s, theta)?, s, theta))
}
