//! Deterministic synthetic scans for demos, benchmarks and tests.
//!
//! [`synthetic_scan`] ray-casts a 64-beam spinning LiDAR inside a closed
//! street scene: a ground plane, two building facades, end walls, parked cars
//! and a few bicycles. Every beam hits something, so the point count is exact.

use crate::augment::RngStream;
use crate::pcio::{FeatureTensor, PointCloud};

pub const ROAD: u32 = 0;
pub const BUILDING: u32 = 1;
pub const CAR: u32 = 2;
pub const BICYCLE: u32 = 3;

/// Class names of the synthetic scene, indexed by label.
pub const CLASS_NAMES: [&str; 4] = ["road", "building", "car", "bicycle"];

const SENSOR_HEIGHT: f64 = 1.73;
const BEAMS: usize = 64;
const FOV_UP_DEG: f64 = 2.0;
const FOV_DOWN_DEG: f64 = -24.8;

struct Scene {
    boxes: Vec<([f64; 3], [f64; 3], u32)>,
}

impl Scene {
    fn street() -> Self {
        let z0 = -SENSOR_HEIGHT;
        let car = |x: f64, y: f64| ([x - 2.2, y - 0.9, z0], [x + 2.2, y + 0.9, z0 + 1.5], CAR);
        let bike = |x: f64, y: f64| ([x - 0.85, y - 0.3, z0], [x + 0.85, y + 0.3, z0 + 1.1], BICYCLE);
        Self {
            boxes: vec![
                car(8.0, -4.5),
                car(15.0, -4.5),
                car(-9.0, 4.5),
                car(24.0, 4.5),
                car(-20.0, -4.5),
                bike(5.0, 6.5),
                bike(-6.0, -6.8),
                bike(12.0, 7.0),
            ],
        }
    }

    /// Distance and label of the first surface hit along unit direction `d`.
    fn cast(&self, d: [f64; 3]) -> (f64, u32) {
        let mut best = (f64::INFINITY, BUILDING);
        if d[2] < 0.0 {
            best = (-SENSOR_HEIGHT / d[2], ROAD);
        }
        let mut plane = |axis: usize, at: f64| {
            if d[axis] != 0.0 {
                let t = at / d[axis];
                if t > 0.0 && t < best.0 {
                    best = (t, BUILDING);
                }
            }
        };
        plane(1, 12.0);
        plane(1, -12.0);
        plane(0, 70.0);
        plane(0, -70.0);
        for (lo, hi, label) in &self.boxes {
            let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
            let mut hit = true;
            for a in 0..3 {
                if d[a].abs() < 1e-12 {
                    if 0.0 < lo[a] || 0.0 > hi[a] {
                        hit = false;
                        break;
                    }
                    continue;
                }
                let (ta, tb) = (lo[a] / d[a], hi[a] / d[a]);
                t0 = t0.max(ta.min(tb));
                t1 = t1.min(ta.max(tb));
            }
            if hit && t0 <= t1 && t0 > 0.0 && t0 < best.0 {
                best = (t0, *label);
            }
        }
        best
    }
}

/// A labelled single-channel (intensity) scan of `num_points` points.
///
/// Beams are spread evenly over +2 to -24.8 degrees with small per-shot
/// jitter in angle and range; identical `(num_points, seed)` give identical clouds.
pub fn synthetic_scan(num_points: usize, seed: u64) -> PointCloud {
    let scene = Scene::street();
    let mut rng = RngStream::new(seed);
    let per_beam = num_points / BEAMS;
    let extra = num_points % BEAMS;
    let mut positions = Vec::with_capacity(num_points);
    let mut intensity = Vec::with_capacity(num_points);
    let mut labels = Vec::with_capacity(num_points);
    for beam in 0..BEAMS {
        let shots = per_beam + usize::from(beam < extra);
        let elev = FOV_UP_DEG + (FOV_DOWN_DEG - FOV_UP_DEG) * beam as f64 / (BEAMS - 1) as f64;
        for s in 0..shots {
            let az = 360.0 * (s as f64 + rng.uniform(-0.3, 0.3)) / shots as f64 - 180.0;
            let el = (elev + rng.uniform(-0.05, 0.05)).to_radians();
            let az = az.to_radians();
            let d = [el.cos() * az.cos(), el.cos() * az.sin(), el.sin()];
            let (t, label) = scene.cast(d);
            let t = t + rng.uniform(-0.02, 0.02);
            positions.push([(d[0] * t) as f32, (d[1] * t) as f32, (d[2] * t) as f32]);
            let base = match label {
                ROAD => 0.2,
                BUILDING => 0.4,
                CAR => 0.7,
                _ => 0.55,
            };
            intensity.push((base + rng.uniform(-0.05, 0.05)) as f32);
            labels.push(label);
        }
    }
    let n = positions.len();
    PointCloud::new(
        positions,
        FeatureTensor::new(n, 1, intensity).expect("finite intensities"),
        Some(labels),
    )
    .expect("synthetic scan is valid")
}

/// `n` unlabelled points uniform in the cube `[-half_extent, half_extent)^3`
/// with `channels` uniform features in `[-1, 1)`.
pub fn uniform_cloud(n: usize, half_extent: f64, channels: usize, seed: u64) -> PointCloud {
    let mut rng = RngStream::new(seed);
    let positions = (0..n)
        .map(|_| std::array::from_fn(|_| rng.uniform(-half_extent, half_extent) as f32))
        .collect();
    let features = FeatureTensor::from_fn(n, channels, |_, _| rng.uniform(-1.0, 1.0) as f32);
    PointCloud::new(positions, features, None).expect("uniform cloud is valid")
}
