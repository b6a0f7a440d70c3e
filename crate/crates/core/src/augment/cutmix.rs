use super::{InstanceBank, RngStream, SCALE_RANGE};
use crate::error::{Error, Result};
use crate::pcio::{FeatureTensor, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CutMixConfig {
    /// Instances to paste.
    pub count: usize,
    /// Placement tries per instance before it is skipped.
    pub max_attempts: usize,
    /// Clearance added to the instance's xy bounding-circle radius, meters.
    pub margin: f64,
    pub scale_range: (f64, f64),
}

impl Default for CutMixConfig {
    fn default() -> Self {
        Self {
            count: 0,
            max_attempts: 20,
            margin: 0.2,
            scale_range: SCALE_RANGE,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct CutMixSummary {
    pub requested: usize,
    pub pasted: usize,
    pub skipped: usize,
    pub pasted_points: usize,
}

/// Pastes `cfg.count` bank instances into a labelled scene.
///
/// Classes are visited round-robin from a random starting class, instances
/// uniformly within a class. Each instance is scaled by `s ~ U(scale_range)`,
/// rotated about Z by `theta ~ U[0, 2 pi)`, and dropped onto a random
/// ground-class point `g` (xy centroid at `g.xy`, lowest point at `g.z`). A
/// placement is rejected if any non-ground point, original or pasted earlier,
/// lies within `radius + margin` of `g` in xy. Pasted points are appended after
/// the original ones with the instance's class label.
pub fn instance_cutmix(
    cloud: &PointCloud,
    bank: &InstanceBank,
    cfg: &CutMixConfig,
    rng: &mut RngStream,
) -> Result<(PointCloud, CutMixSummary)> {
    let labels = cloud
        .labels()
        .ok_or_else(|| Error::Validation("instance CutMix needs a labelled cloud".into()))?;
    let mut summary = CutMixSummary {
        requested: cfg.count,
        ..Default::default()
    };
    if cfg.count == 0 {
        return Ok((cloud.clone(), summary));
    }
    let classes = bank.classes();
    if classes.is_empty() {
        return Err(Error::Validation("instance bank is empty".into()));
    }
    if let Some(inst) = bank.iter().next() {
        if inst.features().cols() != cloud.channels() {
            return Err(Error::shape(format!(
                "bank instances carry {} channels, cloud has {}",
                inst.features().cols(),
                cloud.channels()
            )));
        }
    }

    let ground = bank.ground_classes();
    let ground_pts: Vec<usize> = (0..cloud.len()).filter(|&i| ground.contains(&labels[i])).collect();
    let mut blockers: Vec<[f64; 2]> = (0..cloud.len())
        .filter(|&i| !ground.contains(&labels[i]))
        .map(|i| {
            let p = cloud.positions()[i];
            [p[0] as f64, p[1] as f64]
        })
        .collect();

    let c = cloud.channels();
    let mut new_positions: Vec<[f32; 3]> = Vec::new();
    let mut new_features: Vec<f32> = Vec::new();
    let mut new_labels: Vec<u32> = Vec::new();

    let start = rng.index(classes.len());
    for t in 0..cfg.count {
        let class = classes[(start + t) % classes.len()];
        let pool = bank.instances(class);
        let inst = &pool[rng.index(pool.len())];
        let scale = rng.uniform(cfg.scale_range.0, cfg.scale_range.1);
        let theta = rng.uniform(0.0, std::f64::consts::TAU);
        if ground_pts.is_empty() {
            summary.skipped += 1;
            continue;
        }
        let clearance = inst.radius_xy() * scale + cfg.margin;
        let clearance2 = clearance * clearance;

        let mut anchor = None;
        for _ in 0..cfg.max_attempts {
            let g = cloud.positions()[ground_pts[rng.index(ground_pts.len())]];
            let (gx, gy) = (g[0] as f64, g[1] as f64);
            let blocked = blockers
                .iter()
                .any(|b| (b[0] - gx).powi(2) + (b[1] - gy).powi(2) <= clearance2);
            if !blocked {
                anchor = Some(g);
                break;
            }
        }
        let Some(g) = anchor else {
            summary.skipped += 1;
            continue;
        };

        let (sin, cos) = theta.sin_cos();
        for (k, p) in inst.points().iter().enumerate() {
            let [x, y, z] = p.map(|v| v as f64 * scale);
            let q = [
                (g[0] as f64 + cos * x - sin * y) as f32,
                (g[1] as f64 + sin * x + cos * y) as f32,
                g[2] + z as f32,
            ];
            blockers.push([q[0] as f64, q[1] as f64]);
            new_positions.push(q);
            new_features.extend_from_slice(inst.features().row(k));
            new_labels.push(class);
        }
        summary.pasted += 1;
        summary.pasted_points += inst.len();
    }

    let pasted = PointCloud::new(
        new_positions,
        FeatureTensor::new(new_labels.len(), c, new_features)?,
        Some(new_labels),
    )?;
    Ok((cloud.concat(&pasted)?, summary))
}
