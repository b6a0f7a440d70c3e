use std::collections::{BTreeSet, HashMap};

use crate::error::{Error, Result};
use crate::pcio::{FeatureTensor, PointCloud};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractConfig {
    /// Single-linkage distance in meters: points closer than or equal to this join one object.
    pub link_distance: f64,
    /// Smallest component kept as an instance.
    pub min_points: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            link_distance: 0.5,
            min_points: 10,
        }
    }
}

/// A rare-class object cut out of a scan, recentred so that its xy centroid is
/// the origin and its lowest point sits at z = 0.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    class_id: u32,
    points: Vec<[f32; 3]>,
    features: FeatureTensor<f32>,
}

impl Instance {
    /// Recentres `points` and wraps them with their features.
    pub fn new(class_id: u32, points: &[[f32; 3]], features: FeatureTensor<f32>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Validation("instance needs at least one point".into()));
        }
        if features.rows() != points.len() {
            return Err(Error::shape(format!(
                "{} instance points but {} feature rows",
                points.len(),
                features.rows()
            )));
        }
        let n = points.len() as f64;
        let cx = points.iter().map(|p| p[0] as f64).sum::<f64>() / n;
        let cy = points.iter().map(|p| p[1] as f64).sum::<f64>() / n;
        let zmin = points.iter().map(|p| p[2]).fold(f32::INFINITY, f32::min);
        let points = points
            .iter()
            .map(|p| [(p[0] as f64 - cx) as f32, (p[1] as f64 - cy) as f32, p[2] - zmin])
            .collect();
        Ok(Self {
            class_id,
            points,
            features,
        })
    }

    /// Wraps already recentred data without touching it.
    pub(crate) fn from_recentred(class_id: u32, points: Vec<[f32; 3]>, features: FeatureTensor<f32>) -> Result<Self> {
        if points.is_empty() || features.rows() != points.len() {
            return Err(Error::shape(format!(
                "{} instance points with {} feature rows",
                points.len(),
                features.rows()
            )));
        }
        Ok(Self {
            class_id,
            points,
            features,
        })
    }

    #[inline]
    pub fn class_id(&self) -> u32 {
        self.class_id
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.points.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    #[inline]
    pub fn points(&self) -> &[[f32; 3]] {
        &self.points
    }

    #[inline]
    pub fn features(&self) -> &FeatureTensor<f32> {
        &self.features
    }

    /// Radius of the xy bounding circle about the origin.
    pub fn radius_xy(&self) -> f64 {
        self.points
            .iter()
            .map(|p| (p[0] as f64).hypot(p[1] as f64))
            .fold(0.0, f64::max)
    }
}

/// Single-linkage connected components of `points` under distance `link`.
///
/// Components are ordered by their smallest member; members ascend.
pub fn link_components(points: &[[f64; 3]], link: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }

    // Grid with cell edge `link`: linked pairs are always in adjacent cells.
    let cell = |p: &[f64; 3]| p.map(|v| (v / link).floor() as i64);
    let mut grid: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    for (i, p) in points.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let link2 = link * link;
    for (i, p) in points.iter().enumerate() {
        let c = cell(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    let Some(others) = grid.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                        continue;
                    };
                    for &j in others {
                        if j <= i {
                            continue;
                        }
                        let q = &points[j];
                        let d2 = (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2);
                        if d2 <= link2 {
                            let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                            if a != b {
                                parent[a.max(b)] = a.min(b);
                            }
                        }
                    }
                }
            }
        }
    }

    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut slot: HashMap<usize, usize> = HashMap::new();
    for i in 0..n {
        let root = find(&mut parent, i);
        let g = *slot.entry(root).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[g].push(i);
    }
    groups
}

/// Cuts every connected object of a rare class out of a labelled cloud.
///
/// Classes are visited in ascending id order; components with fewer than
/// `cfg.min_points` points are dropped.
pub fn extract_instances(cloud: &PointCloud, rare: &BTreeSet<u32>, cfg: &ExtractConfig) -> Result<Vec<Instance>> {
    let labels = cloud
        .labels()
        .ok_or_else(|| Error::Validation("instance extraction needs a labelled cloud".into()))?;
    if !(cfg.link_distance > 0.0) {
        return Err(Error::Validation(format!(
            "link distance must be positive, got {}",
            cfg.link_distance
        )));
    }
    let mut out = Vec::new();
    for &class in rare {
        let members: Vec<usize> = (0..cloud.len()).filter(|&i| labels[i] == class).collect();
        if members.is_empty() {
            continue;
        }
        let pts: Vec<[f64; 3]> = members.iter().map(|&i| cloud.positions()[i].map(f64::from)).collect();
        for comp in link_components(&pts, cfg.link_distance) {
            if comp.len() < cfg.min_points.max(1) {
                continue;
            }
            let idx: Vec<usize> = comp.iter().map(|&k| members[k]).collect();
            let points: Vec<[f32; 3]> = idx.iter().map(|&i| cloud.positions()[i]).collect();
            let c = cloud.channels();
            let mut data = Vec::with_capacity(idx.len() * c);
            for &i in &idx {
                data.extend_from_slice(cloud.features().row(i));
            }
            let features = FeatureTensor::new(idx.len(), c, data)?;
            out.push(Instance::new(class, &points, features)?);
        }
    }
    Ok(out)
}
