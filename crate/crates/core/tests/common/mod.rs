//! Naive reference implementations shared by the integration tests.
//!
//! Each oracle is written straight from the definition, with quadratic loops
//! or hash maps, and shares no code with the library beyond the data types.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};

use proptest::prelude::*;
use rpv::{FeatureTensor, PointCloud};

/// Voxel cell of a point: true floor of x / r per axis.
pub fn cell(p: [f32; 3], r: f64) -> [i64; 3] {
    p.map(|v| (v as f64 / r).floor() as i64)
}

/// Groups of point indices sharing a voxel, by O(N^2) pairwise comparison,
/// ordered by first member.
pub fn naive_voxel_groups(positions: &[[f32; 3]], r: f64) -> Vec<Vec<usize>> {
    let mut group_of = vec![usize::MAX; positions.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for i in 0..positions.len() {
        let mut found = None;
        for k in 0..i {
            if cell(positions[k], r) == cell(positions[i], r) {
                found = Some(group_of[k]);
                break;
            }
        }
        let g = found.unwrap_or_else(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        group_of[i] = g;
        groups[g].push(i);
    }
    groups
}

/// Mean feature of each group.
pub fn naive_scatter(features: &FeatureTensor<f64>, groups: &[Vec<usize>]) -> Vec<Vec<f64>> {
    groups
        .iter()
        .map(|g| {
            (0..features.cols())
                .map(|k| g.iter().map(|&i| features.get(i, k)).sum::<f64>() / g.len() as f64)
                .collect()
        })
        .collect()
}

/// Spherical projection written out from the definition; `None` at zero range.
pub fn naive_project(p: [f32; 3], h: u32, w: u32, up: f64, down: f64) -> Option<(f64, f64)> {
    let (x, y, z) = (p[0] as f64, p[1] as f64, p[2] as f64);
    let rho = (x * x + y * y + z * z).sqrt();
    if rho == 0.0 {
        return None;
    }
    let psi = y.atan2(x);
    let theta = (z / rho).clamp(-1.0, 1.0).asin();
    let m = 0.5 * (1.0 - psi / std::f64::consts::PI) * w as f64;
    let n = (1.0 - (theta - down) / (up - down)) * h as f64;
    let hi_m = (w as f64).next_down();
    let hi_n = (h as f64).next_down();
    Some((n.clamp(0.0, hi_n), m.clamp(0.0, hi_m)))
}

/// Weighted taps of one point: occupied neighbour key -> weight, renormalized;
/// falls back to the point's own key when no positive-weight tap is occupied.
fn finish<K: std::hash::Hash + Eq + Ord + Copy>(
    mut taps: BTreeMap<K, f64>,
    occupied: &HashMap<K, Vec<f64>>,
    own: K,
) -> BTreeMap<K, f64> {
    taps.retain(|k, w| occupied.contains_key(k) && *w > 0.0);
    let total: f64 = taps.values().sum();
    if total > 0.0 {
        taps.values_mut().for_each(|w| *w /= total);
        taps
    } else {
        BTreeMap::from([(own, 1.0)])
    }
}

fn combine<K: std::hash::Hash + Eq>(taps: &BTreeMap<K, f64>, occupied: &HashMap<K, Vec<f64>>, c: usize) -> Vec<f64> {
    let mut out = vec![0.0; c];
    for (k, w) in taps {
        for (o, v) in out.iter_mut().zip(&occupied[k]) {
            *o += w * v;
        }
    }
    out
}

/// Mean features keyed by whatever bucket key `key_of` assigns.
fn bucket_means<K: std::hash::Hash + Eq + Copy>(
    features: &FeatureTensor<f64>,
    key_of: impl Fn(usize) -> Option<K>,
) -> HashMap<K, Vec<f64>> {
    let mut sums: HashMap<K, (Vec<f64>, usize)> = HashMap::new();
    for i in 0..features.rows() {
        if let Some(k) = key_of(i) {
            let e = sums.entry(k).or_insert_with(|| (vec![0.0; features.cols()], 0));
            for (s, v) in e.0.iter_mut().zip(features.row(i)) {
                *s += v;
            }
            e.1 += 1;
        }
    }
    sums.into_iter()
        .map(|(k, (s, n))| (k, s.into_iter().map(|v| v / n as f64).collect()))
        .collect()
}

/// Voxel scatter followed by trilinear gather, from the definition.
pub fn naive_trilinear_roundtrip(cloud: &PointCloud, features: &FeatureTensor<f64>, r: f64) -> Vec<Vec<f64>> {
    let pos = cloud.positions();
    let occupied = bucket_means(features, |i| Some(cell(pos[i], r)));
    (0..cloud.len())
        .map(|i| {
            let g = pos[i].map(|v| v as f64 / r);
            let mut taps = BTreeMap::new();
            let base = g.map(|v| (v - 0.5).floor() as i64);
            for dx in 0..2 {
                for dy in 0..2 {
                    for dz in 0..2 {
                        let v = [base[0] + dx, base[1] + dy, base[2] + dz];
                        let w: f64 = (0..3)
                            .map(|a| (1.0 - (g[a] - (v[a] as f64 + 0.5)).abs()).max(0.0))
                            .product();
                        *taps.entry(v).or_insert(0.0) += w;
                    }
                }
            }
            let taps = finish(taps, &occupied, cell(pos[i], r));
            combine(&taps, &occupied, features.cols())
        })
        .collect()
}

/// Pixel scatter followed by bilinear gather (edge-clamped taps), from the
/// definition. Invalid points map to `None`.
pub fn naive_bilinear_roundtrip(
    cloud: &PointCloud,
    features: &FeatureTensor<f64>,
    h: u32,
    w: u32,
    up: f64,
    down: f64,
) -> Vec<Option<Vec<f64>>> {
    let coords: Vec<_> = cloud
        .positions()
        .iter()
        .map(|&p| naive_project(p, h, w, up, down))
        .collect();
    let pixel = |c: (f64, f64)| (c.0.floor() as i64, c.1.floor() as i64);
    let occupied = bucket_means(features, |i| coords[i].map(pixel));
    coords
        .iter()
        .map(|c| {
            let (n, m) = (*c)?;
            let (r0, c0) = ((n - 0.5).floor() as i64, (m - 0.5).floor() as i64);
            let mut taps = BTreeMap::new();
            for r in r0..=r0 + 1 {
                for col in c0..=c0 + 1 {
                    let wt =
                        (1.0 - (n - (r as f64 + 0.5)).abs()).max(0.0) * (1.0 - (m - (col as f64 + 0.5)).abs()).max(0.0);
                    let key = (r.clamp(0, h as i64 - 1), col.clamp(0, w as i64 - 1));
                    *taps.entry(key).or_insert(0.0) += wt;
                }
            }
            let taps = finish(taps, &occupied, pixel((n, m)));
            Some(combine(&taps, &occupied, features.cols()))
        })
        .collect()
}

/// Voxel scatter followed by nearest gather.
pub fn naive_nearest_roundtrip(cloud: &PointCloud, features: &FeatureTensor<f64>, r: f64) -> Vec<Vec<f64>> {
    let pos = cloud.positions();
    let occupied = bucket_means(features, |i| Some(cell(pos[i], r)));
    (0..cloud.len()).map(|i| occupied[&cell(pos[i], r)].clone()).collect()
}

/// Per-class IoU from raw label lists; `None` for classes absent from both.
pub fn naive_iou(gt: &[u32], pred: &[u32], classes: u32, ignore: u32) -> Vec<Option<f64>> {
    (0..classes)
        .map(|k| {
            let (mut tp, mut fp, mut fnn) = (0u64, 0u64, 0u64);
            for (&g, &p) in gt.iter().zip(pred) {
                if g == ignore {
                    continue;
                }
                match (g == k, p == k) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fnn += 1,
                    _ => {}
                }
            }
            let denom = tp + fp + fnn;
            (denom > 0).then(|| tp as f64 / denom as f64)
        })
        .collect()
}

/// Connected components under single linkage, by O(N^2) flood fill, each
/// sorted, ordered by smallest member.
pub fn naive_components(points: &[[f64; 3]], link: f64) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] {
            continue;
        }
        seen[s] = true;
        let mut stack = vec![s];
        let mut comp = Vec::new();
        while let Some(i) = stack.pop() {
            comp.push(i);
            for j in 0..n {
                let d2: f64 = (0..3).map(|a| (points[i][a] - points[j][a]).powi(2)).sum();
                if !seen[j] && d2 <= link * link {
                    seen[j] = true;
                    stack.push(j);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Random clouds with `channels` features; coordinates on a coarse lattice
/// half the time so that many points share voxels and pixels.
pub fn cloud_strategy(max_points: usize, channels: usize) -> impl Strategy<Value = PointCloud> {
    (1..=max_points, any::<bool>())
        .prop_flat_map(move |(n, lattice)| {
            let coord = if lattice {
                (-20i32..20).prop_map(|v| v as f32 * 0.25).boxed()
            } else {
                (-5.0f32..5.0).boxed()
            };
            (
                prop::collection::vec([coord.clone(), coord.clone(), coord], n),
                prop::collection::vec(-1.0f32..1.0, n * channels),
            )
        })
        .prop_map(move |(pos, feats)| {
            let n = pos.len();
            PointCloud::new(pos, FeatureTensor::new(n, channels, feats).unwrap(), None).unwrap()
        })
}

pub fn f64_features(cloud: &PointCloud) -> FeatureTensor<f64> {
    cloud.features().cast()
}
