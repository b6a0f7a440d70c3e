use crate::error::{Error, Result};
use crate::index::{RangeIndex, ViewIndex, VoxelIndex, NO_BUCKET};
use crate::pcio::{FeatureTensor, PointCloud, Scalar};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GatherMode {
    Nearest,
    Bilinear,
    Trilinear,
}

impl GatherMode {
    /// Neighbour slots per point.
    pub fn stride(self) -> usize {
        match self {
            GatherMode::Nearest => 1,
            GatherMode::Bilinear => 4,
            GatherMode::Trilinear => 8,
        }
    }
}

/// Per-point neighbour buckets and their final (renormalized) weights.
///
/// Slot `k` of point `i` lives at `i * stride + k`. A missing neighbour
/// (unoccupied element) is stored as [`NO_BUCKET`] with weight zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GatherPlan {
    mode: GatherMode,
    num_buckets: usize,
    neighbors: Vec<u32>,
    weights: Vec<f64>,
}

/// Four `(row, col, weight)` bilinear taps around a continuous range-image
/// coordinate. Pixel `(r, c)` is centred at `(r + 0.5, c + 0.5)`.
/// Weights are non-negative and sum to one; taps may lie outside the image.
pub fn bilinear_weights(coord: [f64; 2]) -> [(i64, i64, f64); 4] {
    let a = coord[0] - 0.5;
    let b = coord[1] - 0.5;
    let r0 = a.floor();
    let c0 = b.floor();
    let fr = a - r0;
    let fc = b - c0;
    let (r0, c0) = (r0 as i64, c0 as i64);
    [
        (r0, c0, (1.0 - fr) * (1.0 - fc)),
        (r0, c0 + 1, (1.0 - fr) * fc),
        (r0 + 1, c0, fr * (1.0 - fc)),
        (r0 + 1, c0 + 1, fr * fc),
    ]
}

/// Eight `(cell, weight)` trilinear taps around a position at voxel size
/// `resolution`. Voxel `v` is centred at `(v + 0.5) * resolution`.
pub fn trilinear_weights(position: [f64; 3], resolution: f64) -> [([i64; 3], f64); 8] {
    let mut base = [0i64; 3];
    let mut frac = [0.0f64; 3];
    for axis in 0..3 {
        let g = position[axis] / resolution - 0.5;
        let f = g.floor();
        base[axis] = f as i64;
        frac[axis] = g - f;
    }
    std::array::from_fn(|k| {
        let mut cell = base;
        let mut w = 1.0;
        for axis in 0..3 {
            if k >> (2 - axis) & 1 == 1 {
                cell[axis] += 1;
                w *= frac[axis];
            } else {
                w *= 1.0 - frac[axis];
            }
        }
        (cell, w)
    })
}

impl GatherPlan {
    /// Each point reads its own bucket.
    pub fn nearest(idx: &impl ViewIndex) -> Self {
        let b = idx.buckets();
        let neighbors: Vec<u32> = (0..b.num_points())
            .map(|i| b.bucket_of_point(i).map_or(NO_BUCKET, |j| j as u32))
            .collect();
        let weights = neighbors
            .iter()
            .map(|&j| if j == NO_BUCKET { 0.0 } else { 1.0 })
            .collect();
        Self {
            mode: GatherMode::Nearest,
            num_buckets: b.len(),
            neighbors,
            weights,
        }
    }

    /// Bilinear taps over the four pixel centres around each point's continuous
    /// coordinate. Taps past the image border are clamped onto the edge pixel
    /// (no yaw wrap-around).
    pub fn bilinear(ridx: &RangeIndex) -> Self {
        let n = ridx.num_points();
        let h = ridx.height() as i64;
        let w = ridx.width() as i64;
        let mut neighbors = vec![NO_BUCKET; n * 4];
        let mut weights = vec![0.0; n * 4];
        for i in 0..n {
            let Some(coord) = ridx.norm_coords(i) else {
                continue;
            };
            let taps = bilinear_weights(coord).map(|(r, c, wt)| {
                let j = ridx.bucket_of_pixel(r.clamp(0, h - 1), c.clamp(0, w - 1));
                (j, wt)
            });
            let own = ridx.buckets().bucket_of_point(i);
            fill_slots(&mut neighbors[i * 4..], &mut weights[i * 4..], &taps, own);
        }
        Self {
            mode: GatherMode::Bilinear,
            num_buckets: ridx.num_occupied(),
            neighbors,
            weights,
        }
    }

    /// Trilinear taps over the eight voxel centres around each point.
    pub fn trilinear(cloud: &PointCloud, vidx: &VoxelIndex) -> Result<Self> {
        if cloud.len() != vidx.num_points() {
            return Err(Error::shape(format!(
                "cloud has {} points, voxel index {}",
                cloud.len(),
                vidx.num_points()
            )));
        }
        let n = cloud.len();
        let r = vidx.resolution();
        let mut neighbors = vec![NO_BUCKET; n * 8];
        let mut weights = vec![0.0; n * 8];
        for (i, p) in cloud.positions().iter().enumerate() {
            let taps = trilinear_weights(p.map(f64::from), r).map(|(cell, wt)| (vidx.bucket_of_cell(cell), wt));
            let own = vidx.buckets().bucket_of_point(i);
            fill_slots(&mut neighbors[i * 8..], &mut weights[i * 8..], &taps, own);
        }
        Ok(Self {
            mode: GatherMode::Trilinear,
            num_buckets: vidx.num_voxels(),
            neighbors,
            weights,
        })
    }

    #[inline]
    pub fn mode(&self) -> GatherMode {
        self.mode
    }

    #[inline]
    pub fn num_points(&self) -> usize {
        self.neighbors.len() / self.mode.stride()
    }

    #[inline]
    pub fn num_buckets(&self) -> usize {
        self.num_buckets
    }

    /// `(bucket, weight)` per slot of point `i`; `None` marks a missing neighbour.
    pub fn taps(&self, i: usize) -> impl Iterator<Item = (Option<usize>, f64)> + '_ {
        let s = self.mode.stride();
        self.neighbors[i * s..(i + 1) * s]
            .iter()
            .zip(&self.weights[i * s..(i + 1) * s])
            .map(|(&j, &w)| ((j != NO_BUCKET).then_some(j as usize), w))
    }

    /// Sum of the weights point `i` uses in the forward pass.
    pub fn weight_sum(&self, i: usize) -> f64 {
        self.taps(i).map(|(_, w)| w).sum()
    }

    /// Test hook: scales every stored weight, breaking partition of unity.
    #[doc(hidden)]
    pub fn corrupt_weights(&mut self, factor: f64) {
        for w in &mut self.weights {
            *w *= factor;
        }
    }
}

/// Drops missing taps, renormalizes the rest, and falls back to the point's
/// own bucket when nothing with positive weight is occupied.
fn fill_slots(neighbors: &mut [u32], weights: &mut [f64], taps: &[(Option<usize>, f64)], own: Option<usize>) {
    let total: f64 = taps.iter().filter(|(j, _)| j.is_some()).map(|(_, w)| w).sum();
    if total > 0.0 {
        for (k, &(j, w)) in taps.iter().enumerate() {
            if let Some(j) = j {
                neighbors[k] = j as u32;
                weights[k] = w / total;
            }
        }
    } else if let Some(j) = own {
        neighbors[0] = j as u32;
        weights[0] = 1.0;
    }
}

/// `F_P[i] = sum_k w_ik F_X[j_ik]`, accumulated in `f64`.
pub fn gather<T: Scalar>(view: &FeatureTensor<T>, plan: &GatherPlan) -> Result<FeatureTensor<T>> {
    if view.rows() != plan.num_buckets {
        return Err(Error::shape(format!(
            "gather from {} view rows through a plan over {} buckets",
            view.rows(),
            plan.num_buckets
        )));
    }
    let c = view.cols();
    let s = plan.mode.stride();
    let n = plan.num_points();
    let mut out = FeatureTensor::zeros(n, c);
    let mut acc = vec![0.0f64; c];
    for i in 0..n {
        acc.iter_mut().for_each(|a| *a = 0.0);
        for k in i * s..(i + 1) * s {
            let j = plan.neighbors[k];
            if j == NO_BUCKET {
                continue;
            }
            let w = plan.weights[k];
            for (a, v) in acc.iter_mut().zip(view.row(j as usize)) {
                *a += w * v.to_f64();
            }
        }
        for (o, a) in out.row_mut(i).iter_mut().zip(&acc) {
            *o = T::from_f64(*a);
        }
    }
    Ok(out)
}

/// Transpose of [`gather`]: `dL/dF_X[j] = sum over taps (i, k) hitting j of w_ik dL/dF_P[i]`.
pub fn gather_backward<T: Scalar>(grad_points: &FeatureTensor<T>, plan: &GatherPlan) -> Result<FeatureTensor<T>> {
    let n = plan.num_points();
    if grad_points.rows() != n {
        return Err(Error::shape(format!(
            "gather backward of {} point rows through a plan over {n} points",
            grad_points.rows()
        )));
    }
    let c = grad_points.cols();
    let s = plan.mode.stride();
    let mut acc = vec![0.0f64; plan.num_buckets * c];
    for i in 0..n {
        let g = grad_points.row(i);
        for k in i * s..(i + 1) * s {
            let j = plan.neighbors[k];
            if j == NO_BUCKET {
                continue;
            }
            let w = plan.weights[k];
            for (a, v) in acc[j as usize * c..(j as usize + 1) * c].iter_mut().zip(g) {
                *a += w * v.to_f64();
            }
        }
    }
    FeatureTensor::new(plan.num_buckets, c, acc.into_iter().map(T::from_f64).collect())
}

fn expect_mode(plan: &GatherPlan, mode: GatherMode) -> Result<()> {
    if plan.mode != mode {
        return Err(Error::Validation(format!(
            "expected a {mode:?} gather plan, got {:?}",
            plan.mode
        )));
    }
    Ok(())
}

/// `F_P[i] = F_X[bucket(i)]`; points outside every bucket receive zeros.
pub fn gather_nearest<T: Scalar>(view: &FeatureTensor<T>, plan: &GatherPlan) -> Result<FeatureTensor<T>> {
    expect_mode(plan, GatherMode::Nearest)?;
    gather(view, plan)
}

pub fn gather_nearest_backward<T: Scalar>(
    grad_points: &FeatureTensor<T>,
    plan: &GatherPlan,
) -> Result<FeatureTensor<T>> {
    expect_mode(plan, GatherMode::Nearest)?;
    gather_backward(grad_points, plan)
}

/// Range image to points by bilinear interpolation over occupied pixels.
pub fn gather_bilinear<T: Scalar>(image: &FeatureTensor<T>, plan: &GatherPlan) -> Result<FeatureTensor<T>> {
    expect_mode(plan, GatherMode::Bilinear)?;
    gather(image, plan)
}

pub fn gather_bilinear_backward<T: Scalar>(
    grad_points: &FeatureTensor<T>,
    plan: &GatherPlan,
) -> Result<FeatureTensor<T>> {
    expect_mode(plan, GatherMode::Bilinear)?;
    gather_backward(grad_points, plan)
}

/// Voxels to points by trilinear interpolation over occupied voxels.
pub fn gather_trilinear<T: Scalar>(voxels: &FeatureTensor<T>, plan: &GatherPlan) -> Result<FeatureTensor<T>> {
    expect_mode(plan, GatherMode::Trilinear)?;
    gather(voxels, plan)
}

pub fn gather_trilinear_backward<T: Scalar>(
    grad_points: &FeatureTensor<T>,
    plan: &GatherPlan,
) -> Result<FeatureTensor<T>> {
    expect_mode(plan, GatherMode::Trilinear)?;
    gather_backward(grad_points, plan)
}
