use super::{Buckets, ViewIndex, ViewKey};
use crate::error::{Error, Result};
use crate::pcio::PointCloud;

/// Points grouped by voxel cell `floor(p / r)` at edge length `r` meters.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelIndex {
    resolution: f64,
    cells: Vec<[i32; 3]>,
    buckets: Buckets,
}

pub fn voxelize(cloud: &PointCloud, resolution: f64) -> Result<VoxelIndex> {
    voxelize_positions(cloud.positions(), resolution)
}

pub fn voxelize_positions(positions: &[[f32; 3]], resolution: f64) -> Result<VoxelIndex> {
    if !(resolution > 0.0 && resolution.is_finite()) {
        return Err(Error::Range(format!(
            "voxel resolution must be positive and finite, got {resolution}"
        )));
    }
    let mut cells = Vec::with_capacity(positions.len());
    for (i, p) in positions.iter().enumerate() {
        let cell = cell_of(p, resolution);
        if !cell.iter().all(|c| c.is_finite()) || !ViewKey::voxel_in_range(cell.map(|c| c as i64)) {
            return Err(Error::Range(format!(
                "point {i} at {p:?} falls in cell {cell:?} at r={resolution}, outside the packable range |c| < 2^20"
            )));
        }
        cells.push(cell.map(|c| c as i32));
    }
    let buckets = Buckets::build(cells.len(), |i| Some(ViewKey::voxel_unchecked(cells[i])));
    Ok(VoxelIndex {
        resolution,
        cells,
        buckets,
    })
}

#[inline]
fn cell_of(p: &[f32; 3], r: f64) -> [f64; 3] {
    p.map(|v| (v as f64 / r).floor())
}

impl VoxelIndex {
    #[inline]
    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    #[inline]
    pub fn num_voxels(&self) -> usize {
        self.buckets.len()
    }

    #[inline]
    pub fn num_points(&self) -> usize {
        self.cells.len()
    }

    #[inline]
    pub fn cell_of_point(&self, i: usize) -> [i32; 3] {
        self.cells[i]
    }

    #[inline]
    pub fn cells(&self) -> &[[i32; 3]] {
        &self.cells
    }

    /// Distinct voxel keys in first-occurrence order.
    #[inline]
    pub fn voxel_keys(&self) -> &[ViewKey] {
        self.buckets.keys()
    }

    #[inline]
    pub fn bucket(&self, j: usize) -> &[u32] {
        self.buckets.bucket(j)
    }

    /// Cell of bucket `j`.
    #[inline]
    pub fn voxel_cell(&self, j: usize) -> [i32; 3] {
        self.buckets.keys()[j].to_voxel()
    }

    /// Bucket of an arbitrary cell, `None` if unoccupied or unpackable.
    pub fn bucket_of_cell(&self, cell: [i64; 3]) -> Option<usize> {
        if !ViewKey::voxel_in_range(cell) {
            return None;
        }
        self.buckets
            .bucket_of_key(ViewKey::voxel_unchecked(cell.map(|c| c as i32)))
    }
}

impl ViewIndex for VoxelIndex {
    fn buckets(&self) -> &Buckets {
        &self.buckets
    }
}
