use std::f64::consts::PI;

use super::{Buckets, ViewIndex, ViewKey, NO_BUCKET};
use crate::error::{Error, Result};
use crate::pcio::PointCloud;

/// Range-image geometry. Angles in radians; `fov_down` is negative below the horizon.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RangeParams {
    pub height: u32,
    pub width: u32,
    pub fov_up: f64,
    pub fov_down: f64,
}

impl RangeParams {
    /// 64 x 2048 image with a +3 / -25 degree vertical field of view.
    pub fn kitti() -> Self {
        Self {
            height: 64,
            width: 2048,
            fov_up: 3f64.to_radians(),
            fov_down: (-25f64).to_radians(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.height == 0 || self.width == 0 {
            return Err(Error::Validation(format!(
                "range image must be at least 1x1, got {}x{}",
                self.height, self.width
            )));
        }
        if !(self.fov_up > self.fov_down) || !self.fov_up.is_finite() || !self.fov_down.is_finite() {
            return Err(Error::Validation(format!(
                "fov_up ({}) must exceed fov_down ({})",
                self.fov_up, self.fov_down
            )));
        }
        Ok(())
    }

    /// Continuous `(row, col)` of a point, before clamping; `None` at zero range.
    pub fn project(&self, p: [f64; 3]) -> Option<[f64; 2]> {
        let range = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        if range <= 0.0 {
            return None;
        }
        let yaw = p[1].atan2(p[0]);
        let pitch = (p[2] / range).clamp(-1.0, 1.0).asin();
        let col = 0.5 * (1.0 - yaw / PI) * self.width as f64;
        let row = (1.0 - (pitch - self.fov_down) / (self.fov_up - self.fov_down)) * self.height as f64;
        Some([row, col])
    }
}

/// Points grouped by range-image pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeIndex {
    params: RangeParams,
    pixels: Vec<[u32; 2]>,
    norm_coords: Vec<[f64; 2]>,
    ranges: Vec<f64>,
    valid: Vec<bool>,
    pixel_bucket: Vec<u32>,
    buckets: Buckets,
}

/// Projects every point onto the range image.
///
/// Rows run from `fov_up` (row 0) to `fov_down`; column 0 sits at yaw `pi`.
/// Out-of-view pitches are clamped into the image, zero-range points are
/// marked invalid and left out of every bucket.
pub fn spherical_project(cloud: &PointCloud, params: RangeParams) -> Result<RangeIndex> {
    params.validate()?;
    let n = cloud.len();
    let h = params.height as f64;
    let w = params.width as f64;
    let mut pixels = vec![[0u32; 2]; n];
    let mut norm_coords = vec![[0.0f64; 2]; n];
    let mut ranges = vec![0.0f64; n];
    let mut valid = vec![false; n];

    for (i, p) in cloud.positions().iter().enumerate() {
        let p = p.map(f64::from);
        ranges[i] = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
        let Some([row, col]) = params.project(p) else {
            continue;
        };
        let row = row.clamp(0.0, h.next_down());
        let col = col.clamp(0.0, w.next_down());
        norm_coords[i] = [row, col];
        pixels[i] = [
            (row.floor() as u32).min(params.height - 1),
            (col.floor() as u32).min(params.width - 1),
        ];
        valid[i] = true;
    }

    let width = params.width as u64;
    let buckets = Buckets::build(n, |i| {
        valid[i].then(|| ViewKey(pixels[i][0] as u64 * width + pixels[i][1] as u64))
    });
    let mut pixel_bucket = vec![NO_BUCKET; params.height as usize * params.width as usize];
    for (j, key) in buckets.keys().iter().enumerate() {
        pixel_bucket[key.0 as usize] = j as u32;
    }

    Ok(RangeIndex {
        params,
        pixels,
        norm_coords,
        ranges,
        valid,
        pixel_bucket,
        buckets,
    })
}

impl RangeIndex {
    #[inline]
    pub fn params(&self) -> RangeParams {
        self.params
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.params.height
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.params.width
    }

    #[inline]
    pub fn num_points(&self) -> usize {
        self.valid.len()
    }

    #[inline]
    pub fn is_valid(&self, i: usize) -> bool {
        self.valid[i]
    }

    #[inline]
    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    /// Integer `(row, col)` of a valid point.
    #[inline]
    pub fn pixel_of_point(&self, i: usize) -> Option<[u32; 2]> {
        self.valid[i].then(|| self.pixels[i])
    }

    /// Continuous `(row, col)` of a valid point, clamped into `[0,H) x [0,W)`.
    #[inline]
    pub fn norm_coords(&self, i: usize) -> Option<[f64; 2]> {
        self.valid[i].then(|| self.norm_coords[i])
    }

    /// Euclidean range of point `i` in meters.
    #[inline]
    pub fn range_of_point(&self, i: usize) -> f64 {
        self.ranges[i]
    }

    #[inline]
    pub fn num_occupied(&self) -> usize {
        self.buckets.len()
    }

    #[inline]
    pub fn bucket(&self, j: usize) -> &[u32] {
        self.buckets.bucket(j)
    }

    /// `(row, col)` of bucket `j`.
    #[inline]
    pub fn bucket_pixel(&self, j: usize) -> (u32, u32) {
        self.buckets.keys()[j].to_pixel(self.params.width)
    }

    /// Bucket of pixel `(row, col)`, `None` if unoccupied or outside the image.
    #[inline]
    pub fn bucket_of_pixel(&self, row: i64, col: i64) -> Option<usize> {
        if row < 0 || col < 0 || row >= self.params.height as i64 || col >= self.params.width as i64 {
            return None;
        }
        match self.pixel_bucket[row as usize * self.params.width as usize + col as usize] {
            NO_BUCKET => None,
            j => Some(j as usize),
        }
    }
}

impl ViewIndex for RangeIndex {
    fn buckets(&self) -> &Buckets {
        &self.buckets
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> RangeParams {
        RangeParams {
            height: 64,
            width: 2048,
            fov_up: 0.2,
            fov_down: -0.2,
        }
    }

    fn cloud(points: &[[f32; 3]]) -> PointCloud {
        PointCloud::from_positions(points.to_vec()).unwrap()
    }

    #[test]
    fn forward_axis_lands_mid_image() {
        let idx = spherical_project(&cloud(&[[1.0, 0.0, 0.0]]), params()).unwrap();
        assert_eq!(idx.norm_coords(0), Some([32.0, 1024.0]));
        assert_eq!(idx.pixel_of_point(0), Some([32, 1024]));
        assert_eq!(idx.bucket_of_pixel(32, 1024), Some(0));
    }

    #[test]
    fn origin_is_invalid() {
        let idx = spherical_project(&cloud(&[[0.0, 0.0, 0.0], [1.0, 0.0, 0.0]]), params()).unwrap();
        assert!(!idx.is_valid(0));
        assert_eq!(idx.pixel_of_point(0), None);
        assert_eq!(idx.buckets().bucket_of_point(0), None);
        assert_eq!(idx.num_occupied(), 1);
    }

    #[test]
    fn backward_axis_wraps_to_column_zero() {
        let idx = spherical_project(&cloud(&[[-1.0, 1e-7, 0.0]]), params()).unwrap();
        let [_, m] = idx.norm_coords(0).unwrap();
        assert!(m < 1e-3, "m = {m}");
        // yaw = -pi maps to column W, which clamps just inside the image
        let idx = spherical_project(&cloud(&[[-1.0, -0.0, 0.0]]), params()).unwrap();
        let [_, m] = idx.norm_coords(0).unwrap();
        assert!(m < 2048.0);
        assert_eq!(idx.pixel_of_point(0).unwrap()[1], 2047);
    }

    #[test]
    fn out_of_view_pitch_clamps() {
        let idx = spherical_project(&cloud(&[[1.0, 0.0, 5.0], [1.0, 0.0, -5.0]]), params()).unwrap();
        assert_eq!(idx.pixel_of_point(0).unwrap()[0], 0);
        assert_eq!(idx.pixel_of_point(1).unwrap()[0], 63);
        let [n, _] = idx.norm_coords(1).unwrap();
        assert!(n < 64.0);
    }

    #[test]
    fn rejects_bad_params() {
        let c = cloud(&[[1.0, 0.0, 0.0]]);
        assert!(spherical_project(&c, RangeParams { height: 0, ..params() }).is_err());
        assert!(spherical_project(
            &c,
            RangeParams {
                fov_up: -0.3,
                ..params()
            }
        )
        .is_err());
    }
}
