//! Point clouds, label maps and dense feature tensors, plus their on-disk formats.
//!
//! All binary formats are little-endian:
//!
//! ```text
//! KITTI .bin    N x [x:f32, y:f32, z:f32, intensity:f32]
//! KITTI .label  N x u32   (low 16 bits semantic id, high 16 bits instance id)
//! tensor        M*C x f32 row-major, sidecar `<path>.meta` = "M C\n"
//! ```

mod kitti;
mod labelmap;
mod tensor_file;

use std::fmt::Debug;

use crate::error::{Error, Result};

pub use kitti::{
    decode_kitti_bin, encode_kitti_bin, load_kitti_bin, load_kitti_labels, load_label_words, save_kitti_bin,
    save_label_words,
};
pub use labelmap::LabelMap;
pub use tensor_file::{load_tensor, meta_path, save_tensor};

/// Sentinel train id for points excluded from evaluation.
pub const IGNORE: u32 = u32::MAX;

/// Largest semantic label (exclusive) a cloud may carry besides [`IGNORE`].
pub const LABEL_LIMIT: u32 = 1 << 16;

/// Floating-point element type of a [`FeatureTensor`].
///
/// Storage may be 32-bit; every reduction in this crate accumulates in `f64`.
pub trait Scalar: Copy + Default + PartialEq + PartialOrd + Debug + Send + Sync + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
    fn is_finite(self) -> bool;
}

impl Scalar for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
    #[inline]
    fn is_finite(self) -> bool {
        f32::is_finite(self)
    }
}

impl Scalar for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
    #[inline]
    fn is_finite(self) -> bool {
        f64::is_finite(self)
    }
}

/// Dense `rows x cols` row-major feature matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor<T = f32> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

impl<T: Scalar> FeatureTensor<T> {
    /// Wraps `data`, rejecting a length mismatch or any non-finite entry.
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        let expected = rows
            .checked_mul(cols)
            .ok_or_else(|| Error::shape(format!("{rows}x{cols} overflows")))?;
        if data.len() != expected {
            return Err(Error::shape(format!(
                "tensor {rows}x{cols} needs {expected} values, got {}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite tensor entry at row {} col {}",
                pos / cols.max(1),
                pos % cols.max(1)
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::default(); rows * cols],
        }
    }

    pub fn filled(rows: usize, cols: usize, value: T) -> Self {
        Self {
            rows,
            cols,
            data: vec![value; rows * cols],
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                data.push(f(r, c));
            }
        }
        Self { rows, cols, data }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    /// Mutable access to the raw storage. Keeping entries finite is up to the caller.
    #[inline]
    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, r: usize) -> &mut [T] {
        &mut self.data[r * self.cols..(r + 1) * self.cols]
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn cast<U: Scalar>(&self) -> FeatureTensor<U> {
        FeatureTensor {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }

    pub fn map(&self, mut f: impl FnMut(T) -> T) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Frobenius inner product, accumulated in `f64`.
    pub fn dot(&self, other: &Self) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::shape(format!(
                "dot of {:?} and {:?}",
                self.shape(),
                other.shape()
            )));
        }
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a.to_f64() * b.to_f64())
            .sum())
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.shape(), other.shape(), "max_abs_diff shape mismatch");
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a.to_f64() - b.to_f64()).abs())
            .fold(0.0, f64::max)
    }
}

/// A LiDAR scan: positions in meters (sensor frame, x forward, y left, z up),
/// per-point feature channels, and optional per-point labels.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    positions: Vec<[f32; 3]>,
    features: FeatureTensor<f32>,
    labels: Option<Vec<u32>>,
}

impl PointCloud {
    pub fn new(positions: Vec<[f32; 3]>, features: FeatureTensor<f32>, labels: Option<Vec<u32>>) -> Result<Self> {
        if features.rows() != positions.len() {
            return Err(Error::shape(format!(
                "{} positions but {} feature rows",
                positions.len(),
                features.rows()
            )));
        }
        if let Some(i) = positions.iter().position(|p| p.iter().any(|v| !v.is_finite())) {
            return Err(Error::Validation(format!("non-finite position at point {i}")));
        }
        if let Some(labels) = &labels {
            if labels.len() != positions.len() {
                return Err(Error::shape(format!(
                    "{} positions but {} labels",
                    positions.len(),
                    labels.len()
                )));
            }
            if let Some(i) = labels.iter().position(|&l| l >= LABEL_LIMIT && l != IGNORE) {
                return Err(Error::Validation(format!(
                    "label {} at point {i} exceeds 16-bit range",
                    labels[i]
                )));
            }
        }
        Ok(Self {
            positions,
            features,
            labels,
        })
    }

    /// Cloud with no feature channels and no labels.
    pub fn from_positions(positions: Vec<[f32; 3]>) -> Result<Self> {
        let n = positions.len();
        Self::new(positions, FeatureTensor::zeros(n, 0), None)
    }

    pub fn empty(channels: usize) -> Self {
        Self {
            positions: Vec::new(),
            features: FeatureTensor::zeros(0, channels),
            labels: None,
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.features.cols()
    }

    #[inline]
    pub fn positions(&self) -> &[[f32; 3]] {
        &self.positions
    }

    #[inline]
    pub fn features(&self) -> &FeatureTensor<f32> {
        &self.features
    }

    #[inline]
    pub fn labels(&self) -> Option<&[u32]> {
        self.labels.as_deref()
    }

    pub fn with_labels(self, labels: Vec<u32>) -> Result<Self> {
        Self::new(self.positions, self.features, Some(labels))
    }

    pub fn with_features(self, features: FeatureTensor<f32>) -> Result<Self> {
        Self::new(self.positions, features, self.labels)
    }

    pub fn into_parts(self) -> (Vec<[f32; 3]>, FeatureTensor<f32>, Option<Vec<u32>>) {
        (self.positions, self.features, self.labels)
    }

    /// Appends `other` after `self`. Labels survive only if both sides carry them.
    pub fn concat(&self, other: &PointCloud) -> Result<PointCloud> {
        if self.channels() != other.channels() {
            return Err(Error::shape(format!(
                "concat of {} and {} channel clouds",
                self.channels(),
                other.channels()
            )));
        }
        let mut positions = self.positions.clone();
        positions.extend_from_slice(&other.positions);
        let mut data = self.features.as_slice().to_vec();
        data.extend_from_slice(other.features.as_slice());
        let features = FeatureTensor::new(positions.len(), self.channels(), data)?;
        let labels = match (&self.labels, &other.labels) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).copied().collect()),
            _ => None,
        };
        PointCloud::new(positions, features, labels)
    }
}
