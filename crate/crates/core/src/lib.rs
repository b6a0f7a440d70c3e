//! Range-point-voxel multi-view kernels for LiDAR semantic segmentation.
//!
//! The crate is organised by view-interaction stage:
//!
//! - [`pcio`]: point clouds, label maps, feature tensors and their file formats.
//! - [`index`]: voxel and spherical range-image indexing (points to buckets).
//! - [`prop`]: point-to-view averaging scatter and view-to-point gathers
//!   (nearest, bilinear, trilinear), each with an exact backward pass.
//! - [`gfm`]: gated fusion of point-aligned view features, plus the
//!   addition/concatenation/score-ensemble baselines.
//! - [`augment`]: instance CutMix and global scale/rotation augmentation.
//! - [`metrics`]: confusion matrices and mean intersection-over-union.
//! - [`gradcheck`]: central finite-difference gradient checking.
//! - [`cli`]: the `rpv` command-line front end.
//!
//! Runnable walkthroughs for each stage live in the crate's `examples/`.

pub mod augment;
pub mod cli;
pub mod error;
pub mod gfm;
pub mod gradcheck;
pub mod index;
pub mod metrics;
pub mod pcio;
pub mod prop;
pub mod synth;

pub use error::{Error, Result};
pub use pcio::{FeatureTensor, LabelMap, PointCloud, Scalar, IGNORE};
