//! Differentiable feature propagation between the point view and the voxel /
//! range views.
//!
//! Point to view is an average over each bucket ([`scatter_average`]). View to
//! point is a weighted gather over neighbouring view elements: the point's own
//! element ([`gather_nearest`]), the four surrounding pixels
//! ([`gather_bilinear`]), or the eight surrounding voxels
//! ([`gather_trilinear`]). Every gather stores its final weights in a
//! [`GatherPlan`]; the backward passes apply the transpose of those weights.

mod gather;
mod scatter;

pub use gather::{
    bilinear_weights, gather, gather_backward, gather_bilinear, gather_bilinear_backward, gather_nearest,
    gather_nearest_backward, gather_trilinear, gather_trilinear_backward, trilinear_weights, GatherMode, GatherPlan,
};
pub use scatter::{scatter_average, scatter_average_backward, ScatterPlan};
