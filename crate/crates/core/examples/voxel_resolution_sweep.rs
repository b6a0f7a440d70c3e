//! Voxelizes one scan at several resolutions: coarser grids merge more points
//! per voxel, which is the quantization loss the point branch makes up for.
//!
//!     cargo run --example voxel_resolution_sweep

use rpv::index::{collision_stats, voxelize};
use rpv::synth::synthetic_scan;

fn main() -> rpv::Result<()> {
    let cloud = synthetic_scan(120_000, 0);
    println!("{:>10} {:>10} {:>12} {:>10}", "r (m)", "voxels", "pts/voxel", "multi");
    let mut last = usize::MAX;
    for r in [0.025, 0.05, 0.1, 0.2, 0.3, 0.6] {
        let s = collision_stats(&voxelize(&cloud, r)?);
        let note = if s.occupied > last {
            "  (more than the finer grid)"
        } else {
            ""
        };
        println!(
            "{r:>10.3} {:>10} {:>12.3} {:>10.4}{note}",
            s.occupied, s.mean_per_bucket, s.multi_fraction
        );
        last = s.occupied;
    }
    Ok(())
}
