//! Projects a synthetic scan onto a 64 x 2048 range image and prints how
//! crowded the pixels are.
//!
//!     cargo run --example project_range_image [num_points]

use rpv::index::{collision_stats, spherical_project, RangeParams};
use rpv::synth::synthetic_scan;

fn main() -> rpv::Result<()> {
    let n = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(120_000);
    let cloud = synthetic_scan(n, 0);
    let ridx = spherical_project(&cloud, RangeParams::kitti())?;
    let s = collision_stats(&ridx);

    println!("{} points -> {} x {} image", cloud.len(), ridx.height(), ridx.width());
    println!("valid points     {}", s.points);
    println!("occupied pixels  {} of {}", s.occupied, ridx.height() * ridx.width());
    println!("points / pixel   {:.3} (max {})", s.mean_per_bucket, s.max_per_bucket);
    println!("multi-point frac {:.4}", s.multi_fraction);

    // where the first few points land
    for i in 0..5.min(cloud.len()) {
        match (ridx.pixel_of_point(i), ridx.norm_coords(i)) {
            (Some([r, c]), Some([u, v])) => println!(
                "point {i}: range {:.2} m -> pixel ({r}, {c}), continuous ({u:.2}, {v:.2})",
                ridx.range_of_point(i)
            ),
            _ => println!("point {i}: outside the image"),
        }
    }
    Ok(())
}
