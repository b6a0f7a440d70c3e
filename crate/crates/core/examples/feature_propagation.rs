//! Point -> view -> point round trips for the three gather modes, and the
//! information each one loses on a non-constant field.
//!
//!     cargo run --example feature_propagation

use rpv::index::{spherical_project, voxelize, RangeParams};
use rpv::prop::{gather, scatter_average, GatherPlan, ScatterPlan};
use rpv::synth::synthetic_scan;
use rpv::FeatureTensor;

fn main() -> rpv::Result<()> {
    let cloud = synthetic_scan(50_000, 1);
    // field = height above ground, so neighbours genuinely differ
    let field = FeatureTensor::<f64>::from_fn(cloud.len(), 1, |i, _| cloud.positions()[i][2] as f64);

    let vidx = voxelize(&cloud, 0.1)?;
    let ridx = spherical_project(&cloud, RangeParams::kitti())?;
    let on_voxels = scatter_average(&field, &ScatterPlan::new(&vidx))?;
    let on_pixels = scatter_average(&field, &ScatterPlan::new(&ridx))?;

    let runs = [
        ("voxel nearest", gather(&on_voxels, &GatherPlan::nearest(&vidx))?),
        (
            "voxel trilinear",
            gather(&on_voxels, &GatherPlan::trilinear(&cloud, &vidx)?)?,
        ),
        ("range nearest", gather(&on_pixels, &GatherPlan::nearest(&ridx))?),
        ("range bilinear", gather(&on_pixels, &GatherPlan::bilinear(&ridx))?),
    ];
    println!(
        "{} points, {} voxels, {} pixels",
        cloud.len(),
        vidx.num_voxels(),
        ridx.num_occupied()
    );
    for (name, back) in &runs {
        let rms = (0..cloud.len())
            .filter(|&i| ridx.is_valid(i) || name.starts_with("voxel"))
            .map(|i| (back.get(i, 0) - field.get(i, 0)).powi(2))
            .sum::<f64>()
            / cloud.len() as f64;
        println!("{name:<16} rms error {:.4} m", rms.sqrt());
    }

    // a constant survives every mode
    let constant = FeatureTensor::<f32>::filled(cloud.len(), 1, 2.5);
    let v = scatter_average(&constant, &ScatterPlan::new(&vidx))?;
    let back = gather(&v, &GatherPlan::trilinear(&cloud, &vidx)?)?;
    let worst = back.as_slice().iter().map(|x| (x - 2.5).abs()).fold(0.0f32, f32::max);
    println!("constant 2.5 through trilinear: max deviation {worst:e}");
    Ok(())
}
