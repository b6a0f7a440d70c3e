//! Fuses point, voxel and range features with the gated fusion module and
//! compares it with plain addition.
//!
//!     cargo run --example gated_fusion

use rpv::augment::RngStream;
use rpv::gfm::{fuse_add, gfm_forward, GateParams};
use rpv::index::{spherical_project, voxelize, RangeParams};
use rpv::prop::{gather, scatter_average, GatherPlan, ScatterPlan};
use rpv::synth::synthetic_scan;
use rpv::FeatureTensor;

fn main() -> rpv::Result<()> {
    let cloud = synthetic_scan(20_000, 2);
    let c = 3;
    let points = FeatureTensor::<f64>::from_fn(cloud.len(), c, |i, k| cloud.positions()[i][k] as f64);

    let vidx = voxelize(&cloud, 0.1)?;
    let ridx = spherical_project(&cloud, RangeParams::kitti())?;
    let voxels = gather(
        &scatter_average(&points, &ScatterPlan::new(&vidx))?,
        &GatherPlan::trilinear(&cloud, &vidx)?,
    )?;
    let range = gather(
        &scatter_average(&points, &ScatterPlan::new(&ridx))?,
        &GatherPlan::bilinear(&ridx),
    )?;
    let views = [points, voxels, range];

    let mut rng = RngStream::new(0);
    let params = GateParams::new(
        (0..3)
            .map(|_| FeatureTensor::from_fn(3, c, |_, _| rng.uniform(-0.5, 0.5)))
            .collect(),
    )?;
    let (fused, cache) = gfm_forward(&views, &params)?;
    let added = fuse_add(&views)?;

    for i in [0, cloud.len() / 2, cloud.len() - 1] {
        println!(
            "point {i}: softmax {:.3?}  fused x {:.3}  sum x {:.3}",
            cache.softmax().row(i),
            fused.get(i, 0),
            added.get(i, 0)
        );
    }
    for (v, name) in ["point", "voxel", "range"].iter().enumerate() {
        let w = cache.view_weights(v);
        println!(
            "mean weight of the {name} view: {:.3}",
            w.iter().sum::<f64>() / w.len() as f64
        );
    }

    let (zero, _) = gfm_forward(&views, &GateParams::zeros(&[c; 3])?)?;
    let mean = added.map(|v| v * (1.0 / 3.0));
    println!("zero gates reproduce the view mean exactly: {}", zero == mean);
    Ok(())
}
