//! Checks every hand-written backward pass against central differences of the
//! scalar loss <op(x), g>.
//!
//!     cargo run --example gradient_check

use rpv::augment::RngStream;
use rpv::gfm::{gfm_backward, gfm_forward, GateParams};
use rpv::gradcheck::{check, GradCheckConfig};
use rpv::index::{spherical_project, voxelize, RangeParams};
use rpv::prop::{gather, gather_backward, scatter_average, scatter_average_backward, GatherPlan, ScatterPlan};
use rpv::synth::uniform_cloud;
use rpv::FeatureTensor;

fn random(rng: &mut RngStream, r: usize, c: usize) -> FeatureTensor<f64> {
    FeatureTensor::from_fn(r, c, |_, _| rng.uniform(-1.0, 1.0))
}

fn main() -> rpv::Result<()> {
    let cfg = GradCheckConfig::default();
    let mut rng = RngStream::new(0);
    let cloud = uniform_cloud(48, 2.0, 3, 0);
    let (n, c) = (cloud.len(), 3);
    let vidx = voxelize(&cloud, 0.7)?;
    let ridx = spherical_project(
        &cloud,
        RangeParams {
            height: 8,
            width: 16,
            fov_up: 1.2,
            fov_down: -1.2,
        },
    )?;

    let splan = ScatterPlan::new(&vidx);
    let x = random(&mut rng, n, c);
    let g = random(&mut rng, splan.num_buckets(), c);
    let loss = |v: &[f64]| {
        let t = FeatureTensor::new(n, c, v.to_vec()).unwrap();
        scatter_average(&t, &splan).unwrap().dot(&g).unwrap()
    };
    let r = check(
        loss,
        x.as_slice(),
        scatter_average_backward(&g, &splan)?.as_slice(),
        &cfg,
    );
    println!(
        "scatter average    max rel err {:.2e}  {}",
        r.max_rel_error,
        verdict(r.passed())
    );

    let g = random(&mut rng, n, c);
    for (name, plan) in [
        ("gather nearest", GatherPlan::nearest(&vidx)),
        ("gather trilinear", GatherPlan::trilinear(&cloud, &vidx)?),
        ("gather bilinear", GatherPlan::bilinear(&ridx)),
    ] {
        let m = plan.num_buckets();
        let v = random(&mut rng, m, c);
        let loss = |x: &[f64]| {
            let t = FeatureTensor::new(m, c, x.to_vec()).unwrap();
            gather(&t, &plan).unwrap().dot(&g).unwrap()
        };
        let r = check(loss, v.as_slice(), gather_backward(&g, &plan)?.as_slice(), &cfg);
        println!(
            "{name:<18} max rel err {:.2e}  {}",
            r.max_rel_error,
            verdict(r.passed())
        );
    }

    let l = 3;
    let views: Vec<_> = (0..l).map(|_| random(&mut rng, n, c)).collect();
    let params = GateParams::new((0..l).map(|_| random(&mut rng, l, c)).collect())?;
    let (_, cache) = gfm_forward(&views, &params)?;
    let grads = gfm_backward(&g, &cache, &params)?;
    let weights: Vec<f64> = params.weights().iter().flat_map(|w| w.as_slice().to_vec()).collect();
    let analytic: Vec<f64> = grads.weights.iter().flat_map(|w| w.as_slice().to_vec()).collect();
    let loss = |w: &[f64]| {
        let p = GateParams::new(
            w.chunks(l * c)
                .map(|d| FeatureTensor::new(l, c, d.to_vec()).unwrap())
                .collect(),
        )
        .unwrap();
        gfm_forward(&views, &p).unwrap().0.dot(&g).unwrap()
    };
    let r = check(loss, &weights, &analytic, &cfg);
    println!(
        "gated fusion dW    max rel err {:.2e}  {}",
        r.max_rel_error,
        verdict(r.passed())
    );
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "MISMATCH"
    }
}
