use std::collections::HashMap;
use std::io::Write;

use super::{CliError, CliResult, RunConfig};
use crate::augment::{extract_instances, instance_cutmix, CutMixConfig, ExtractConfig, InstanceBank, RngStream};
use crate::gfm::{fuse_add, gfm_backward, gfm_forward, GateParams};
use crate::gradcheck::{check, GradCheckConfig};
use crate::index::{spherical_project, voxelize, RangeParams, ViewIndex};
use crate::metrics::ConfusionMatrix;
use crate::pcio::FeatureTensor;
use crate::prop::{gather, gather_backward, scatter_average, GatherPlan, ScatterPlan};
use crate::synth::{synthetic_scan, uniform_cloud, BICYCLE, CAR, ROAD};

type Outcome = Result<String, String>;

fn ensure(ok: bool, pass: String, fail: String) -> Outcome {
    if ok {
        Ok(pass)
    } else {
        Err(fail)
    }
}

fn voxel_partition(seed: u64) -> Outcome {
    let cloud = uniform_cloud(400, 2.0, 1, seed);
    let r = 0.7;
    let vidx = voxelize(&cloud, r).map_err(|e| e.to_string())?;
    let cell = |p: &[f32; 3]| p.map(|v| (v as f64 / r).floor() as i64);
    let mut naive: HashMap<[i64; 3], usize> = HashMap::new();
    for p in cloud.positions() {
        *naive.entry(cell(p)).or_default() += 1;
    }
    for (i, p) in cloud.positions().iter().enumerate() {
        for (k, q) in cloud.positions().iter().enumerate() {
            let same = vidx.buckets().bucket_of_point(i) == vidx.buckets().bucket_of_point(k);
            if same != (cell(p) == cell(q)) {
                return Err(format!("points {i} and {k} grouped inconsistently"));
            }
        }
    }
    ensure(
        naive.len() == vidx.num_voxels(),
        format!("{} voxels match brute force", naive.len()),
        format!("{} voxels, brute force {}", vidx.num_voxels(), naive.len()),
    )
}

fn scatter_mean(seed: u64) -> Outcome {
    let cloud = uniform_cloud(500, 1.5, 3, seed);
    let vidx = voxelize(&cloud, 0.5).map_err(|e| e.to_string())?;
    let plan = ScatterPlan::new(&vidx);
    let got = scatter_average(cloud.features(), &plan).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    for j in 0..vidx.num_voxels() {
        let members = vidx.bucket(j);
        for k in 0..3 {
            let mean = members
                .iter()
                .map(|&i| cloud.features().get(i as usize, k) as f64)
                .sum::<f64>()
                / members.len() as f64;
            worst = worst.max((mean - got.get(j, k) as f64).abs());
        }
    }
    ensure(
        worst <= 1e-6,
        format!("max error {worst:.2e}"),
        format!("max error {worst:.2e}"),
    )
}

fn adjoint(seed: u64) -> Outcome {
    let cloud = uniform_cloud(300, 3.0, 1, seed);
    let vidx = voxelize(&cloud, 0.8).map_err(|e| e.to_string())?;
    let params = RangeParams {
        height: 16,
        width: 64,
        fov_up: 0.8,
        fov_down: -0.8,
    };
    let ridx = spherical_project(&cloud, params).map_err(|e| e.to_string())?;
    let plans = [
        GatherPlan::trilinear(&cloud, &vidx).map_err(|e| e.to_string())?,
        GatherPlan::bilinear(&ridx),
        GatherPlan::nearest(&vidx),
    ];
    let mut rng = RngStream::new(seed);
    let mut worst = 0.0f64;
    for plan in &plans {
        let v = FeatureTensor::<f64>::from_fn(plan.num_buckets(), 2, |_, _| rng.uniform(-1.0, 1.0));
        let g = FeatureTensor::<f64>::from_fn(plan.num_points(), 2, |_, _| rng.uniform(-1.0, 1.0));
        let lhs = gather(&v, plan).and_then(|p| p.dot(&g)).map_err(|e| e.to_string())?;
        let rhs = gather_backward(&g, plan)
            .and_then(|b| v.dot(&b))
            .map_err(|e| e.to_string())?;
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-300));
    }
    ensure(
        worst <= 1e-10,
        format!("<Gv,g> = <v,G^T g> to {worst:.1e}"),
        format!("relative mismatch {worst:.1e}"),
    )
}

fn gfm_gradients(seed: u64) -> Outcome {
    let cfg = GradCheckConfig::default();
    let mut rng = RngStream::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let l = 2 + rng.index(2);
        let n = 1 + rng.index(8);
        let c = 1 + rng.index(4);
        let views: Vec<FeatureTensor<f64>> = (0..l)
            .map(|_| FeatureTensor::from_fn(n, c, |_, _| rng.uniform(-1.0, 1.0)))
            .collect();
        let params = GateParams::new(
            (0..l)
                .map(|_| FeatureTensor::from_fn(l, c, |_, _| rng.uniform(-1.0, 1.0)))
                .collect(),
        )
        .map_err(|e| e.to_string())?;
        let upstream = FeatureTensor::<f64>::from_fn(n, c, |_, _| rng.uniform(-1.0, 1.0));
        let (_, cache) = gfm_forward(&views, &params).map_err(|e| e.to_string())?;
        let grads = gfm_backward(&upstream, &cache, &params).map_err(|e| e.to_string())?;

        // Flatten inputs then weights into one parameter vector.
        let mut x: Vec<f64> = views.iter().flat_map(|v| v.as_slice().to_vec()).collect();
        x.extend(params.weights().iter().flat_map(|w| w.as_slice().to_vec()));
        let mut analytic: Vec<f64> = grads.inputs.iter().flat_map(|v| v.as_slice().to_vec()).collect();
        analytic.extend(grads.weights.iter().flat_map(|w| w.as_slice().to_vec()));
        let loss = |x: &[f64]| {
            let (xs, ws) = x.split_at(l * n * c);
            let v: Vec<_> = xs
                .chunks(n * c)
                .map(|d| FeatureTensor::new(n, c, d.to_vec()).unwrap())
                .collect();
            let p = GateParams::new(
                ws.chunks(l * c)
                    .map(|d| FeatureTensor::new(l, c, d.to_vec()).unwrap())
                    .collect(),
            )
            .unwrap();
            gfm_forward(&v, &p).unwrap().0.dot(&upstream).unwrap()
        };
        let report = check(loss, &x, &analytic, &cfg);
        worst = worst.max(report.max_rel_error);
    }
    ensure(
        worst < GradCheckConfig::default().rel_tolerance,
        format!("10 instances, max relative error {worst:.1e}"),
        format!("max relative error {worst:.1e}"),
    )
}

fn zero_gate(seed: u64) -> Outcome {
    let mut rng = RngStream::new(seed);
    let views: Vec<FeatureTensor<f64>> = (0..3)
        .map(|_| FeatureTensor::from_fn(50, 4, |_, _| rng.uniform(-10.0, 10.0)))
        .collect();
    let params = GateParams::zeros(&[4, 4, 4]).map_err(|e| e.to_string())?;
    let (fused, _) = gfm_forward(&views, &params).map_err(|e| e.to_string())?;
    let sum = fuse_add(&views).map_err(|e| e.to_string())?;
    let expected = sum.map(|v| v * (1.0 / 3.0));
    ensure(
        fused == expected,
        "zero gates give fuse_add * (1/L) exactly".into(),
        format!("max difference {:.2e}", fused.max_abs_diff(&expected)),
    )
}

fn miou_hand_case() -> Outcome {
    let cm = ConfusionMatrix::from_counts(2, vec![5, 5, 0, 10]).map_err(|e| e.to_string())?;
    let m = cm.miou().map_err(|e| e.to_string())?.miou;
    let expected = (5.0 / 10.0 + 10.0 / 15.0) / 2.0;
    ensure(
        (m - expected).abs() <= 1e-9,
        format!("miou {m:.9}"),
        format!("miou {m:.9}, expected {expected:.9}"),
    )
}

fn cutmix_determinism(seed: u64) -> Outcome {
    let scan = synthetic_scan(64 * 300, seed);
    let rare = [CAR, BICYCLE].into();
    let mut bank = InstanceBank::new(rare, [ROAD].into());
    let found = extract_instances(&scan, bank.rare_classes(), &ExtractConfig::default()).map_err(|e| e.to_string())?;
    bank.extend(found).map_err(|e| e.to_string())?;
    let cfg = CutMixConfig {
        count: 3,
        ..CutMixConfig::default()
    };
    let run = || instance_cutmix(&scan, &bank, &cfg, &mut RngStream::for_frame(seed, 7));
    let (a, b) = (run().map_err(|e| e.to_string())?, run().map_err(|e| e.to_string())?);
    ensure(
        a == b,
        format!("{} instances in bank, {} pasted, repeatable", bank.len(), a.1.pasted),
        "two runs with one seed differ".into(),
    )
}

pub(crate) fn selfcheck(cfg: &RunConfig, out: &mut dyn Write) -> CliResult {
    let seed = cfg.seed;
    let checks: Vec<(&str, Outcome)> = vec![
        ("voxel partition", voxel_partition(seed)),
        ("scatter average", scatter_mean(seed)),
        ("gather adjointness", adjoint(seed)),
        ("gated fusion gradients", gfm_gradients(seed)),
        ("zero-gate reduction", zero_gate(seed)),
        ("miou hand case", miou_hand_case()),
        ("cutmix determinism", cutmix_determinism(seed)),
    ];
    let mut failed = 0;
    for (name, outcome) in &checks {
        match outcome {
            Ok(detail) => writeln!(out, "PASS {name:<24} {detail}")?,
            Err(detail) => {
                failed += 1;
                writeln!(out, "FAIL {name:<24} {detail}")?;
            }
        }
    }
    if failed == 0 {
        Ok(())
    } else {
        Err(CliError::check(format!(
            "{failed} of {} self-checks failed",
            checks.len()
        )))
    }
}
