use std::io::Write;

use super::commands::load_scan;
use super::{CliError, CliResult, RunConfig, ScanArgs};
use crate::augment::RngStream;
use crate::gfm::{gfm_forward, GateParams};
use crate::index::{collision_stats, spherical_project, voxelize};
use crate::pcio::FeatureTensor;
use crate::prop::{gather, scatter_average, GatherPlan, ScatterPlan};

pub(crate) struct DemoOptions {
    pub scan: ScanArgs,
    pub constant: Option<f32>,
    pub channels: usize,
    pub corrupt_weights: Option<f64>,
}

struct Checks<'a> {
    out: &'a mut dyn Write,
    failed: Vec<&'static str>,
}

impl Checks<'_> {
    fn record(&mut self, name: &'static str, ok: bool, detail: String) -> std::io::Result<()> {
        if !ok {
            self.failed.push(name);
        }
        let verdict = if ok { "PASS" } else { "FAIL" };
        writeln!(self.out, "check {name:<22} {verdict}  {detail}")
    }
}

/// Point features -> voxel and range views -> back to points -> gated fusion,
/// checking weight normalization, constant preservation, softmax rows and
/// convexity along the way.
pub(crate) fn fuse_demo(cfg: &RunConfig, opts: &DemoOptions, out: &mut dyn Write) -> CliResult {
    if opts.channels == 0 {
        return Err(CliError::usage("--channels must be at least 1"));
    }
    let params = cfg.range_params()?;
    let r = cfg.voxel_resolutions[0];
    let (cloud, stem) = load_scan(cfg, &opts.scan, Some(20_000))?;
    let n = cloud.len();
    let c = opts.channels;

    let mut rng = RngStream::new(cfg.seed);
    let points: FeatureTensor<f32> = match opts.constant {
        Some(v) if v.is_finite() => FeatureTensor::filled(n, c, v),
        Some(v) => return Err(CliError::usage(format!("--constant must be finite, got {v}"))),
        None => FeatureTensor::from_fn(n, c, |_, _| rng.uniform(-1.0, 1.0) as f32),
    };

    let vidx = voxelize(&cloud, r)?;
    let ridx = spherical_project(&cloud, params)?;
    let mut tri = GatherPlan::trilinear(&cloud, &vidx)?;
    if let Some(f) = opts.corrupt_weights {
        tri.corrupt_weights(f);
    }
    let bil = GatherPlan::bilinear(&ridx);

    let vfeat = scatter_average(&points, &ScatterPlan::new(&vidx))?;
    let rfeat = scatter_average(&points, &ScatterPlan::new(&ridx))?;
    let from_voxels = gather(&vfeat, &tri)?;
    let from_range = gather(&rfeat, &bil)?;
    let views = [points.clone(), from_voxels, from_range];

    let gates = GateParams::new(
        (0..3)
            .map(|_| FeatureTensor::from_fn(3, c, |_, _| rng.uniform(-0.5, 0.5)))
            .collect(),
    )?;
    let (fused, cache) = gfm_forward(&views, &gates)?;

    let vs = collision_stats(&vidx);
    let rs = collision_stats(&ridx);
    writeln!(out, "scan {stem}: {n} points, {c} channels")?;
    writeln!(out, "voxels {} at {r} m (multi {:.4})", vs.occupied, vs.multi_fraction)?;
    writeln!(
        out,
        "pixels {} of {}x{} (multi {:.4})",
        rs.occupied, params.height, params.width, rs.multi_fraction
    )?;

    let mut checks = Checks {
        out,
        failed: Vec::new(),
    };

    let weight_err = |plan: &GatherPlan, keep: &dyn Fn(usize) -> bool| {
        (0..plan.num_points())
            .filter(|&i| keep(i))
            .map(|i| (plan.weight_sum(i) - 1.0).abs())
            .fold(0.0f64, |m, e| if e.is_nan() { f64::INFINITY } else { m.max(e) })
    };
    let (et, eb) = (weight_err(&tri, &|_| true), weight_err(&bil, &|i| ridx.is_valid(i)));
    checks.record(
        "weights sum to one",
        et <= 1e-9 && eb <= 1e-9,
        format!("max |sum-1| trilinear {et:.3e} bilinear {eb:.3e}"),
    )?;

    // Constant preservation through every scatter/gather pair.
    let ones = FeatureTensor::<f32>::filled(n, 1, 1.0);
    let back_v = gather(&scatter_average(&ones, &ScatterPlan::new(&vidx))?, &tri)?;
    let back_r = gather(&scatter_average(&ones, &ScatterPlan::new(&ridx))?, &bil)?;
    let mut worst = 0.0f64;
    for i in 0..n {
        worst = worst.max((back_v.get(i, 0) as f64 - 1.0).abs());
        if ridx.is_valid(i) {
            worst = worst.max((back_r.get(i, 0) as f64 - 1.0).abs());
        }
    }
    checks.record(
        "constant preserved",
        worst <= 1e-6,
        format!("max deviation {worst:.3e}"),
    )?;

    let s = cache.softmax();
    let row_err = (0..n)
        .map(|i| (s.row(i).iter().sum::<f64>() - 1.0).abs())
        .fold(0.0f64, f64::max);
    checks.record(
        "softmax rows sum to one",
        row_err <= 1e-6,
        format!("max |sum-1| {row_err:.3e}"),
    )?;

    let mut outside = 0usize;
    for i in 0..n {
        for k in 0..c {
            let vals = views.iter().map(|v| v.get(i, k) as f64);
            let lo = vals.clone().fold(f64::INFINITY, f64::min);
            let hi = vals.fold(f64::NEG_INFINITY, f64::max);
            let x = fused.get(i, k) as f64;
            let tol = 1e-5 * (1.0 + lo.abs().max(hi.abs()));
            if x < lo - tol || x > hi + tol {
                outside += 1;
            }
        }
    }
    checks.record(
        "fusion is convex",
        outside == 0,
        format!("{outside} entries outside the view range"),
    )?;

    if let Some(v) = opts.constant {
        // points without a range pixel receive nothing from the range view
        let dev = (0..n)
            .filter(|&i| ridx.is_valid(i))
            .flat_map(|i| fused.row(i).iter())
            .map(|&x| (x as f64 - v as f64).abs())
            .fold(0.0f64, f64::max);
        let tol = 1e-6 * (1.0 + (v as f64).abs());
        checks.record("constant field fused", dev <= tol, format!("max deviation {dev:.3e}"))?;
    }

    let mean: f64 = fused.as_slice().iter().map(|&x| x as f64).sum::<f64>() / (n * c).max(1) as f64;
    writeln!(checks.out, "fused mean {mean:.6}")?;

    if checks.failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::check(format!("failed checks: {}", checks.failed.join(", "))))
    }
}
