mod common;

use common::{
    cloud_strategy, f64_features, naive_bilinear_roundtrip, naive_nearest_roundtrip, naive_scatter,
    naive_trilinear_roundtrip, naive_voxel_groups,
};
use proptest::prelude::*;
use rpv::index::{spherical_project, voxelize, RangeParams};
use rpv::prop::{
    gather, gather_backward, gather_bilinear, gather_nearest, gather_trilinear, scatter_average,
    scatter_average_backward, GatherPlan, ScatterPlan,
};
use rpv::synth::{synthetic_scan, uniform_cloud};
use rpv::FeatureTensor;

const H: u32 = 16;
const W: u32 = 48;
const UP: f64 = 0.4;
const DOWN: f64 = -0.6;

fn small_params() -> RangeParams {
    RangeParams {
        height: H,
        width: W,
        fov_up: UP,
        fov_down: DOWN,
    }
}

fn assert_rows_close(got: &FeatureTensor<f64>, want: &[Vec<f64>], tol: f64) {
    assert_eq!(got.rows(), want.len());
    for (i, w) in want.iter().enumerate() {
        for (k, v) in w.iter().enumerate() {
            assert!(
                (got.get(i, k) - v).abs() <= tol,
                "row {i} col {k}: {} vs {v}",
                got.get(i, k)
            );
        }
    }
}

#[test]
fn scatter_matches_naive_mean() {
    let cloud = synthetic_scan(4_000, 2)
        .with_features(FeatureTensor::from_fn(4_000, 3, |i, k| (i * 7 + k) as f32 * 0.01))
        .unwrap();
    let feats = f64_features(&cloud);
    let vidx = voxelize(&cloud, 0.3).unwrap();
    let got = scatter_average(&feats, &ScatterPlan::new(&vidx)).unwrap();
    assert_rows_close(
        &got,
        &naive_scatter(&feats, &naive_voxel_groups(cloud.positions(), 0.3)),
        1e-12,
    );
}

#[test]
fn roundtrips_match_naive_on_many_instances() {
    for seed in 0..50u64 {
        let n = 50 + (seed as usize * 19) % 950;
        let cloud = uniform_cloud(n, 3.0, 2, seed);
        let feats = f64_features(&cloud);
        let r = 0.4 + 0.05 * (seed % 7) as f64;

        let vidx = voxelize(&cloud, r).unwrap();
        let vfeat = scatter_average(&feats, &ScatterPlan::new(&vidx)).unwrap();
        let tri = gather_trilinear(&vfeat, &GatherPlan::trilinear(&cloud, &vidx).unwrap()).unwrap();
        assert_rows_close(&tri, &naive_trilinear_roundtrip(&cloud, &feats, r), 1e-9);
        let near = gather_nearest(&vfeat, &GatherPlan::nearest(&vidx)).unwrap();
        assert_rows_close(&near, &naive_nearest_roundtrip(&cloud, &feats, r), 1e-12);

        let ridx = spherical_project(&cloud, small_params()).unwrap();
        let rfeat = scatter_average(&feats, &ScatterPlan::new(&ridx)).unwrap();
        let bil = gather_bilinear(&rfeat, &GatherPlan::bilinear(&ridx)).unwrap();
        for (i, want) in naive_bilinear_roundtrip(&cloud, &feats, H, W, UP, DOWN)
            .iter()
            .enumerate()
        {
            let want = want.as_ref().expect("uniform cloud has no zero-range points");
            for (k, v) in want.iter().enumerate() {
                assert!((bil.get(i, k) - v).abs() <= 1e-9, "seed {seed} point {i}");
            }
        }
    }
}

#[test]
fn constant_field_survives_every_mode_in_f32() {
    let cloud = synthetic_scan(20_000, 8);
    let n = cloud.len();
    let c = 3.75f32;
    let pts = FeatureTensor::<f32>::filled(n, 2, c);
    let vidx = voxelize(&cloud, 0.1).unwrap();
    let ridx = spherical_project(&cloud, RangeParams::kitti()).unwrap();
    let v = scatter_average(&pts, &ScatterPlan::new(&vidx)).unwrap();
    let r = scatter_average(&pts, &ScatterPlan::new(&ridx)).unwrap();
    let outs = [
        gather(&v, &GatherPlan::nearest(&vidx)).unwrap(),
        gather(&v, &GatherPlan::trilinear(&cloud, &vidx).unwrap()).unwrap(),
        gather(&r, &GatherPlan::bilinear(&ridx)).unwrap(),
    ];
    for o in &outs {
        let worst = o.as_slice().iter().map(|&x| ((x - c) as f64).abs()).fold(0.0, f64::max);
        assert!(worst <= 1e-6 * c as f64, "{worst}");
    }
}

#[test]
fn invalid_points_get_zero_and_no_gradient() {
    let cloud = rpv::PointCloud::new(
        vec![[0.0; 3], [1.0, 0.0, 0.0]],
        FeatureTensor::new(2, 1, vec![5.0, 2.0]).unwrap(),
        None,
    )
    .unwrap();
    let ridx = spherical_project(&cloud, small_params()).unwrap();
    let plan = ScatterPlan::new(&ridx);
    let view = scatter_average(cloud.features(), &plan).unwrap();
    assert_eq!(view.as_slice(), &[2.0]);
    let back = gather(&view, &GatherPlan::bilinear(&ridx)).unwrap();
    assert_eq!(back.as_slice(), &[0.0, 2.0]);
    let g = scatter_average_backward(&FeatureTensor::filled(1, 1, 1.0f32), &plan).unwrap();
    assert_eq!(g.as_slice(), &[0.0, 1.0]);
}

fn plans_for(cloud: &rpv::PointCloud, r: f64) -> Vec<GatherPlan> {
    let vidx = voxelize(cloud, r).unwrap();
    let ridx = spherical_project(cloud, small_params()).unwrap();
    vec![
        GatherPlan::nearest(&vidx),
        GatherPlan::trilinear(cloud, &vidx).unwrap(),
        GatherPlan::bilinear(&ridx),
        GatherPlan::nearest(&ridx),
    ]
}

fn rand_tensor(rows: usize, cols: usize, seed: u64) -> FeatureTensor<f64> {
    let mut rng = rpv::augment::RngStream::new(seed);
    FeatureTensor::from_fn(rows, cols, |_, _| rng.uniform(-1.0, 1.0))
}

proptest! {
    #[test]
    fn gather_is_adjoint_of_backward(cloud in cloud_strategy(120, 1), r in 0.2f64..1.5, seed in any::<u64>()) {
        for plan in plans_for(&cloud, r) {
            let v = rand_tensor(plan.num_buckets(), 3, seed);
            let g = rand_tensor(plan.num_points(), 3, seed ^ 1);
            let lhs = gather(&v, &plan).unwrap().dot(&g).unwrap();
            let rhs = v.dot(&gather_backward(&g, &plan).unwrap()).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs().max(rhs.abs())), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn scatter_is_adjoint_of_backward(cloud in cloud_strategy(120, 1), r in 0.2f64..1.5, seed in any::<u64>()) {
        let vidx = voxelize(&cloud, r).unwrap();
        let plan = ScatterPlan::new(&vidx);
        let p = rand_tensor(cloud.len(), 2, seed);
        let g = rand_tensor(plan.num_buckets(), 2, seed ^ 3);
        let lhs = scatter_average(&p, &plan).unwrap().dot(&g).unwrap();
        let rhs = p.dot(&scatter_average_backward(&g, &plan).unwrap()).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn gather_is_linear(cloud in cloud_strategy(100, 1), r in 0.2f64..1.5, a in -3.0f64..3.0, seed in any::<u64>()) {
        for plan in plans_for(&cloud, r) {
            let x = rand_tensor(plan.num_buckets(), 2, seed);
            let y = rand_tensor(plan.num_buckets(), 2, seed ^ 5);
            let mix = FeatureTensor::from_fn(x.rows(), 2, |i, k| a * x.get(i, k) + y.get(i, k));
            let lhs = gather(&mix, &plan).unwrap();
            let gx = gather(&x, &plan).unwrap();
            let gy = gather(&y, &plan).unwrap();
            for i in 0..lhs.rows() {
                for k in 0..2 {
                    prop_assert!((lhs.get(i, k) - (a * gx.get(i, k) + gy.get(i, k))).abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn weights_are_a_partition_of_unity(cloud in cloud_strategy(150, 1), r in 0.2f64..1.5) {
        let ridx = spherical_project(&cloud, small_params()).unwrap();
        for plan in plans_for(&cloud, r) {
            for i in 0..plan.num_points() {
                if plan.mode() == rpv::prop::GatherMode::Bilinear && !ridx.is_valid(i) {
                    prop_assert_eq!(plan.weight_sum(i), 0.0);
                    continue;
                }
                if plan.num_buckets() > 0 && plan.taps(i).any(|(j, _)| j.is_some()) {
                    prop_assert!((plan.weight_sum(i) - 1.0).abs() <= 1e-12);
                    prop_assert!(plan.taps(i).all(|(_, w)| w >= 0.0));
                }
            }
        }
    }

    #[test]
    fn oracle_equivalence(cloud in cloud_strategy(150, 2), r in 0.2f64..1.5) {
        let feats = f64_features(&cloud);
        let vidx = voxelize(&cloud, r).unwrap();
        let vfeat = scatter_average(&feats, &ScatterPlan::new(&vidx)).unwrap();
        let tri = gather(&vfeat, &GatherPlan::trilinear(&cloud, &vidx).unwrap()).unwrap();
        for (i, want) in naive_trilinear_roundtrip(&cloud, &feats, r).iter().enumerate() {
            for (k, v) in want.iter().enumerate() {
                prop_assert!((tri.get(i, k) - v).abs() <= 1e-9);
            }
        }
        let ridx = spherical_project(&cloud, small_params()).unwrap();
        let rfeat = scatter_average(&feats, &ScatterPlan::new(&ridx)).unwrap();
        let bil = gather(&rfeat, &GatherPlan::bilinear(&ridx)).unwrap();
        for (i, want) in naive_bilinear_roundtrip(&cloud, &feats, H, W, UP, DOWN).iter().enumerate() {
            match want {
                Some(want) => for (k, v) in want.iter().enumerate() {
                    prop_assert!((bil.get(i, k) - v).abs() <= 1e-9);
                },
                None => prop_assert!(bil.row(i).iter().all(|&v| v == 0.0)),
            }
        }
    }
}
