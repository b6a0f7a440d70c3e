use proptest::prelude::*;
use rpv::augment::RngStream;
use rpv::gfm::{ensemble_scores, fuse_add, gfm_backward, gfm_forward, GateParams};
use rpv::gradcheck::{central_difference, compare, GradCheckConfig};
use rpv::FeatureTensor;

fn rand_views(rng: &mut RngStream, l: usize, n: usize, c: usize, scale: f64) -> Vec<FeatureTensor<f64>> {
    (0..l)
        .map(|_| FeatureTensor::from_fn(n, c, |_, _| rng.uniform(-scale, scale)))
        .collect()
}

fn rand_params(rng: &mut RngStream, l: usize, c: usize) -> GateParams {
    GateParams::new(
        (0..l)
            .map(|_| FeatureTensor::from_fn(l, c, |_, _| rng.uniform(-1.0, 1.0)))
            .collect(),
    )
    .unwrap()
}

/// Direct per-point evaluation of the gated fusion, no shared code.
fn naive_fuse(views: &[FeatureTensor<f64>], params: &GateParams) -> Vec<Vec<f64>> {
    let l = views.len();
    let (n, c) = views[0].shape();
    (0..n)
        .map(|p| {
            let a: Vec<f64> = (0..l)
                .map(|k| {
                    (0..l)
                        .map(|i| {
                            let z: f64 = (0..c).map(|ch| views[i].get(p, ch) * params.weight(i).get(k, ch)).sum();
                            1.0 / (1.0 + (-z).exp())
                        })
                        .sum()
                })
                .collect();
            let e: Vec<f64> = a.iter().map(|v| v.exp()).collect();
            let z: f64 = e.iter().sum();
            (0..c)
                .map(|ch| (0..l).map(|i| e[i] / z * views[i].get(p, ch)).sum())
                .collect()
        })
        .collect()
}

#[test]
fn forward_matches_naive() {
    let mut rng = RngStream::new(11);
    for _ in 0..30 {
        let l = 2 + rng.index(3);
        let (n, c) = (1 + rng.index(20), 1 + rng.index(6));
        let views = rand_views(&mut rng, l, n, c, 3.0);
        let params = rand_params(&mut rng, l, c);
        let (fused, _) = gfm_forward(&views, &params).unwrap();
        for (p, row) in naive_fuse(&views, &params).iter().enumerate() {
            for (ch, v) in row.iter().enumerate() {
                assert!((fused.get(p, ch) - v).abs() <= 1e-12, "{} vs {v}", fused.get(p, ch));
            }
        }
    }
}

#[test]
fn gradients_match_finite_differences() {
    let cfg = GradCheckConfig::default();
    let mut rng = RngStream::new(2024);
    for _ in 0..40 {
        let l = 2 + rng.index(2);
        let (n, c) = (1 + rng.index(16), 1 + rng.index(4));
        let views = rand_views(&mut rng, l, n, c, 1.0);
        let params = rand_params(&mut rng, l, c);
        let up = FeatureTensor::<f64>::from_fn(n, c, |_, _| rng.uniform(-1.0, 1.0));
        let (_, cache) = gfm_forward(&views, &params).unwrap();
        let grads = gfm_backward(&up, &cache, &params).unwrap();

        for v in 0..l {
            let f = |x: &[f64]| {
                let mut vs = views.clone();
                vs[v] = FeatureTensor::new(n, c, x.to_vec()).unwrap();
                gfm_forward(&vs, &params).unwrap().0.dot(&up).unwrap()
            };
            let num = central_difference(f, views[v].as_slice(), cfg.step);
            let r = compare(grads.inputs[v].as_slice(), &num, &cfg);
            assert!(r.passed(), "input {v}: {r:?}");

            let f = |x: &[f64]| {
                let mut p = params.clone();
                p.weight_mut(v).as_mut_slice().copy_from_slice(x);
                gfm_forward(&views, &p).unwrap().0.dot(&up).unwrap()
            };
            let num = central_difference(f, params.weight(v).as_slice(), cfg.step);
            let r = compare(grads.weights[v].as_slice(), &num, &cfg);
            assert!(r.passed(), "weights {v}: {r:?}");
        }
    }
}

#[test]
fn zero_gates_reduce_to_scaled_addition() {
    let mut rng = RngStream::new(5);
    for l in 2..=4 {
        let views = rand_views(&mut rng, l, 64, 5, 100.0);
        let params = GateParams::zeros(&vec![5; l]).unwrap();
        let (fused, cache) = gfm_forward(&views, &params).unwrap();
        let expected = fuse_add(&views).unwrap().map(|v| v * (1.0 / l as f64));
        assert_eq!(fused, expected, "L = {l}");
        assert!(cache.softmax().as_slice().iter().all(|&s| s == 1.0 / l as f64));
    }
}

#[test]
fn rejects_bad_shapes() {
    let a = FeatureTensor::<f64>::zeros(3, 2);
    let b = FeatureTensor::<f64>::zeros(4, 2);
    let p = GateParams::zeros(&[2, 2]).unwrap();
    assert!(gfm_forward(&[a.clone(), b], &p).is_err());
    assert!(gfm_forward(std::slice::from_ref(&a), &GateParams::zeros(&[2, 2]).unwrap()).is_err());
    assert!(gfm_forward(&[a.clone(), a.clone(), a.clone()], &p).is_err());
    assert!(GateParams::zeros(&[2]).is_err());
    let (_, cache) = gfm_forward(&[a.clone(), a.clone()], &p).unwrap();
    assert!(gfm_backward(&FeatureTensor::<f64>::zeros(3, 3), &cache, &p).is_err());
}

#[test]
fn ensemble_requires_probabilities() {
    let p = FeatureTensor::<f64>::new(1, 2, vec![0.6, 0.6]).unwrap();
    assert!(ensemble_scores(&[p.clone(), p]).is_err());
}

proptest! {
    #[test]
    fn softmax_rows_are_distributions(seed in any::<u64>(), l in 2usize..5, n in 1usize..30, c in 1usize..6, scale in 0.1f64..50.0) {
        let mut rng = RngStream::new(seed);
        let views = rand_views(&mut rng, l, n, c, scale);
        let params = rand_params(&mut rng, l, c);
        let (_, cache) = gfm_forward(&views, &params).unwrap();
        for p in 0..n {
            let row = cache.softmax().row(p);
            prop_assert!(row.iter().all(|&s| (0.0..=1.0).contains(&s)));
            prop_assert!((row.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn fusion_is_convex(seed in any::<u64>(), l in 2usize..5, n in 1usize..30, c in 1usize..6) {
        let mut rng = RngStream::new(seed);
        let views = rand_views(&mut rng, l, n, c, 10.0);
        let params = rand_params(&mut rng, l, c);
        let (fused, _) = gfm_forward(&views, &params).unwrap();
        for p in 0..n {
            for ch in 0..c {
                let lo = views.iter().map(|v| v.get(p, ch)).fold(f64::INFINITY, f64::min);
                let hi = views.iter().map(|v| v.get(p, ch)).fold(f64::NEG_INFINITY, f64::max);
                let x = fused.get(p, ch);
                prop_assert!(x >= lo - 1e-12 * (1.0 + lo.abs()) && x <= hi + 1e-12 * (1.0 + hi.abs()));
            }
        }
    }

    #[test]
    fn permuting_views_with_weights_is_symmetric(seed in any::<u64>(), n in 1usize..20, c in 1usize..5) {
        let mut rng = RngStream::new(seed);
        let views = rand_views(&mut rng, 3, n, c, 2.0);
        let params = rand_params(&mut rng, 3, c);
        let (fused, _) = gfm_forward(&views, &params).unwrap();
        // views (0,1,2) -> (2,0,1); each weight moves with its view, and its
        // rows (one per softmax slot) are permuted the same way
        let perm = [2usize, 0, 1];
        let pviews: Vec<_> = perm.iter().map(|&i| views[i].clone()).collect();
        let pparams = GateParams::new(
            perm.iter()
                .map(|&i| FeatureTensor::from_fn(3, c, |k, ch| params.weight(i).get(perm[k], ch)))
                .collect(),
        ).unwrap();
        let (pfused, _) = gfm_forward(&pviews, &pparams).unwrap();
        prop_assert!(fused.max_abs_diff(&pfused) <= 1e-12);
    }
}
