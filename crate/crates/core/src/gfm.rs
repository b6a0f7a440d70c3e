//! Gated fusion of point-aligned view features.
//!
//! Each view `i` produces a gate `G_i = sigmoid(X_i w_i^T)` with one column per
//! view. Gates are summed across views, row-softmaxed into per-point view
//! weights `S`, and the fused feature is `sum_i S[:, i] * X_i`.
//!
//! The baselines [`fuse_add`], [`fuse_concat`] and [`ensemble_scores`] share
//! the same list-of-views calling convention.

use crate::error::{Error, Result};
use crate::pcio::{FeatureTensor, Scalar};

/// Per-view `L x C_i` gate weights (a 1x1 convolution, no bias).
#[derive(Debug, Clone, PartialEq)]
pub struct GateParams {
    weights: Vec<FeatureTensor<f64>>,
}

impl GateParams {
    pub fn new(weights: Vec<FeatureTensor<f64>>) -> Result<Self> {
        let l = weights.len();
        if l < 2 {
            return Err(Error::Validation(format!(
                "gated fusion needs at least two views, got {l}"
            )));
        }
        if let Some((i, w)) = weights.iter().enumerate().find(|(_, w)| w.rows() != l) {
            return Err(Error::shape(format!(
                "gate weights of view {i} have {} rows, expected one per view ({l})",
                w.rows()
            )));
        }
        Ok(Self { weights })
    }

    /// All-zero gates: every view gets weight `1/L`.
    pub fn zeros(channels: &[usize]) -> Result<Self> {
        let l = channels.len();
        Self::new(channels.iter().map(|&c| FeatureTensor::zeros(l, c)).collect())
    }

    #[inline]
    pub fn num_views(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn weight(&self, view: usize) -> &FeatureTensor<f64> {
        &self.weights[view]
    }

    #[inline]
    pub fn weight_mut(&mut self, view: usize) -> &mut FeatureTensor<f64> {
        &mut self.weights[view]
    }

    pub fn weights(&self) -> &[FeatureTensor<f64>] {
        &self.weights
    }
}

/// Forward intermediates retained for [`gfm_backward`].
#[derive(Debug, Clone, PartialEq)]
pub struct FusionCache {
    inputs: Vec<FeatureTensor<f64>>,
    gates: Vec<FeatureTensor<f64>>,
    softmax: FeatureTensor<f64>,
}

impl FusionCache {
    /// `G_i`, `N x L`.
    pub fn gates(&self, view: usize) -> &FeatureTensor<f64> {
        &self.gates[view]
    }

    /// `S`, `N x L`; row `p` holds the view weights of point `p`.
    pub fn softmax(&self) -> &FeatureTensor<f64> {
        &self.softmax
    }

    /// `s_i`, the weight of view `i` at every point.
    pub fn view_weights(&self, view: usize) -> Vec<f64> {
        (0..self.softmax.rows()).map(|p| self.softmax.get(p, view)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GfmGrads<T> {
    /// `dL/dX_i` per view.
    pub inputs: Vec<FeatureTensor<T>>,
    /// `dL/dw_i` per view.
    pub weights: Vec<FeatureTensor<f64>>,
}

fn check_views<T: Scalar>(views: &[FeatureTensor<T>]) -> Result<(usize, usize)> {
    let first = views
        .first()
        .ok_or_else(|| Error::Validation("no views to fuse".into()))?;
    let shape = first.shape();
    if let Some((i, v)) = views.iter().enumerate().find(|(_, v)| v.shape() != shape) {
        return Err(Error::shape(format!(
            "view {i} is {:?}, view 0 is {shape:?}",
            v.shape()
        )));
    }
    Ok(shape)
}

#[inline]
fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Gated fusion forward pass.
///
/// All views must share `N x C`; `params` must hold one weight matrix per view
/// with `C` columns.
pub fn gfm_forward<T: Scalar>(
    views: &[FeatureTensor<T>],
    params: &GateParams,
) -> Result<(FeatureTensor<T>, FusionCache)> {
    let l = views.len();
    if l < 2 {
        return Err(Error::Validation(format!(
            "gated fusion needs at least two views, got {l}"
        )));
    }
    let (n, c) = check_views(views)?;
    if params.num_views() != l {
        return Err(Error::shape(format!(
            "{l} views but gate parameters for {}",
            params.num_views()
        )));
    }
    for (i, w) in params.weights.iter().enumerate() {
        if w.cols() != c {
            return Err(Error::shape(format!(
                "gate weights of view {i} expect {} channels, view has {c}",
                w.cols()
            )));
        }
    }

    let inputs: Vec<FeatureTensor<f64>> = views.iter().map(|v| v.cast()).collect();
    let gates: Vec<FeatureTensor<f64>> = inputs
        .iter()
        .zip(&params.weights)
        .map(|(x, w)| {
            FeatureTensor::from_fn(n, l, |p, k| {
                let z: f64 = x.row(p).iter().zip(w.row(k)).map(|(a, b)| a * b).sum();
                sigmoid(z)
            })
        })
        .collect();

    let mut softmax = FeatureTensor::zeros(n, l);
    let mut logits = vec![0.0f64; l];
    for p in 0..n {
        for (k, a) in logits.iter_mut().enumerate() {
            *a = gates.iter().map(|g| g.get(p, k)).sum();
        }
        let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let row = softmax.row_mut(p);
        let mut total = 0.0;
        for (s, a) in row.iter_mut().zip(&logits) {
            *s = (a - max).exp();
            total += *s;
        }
        row.iter_mut().for_each(|s| *s /= total);
    }

    // sum_i s_i x_i evaluated as s_0 * sum_i x_i + sum_{i>0} (s_i - s_0) x_i,
    // so equal view weights reduce exactly to a scaled sum.
    let mut fused = FeatureTensor::zeros(n, c);
    let mut acc = vec![0.0f64; c];
    for p in 0..n {
        let s = softmax.row(p);
        acc.iter_mut().for_each(|a| *a = 0.0);
        for x in &inputs {
            for (a, v) in acc.iter_mut().zip(x.row(p)) {
                *a += v;
            }
        }
        acc.iter_mut().for_each(|a| *a *= s[0]);
        for (i, x) in inputs.iter().enumerate().skip(1) {
            let d = s[i] - s[0];
            if d != 0.0 {
                for (a, v) in acc.iter_mut().zip(x.row(p)) {
                    *a += d * v;
                }
            }
        }
        for (o, a) in fused.row_mut(p).iter_mut().zip(&acc) {
            *o = T::from_f64(*a);
        }
    }

    Ok((fused, FusionCache { inputs, gates, softmax }))
}

/// Exact gradients of [`gfm_forward`] with respect to every input view and
/// every gate weight.
pub fn gfm_backward<T: Scalar>(
    grad_out: &FeatureTensor<T>,
    cache: &FusionCache,
    params: &GateParams,
) -> Result<GfmGrads<T>> {
    let l = cache.inputs.len();
    let (n, c) = cache.inputs[0].shape();
    if grad_out.shape() != (n, c) {
        return Err(Error::shape(format!(
            "upstream gradient is {:?}, fused output is {:?}",
            grad_out.shape(),
            (n, c)
        )));
    }
    if params.num_views() != l || params.weights.iter().any(|w| w.shape() != (l, c)) {
        return Err(Error::shape("gate parameters do not match the cached forward pass"));
    }

    let mut d_inputs: Vec<FeatureTensor<f64>> = (0..l).map(|_| FeatureTensor::zeros(n, c)).collect();
    let mut d_weights: Vec<FeatureTensor<f64>> = (0..l).map(|_| FeatureTensor::zeros(l, c)).collect();
    let mut d_s = vec![0.0f64; l];
    let mut d_a = vec![0.0f64; l];

    for p in 0..n {
        let g: Vec<f64> = grad_out.row(p).iter().map(|v| v.to_f64()).collect();
        let s = cache.softmax.row(p);

        // weighted sum: direct path to X_i and path to S
        for i in 0..l {
            let x = cache.inputs[i].row(p);
            d_s[i] = x.iter().zip(&g).map(|(a, b)| a * b).sum();
            for (dx, gv) in d_inputs[i].row_mut(p).iter_mut().zip(&g) {
                *dx += s[i] * gv;
            }
        }

        // softmax
        let dot: f64 = s.iter().zip(&d_s).map(|(a, b)| a * b).sum();
        for k in 0..l {
            d_a[k] = s[k] * (d_s[k] - dot);
        }

        // A = sum_i G_i, G_i = sigmoid(X_i w_i^T)
        for i in 0..l {
            let gate = cache.gates[i].row(p);
            let x = &cache.inputs[i];
            let w = &params.weights[i];
            for k in 0..l {
                let dz = d_a[k] * gate[k] * (1.0 - gate[k]);
                if dz == 0.0 {
                    continue;
                }
                for (dw, xv) in d_weights[i].row_mut(k).iter_mut().zip(x.row(p)) {
                    *dw += dz * xv;
                }
                for (dx, wv) in d_inputs[i].row_mut(p).iter_mut().zip(w.row(k)) {
                    *dx += dz * wv;
                }
            }
        }
    }

    Ok(GfmGrads {
        inputs: d_inputs.iter().map(|t| t.cast()).collect(),
        weights: d_weights,
    })
}

/// Elementwise sum of equally shaped views.
pub fn fuse_add<T: Scalar>(views: &[FeatureTensor<T>]) -> Result<FeatureTensor<T>> {
    let (n, c) = check_views(views)?;
    let mut acc = vec![0.0f64; n * c];
    for v in views {
        for (a, x) in acc.iter_mut().zip(v.as_slice()) {
            *a += x.to_f64();
        }
    }
    FeatureTensor::new(n, c, acc.into_iter().map(T::from_f64).collect())
}

/// Channel concatenation in view order.
pub fn fuse_concat<T: Scalar>(views: &[FeatureTensor<T>]) -> Result<FeatureTensor<T>> {
    let first = views
        .first()
        .ok_or_else(|| Error::Validation("no views to fuse".into()))?;
    let n = first.rows();
    if let Some((i, v)) = views.iter().enumerate().find(|(_, v)| v.rows() != n) {
        return Err(Error::shape(format!("view {i} has {} rows, view 0 has {n}", v.rows())));
    }
    let c: usize = views.iter().map(|v| v.cols()).sum();
    let mut data = Vec::with_capacity(n * c);
    for p in 0..n {
        for v in views {
            data.extend_from_slice(v.row(p));
        }
    }
    FeatureTensor::new(n, c, data)
}

/// Sums per-model class-probability rows. Argmax-equivalent to their mean.
pub fn ensemble_scores<T: Scalar>(scores: &[FeatureTensor<T>]) -> Result<FeatureTensor<T>> {
    const TOL: f64 = 1e-4;
    check_views(scores)?;
    for (m, s) in scores.iter().enumerate() {
        for p in 0..s.rows() {
            let row = s.row(p);
            let sum: f64 = row.iter().map(|v| v.to_f64()).sum();
            if (sum - 1.0).abs() > TOL || row.iter().any(|v| v.to_f64() < -TOL) {
                return Err(Error::Validation(format!(
                    "scores of model {m} row {p} are not a probability vector (sum {sum})"
                )));
            }
        }
    }
    fuse_add(scores)
}

/// Index of the largest entry of each row (first on ties).
pub fn argmax_rows<T: Scalar>(t: &FeatureTensor<T>) -> Vec<u32> {
    (0..t.rows())
        .map(|p| {
            let mut best = 0;
            for (k, v) in t.row(p).iter().enumerate() {
                if *v > t.row(p)[best] {
                    best = k;
                }
            }
            best as u32
        })
        .collect()
}
