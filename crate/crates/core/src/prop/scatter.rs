use crate::error::{Error, Result};
use crate::index::{ViewIndex, NO_BUCKET};
use crate::pcio::{FeatureTensor, Scalar};

/// Bucket membership and counts `Num(K_X(j))` for averaging points into a view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ScatterPlan {
    point_bucket: Vec<u32>,
    counts: Vec<u32>,
}

impl ScatterPlan {
    pub fn new(idx: &impl ViewIndex) -> Self {
        let b = idx.buckets();
        let point_bucket = (0..b.num_points())
            .map(|i| b.bucket_of_point(i).map_or(NO_BUCKET, |j| j as u32))
            .collect();
        let counts = (0..b.len()).map(|j| b.bucket_len(j) as u32).collect();
        Self { point_bucket, counts }
    }

    /// Rows expected in point-aligned tensors.
    #[inline]
    pub fn num_points(&self) -> usize {
        self.point_bucket.len()
    }

    /// Rows of the view-side tensor.
    #[inline]
    pub fn num_buckets(&self) -> usize {
        self.counts.len()
    }

    #[inline]
    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    #[inline]
    pub fn bucket_of_point(&self, i: usize) -> Option<usize> {
        match self.point_bucket[i] {
            NO_BUCKET => None,
            j => Some(j as usize),
        }
    }
}

/// `F_X[j] = mean of F_P[u] over u in bucket j`. Unbucketed points are ignored.
pub fn scatter_average<T: Scalar>(points: &FeatureTensor<T>, plan: &ScatterPlan) -> Result<FeatureTensor<T>> {
    if points.rows() != plan.num_points() {
        return Err(Error::shape(format!(
            "scatter of {} point rows through a plan over {} points",
            points.rows(),
            plan.num_points()
        )));
    }
    let c = points.cols();
    let mut acc = vec![0.0f64; plan.num_buckets() * c];
    for (i, &j) in plan.point_bucket.iter().enumerate() {
        if j == NO_BUCKET {
            continue;
        }
        let dst = &mut acc[j as usize * c..(j as usize + 1) * c];
        for (a, v) in dst.iter_mut().zip(points.row(i)) {
            *a += v.to_f64();
        }
    }
    let mut out = FeatureTensor::zeros(plan.num_buckets(), c);
    for (j, &count) in plan.counts.iter().enumerate() {
        let count = count as f64;
        for (o, a) in out.row_mut(j).iter_mut().zip(&acc[j * c..(j + 1) * c]) {
            *o = T::from_f64(a / count);
        }
    }
    Ok(out)
}

/// `dL/dF_P[u] = dL/dF_X[j(u)] / Num(K_X(j(u)))`; unbucketed points get zero.
pub fn scatter_average_backward<T: Scalar>(
    grad_view: &FeatureTensor<T>,
    plan: &ScatterPlan,
) -> Result<FeatureTensor<T>> {
    if grad_view.rows() != plan.num_buckets() {
        return Err(Error::shape(format!(
            "scatter backward of {} view rows through a plan over {} buckets",
            grad_view.rows(),
            plan.num_buckets()
        )));
    }
    let c = grad_view.cols();
    let mut out = FeatureTensor::zeros(plan.num_points(), c);
    for (i, &j) in plan.point_bucket.iter().enumerate() {
        if j == NO_BUCKET {
            continue;
        }
        let count = plan.counts[j as usize] as f64;
        for (o, g) in out.row_mut(i).iter_mut().zip(grad_view.row(j as usize)) {
            *o = T::from_f64(g.to_f64() / count);
        }
    }
    Ok(out)
}
