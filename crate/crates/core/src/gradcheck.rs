//! Central finite-difference gradient checking.
//!
//! ```
//! use rpv::gradcheck::{central_difference, compare, GradCheckConfig};
//!
//! let x = [1.0, -2.0];
//! let f = |v: &[f64]| v[0] * v[0] + 3.0 * v[1];
//! let numeric = central_difference(f, &x, 1e-5);
//! let report = compare(&[2.0, 3.0], &numeric, &GradCheckConfig::default());
//! assert!(report.passed());
//! ```

#[derive(Debug, Clone, Copy)]
pub struct GradCheckConfig {
    /// Perturbation `h` of `(f(x+h) - f(x-h)) / 2h`.
    pub step: f64,
    /// Bound on `|a - n| / max(|a|, |n|, abs_floor)`.
    pub rel_tolerance: f64,
    /// Magnitude below which errors are measured absolutely.
    pub abs_floor: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            rel_tolerance: 1e-6,
            abs_floor: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
    /// Entry with the largest relative error.
    pub worst: usize,
    pub rel_tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.rel_tolerance
    }

    /// Combines two reports over disjoint entry sets.
    pub fn merge(self, other: GradCheckReport) -> GradCheckReport {
        let (worst, max_rel_error) = if other.max_rel_error > self.max_rel_error {
            (self.checked + other.worst, other.max_rel_error)
        } else {
            (self.worst, self.max_rel_error)
        };
        GradCheckReport {
            checked: self.checked + other.checked,
            max_rel_error,
            max_abs_error: self.max_abs_error.max(other.max_abs_error),
            worst,
            rel_tolerance: self.rel_tolerance.min(other.rel_tolerance),
        }
    }
}

/// Numerical gradient of scalar `f` at `x`.
pub fn central_difference(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|k| {
            let orig = probe[k];
            probe[k] = orig + step;
            let plus = f(&probe);
            probe[k] = orig - step;
            let minus = f(&probe);
            probe[k] = orig;
            (plus - minus) / (2.0 * step)
        })
        .collect()
}

pub fn compare(analytic: &[f64], numeric: &[f64], cfg: &GradCheckConfig) -> GradCheckReport {
    assert_eq!(analytic.len(), numeric.len(), "gradient length mismatch");
    let mut report = GradCheckReport {
        checked: analytic.len(),
        max_rel_error: 0.0,
        max_abs_error: 0.0,
        worst: 0,
        rel_tolerance: cfg.rel_tolerance,
    };
    for (k, (a, n)) in analytic.iter().zip(numeric).enumerate() {
        let abs = (a - n).abs();
        let rel = abs / a.abs().max(n.abs()).max(cfg.abs_floor);
        report.max_abs_error = report.max_abs_error.max(abs);
        if rel > report.max_rel_error || rel.is_nan() {
            report.max_rel_error = if rel.is_nan() { f64::INFINITY } else { rel };
            report.worst = k;
        }
    }
    report
}

/// Checks `analytic` against central differences of `f` at `x`.
pub fn check(f: impl FnMut(&[f64]) -> f64, x: &[f64], analytic: &[f64], cfg: &GradCheckConfig) -> GradCheckReport {
    let numeric = central_difference(f, x, cfg.step);
    compare(analytic, &numeric, cfg)
}
