//! Confusion-matrix accumulation and mean intersection-over-union.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::pcio::IGNORE;

/// How classes that never occur (TP + FP + FN = 0) enter the mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AbsentClasses {
    /// Leave them out of the mean (benchmark convention).
    #[default]
    Exclude,
    /// Count them as IoU 0, averaging over every class.
    CountAsZero,
}

/// `C x C` counts, rows = ground truth, columns = prediction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    num_classes: usize,
    ignore_id: u32,
    counts: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self::with_ignore(num_classes, IGNORE)
    }

    pub fn with_ignore(num_classes: usize, ignore_id: u32) -> Self {
        Self {
            num_classes,
            ignore_id,
            counts: vec![0; num_classes * num_classes],
        }
    }

    pub fn from_counts(num_classes: usize, counts: Vec<u64>) -> Result<Self> {
        if counts.len() != num_classes * num_classes {
            return Err(Error::shape(format!(
                "{num_classes} classes need {} counts, got {}",
                num_classes * num_classes,
                counts.len()
            )));
        }
        Ok(Self {
            num_classes,
            ignore_id: IGNORE,
            counts,
        })
    }

    #[inline]
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    #[inline]
    pub fn ignore_id(&self) -> u32 {
        self.ignore_id
    }

    #[inline]
    pub fn get(&self, gt: usize, pred: usize) -> u64 {
        self.counts[gt * self.num_classes + pred]
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Adds one count per point whose ground truth is not the ignore id.
    /// Nothing is added if any label is out of range.
    pub fn accumulate(&mut self, gt: &[u32], pred: &[u32]) -> Result<()> {
        if gt.len() != pred.len() {
            return Err(Error::shape(format!(
                "{} ground-truth labels but {} predictions",
                gt.len(),
                pred.len()
            )));
        }
        let c = self.num_classes as u32;
        for (i, (&g, &p)) in gt.iter().zip(pred).enumerate() {
            if g != self.ignore_id && g >= c {
                return Err(Error::Validation(format!(
                    "ground-truth label {g} at index {i} outside [0, {c})"
                )));
            }
            if g != self.ignore_id && p >= c {
                return Err(Error::Validation(format!(
                    "predicted label {p} at index {i} outside [0, {c})"
                )));
            }
        }
        for (&g, &p) in gt.iter().zip(pred) {
            if g != self.ignore_id {
                self.counts[g as usize * self.num_classes + p as usize] += 1;
            }
        }
        Ok(())
    }

    /// Elementwise sum with another shard.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.num_classes != self.num_classes {
            return Err(Error::shape(format!(
                "merge of {} and {} class matrices",
                self.num_classes, other.num_classes
            )));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        Ok(())
    }

    pub fn miou(&self) -> Result<IouReport> {
        self.miou_with(AbsentClasses::default())
    }

    pub fn miou_with(&self, absent: AbsentClasses) -> Result<IouReport> {
        let c = self.num_classes;
        let mut per_class = vec![f64::NAN; c];
        let mut present = vec![false; c];
        for k in 0..c {
            let tp = self.get(k, k);
            let row: u64 = (0..c).map(|j| self.get(k, j)).sum();
            let col: u64 = (0..c).map(|j| self.get(j, k)).sum();
            let fp = col - tp;
            let fn_ = row - tp;
            let denom = tp + fp + fn_;
            if denom > 0 {
                per_class[k] = tp as f64 / denom as f64;
                present[k] = true;
            }
        }
        if !present.iter().any(|&p| p) {
            return Err(Error::UndefinedMetric(
                "no class has any ground-truth or predicted points".into(),
            ));
        }
        let (sum, count) = match absent {
            AbsentClasses::Exclude => per_class
                .iter()
                .zip(&present)
                .filter(|(_, &p)| p)
                .fold((0.0, 0usize), |(s, n), (v, _)| (s + v, n + 1)),
            AbsentClasses::CountAsZero => (per_class.iter().filter(|v| !v.is_nan()).sum(), c),
        };
        let valid = match absent {
            AbsentClasses::Exclude => present,
            AbsentClasses::CountAsZero => vec![true; c],
        };
        Ok(IouReport {
            miou: sum / count as f64,
            per_class,
            valid,
        })
    }
}

/// Per-class IoU and their mean. Absent classes carry `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct IouReport {
    pub miou: f64,
    pub per_class: Vec<f64>,
    /// Whether each class entered the mean.
    pub valid: Vec<bool>,
}

impl IouReport {
    /// Human-readable table. `names`, when given, labels each class id.
    pub fn to_table(&self, names: Option<&[String]>) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<6} {:<16} {:>8}", "class", "name", "iou");
        for (k, v) in self.per_class.iter().enumerate() {
            let name = names.and_then(|n| n.get(k)).map_or("-", |s| s.as_str());
            let iou = if v.is_nan() {
                "n/a".to_string()
            } else {
                format!("{:.4}", v)
            };
            let _ = writeln!(out, "{:<6} {:<16} {:>8}", k, name, iou);
        }
        let _ = writeln!(out, "{:<6} {:<16} {:>8.4}", "mean", "mIoU", self.miou);
        out
    }

    /// Machine-readable listing: one "class iou" line per class (`nan` for
    /// absent classes) followed by "miou <value>".
    pub fn to_listing(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.per_class.iter().enumerate() {
            if v.is_nan() {
                let _ = writeln!(out, "{k} nan");
            } else {
                let _ = writeln!(out, "{k} {v:.6}");
            }
        }
        let _ = writeln!(out, "miou {:.6}", self.miou);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_is_perfect() {
        let mut cm = ConfusionMatrix::new(2);
        cm.accumulate(&[0, 1], &[0, 1]).unwrap();
        assert_eq!(cm.counts(), &[1, 0, 0, 1]);
        let r = cm.miou().unwrap();
        assert_eq!(r.miou, 1.0);
        assert_eq!(r.per_class, vec![1.0, 1.0]);
    }

    #[test]
    fn ignore_skips_ground_truth_only() {
        let mut cm = ConfusionMatrix::new(2);
        cm.accumulate(&[IGNORE], &[0]).unwrap();
        assert_eq!(cm.total(), 0);
        cm.accumulate(&[IGNORE], &[IGNORE]).unwrap();
        assert_eq!(cm.total(), 0);
        assert!(cm.accumulate(&[0], &[IGNORE]).is_err());
    }

    #[test]
    fn out_of_range_names_index_and_is_atomic() {
        let mut cm = ConfusionMatrix::new(2);
        let err = cm.accumulate(&[0, 1, 2], &[0, 1, 1]).unwrap_err();
        assert!(err.to_string().contains("index 2"), "{err}");
        assert_eq!(cm.total(), 0);
        assert!(cm.accumulate(&[0], &[0, 1]).is_err());
    }

    #[test]
    fn two_class_hand_case() {
        let cm = ConfusionMatrix::from_counts(2, vec![5, 5, 0, 10]).unwrap();
        let r = cm.miou().unwrap();
        assert_eq!(r.per_class[0], 0.5);
        assert!((r.per_class[1] - 10.0 / 15.0).abs() < 1e-15);
        assert!((r.miou - 0.583_333_333_333_333_3).abs() < 1e-12);
    }

    #[test]
    fn absent_class_modes() {
        let cm = ConfusionMatrix::from_counts(3, vec![4, 0, 0, 2, 2, 0, 0, 0, 0]).unwrap();
        let r = cm.miou().unwrap();
        assert_eq!(r.valid, vec![true, true, false]);
        assert!(r.per_class[2].is_nan());
        let expected = (4.0 / 6.0 + 2.0 / 4.0) / 2.0;
        assert!((r.miou - expected).abs() < 1e-15);
        let strict = cm.miou_with(AbsentClasses::CountAsZero).unwrap();
        assert!((strict.miou - (4.0 / 6.0 + 2.0 / 4.0) / 3.0).abs() < 1e-15);
        assert!(ConfusionMatrix::new(3).miou().is_err());
    }

    #[test]
    fn report_formats() {
        let cm = ConfusionMatrix::from_counts(3, vec![5, 5, 0, 0, 10, 0, 0, 0, 0]).unwrap();
        let r = cm.miou().unwrap();
        assert_eq!(r.to_listing(), "0 0.500000\n1 0.666667\n2 nan\nmiou 0.583333\n");
        let names = vec!["car".to_string(), "road".to_string()];
        assert_eq!(
            r.to_table(Some(&names)),
            "class  name                  iou\n\
             0      car                0.5000\n\
             1      road               0.6667\n\
             2      -                     n/a\n\
             mean   mIoU               0.5833\n"
        );
    }

    #[test]
    fn merge_is_elementwise() {
        let mut a = ConfusionMatrix::new(2);
        a.accumulate(&[0, 1, 1], &[0, 0, 1]).unwrap();
        let mut b = ConfusionMatrix::new(2);
        b.accumulate(&[1], &[1]).unwrap();
        a.merge(&b).unwrap();
        assert_eq!(a.counts(), &[1, 0, 1, 2]);
        assert!(a.merge(&ConfusionMatrix::new(3)).is_err());
    }
}
