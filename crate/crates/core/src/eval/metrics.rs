//! Pixel-level precision, recall and F1 against a ground-truth mask.

use crate::error::{Error, Result};
use crate::imaging::BinaryImage;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn count(predicted: &BinaryImage, truth: &BinaryImage) -> Result<Self> {
        if predicted.dims() != truth.dims() {
            return Err(Error::DimensionMismatch { left: predicted.dims(), right: truth.dims() });
        }
        let mut c = Confusion::default();
        for (&p, &t) in predicted.data().iter().zip(truth.data()) {
            match (p, t) {
                (1, 1) => c.tp += 1,
                (1, _) => c.fp += 1,
                (_, 1) => c.fn_ += 1,
                _ => c.tn += 1,
            }
        }
        Ok(c)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Metrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Some ratio had a zero denominator and was reported as 0.
    pub degenerate: bool,
}

impl Metrics {
    pub fn from_confusion(c: &Confusion) -> Self {
        let ratio = |num: u64, den: u64| if den == 0 { None } else { Some(num as f64 / den as f64) };
        let p = ratio(c.tp, c.tp + c.fp);
        let r = ratio(c.tp, c.tp + c.fn_);
        let (precision, recall) = (p.unwrap_or(0.0), r.unwrap_or(0.0));
        Metrics {
            precision,
            recall,
            f1: f1(precision, recall),
            degenerate: p.is_none() || r.is_none() || precision + recall == 0.0,
        }
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn compute_metrics(predicted: &BinaryImage, truth: &BinaryImage) -> Result<Metrics> {
    Ok(Metrics::from_confusion(&Confusion::count(predicted, truth)?))
}

pub fn mean(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    values.iter().sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}
