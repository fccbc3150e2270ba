use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::mean_std;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn new(y: &[u8], scores: &[f64], threshold: f64) -> Self {
        let mut c = Confusion::default();
        for (&t, &s) in y.iter().zip(scores) {
            match (t == 1, s >= threshold) {
                (true, true) => c.tp += 1,
                (true, false) => c.fn_ += 1,
                (false, true) => c.fp += 1,
                (false, false) => c.tn += 1,
            }
        }
        c
    }

    pub fn accuracy(&self) -> f64 {
        let n = self.tp + self.fp + self.tn + self.fn_;
        if n == 0 {
            0.0
        } else {
            (self.tp + self.tn) as f64 / n as f64
        }
    }

    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    /// Harmonic mean of precision and recall, computed from the counts in a
    /// single division; 0 when there are no true positives.
    pub fn f1(&self) -> f64 {
        ratio(2 * self.tp, 2 * self.tp + self.fp + self.fn_)
    }
}

fn ratio(a: usize, b: usize) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

/// Area under the ROC curve via the rank-sum statistic, ties counted as half.
pub fn auroc(y: &[u8], scores: &[f64]) -> Result<f64> {
    if y.len() != scores.len() {
        return Err(Error::Dimension(format!("{} labels for {} scores", y.len(), scores.len())));
    }
    let n_pos = y.iter().filter(|&&t| t == 1).count();
    let n_neg = y.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::Invalid("AUROC is undefined when only one class is present".into()));
    }
    let mut order: Vec<usize> = (0..y.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // average ranks over tied groups, then Mann-Whitney U
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            if y[k] == 1 {
                rank_sum += avg;
            }
        }
        i = j + 1;
    }
    let u = rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    Ok(u / (n_pos as f64 * n_neg as f64))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub auroc: f64,
}

impl Metrics {
    pub fn as_array(&self) -> [f64; 5] {
        [self.accuracy, self.precision, self.recall, self.f1, self.auroc]
    }

    pub const NAMES: [&'static str; 5] = ["accuracy", "precision", "recall", "f1", "auroc"];
}

pub fn compute_metrics(y: &[u8], scores: &[f64], threshold: f64) -> Result<Metrics> {
    let c = Confusion::new(y, scores, threshold);
    let (p, r) = (c.precision(), c.recall());
    debug_assert!(p + r == 0.0 || (c.f1() - 2.0 * p * r / (p + r)).abs() < 1e-12);
    Ok(Metrics {
        accuracy: c.accuracy(),
        precision: c.precision(),
        recall: c.recall(),
        f1: c.f1(),
        auroc: auroc(y, scores)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Per-metric mean and population standard deviation over folds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub accuracy: MeanStd,
    pub precision: MeanStd,
    pub recall: MeanStd,
    pub f1: MeanStd,
    pub auroc: MeanStd,
    pub folds: Vec<Metrics>,
}

impl MetricReport {
    pub fn from_folds(folds: Vec<Metrics>) -> Self {
        let col = |k: usize| {
            let v: Vec<f64> = folds.iter().map(|m| m.as_array()[k]).collect();
            let (mean, std) = mean_std(&v);
            MeanStd { mean, std }
        };
        MetricReport {
            accuracy: col(0),
            precision: col(1),
            recall: col(2),
            f1: col(3),
            auroc: col(4),
            folds,
        }
    }

    pub fn summary(&self) -> [MeanStd; 5] {
        [self.accuracy, self.precision, self.recall, self.f1, self.auroc]
    }

    /// Aligned plain-text table.
    pub fn to_table(&self) -> String {
        let mut out = format!("{:<10} {:>8} {:>8}\n", "metric", "mean", "std");
        for (name, m) in Metrics::NAMES.iter().zip(self.summary()) {
            out.push_str(&format!("{:<10} {:>8.4} {:>8.4}\n", name, m.mean, m.std));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchors() {
        let m = compute_metrics(&[1, 0], &[0.9, 0.1], 0.5).unwrap();
        assert_eq!(m.auroc, 1.0);
        assert_eq!(m.f1, 1.0);
        assert_eq!(auroc(&[1, 1, 0, 0], &[0.9, 0.4, 0.6, 0.2]).unwrap(), 0.75);
        assert_eq!(auroc(&[1, 0, 1, 0], &[0.3; 4]).unwrap(), 0.5);
        assert!(auroc(&[1, 1], &[0.1, 0.2]).is_err());
    }

    #[test]
    fn undefined_ratios_are_zero() {
        let m = compute_metrics(&[1, 0], &[0.1, 0.2], 0.5).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
        assert_eq!(m.accuracy, 0.5);
    }

    #[test]
    fn threshold_is_inclusive() {
        let c = Confusion::new(&[1], &[0.5], 0.5);
        assert_eq!(c.tp, 1);
    }
}
