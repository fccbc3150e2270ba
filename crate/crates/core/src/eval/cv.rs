//! Stratified k-fold cross-validation, including grouped evaluation where several
//! rows (for example one per interacted tweet) belong to one labelled example.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::design::{Design, Standardizer};
use super::forest::{forest_fit, ForestConfig};
use super::logreg::{logreg_fit, LogRegConfig};
use super::metrics::{compute_metrics, Confusion, MetricReport};
use crate::baselines::late_fusion_predict;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ClassifierSpec {
    Logreg(LogRegConfig),
    Rf(ForestConfig),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Preprocess {
    None,
    /// Z-score columns using training-fold statistics.
    Standardize,
}

/// Rows of one feature view and the labelled example each row belongs to.
#[derive(Debug, Clone)]
pub struct View {
    pub x: Design,
    pub example: Vec<usize>,
}

impl View {
    /// One row per example.
    pub fn per_example(x: Design) -> Self {
        let example = (0..x.n_rows()).collect();
        View { x, example }
    }
}

#[derive(Debug, Clone)]
pub struct CvOutcome {
    pub report: MetricReport,
    /// Out-of-fold score of every example.
    pub scores: Vec<f64>,
    pub folds: Vec<usize>,
}

/// Fold index of every example. Each class is shuffled and dealt round-robin,
/// continuing where the previous class stopped, so fold sizes differ by at most one.
pub fn stratified_folds(y: &[u8], k: usize, seed: u64) -> Result<Vec<usize>> {
    if k < 2 {
        return Err(Error::Invalid(format!("k must be at least 2, got {k}")));
    }
    let mut r = rng::stream(seed, "eval.folds");
    let mut folds = vec![0; y.len()];
    let mut next = 0;
    for class in [0u8, 1] {
        let mut members: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
        if members.len() < k {
            return Err(Error::Invalid(format!(
                "class {class} has {} examples, fewer than k = {k}",
                members.len()
            )));
        }
        members.shuffle(&mut r);
        for i in members {
            folds[i] = next;
            next = (next + 1) % k;
        }
    }
    if let Some(&bad) = y.iter().find(|&&c| c > 1) {
        return Err(Error::Invalid(format!("labels must be 0 or 1, found {bad}")));
    }
    Ok(folds)
}

fn fit_predict(
    spec: &ClassifierSpec,
    train: &Design,
    y: &[u8],
    apply: &Design,
    seed: u64,
) -> Result<Vec<f64>> {
    match spec {
        ClassifierSpec::Logreg(cfg) => Ok(logreg_fit(train, y, cfg)?.predict_proba(apply)),
        ClassifierSpec::Rf(cfg) => {
            let cfg = ForestConfig { seed, ..*cfg };
            Ok(forest_fit(&train.to_dense(), y, &cfg)?.predict_proba(&apply.to_dense()))
        }
    }
}

/// Scores every example of one view for one fold (`None` when it has no rows).
fn view_scores(
    view: &View,
    y: &[u8],
    is_train: &[bool],
    spec: &ClassifierSpec,
    preprocess: Preprocess,
    seed: u64,
) -> Result<Vec<Option<f64>>> {
    let train_rows: Vec<usize> = (0..view.x.n_rows()).filter(|&r| is_train[view.example[r]]).collect();
    let mut sums = vec![(0.0, 0usize); y.len()];
    if train_rows.is_empty() {
        return Ok(vec![None; y.len()]);
    }
    let train_y: Vec<u8> = train_rows.iter().map(|&r| y[view.example[r]]).collect();
    let train_x = view.x.select(&train_rows);
    let probs = match preprocess {
        Preprocess::None => fit_predict(spec, &train_x, &train_y, &view.x, seed)?,
        Preprocess::Standardize => {
            let s = Standardizer::fit(&train_x);
            fit_predict(spec, &s.transform(&train_x), &train_y, &s.transform(&view.x), seed)?
        }
    };
    for (r, p) in probs.into_iter().enumerate() {
        let e = &mut sums[view.example[r]];
        e.0 += p;
        e.1 += 1;
    }
    Ok(sums.into_iter().map(|(s, c)| (c > 0).then(|| s / c as f64)).collect())
}

pub fn cross_validate(
    x: &Design,
    y: &[u8],
    spec: &ClassifierSpec,
    k: usize,
    seed: u64,
    preprocess: Preprocess,
) -> Result<CvOutcome> {
    cross_validate_views(&[View::per_example(x.clone())], y, spec, k, seed, preprocess)
}

/// Cross-validation over one or more views. A single view scores an example by
/// the mean probability of its rows; several views are combined by late fusion,
/// each weighted by its F1 on the training fold.
pub fn cross_validate_views(
    views: &[View],
    y: &[u8],
    spec: &ClassifierSpec,
    k: usize,
    seed: u64,
    preprocess: Preprocess,
) -> Result<CvOutcome> {
    if views.is_empty() {
        return Err(Error::Invalid("no feature views to evaluate".into()));
    }
    for v in views {
        if v.example.len() != v.x.n_rows() || v.example.iter().any(|&e| e >= y.len()) {
            return Err(Error::Dimension("view rows do not map onto the labelled examples".into()));
        }
    }
    let folds = stratified_folds(y, k, seed)?;
    let fold_stream = rng::stream_seed(seed, "eval.cv.model");
    let mut scores = vec![0.0; y.len()];
    let mut per_fold = Vec::with_capacity(k);
    for f in 0..k {
        let is_train: Vec<bool> = folds.iter().map(|&g| g != f).collect();
        let train_idx: Vec<usize> = (0..y.len()).filter(|&i| is_train[i]).collect();
        let test_idx: Vec<usize> = (0..y.len()).filter(|&i| !is_train[i]).collect();
        let prior = train_idx.iter().filter(|&&i| y[i] == 1).count() as f64 / train_idx.len() as f64;

        let per_view: Vec<Vec<Option<f64>>> = views
            .iter()
            .enumerate()
            .map(|(v, view)| {
                let s = rng::indexed_seed(fold_stream, (f * views.len() + v) as u64);
                view_scores(view, y, &is_train, spec, preprocess, s)
            })
            .collect::<Result<_>>()?;

        let weights: Vec<f64> = if views.len() == 1 {
            vec![1.0]
        } else {
            per_view
                .iter()
                .map(|s| {
                    let (yt, st): (Vec<u8>, Vec<f64>) = train_idx
                        .iter()
                        .filter_map(|&i| s[i].map(|p| (y[i], p)))
                        .unzip();
                    Confusion::new(&yt, &st, 0.5).f1()
                })
                .collect()
        };
        if weights.iter().all(|&w| w == 0.0) {
            return Err(Error::Numeric(format!("every view has training F1 = 0 in fold {f}")));
        }
        for &i in &test_idx {
            let (p, w): (Vec<f64>, Vec<f64>) = per_view
                .iter()
                .zip(&weights)
                .filter_map(|(s, &w)| s[i].map(|p| (p, w)))
                .unzip();
            scores[i] = if w.iter().any(|&x| x > 0.0) {
                late_fusion_predict(&p, &w)?.probability
            } else {
                prior
            };
        }
        let yt: Vec<u8> = test_idx.iter().map(|&i| y[i]).collect();
        let st: Vec<f64> = test_idx.iter().map(|&i| scores[i]).collect();
        per_fold.push(compute_metrics(&yt, &st, 0.5)?);
    }
    Ok(CvOutcome {
        report: MetricReport::from_folds(per_fold),
        scores,
        folds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn folds_are_stratified_and_reproducible() {
        let y: Vec<u8> = (0..47).map(|i| u8::from(i % 3 == 0)).collect();
        let f = stratified_folds(&y, 10, 3).unwrap();
        assert_eq!(f, stratified_folds(&y, 10, 3).unwrap());
        let pos = y.iter().filter(|&&c| c == 1).count() as f64;
        for k in 0..10 {
            let members: Vec<usize> = (0..47).filter(|&i| f[i] == k).collect();
            let p = members.iter().filter(|&&i| y[i] == 1).count() as f64;
            let expected = pos * members.len() as f64 / 47.0;
            assert!((p - expected).abs() <= 1.0 + 1e-9, "fold {k}: {p} vs {expected}");
        }
    }

    #[test]
    fn small_class_is_named() {
        let y = [0, 0, 0, 1, 1];
        let err = stratified_folds(&y, 3, 0).unwrap_err().to_string();
        assert!(err.contains("class 1"), "{err}");
    }

    #[test]
    fn leave_one_out_runs() {
        let y: Vec<u8> = vec![0, 1, 0, 1, 0, 1];
        let x = Design::Dense((0..6).map(|i| vec![if y[i] == 1 { 3.0 } else { -3.0 } + 0.1 * i as f64]).collect());
        let spec = ClassifierSpec::Logreg(LogRegConfig::default());
        // the largest k the class sizes allow: every fold holds one example per class
        let out = cross_validate(&x, &y, &spec, 3, 1, Preprocess::Standardize).unwrap();
        assert_eq!(out.report.folds.len(), 3);
        for m in &out.report.folds {
            assert!(m.as_array().iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn grouped_rows_average_per_example() {
        // two rows per example carrying the same signal
        let y: Vec<u8> = (0..20).map(|i| (i % 2) as u8).collect();
        let mut rows = Vec::new();
        let mut ex = Vec::new();
        for (i, &c) in y.iter().enumerate() {
            for j in 0..2 {
                rows.push(vec![if c == 1 { 2.0 } else { -2.0 } + 0.01 * j as f64, (i as f64).sin()]);
                ex.push(i);
            }
        }
        let view = View {
            x: Design::Dense(rows),
            example: ex,
        };
        let spec = ClassifierSpec::Logreg(LogRegConfig::default());
        let out = cross_validate_views(&[view], &y, &spec, 5, 0, Preprocess::None).unwrap();
        assert_eq!(out.report.accuracy.mean, 1.0);
    }
}
