//! L1-penalised logistic regression fitted by proximal gradient descent.
//!
//! Objective: mean log-loss + ‖w‖₁ / (C·n), the intercept unpenalised. This is the
//! usual `C · Σ loss + ‖w‖₁` scaled by `1/(C·n)`, so `C` keeps its familiar meaning.

use serde::{Deserialize, Serialize};

use super::design::Design;
use crate::error::{Error, Result};
use crate::linalg::{sigmoid, softplus};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogRegConfig {
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        LogRegConfig {
            c: 0.5,
            tol: 1e-8,
            max_iter: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRegModel {
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub iterations: usize,
    /// Objective after every accepted step, starting at the initial point.
    #[serde(skip)]
    pub objective_trace: Vec<f64>,
}

impl LogRegModel {
    pub fn predict_proba(&self, x: &Design) -> Vec<f64> {
        (0..x.n_rows())
            .map(|i| sigmoid(x.row_dot(i, &self.weights) + self.intercept))
            .collect()
    }
}

fn smooth_loss(x: &Design, y: &[u8], w: &[f64], b: f64) -> f64 {
    let n = y.len() as f64;
    (0..y.len())
        .map(|i| {
            let z = x.row_dot(i, w) + b;
            // -[y log σ(z) + (1-y) log(1-σ(z))]
            if y[i] == 1 {
                softplus(-z)
            } else {
                softplus(z)
            }
        })
        .sum::<f64>()
        / n
}

fn l1(w: &[f64]) -> f64 {
    w.iter().map(|x| x.abs()).sum()
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

pub fn logreg_fit(x: &Design, y: &[u8], config: &LogRegConfig) -> Result<LogRegModel> {
    let n = y.len();
    if n == 0 || x.n_rows() != n {
        return Err(Error::Dimension(format!("{} rows for {} labels", x.n_rows(), n)));
    }
    if !(config.c > 0.0) {
        return Err(Error::Invalid(format!("C must be positive, got {}", config.c)));
    }
    let d = x.n_cols();
    let positives = y.iter().filter(|&&t| t == 1).count();
    if positives == 0 || positives == n {
        log::warn!("logistic regression fitted on a single class; predicting the class prior");
        let prior = positives as f64 / n as f64;
        let intercept = if prior == 0.0 {
            f64::NEG_INFINITY
        } else if prior == 1.0 {
            f64::INFINITY
        } else {
            (prior / (1.0 - prior)).ln()
        };
        return Ok(LogRegModel {
            weights: vec![0.0; d],
            intercept,
            iterations: 0,
            objective_trace: Vec::new(),
        });
    }

    let lambda = 1.0 / (config.c * n as f64);
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut f = smooth_loss(x, y, &w, b);
    let mut obj = f;
    let mut trace = vec![obj];
    let mut step = 1.0;
    let mut gw = vec![0.0; d];
    let mut iterations = 0;
    for _ in 0..config.max_iter {
        iterations += 1;
        gw.iter_mut().for_each(|g| *g = 0.0);
        let mut gb = 0.0;
        for i in 0..n {
            let r = (sigmoid(x.row_dot(i, &w) + b) - y[i] as f64) / n as f64;
            x.row_axpy(i, r, &mut gw);
            gb += r;
        }
        step *= 1.25;
        let (nw, nb, nf) = loop {
            let nw: Vec<f64> = w
                .iter()
                .zip(&gw)
                .map(|(wi, gi)| soft_threshold(wi - step * gi, step * lambda))
                .collect();
            let nb = b - step * gb;
            let nf = smooth_loss(x, y, &nw, nb);
            let mut lin = gb * (nb - b);
            let mut sq = (nb - b).powi(2);
            for j in 0..d {
                let dj = nw[j] - w[j];
                lin += gw[j] * dj;
                sq += dj * dj;
            }
            if nf <= f + lin + sq / (2.0 * step) + 1e-15 || step < 1e-20 {
                break (nw, nb, nf);
            }
            step *= 0.5;
        };
        let nobj = nf + lambda * l1(&nw);
        if nobj > obj {
            // rounding-level increase at convergence
            break;
        }
        let change = obj - nobj;
        w = nw;
        b = nb;
        f = nf;
        obj = nobj;
        trace.push(obj);
        if change < config.tol {
            break;
        }
    }
    if w.iter().any(|v| !v.is_finite()) || !b.is_finite() {
        return Err(Error::Numeric("logistic regression diverged".into()));
    }
    Ok(LogRegModel {
        weights: w,
        intercept: b,
        iterations,
        objective_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design(rows: Vec<Vec<f64>>) -> Design {
        Design::Dense(rows)
    }

    #[test]
    fn separable_pair() {
        let x = design(vec![vec![-5.0], vec![5.0]]);
        let m = logreg_fit(&x, &[0, 1], &LogRegConfig::default()).unwrap();
        let p = m.predict_proba(&x);
        assert!(p[0] < 0.5 && p[1] >= 0.5);
    }

    #[test]
    fn single_class_predicts_prior() {
        let x = design(vec![vec![1.0], vec![2.0]]);
        let m = logreg_fit(&x, &[0, 0], &LogRegConfig::default()).unwrap();
        assert!(m.predict_proba(&x).iter().all(|&p| p == 0.0));
    }

    #[test]
    fn tiny_c_zeroes_weights() {
        let x = design(vec![vec![-1.0, 0.5], vec![1.0, 0.2], vec![0.5, -1.0], vec![-0.3, 0.1]]);
        let m = logreg_fit(&x, &[0, 1, 1, 0], &LogRegConfig { c: 1e-6, ..Default::default() }).unwrap();
        assert!(m.weights.iter().all(|&w| w == 0.0));
        // intercept-only solution is the log-odds of the prior (here 1/2)
        assert!(m.intercept.abs() < 1e-3);
    }

    #[test]
    fn objective_is_monotone() {
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|i| vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos(), i as f64 / 40.0])
            .collect();
        let y: Vec<u8> = (0..40).map(|i| u8::from((i as f64 * 0.7).sin() + 0.3 * (i as f64).cos() > 0.0)).collect();
        let m = logreg_fit(&design(rows), &y, &LogRegConfig::default()).unwrap();
        assert!(m.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(m.objective_trace.len() > 2);
    }
}
