use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    /// Orthonormal rows, ordered by decreasing variance.
    pub components: Vec<Vec<f64>>,
    /// Variance along each component (`n - 1` divisor).
    pub variances: Vec<f64>,
    pub requested: usize,
}

impl PcaModel {
    pub fn retained(&self) -> usize {
        self.components.len()
    }

    pub fn transform_row(&self, x: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| c.iter().zip(x).zip(&self.mean).map(|((ci, xi), mi)| ci * (xi - mi)).sum())
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }
}

/// Eigenpairs sorted by decreasing eigenvalue.
fn sorted_eigen(m: DMatrix<f64>) -> Vec<(f64, Vec<f64>)> {
    let eig = SymmetricEigen::new(m);
    let mut pairs: Vec<(f64, Vec<f64>)> = eig
        .eigenvalues
        .iter()
        .zip(eig.eigenvectors.column_iter())
        .map(|(&l, v)| (l, v.iter().copied().collect()))
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
    pairs
}

/// Flips the sign so the largest-magnitude coordinate is positive.
fn canonical_sign(v: &mut [f64]) {
    let pivot = v.iter().cloned().fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
    if pivot < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Fits `r` principal components. Requests above `min(rows, cols)` keep that many;
/// with fewer rows than columns only components of non-zero variance are kept.
pub fn pca_fit(x: &[Vec<f64>], r: usize) -> Result<PcaModel> {
    let n = x.len();
    if n < 2 {
        return Err(Error::Invalid(format!("PCA needs at least two rows, got {n}")));
    }
    let d = x[0].len();
    if x.iter().any(|row| row.len() != d) {
        return Err(Error::Dimension("PCA input rows differ in length".into()));
    }
    if r == 0 {
        return Err(Error::Invalid("PCA target dimension must be positive".into()));
    }
    let mut mean = vec![0.0; d];
    for row in x {
        crate::linalg::axpy(1.0 / n as f64, row, &mut mean);
    }
    let centered = DMatrix::from_fn(n, d, |i, j| x[i][j] - mean[j]);
    let denom = (n - 1) as f64;
    let keep = r.min(n.min(d));
    if keep < r {
        log::warn!("PCA asked for {r} components of a {n}x{d} matrix; keeping {keep}");
    }

    let (components, variances) = if n >= d {
        let cov = centered.transpose() * &centered / denom;
        sorted_eigen(cov)
            .into_iter()
            .take(keep)
            .map(|(l, mut v)| {
                canonical_sign(&mut v);
                (v, l.max(0.0))
            })
            .unzip()
    } else {
        let gram = &centered * centered.transpose();
        let pairs = sorted_eigen(gram);
        let top = pairs.first().map_or(0.0, |p| p.0).max(0.0);
        let tol = top * 1e-12 * n as f64;
        let mut comps = Vec::new();
        let mut vars = Vec::new();
        for (l, u) in pairs.into_iter().take(keep) {
            if l <= tol {
                break;
            }
            let u = nalgebra::DVector::from_vec(u);
            let mut v: Vec<f64> = (centered.transpose() * u / l.sqrt()).iter().copied().collect();
            canonical_sign(&mut v);
            comps.push(v);
            vars.push(l / denom);
        }
        if comps.len() < keep {
            log::warn!("data has rank {}; keeping {} of {keep} components", comps.len(), comps.len());
        }
        (comps, vars)
    };
    Ok(PcaModel {
        mean,
        components,
        variances,
        requested: r,
    })
}

/// Fits and transforms, zero-padding to `r` columns when fewer components exist.
pub fn pca_reduce_padded(x: &[Vec<f64>], r: usize) -> Result<Vec<Vec<f64>>> {
    let m = pca_fit(x, r)?;
    Ok(m
        .transform(x)
        .into_iter()
        .map(|mut row| {
            row.resize(r, 0.0);
            row
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points() {
        let x = vec![vec![0.0, 0.0], vec![1.0, 2.0], vec![2.0, 4.0]];
        let m = pca_fit(&x, 2).unwrap();
        assert_eq!(m.retained(), 2);
        let total: f64 = m.variances.iter().sum();
        assert!((m.variances[0] / total - 1.0).abs() < 1e-12);
        assert!(m.variances[1].abs() < 1e-12);
    }

    #[test]
    fn wide_data_uses_positive_components_only() {
        let x = vec![vec![1.0, 0.0, 0.0, 2.0], vec![0.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]];
        let m = pca_fit(&x, 4).unwrap();
        assert_eq!(m.retained(), 2);
        for (i, a) in m.components.iter().enumerate() {
            for (j, b) in m.components.iter().enumerate() {
                let d: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum();
                assert!((d - f64::from(u8::from(i == j))).abs() < 1e-10);
            }
        }
        assert_eq!(pca_reduce_padded(&x, 4).unwrap()[0].len(), 4);
    }

    #[test]
    fn errors() {
        assert!(pca_fit(&[vec![1.0]], 1).is_err());
        assert!(pca_fit(&[vec![1.0], vec![2.0, 3.0]], 1).is_err());
    }
}
