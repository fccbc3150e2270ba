use crate::error::{Error, Result};

/// Row-major feature matrix, stored sparsely when most entries are zero.
#[derive(Debug, Clone, PartialEq)]
pub enum Design {
    Dense(Vec<Vec<f64>>),
    Sparse { cols: usize, rows: Vec<Vec<(u32, f64)>> },
}

/// Below this fraction of non-zeros, rows are stored as index/value pairs.
const SPARSE_DENSITY: f64 = 0.25;

impl Design {
    /// Builds a matrix from dense rows, choosing the storage by density.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if let Some(r) = rows.iter().find(|r| r.len() != cols) {
            return Err(Error::Dimension(format!("row of length {} in a matrix with {cols} columns", r.len())));
        }
        let nnz: usize = rows.iter().map(|r| r.iter().filter(|x| **x != 0.0).count()).sum();
        let total = (rows.len() * cols).max(1);
        if (nnz as f64) / (total as f64) < SPARSE_DENSITY {
            let rows = rows
                .into_iter()
                .map(|r| {
                    r.into_iter()
                        .enumerate()
                        .filter(|(_, x)| *x != 0.0)
                        .map(|(j, x)| (j as u32, x))
                        .collect()
                })
                .collect();
            Ok(Design::Sparse { cols, rows })
        } else {
            Ok(Design::Dense(rows))
        }
    }

    pub fn n_rows(&self) -> usize {
        match self {
            Design::Dense(r) => r.len(),
            Design::Sparse { rows, .. } => rows.len(),
        }
    }

    pub fn n_cols(&self) -> usize {
        match self {
            Design::Dense(r) => r.first().map_or(0, Vec::len),
            Design::Sparse { cols, .. } => *cols,
        }
    }

    pub fn row_dot(&self, i: usize, w: &[f64]) -> f64 {
        match self {
            Design::Dense(r) => crate::linalg::dot(&r[i], w),
            Design::Sparse { rows, .. } => rows[i].iter().map(|&(j, x)| x * w[j as usize]).sum(),
        }
    }

    /// `g += alpha * x_i`
    pub fn row_axpy(&self, i: usize, alpha: f64, g: &mut [f64]) {
        match self {
            Design::Dense(r) => crate::linalg::axpy(alpha, &r[i], g),
            Design::Sparse { rows, .. } => {
                for &(j, x) in &rows[i] {
                    g[j as usize] += alpha * x;
                }
            }
        }
    }

    pub fn dense_row(&self, i: usize) -> Vec<f64> {
        match self {
            Design::Dense(r) => r[i].clone(),
            Design::Sparse { cols, rows } => {
                let mut out = vec![0.0; *cols];
                for &(j, x) in &rows[i] {
                    out[j as usize] = x;
                }
                out
            }
        }
    }

    pub fn select(&self, idx: &[usize]) -> Design {
        match self {
            Design::Dense(r) => Design::Dense(idx.iter().map(|&i| r[i].clone()).collect()),
            Design::Sparse { cols, rows } => Design::Sparse {
                cols: *cols,
                rows: idx.iter().map(|&i| rows[i].clone()).collect(),
            },
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n_rows()).map(|i| self.dense_row(i)).collect()
    }
}

/// Column-wise z-scoring fitted on training rows; constant columns are only centred.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &Design) -> Self {
        let rows = x.to_dense();
        let cols = x.n_cols();
        let n = rows.len().max(1) as f64;
        let mut mean = vec![0.0; cols];
        for r in &rows {
            crate::linalg::axpy(1.0 / n, r, &mut mean);
        }
        let mut var = vec![0.0; cols];
        for r in &rows {
            for j in 0..cols {
                var[j] += (r[j] - mean[j]).powi(2) / n;
            }
        }
        let std = var.into_iter().map(|v| if v > 0.0 { v.sqrt() } else { 1.0 }).collect();
        Standardizer { mean, std }
    }

    pub fn transform(&self, x: &Design) -> Design {
        Design::Dense(
            x.to_dense()
                .into_iter()
                .map(|r| r.iter().enumerate().map(|(j, v)| (v - self.mean[j]) / self.std[j]).collect())
                .collect(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn storage_follows_density() {
        let sparse = Design::from_rows(vec![vec![0.0, 0.0, 0.0, 1.0, 0.0], vec![0.0; 5]]).unwrap();
        assert!(matches!(sparse, Design::Sparse { .. }));
        let dense = Design::from_rows(vec![vec![1.0, 2.0], vec![0.0, 3.0]]).unwrap();
        assert!(matches!(dense, Design::Dense(_)));
        let w = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(sparse.row_dot(0, &w), 4.0);
        assert_eq!(sparse.dense_row(0), vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(Design::from_rows(vec![vec![1.0], vec![1.0, 2.0]]).is_err());
    }

    #[test]
    fn standardizer_centres_and_scales() {
        let x = Design::from_rows(vec![vec![1.0, 5.0], vec![3.0, 5.0]]).unwrap();
        let s = Standardizer::fit(&x);
        assert_eq!(s.transform(&x).to_dense(), vec![vec![-1.0, 0.0], vec![1.0, 0.0]]);
    }
}
