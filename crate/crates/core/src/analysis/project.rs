use crate::baselines::pca_fit;
use crate::error::{Error, Result};

/// Coordinates on the first two principal components (zero when the data has
/// fewer than two dimensions).
pub fn project_2d(x: &[Vec<f64>]) -> Result<Vec<[f64; 2]>> {
    if x.len() < 2 {
        return Err(Error::Invalid("projection needs at least two points".into()));
    }
    let m = pca_fit(x, 2)?;
    Ok(x.iter()
        .map(|r| {
            let p = m.transform_row(r);
            [p.first().copied().unwrap_or(0.0), p.get(1).copied().unwrap_or(0.0)]
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collinear_points_lie_on_axis() {
        let x: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, 2.0 * i as f64, -(i as f64)]).collect();
        let p = project_2d(&x).unwrap();
        assert_eq!(p.len(), 6);
        assert!(p.iter().all(|c| c[1].abs() < 1e-8));
        let step = (p[1][0] - p[0][0]).abs();
        assert!((step - 6f64.sqrt()).abs() < 1e-8);
    }
}
