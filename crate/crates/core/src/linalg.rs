//! Dense kernels over row-major `f64` slices.

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f64; 4];
    let ca = a.chunks_exact(4);
    let cb = b.chunks_exact(4);
    let (ra, rb) = (ca.remainder(), cb.remainder());
    for (x, y) in ca.zip(cb) {
        acc[0] += x[0] * y[0];
        acc[1] += x[1] * y[1];
        acc[2] += x[2] * y[2];
        acc[3] += x[3] * y[3];
    }
    let mut s = (acc[0] + acc[1]) + (acc[2] + acc[3]);
    for (x, y) in ra.iter().zip(rb) {
        s += x * y;
    }
    s
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// `out += W x` for `W` with shape `rows × cols`.
pub fn gemv_acc(w: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), cols);
    for (r, o) in out.iter_mut().enumerate().take(rows) {
        *o += dot(&w[r * cols..(r + 1) * cols], x);
    }
}

/// `out += Wᵀ z` for `W` with shape `rows × cols`.
pub fn gemv_t_acc(w: &[f64], rows: usize, cols: usize, z: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(out.len(), cols);
    for (r, &zr) in z.iter().enumerate().take(rows) {
        if zr != 0.0 {
            axpy(zr, &w[r * cols..(r + 1) * cols], out);
        }
    }
}

/// `G += z xᵀ` for `G` with shape `rows × cols`.
pub fn ger_acc(g: &mut [f64], rows: usize, cols: usize, z: &[f64], x: &[f64]) {
    debug_assert_eq!(g.len(), rows * cols);
    for (r, &zr) in z.iter().enumerate().take(rows) {
        if zr != 0.0 {
            axpy(zr, x, &mut g[r * cols..(r + 1) * cols]);
        }
    }
}

pub fn norm(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

pub fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_match_naive_loops() {
        let w: Vec<f64> = (0..15).map(|i| (i as f64) * 0.3 - 2.0).collect();
        let x: Vec<f64> = (0..5).map(|i| 1.0 - i as f64 * 0.7).collect();
        let z: Vec<f64> = (0..3).map(|i| 0.5 + i as f64).collect();
        let mut out = vec![0.0; 3];
        gemv_acc(&w, 3, 5, &x, &mut out);
        for r in 0..3 {
            let naive: f64 = (0..5).map(|c| w[r * 5 + c] * x[c]).sum();
            assert!((out[r] - naive).abs() < 1e-12);
        }
        let mut back = vec![0.0; 5];
        gemv_t_acc(&w, 3, 5, &z, &mut back);
        for c in 0..5 {
            let naive: f64 = (0..3).map(|r| w[r * 5 + c] * z[r]).sum();
            assert!((back[c] - naive).abs() < 1e-12);
        }
        let mut g = vec![0.0; 15];
        ger_acc(&mut g, 3, 5, &z, &x);
        assert!((g[7] - z[1] * x[2]).abs() < 1e-12);
    }

    #[test]
    fn stable_logistic_helpers() {
        assert_eq!(sigmoid(0.0), 0.5);
        assert!(sigmoid(-800.0) >= 0.0);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((softplus(1000.0) - 1000.0).abs() < 1e-9);
        assert!(softplus(-1000.0) >= 0.0);
    }
}
