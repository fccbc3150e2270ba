//! A single-layer LSTM over short sequences, with backpropagation through time.

use crate::linalg::{dot, gemv_acc, gemv_t_acc, ger_acc, sigmoid};

use super::params::LstmSegment;

/// Post-activation gates and states for each processed step.
#[derive(Debug, Clone, Default)]
pub struct LstmTrace {
    /// `T × 4h`: i, f, g, o.
    pub gates: Vec<f64>,
    /// `T × h`
    pub cell: Vec<f64>,
    /// `T × h`
    pub hidden: Vec<f64>,
    pub steps: usize,
}

impl LstmTrace {
    pub fn hidden_at(&self, t: usize, h: usize) -> &[f64] {
        &self.hidden[t * h..(t + 1) * h]
    }
}

/// Runs the cell over `inputs` in the given order from zero state.
pub fn forward(params: &[f64], seg: &LstmSegment, inputs: &[&[f64]]) -> LstmTrace {
    let h = seg.hidden;
    let n = seg.input;
    let w = &params[seg.w..seg.u];
    let u = &params[seg.u..seg.b];
    let b = &params[seg.b..seg.b + 4 * h];
    let steps = inputs.len();
    let mut trace = LstmTrace {
        gates: vec![0.0; steps * 4 * h],
        cell: vec![0.0; steps * h],
        hidden: vec![0.0; steps * h],
        steps,
    };
    let mut z = vec![0.0; 4 * h];
    for (t, x) in inputs.iter().enumerate() {
        debug_assert_eq!(x.len(), n);
        z.copy_from_slice(b);
        gemv_acc(w, 4 * h, n, x, &mut z);
        if t > 0 {
            let hp = &trace.hidden[(t - 1) * h..t * h];
            for (r, zr) in z.iter_mut().enumerate() {
                *zr += dot(&u[r * h..(r + 1) * h], hp);
            }
        }
        let g = &mut trace.gates[t * 4 * h..(t + 1) * 4 * h];
        for k in 0..h {
            g[k] = sigmoid(z[k]);
            g[h + k] = sigmoid(z[h + k]);
            g[2 * h + k] = z[2 * h + k].tanh();
            g[3 * h + k] = sigmoid(z[3 * h + k]);
        }
        for k in 0..h {
            let c_prev = if t > 0 { trace.cell[(t - 1) * h + k] } else { 0.0 };
            let c = g[h + k] * c_prev + g[k] * g[2 * h + k];
            trace.cell[t * h + k] = c;
            trace.hidden[t * h + k] = g[3 * h + k] * c.tanh();
        }
    }
    trace
}

/// Backpropagates `d_hidden` (`T × h`, loss gradient w.r.t. each emitted hidden
/// state) through the sequence. Parameter gradients are accumulated into `grad`
/// (same layout as `params`); input gradients into `d_inputs` when given.
pub fn backward(
    params: &[f64],
    seg: &LstmSegment,
    inputs: &[&[f64]],
    trace: &LstmTrace,
    d_hidden: &[f64],
    grad: &mut [f64],
    mut d_inputs: Option<&mut [Vec<f64>]>,
) {
    let h = seg.hidden;
    let n = seg.input;
    let w = &params[seg.w..seg.u];
    let u = &params[seg.u..seg.b];
    let steps = trace.steps;
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    for t in (0..steps).rev() {
        let g = &trace.gates[t * 4 * h..(t + 1) * 4 * h];
        for k in 0..h {
            let dh = d_hidden[t * h + k] + dh_next[k];
            let c = trace.cell[t * h + k];
            let tc = c.tanh();
            let (i, f, gg, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
            let c_prev = if t > 0 { trace.cell[(t - 1) * h + k] } else { 0.0 };
            let dc = dc_next[k] + dh * o * (1.0 - tc * tc);
            dz[k] = dc * gg * i * (1.0 - i);
            dz[h + k] = dc * c_prev * f * (1.0 - f);
            dz[2 * h + k] = dc * i * (1.0 - gg * gg);
            dz[3 * h + k] = dh * tc * o * (1.0 - o);
            dc_next[k] = dc * f;
        }
        {
            let (gw, rest) = grad[seg.w..seg.b + 4 * h].split_at_mut(seg.u - seg.w);
            let (gu, gb) = rest.split_at_mut(seg.b - seg.u);
            ger_acc(gw, 4 * h, n, &dz, inputs[t]);
            for (gbi, dzi) in gb.iter_mut().zip(&dz) {
                *gbi += dzi;
            }
            dh_next.iter_mut().for_each(|x| *x = 0.0);
            if t > 0 {
                ger_acc(gu, 4 * h, h, &dz, &trace.hidden[(t - 1) * h..t * h]);
                gemv_t_acc(u, 4 * h, h, &dz, &mut dh_next);
            }
        }
        if let Some(dx) = d_inputs.as_deref_mut() {
            gemv_t_acc(w, 4 * h, n, &dz, &mut dx[t]);
        }
    }
}
