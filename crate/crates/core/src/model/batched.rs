//! Bi-LSTMs over many variable-length sequences at once.
//!
//! Sequences are sorted by length (longest first) so that the sequences still
//! running at step `t` form a prefix of the batch; each step is then a pair of
//! matrix products over that prefix.

use matrixmultiply::dgemm;

use crate::linalg::sigmoid;

use super::params::LstmSegment;

/// `C = beta·C + A·B` for row-major views given by explicit strides.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    (rsa, csa): (isize, isize),
    b: &[f64],
    (rsb, csb): (isize, isize),
    beta: f64,
    c: &mut [f64],
    rsc: isize,
) {
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: callers pass slices that cover every addressed element: `a` holds
    // m×k, `b` k×n and `c` m×n entries under the given strides.
    unsafe {
        dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            rsc,
            1,
        );
    }
}

/// Order in which sequences are processed.
#[derive(Debug, Clone)]
pub struct Plan {
    /// Sorted position → original sequence index.
    pub order: Vec<usize>,
    /// Length of each sorted sequence.
    pub lens: Vec<usize>,
    /// Number of sequences still running at each step.
    pub active: Vec<usize>,
}

impl Plan {
    pub fn new(lens: &[usize]) -> Self {
        let mut order: Vec<usize> = (0..lens.len()).collect();
        order.sort_by(|&a, &b| lens[b].cmp(&lens[a]).then(a.cmp(&b)));
        let sorted: Vec<usize> = order.iter().map(|&i| lens[i]).collect();
        let steps = sorted.first().copied().unwrap_or(0);
        let active = (0..steps).map(|t| sorted.iter().take_while(|&&l| l > t).count()).collect();
        Plan {
            order,
            lens: sorted,
            active,
        }
    }
}

#[derive(Debug, Clone, Default)]
struct Step {
    /// `A × n` inputs, `A × 4h` gates, `A × h` cell and hidden states.
    x: Vec<f64>,
    gates: Vec<f64>,
    cell: Vec<f64>,
    hidden: Vec<f64>,
}

#[derive(Debug, Clone)]
struct DirTrace {
    steps: Vec<Step>,
    reverse: bool,
}

/// Position of the element a direction reads at step `t`.
fn position(reverse: bool, len: usize, t: usize) -> usize {
    if reverse {
        len - 1 - t
    } else {
        t
    }
}

fn direction_forward(params: &[f64], seg: &LstmSegment, plan: &Plan, seqs: &[Vec<&[f64]>], reverse: bool) -> DirTrace {
    let h = seg.hidden;
    let n = seg.input;
    let g4 = 4 * h;
    let w = &params[seg.w..seg.u];
    let u = &params[seg.u..seg.b];
    let bias = &params[seg.b..seg.b + g4];
    let mut steps: Vec<Step> = Vec::with_capacity(plan.active.len());
    for (t, &a) in plan.active.iter().enumerate() {
        let mut x = vec![0.0; a * n];
        for r in 0..a {
            let seq = &seqs[plan.order[r]];
            x[r * n..(r + 1) * n].copy_from_slice(seq[position(reverse, plan.lens[r], t)]);
        }
        let mut z = Vec::with_capacity(a * g4);
        for _ in 0..a {
            z.extend_from_slice(bias);
        }
        // Z += X Wᵀ ; W is row-major 4h × n
        gemm(a, n, g4, &x, (n as isize, 1), w, (1, n as isize), 1.0, &mut z, g4 as isize);
        if t > 0 {
            let hp = &steps[t - 1].hidden;
            gemm(a, h, g4, hp, (h as isize, 1), u, (1, h as isize), 1.0, &mut z, g4 as isize);
        }
        let mut cell = vec![0.0; a * h];
        let mut hidden = vec![0.0; a * h];
        for r in 0..a {
            let g = &mut z[r * g4..(r + 1) * g4];
            for k in 0..h {
                g[k] = sigmoid(g[k]);
                g[h + k] = sigmoid(g[h + k]);
                g[2 * h + k] = g[2 * h + k].tanh();
                g[3 * h + k] = sigmoid(g[3 * h + k]);
                let c_prev = if t > 0 { steps[t - 1].cell[r * h + k] } else { 0.0 };
                let c = g[h + k] * c_prev + g[k] * g[2 * h + k];
                cell[r * h + k] = c;
                hidden[r * h + k] = g[3 * h + k] * c.tanh();
            }
        }
        steps.push(Step {
            x,
            gates: z,
            cell,
            hidden,
        });
    }
    DirTrace { steps, reverse }
}

/// `d_out[seq]` is the gradient w.r.t. this direction's mean-pooled output.
fn direction_backward(
    params: &[f64],
    seg: &LstmSegment,
    plan: &Plan,
    trace: &DirTrace,
    d_out: &[&[f64]],
    grad: &mut [f64],
    d_inputs: &mut [Vec<Vec<f64>>],
) {
    let h = seg.hidden;
    let n = seg.input;
    let g4 = 4 * h;
    let w = &params[seg.w..seg.u];
    let u = &params[seg.u..seg.b];
    let rows = plan.active.first().copied().unwrap_or(0);
    let mut dh_next = vec![0.0; rows * h];
    let mut dc_next = vec![0.0; rows * h];
    for t in (0..plan.active.len()).rev() {
        let a = plan.active[t];
        let st = &trace.steps[t];
        let mut dz = vec![0.0; a * g4];
        for r in 0..a {
            let seq = plan.order[r];
            let inv = 1.0 / plan.lens[r] as f64;
            let g = &st.gates[r * g4..(r + 1) * g4];
            for k in 0..h {
                let dh = d_out[seq][k] * inv + dh_next[r * h + k];
                let c = st.cell[r * h + k];
                let tc = c.tanh();
                let (i, f, gg, o) = (g[k], g[h + k], g[2 * h + k], g[3 * h + k]);
                let c_prev = if t > 0 { trace.steps[t - 1].cell[r * h + k] } else { 0.0 };
                let dc = dc_next[r * h + k] + dh * o * (1.0 - tc * tc);
                dz[r * g4 + k] = dc * gg * i * (1.0 - i);
                dz[r * g4 + h + k] = dc * c_prev * f * (1.0 - f);
                dz[r * g4 + 2 * h + k] = dc * i * (1.0 - gg * gg);
                dz[r * g4 + 3 * h + k] = dh * tc * o * (1.0 - o);
                dc_next[r * h + k] = dc * f;
            }
        }
        {
            let (gw, rest) = grad[seg.w..seg.b + g4].split_at_mut(seg.u - seg.w);
            let (gu, gb) = rest.split_at_mut(seg.b - seg.u);
            // dW += dZᵀ X
            gemm(g4, a, n, &dz, (1, g4 as isize), &st.x, (n as isize, 1), 1.0, gw, n as isize);
            for r in 0..a {
                for (gbi, d) in gb.iter_mut().zip(&dz[r * g4..(r + 1) * g4]) {
                    *gbi += d;
                }
            }
            if t > 0 {
                let hp = &trace.steps[t - 1].hidden;
                gemm(g4, a, h, &dz, (1, g4 as isize), hp, (h as isize, 1), 1.0, gu, h as isize);
                // dH_{t-1} = dZ U
                gemm(a, g4, h, &dz, (g4 as isize, 1), u, (h as isize, 1), 0.0, &mut dh_next[..a * h], h as isize);
            }
        }
        let mut dx = vec![0.0; a * n];
        gemm(a, g4, n, &dz, (g4 as isize, 1), w, (n as isize, 1), 0.0, &mut dx, n as isize);
        for r in 0..a {
            let seq = plan.order[r];
            let pos = position(trace.reverse, plan.lens[r], t);
            for (acc, v) in d_inputs[seq][pos].iter_mut().zip(&dx[r * n..(r + 1) * n]) {
                *acc += v;
            }
        }
    }
}

/// Forward and backward directions over a batch of sequences, each reduced to
/// the mean of its concatenated hidden states.
#[derive(Debug, Clone)]
pub struct BiBatch {
    plan: Plan,
    forward: DirTrace,
    backward: DirTrace,
    /// `2h` output of every sequence, in the caller's order.
    pub out: Vec<Vec<f64>>,
}

pub fn bilstm_forward(params: &[f64], fwd: &LstmSegment, bwd: &LstmSegment, seqs: &[Vec<&[f64]>]) -> BiBatch {
    let h = fwd.hidden;
    let lens: Vec<usize> = seqs.iter().map(Vec::len).collect();
    debug_assert!(lens.iter().all(|&l| l > 0));
    let plan = Plan::new(&lens);
    let forward = direction_forward(params, fwd, &plan, seqs, false);
    let backward = direction_forward(params, bwd, &plan, seqs, true);
    let mut out = vec![vec![0.0; 2 * h]; seqs.len()];
    for (t, &a) in plan.active.iter().enumerate() {
        for r in 0..a {
            let o = &mut out[plan.order[r]];
            let inv = 1.0 / plan.lens[r] as f64;
            for k in 0..h {
                o[k] += inv * forward.steps[t].hidden[r * h + k];
                o[h + k] += inv * backward.steps[t].hidden[r * h + k];
            }
        }
    }
    BiBatch {
        plan,
        forward,
        backward,
        out,
    }
}

/// Accumulates parameter gradients into `grad` and input gradients into
/// `d_inputs[seq][position]`.
pub fn bilstm_backward(
    params: &[f64],
    fwd: &LstmSegment,
    bwd: &LstmSegment,
    trace: &BiBatch,
    d_out: &[Vec<f64>],
    grad: &mut [f64],
    d_inputs: &mut [Vec<Vec<f64>>],
) {
    let h = fwd.hidden;
    let first: Vec<&[f64]> = d_out.iter().map(|d| &d[..h]).collect();
    let second: Vec<&[f64]> = d_out.iter().map(|d| &d[h..]).collect();
    direction_backward(params, fwd, &trace.plan, &trace.forward, &first, grad, d_inputs);
    direction_backward(params, bwd, &trace.plan, &trace.backward, &second, grad, d_inputs);
}

#[cfg(test)]
mod tests {
    use super::super::lstm;
    use super::super::params::{LstmSlot, Model, ModelConfig};
    use super::*;
    use rand::Rng;

    fn setup() -> (Model, Vec<Vec<Vec<f64>>>) {
        let cfg = ModelConfig {
            dim: 6,
            text_dim: 3,
            image_dim: 3,
            leaky_slope: 0.2,
        };
        let mut r = crate::rng::stream(2, "b");
        let m = Model::init(cfg, &mut r).unwrap();
        let seqs = [3usize, 1, 4, 3, 2]
            .iter()
            .map(|&l| (0..l).map(|_| (0..6).map(|_| r.random_range(-1.0..1.0)).collect()).collect())
            .collect();
        (m, seqs)
    }

    #[test]
    fn matches_single_sequence_path() {
        let (m, data) = setup();
        let seqs: Vec<Vec<&[f64]>> = data.iter().map(|s| s.iter().map(Vec::as_slice).collect()).collect();
        let f = m.layout.lstm(LstmSlot::UserForward);
        let b = m.layout.lstm(LstmSlot::UserBackward);
        let batch = bilstm_forward(&m.params, &f, &b, &seqs);
        let h = 3;
        let d_out: Vec<Vec<f64>> = (0..seqs.len()).map(|i| (0..6).map(|k| ((i * 6 + k) as f64 * 0.37).sin()).collect()).collect();
        let mut g_batch = vec![0.0; m.params.len()];
        let mut dx_batch: Vec<Vec<Vec<f64>>> = seqs.iter().map(|s| vec![vec![0.0; 6]; s.len()]).collect();
        bilstm_backward(&m.params, &f, &b, &batch, &d_out, &mut g_batch, &mut dx_batch);

        let mut g_single = vec![0.0; m.params.len()];
        for (i, s) in seqs.iter().enumerate() {
            let l = s.len();
            let tf = lstm::forward(&m.params, &f, s);
            let rev: Vec<&[f64]> = s.iter().rev().copied().collect();
            let tb = lstm::forward(&m.params, &b, &rev);
            for k in 0..h {
                let mf: f64 = (0..l).map(|t| tf.hidden_at(t, h)[k]).sum::<f64>() / l as f64;
                let mb: f64 = (0..l).map(|t| tb.hidden_at(t, h)[k]).sum::<f64>() / l as f64;
                assert!((batch.out[i][k] - mf).abs() < 1e-14);
                assert!((batch.out[i][h + k] - mb).abs() < 1e-14);
            }
            let dhf: Vec<f64> = (0..l).flat_map(|_| d_out[i][..h].iter().map(move |v| v / l as f64)).collect();
            let dhb: Vec<f64> = (0..l).flat_map(|_| d_out[i][h..].iter().map(move |v| v / l as f64)).collect();
            let mut dxf = vec![vec![0.0; 6]; l];
            let mut dxb = vec![vec![0.0; 6]; l];
            lstm::backward(&m.params, &f, s, &tf, &dhf, &mut g_single, Some(&mut dxf));
            lstm::backward(&m.params, &b, &rev, &tb, &dhb, &mut g_single, Some(&mut dxb));
            for p in 0..l {
                for k in 0..6 {
                    let want = dxf[p][k] + dxb[l - 1 - p][k];
                    assert!((dx_batch[i][p][k] - want).abs() < 1e-13);
                }
            }
        }
        for (a, b) in g_batch.iter().zip(&g_single) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn plan_orders_longest_first() {
        let p = Plan::new(&[2, 5, 1, 5]);
        assert_eq!(p.order, vec![1, 3, 0, 2]);
        assert_eq!(p.active, vec![4, 3, 2, 2, 2]);
    }
}
