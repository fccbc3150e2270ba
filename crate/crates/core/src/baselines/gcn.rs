//! Two-layer graph convolutional network that treats users and tweets as one
//! node type, trained contrastively on random-walk co-occurrences.

use nalgebra::DMatrix;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::concat::{kind_features, FeatureContext};
use super::pca::pca_reduce_padded;
use crate::error::{Error, Result};
use crate::graph::{GraphStructure, NodeKind};
use crate::model::train::Adam;
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GcnConfig {
    /// Width the user and tweet features are each reduced to before propagation.
    pub feature_dim: usize,
    pub hidden: usize,
    pub dim: usize,
    pub steps: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub temperature: f64,
    pub seed: u64,
}

impl Default for GcnConfig {
    fn default() -> Self {
        GcnConfig {
            feature_dim: 128,
            hidden: 128,
            dim: 128,
            steps: 300,
            batch_size: 256,
            learning_rate: 1e-3,
            temperature: 0.1,
            seed: 0,
        }
    }
}

/// Sparse `D^{-1/2}(A + I)D^{-1/2}` over distinct neighbours.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedAdjacency {
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl NormalizedAdjacency {
    pub fn from_lists(neighbors: &[Vec<usize>]) -> Self {
        let deg: Vec<f64> = neighbors.iter().map(|n| n.len() as f64 + 1.0).collect();
        let rows = neighbors
            .iter()
            .enumerate()
            .map(|(i, ns)| {
                let mut row: Vec<(usize, f64)> = ns.iter().map(|&j| (j, 1.0 / (deg[i] * deg[j]).sqrt())).collect();
                row.push((i, 1.0 / deg[i]));
                row.sort_by_key(|e| e.0);
                row
            })
            .collect();
        NormalizedAdjacency { rows }
    }

    pub fn from_graph(graph: &GraphStructure) -> Self {
        let lists: Vec<Vec<usize>> = (0..graph.node_count()).map(|v| graph.distinct_neighbors(v)).collect();
        Self::from_lists(&lists)
    }

    pub fn apply(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(x.nrows(), x.ncols());
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                for c in 0..x.ncols() {
                    out[(i, c)] += w * x[(j, c)];
                }
            }
        }
        out
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let n = self.rows.len();
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                m[(i, j)] = w;
            }
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct GcnParams {
    pub w1: DMatrix<f64>,
    pub b1: Vec<f64>,
    pub w2: DMatrix<f64>,
    pub b2: Vec<f64>,
}

impl GcnParams {
    fn init<R: Rng>(input: usize, hidden: usize, out: usize, rng: &mut R) -> Self {
        let glorot = |r: usize, c: usize, rng: &mut R| {
            let a = (6.0 / (r + c) as f64).sqrt();
            DMatrix::from_fn(r, c, |_, _| rng.random_range(-a..a))
        };
        GcnParams {
            w1: glorot(input, hidden, rng),
            b1: vec![0.0; hidden],
            w2: glorot(hidden, out, rng),
            b2: vec![0.0; out],
        }
    }

    fn flat(&self) -> Vec<f64> {
        let mut v = self.w1.as_slice().to_vec();
        v.extend(&self.b1);
        v.extend(self.w2.as_slice());
        v.extend(&self.b2);
        v
    }

    fn set_flat(&mut self, v: &[f64]) {
        let (a, rest) = v.split_at(self.w1.len());
        self.w1.copy_from_slice(a);
        let (b, rest) = rest.split_at(self.b1.len());
        self.b1.copy_from_slice(b);
        let (c, d) = rest.split_at(self.w2.len());
        self.w2.copy_from_slice(c);
        self.b2.copy_from_slice(d);
    }
}

struct Forward {
    h1_pre: DMatrix<f64>,
    ah1: DMatrix<f64>,
    z: DMatrix<f64>,
}

fn add_bias(m: &mut DMatrix<f64>, b: &[f64]) {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            m[(r, c)] += b[c];
        }
    }
}

/// `propagated` is `ÂX`, fixed for the whole run.
fn forward(p: &GcnParams, adj: &NormalizedAdjacency, propagated: &DMatrix<f64>) -> Forward {
    let mut h1_pre = propagated * &p.w1;
    add_bias(&mut h1_pre, &p.b1);
    let h1 = h1_pre.map(|x| x.max(0.0));
    let ah1 = adj.apply(&h1);
    let mut z = &ah1 * &p.w2;
    add_bias(&mut z, &p.b2);
    Forward { h1_pre, ah1, z }
}

/// InfoNCE over `(anchor, positive)` pairs with the other positives in the batch
/// as negatives, on L2-normalised embeddings. Returns the mean loss and `dL/dZ`.
pub fn info_nce(z: &DMatrix<f64>, pairs: &[(usize, usize)], tau: f64) -> (f64, DMatrix<f64>) {
    let b = pairs.len();
    let d = z.ncols();
    let unit = |i: usize| -> (Vec<f64>, f64) {
        let row: Vec<f64> = z.row(i).iter().copied().collect();
        let n = crate::linalg::norm(&row).max(1e-12);
        (row.iter().map(|x| x / n).collect(), n)
    };
    let anchors: Vec<(Vec<f64>, f64)> = pairs.iter().map(|p| unit(p.0)).collect();
    let positives: Vec<(Vec<f64>, f64)> = pairs.iter().map(|p| unit(p.1)).collect();
    let mut loss = 0.0;
    let mut d_a = vec![vec![0.0; d]; b];
    let mut d_p = vec![vec![0.0; d]; b];
    for i in 0..b {
        let logits: Vec<f64> = positives
            .iter()
            .map(|p| crate::linalg::dot(&anchors[i].0, &p.0) / tau)
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = logits.iter().map(|l| (l - max).exp()).sum();
        loss += max + sum.ln() - logits[i];
        for j in 0..b {
            let g = ((logits[j] - max).exp() / sum - f64::from(u8::from(i == j))) / (b as f64 * tau);
            crate::linalg::axpy(g, &positives[j].0, &mut d_a[i]);
            crate::linalg::axpy(g, &anchors[i].0, &mut d_p[j]);
        }
    }
    let mut dz = DMatrix::zeros(z.nrows(), d);
    let mut push = |node: usize, unit: &(Vec<f64>, f64), du: &[f64]| {
        let proj = crate::linalg::dot(&unit.0, du);
        for c in 0..d {
            dz[(node, c)] += (du[c] - unit.0[c] * proj) / unit.1;
        }
    };
    for i in 0..b {
        push(pairs[i].0, &anchors[i], &d_a[i]);
        push(pairs[i].1, &positives[i], &d_p[i]);
    }
    (loss / b as f64, dz)
}

fn gradients(
    p: &GcnParams,
    adj: &NormalizedAdjacency,
    propagated: &DMatrix<f64>,
    pairs: &[(usize, usize)],
    tau: f64,
) -> (f64, Vec<f64>) {
    let f = forward(p, adj, propagated);
    let (loss, dz) = info_nce(&f.z, pairs, tau);
    let dw2 = f.ah1.transpose() * &dz;
    let db2: Vec<f64> = dz.column_iter().map(|c| c.sum()).collect();
    let d_ah1 = &dz * p.w2.transpose();
    // Â is symmetric, so Âᵀ = Â
    let mut dh1 = adj.apply(&d_ah1);
    dh1.zip_apply(&f.h1_pre, |g, pre| {
        if pre <= 0.0 {
            *g = 0.0
        }
    });
    let dw1 = propagated.transpose() * &dh1;
    let db1: Vec<f64> = dh1.column_iter().map(|c| c.sum()).collect();
    let mut g = dw1.as_slice().to_vec();
    g.extend(db1);
    g.extend(dw2.as_slice());
    g.extend(db2);
    (loss, g)
}

#[derive(Debug, Clone)]
pub struct GcnOutcome {
    pub embeddings: Vec<Vec<f64>>,
    pub losses: Vec<f64>,
}

/// Trains the GCN on `features` (one row per node) and returns the output of the
/// second layer for every node.
pub fn gcn_train(
    adj: &NormalizedAdjacency,
    features: &[Vec<f64>],
    pairs: &[(usize, usize)],
    config: &GcnConfig,
) -> Result<GcnOutcome> {
    let n = features.len();
    if n != adj.rows.len() {
        return Err(Error::Dimension(format!("{n} feature rows for {} nodes", adj.rows.len())));
    }
    let input = features.first().map_or(0, Vec::len);
    let x = DMatrix::from_fn(n, input, |i, j| features[i][j]);
    let propagated = adj.apply(&x);
    let mut init_rng = rng::stream(config.seed, "gcn.init");
    let mut params = GcnParams::init(input, config.hidden, config.dim, &mut init_rng);
    let mut flat = params.flat();
    let mut adam = Adam::new(flat.len(), config.learning_rate);
    let mut losses = Vec::with_capacity(config.steps);
    if config.steps > 0 && pairs.is_empty() {
        return Err(Error::Invalid("GCN training needs at least one positive pair".into()));
    }
    let stream = rng::stream_seed(config.seed, "gcn.batches");
    for step in 0..config.steps {
        let mut r = rng::indexed(stream, step as u64);
        let batch: Vec<(usize, usize)> = (0..config.batch_size)
            .map(|_| pairs[r.random_range(0..pairs.len())])
            .collect();
        let (loss, g) = gradients(&params, adj, &propagated, &batch, config.temperature);
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("GCN loss became non-finite at step {step}")));
        }
        losses.push(loss);
        adam.step(&mut flat, &g);
        params.set_flat(&flat);
    }
    let z = forward(&params, adj, &propagated).z;
    Ok(GcnOutcome {
        embeddings: z.row_iter().map(|r| r.iter().copied().collect()).collect(),
        losses,
    })
}

/// User rows get UserInfo features and tweet rows Textual ⊕ Visual, each reduced
/// by its own PCA to `width` and zero-padded when the data has lower rank.
pub fn gcn_node_features(ctx: &FeatureContext, width: usize) -> Result<Vec<Vec<f64>>> {
    let mut out = Vec::with_capacity(ctx.graph.node_count());
    for kind in [NodeKind::User, NodeKind::Tweet] {
        let raw = kind_features(ctx, kind);
        match raw.len() {
            0 => {}
            1 => out.push(vec![0.0; width]),
            _ => out.extend(pca_reduce_padded(&raw, width)?),
        }
    }
    Ok(out)
}

pub fn gcn_embed(
    ctx: &FeatureContext,
    pairs: &[(usize, usize)],
    config: &GcnConfig,
) -> Result<GcnOutcome> {
    let features = gcn_node_features(ctx, config.feature_dim)?;
    gcn_train(&NormalizedAdjacency::from_graph(ctx.graph), &features, pairs, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_adjacency() {
        let a = NormalizedAdjacency::from_lists(&[vec![1], vec![0]]).dense();
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[(i, j)] - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn adjacency_is_symmetric() {
        let lists = vec![vec![1, 2], vec![0], vec![0, 3], vec![2]];
        let a = NormalizedAdjacency::from_lists(&lists).dense();
        assert_eq!(a, a.transpose());
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let lists = vec![vec![1, 2], vec![0], vec![0, 3], vec![2], vec![]];
        let adj = NormalizedAdjacency::from_lists(&lists);
        let mut r = rng::stream(9, "t");
        let x = DMatrix::from_fn(5, 3, |_, _| r.random_range(-1.0..1.0));
        let prop = adj.apply(&x);
        let mut p = GcnParams::init(3, 4, 3, &mut r);
        p.b1 = vec![0.1, -0.05, 0.2, 0.0];
        let pairs = [(0, 1), (2, 3), (4, 0)];
        let (_, g) = gradients(&p, &adj, &prop, &pairs, 0.5);
        let base = p.flat();
        let h = 1e-6;
        for i in 0..base.len() {
            let mut q = p.clone();
            let mut v = base.clone();
            v[i] += h;
            q.set_flat(&v);
            let up = gradients(&q, &adj, &prop, &pairs, 0.5).0;
            v[i] -= 2.0 * h;
            q.set_flat(&v);
            let down = gradients(&q, &adj, &prop, &pairs, 0.5).0;
            let fd = (up - down) / (2.0 * h);
            assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()), "param {i}: {fd} vs {}", g[i]);
        }
    }

    #[test]
    fn edgeless_graph_uses_own_features_only() {
        let adj = NormalizedAdjacency::from_lists(&[vec![], vec![], vec![]]);
        let feats = vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]];
        let cfg = GcnConfig {
            hidden: 4,
            dim: 3,
            steps: 5,
            batch_size: 2,
            ..Default::default()
        };
        let out = gcn_train(&adj, &feats, &[(0, 2), (1, 2)], &cfg).unwrap();
        assert_eq!(out.embeddings[0], out.embeddings[1]);
        let again = gcn_train(&adj, &feats, &[(0, 2), (1, 2)], &cfg).unwrap();
        assert_eq!(out.embeddings, again.embeddings);
    }
}
