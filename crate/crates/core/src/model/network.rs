//! Forward and backward passes of the encoder.
//!
//! - content: project every attribute, run a Bi-LSTM over the attribute sequence,
//!   average the concatenated directional states;
//! - neighbours: per type, a Bi-LSTM over the neighbours' content embeddings,
//!   averaged the same way;
//! - combination: softmax over `LeakyReLU(uᵀ[self ⊕ candidate])` for the node's
//!   own content and each available neighbour aggregate.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::encoders::{AttributeSet, AttributeTag};
use crate::error::{Error, Result};
use crate::graph::NodeKind;
use crate::linalg::{axpy, dot, sigmoid, softplus};
use crate::sampling::NeighborSets;

use super::batched;
use super::lstm::{self, LstmTrace};
use super::params::{LstmSlot, Model};

/// Number of fixed work chunks in the batched backward pass. Partial gradients are
/// summed in chunk order, so results do not depend on the thread count.
const CHUNKS: usize = 8;

#[derive(Debug, Clone)]
pub struct BiTrace {
    pub forward: LstmTrace,
    pub backward: LstmTrace,
    /// Mean over positions of `[h_fwd ⊕ h_bwd]`.
    pub out: Vec<f64>,
}

fn bilstm_forward(model: &Model, fwd: LstmSlot, bwd: LstmSlot, inputs: &[&[f64]]) -> BiTrace {
    let h = model.config.hidden();
    let steps = inputs.len();
    let f = lstm::forward(&model.params, &model.layout.lstm(fwd), inputs);
    let rev: Vec<&[f64]> = inputs.iter().rev().copied().collect();
    let b = lstm::forward(&model.params, &model.layout.lstm(bwd), &rev);
    let mut out = vec![0.0; 2 * h];
    let inv = 1.0 / steps as f64;
    for t in 0..steps {
        axpy(inv, f.hidden_at(t, h), &mut out[..h]);
        axpy(inv, b.hidden_at(t, h), &mut out[h..]);
    }
    BiTrace {
        forward: f,
        backward: b,
        out,
    }
}

fn bilstm_backward(
    model: &Model,
    fwd: LstmSlot,
    bwd: LstmSlot,
    inputs: &[&[f64]],
    trace: &BiTrace,
    d_out: &[f64],
    grad: &mut [f64],
    d_inputs: Option<&mut [Vec<f64>]>,
) {
    let h = model.config.hidden();
    let d = model.config.dim;
    let steps = inputs.len();
    let inv = 1.0 / steps as f64;
    let mut dh_f = vec![0.0; steps * h];
    let mut dh_b = vec![0.0; steps * h];
    for t in 0..steps {
        for k in 0..h {
            dh_f[t * h + k] = d_out[k] * inv;
            dh_b[t * h + k] = d_out[h + k] * inv;
        }
    }
    let rev: Vec<&[f64]> = inputs.iter().rev().copied().collect();
    match d_inputs {
        Some(dx) => {
            lstm::backward(&model.params, &model.layout.lstm(fwd), inputs, &trace.forward, &dh_f, grad, Some(dx));
            let mut dx_rev = vec![vec![0.0; d]; steps];
            lstm::backward(&model.params, &model.layout.lstm(bwd), &rev, &trace.backward, &dh_b, grad, Some(&mut dx_rev));
            for (t, v) in dx_rev.iter().enumerate() {
                axpy(1.0, v, &mut dx[steps - 1 - t]);
            }
        }
        None => {
            lstm::backward(&model.params, &model.layout.lstm(fwd), inputs, &trace.forward, &dh_f, grad, None);
            lstm::backward(&model.params, &model.layout.lstm(bwd), &rev, &trace.backward, &dh_b, grad, None);
        }
    }
}

#[derive(Debug, Clone)]
pub struct ContentTrace {
    projected: Vec<Vec<f64>>,
    bi: BiTrace,
}

impl ContentTrace {
    pub fn output(&self) -> &[f64] {
        &self.bi.out
    }
}

fn project(model: &Model, tag: AttributeTag, x: &[f64]) -> Vec<f64> {
    let d = model.config.dim;
    let seg = model.layout.projection(tag);
    let mut out = model.params[seg.b..seg.b + d].to_vec();
    for (j, &xj) in x.iter().enumerate() {
        if xj != 0.0 {
            axpy(xj, &model.params[seg.w + j * d..seg.w + (j + 1) * d], &mut out);
        }
    }
    out
}

/// Content embedding of a node from its attribute sequence.
pub fn content_forward(model: &Model, attrs: &AttributeSet) -> Result<ContentTrace> {
    check_attributes(model, attrs)?;
    let projected: Vec<Vec<f64>> = attrs.attributes.iter().map(|(tag, x)| project(model, *tag, x)).collect();
    let inputs: Vec<&[f64]> = projected.iter().map(Vec::as_slice).collect();
    let bi = bilstm_forward(model, LstmSlot::ContentForward, LstmSlot::ContentBackward, &inputs);
    Ok(ContentTrace { projected, bi })
}

pub fn content_backward(model: &Model, attrs: &AttributeSet, trace: &ContentTrace, d_out: &[f64], grad: &mut [f64]) {
    let d = model.config.dim;
    let inputs: Vec<&[f64]> = trace.projected.iter().map(Vec::as_slice).collect();
    let mut d_proj = vec![vec![0.0; d]; inputs.len()];
    bilstm_backward(
        model,
        LstmSlot::ContentForward,
        LstmSlot::ContentBackward,
        &inputs,
        &trace.bi,
        d_out,
        grad,
        Some(&mut d_proj),
    );
    for ((tag, x), dp) in attrs.attributes.iter().zip(&d_proj) {
        let seg = model.layout.projection(*tag);
        axpy(1.0, dp, &mut grad[seg.b..seg.b + d]);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, dp, &mut grad[seg.w + j * d..seg.w + (j + 1) * d]);
            }
        }
    }
}

/// Typed neighbour aggregate; `None` for an empty neighbour list.
pub fn aggregate_forward(model: &Model, kind: NodeKind, neighbors: &[&[f64]]) -> Option<BiTrace> {
    if neighbors.is_empty() {
        return None;
    }
    let (f, b) = LstmSlot::neighbor_pair(kind);
    Some(bilstm_forward(model, f, b, neighbors))
}

pub fn aggregate_backward(
    model: &Model,
    kind: NodeKind,
    neighbors: &[&[f64]],
    trace: &BiTrace,
    d_out: &[f64],
    grad: &mut [f64],
    d_neighbors: &mut [Vec<f64>],
) {
    let (f, b) = LstmSlot::neighbor_pair(kind);
    bilstm_backward(model, f, b, neighbors, trace, d_out, grad, Some(d_neighbors));
}

/// Which term of the combination a coefficient belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Term {
    SelfContent,
    Users,
    Tweets,
}

#[derive(Debug, Clone)]
pub struct AttentionTrace {
    pub terms: Vec<Term>,
    pub logits_pre: Vec<f64>,
    pub alpha: Vec<f64>,
}

fn leaky(x: f64, slope: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        slope * x
    }
}

/// Returns the combined embedding and the attention trace.
pub fn attention_forward(
    u: &[f64],
    slope: f64,
    content: &[f64],
    users: Option<&[f64]>,
    tweets: Option<&[f64]>,
) -> (Vec<f64>, AttentionTrace) {
    let d = content.len();
    let (u_self, u_cand) = u.split_at(d);
    let self_score = dot(u_self, content);
    let mut terms = vec![Term::SelfContent];
    let mut cands: Vec<&[f64]> = vec![content];
    if let Some(x) = users {
        terms.push(Term::Users);
        cands.push(x);
    }
    if let Some(x) = tweets {
        terms.push(Term::Tweets);
        cands.push(x);
    }
    let pre: Vec<f64> = cands.iter().map(|c| self_score + dot(u_cand, c)).collect();
    let logits: Vec<f64> = pre.iter().map(|&p| leaky(p, slope)).collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    let alpha: Vec<f64> = exps.iter().map(|e| e / total).collect();
    let mut e = vec![0.0; d];
    for (a, c) in alpha.iter().zip(&cands) {
        axpy(*a, c, &mut e);
    }
    (
        e,
        AttentionTrace {
            terms,
            logits_pre: pre,
            alpha,
        },
    )
}

#[allow(clippy::too_many_arguments)]
pub fn attention_backward(
    u: &[f64],
    slope: f64,
    content: &[f64],
    users: Option<&[f64]>,
    tweets: Option<&[f64]>,
    trace: &AttentionTrace,
    d_e: &[f64],
    d_u: &mut [f64],
    d_content: &mut [f64],
    d_users: &mut [f64],
    d_tweets: &mut [f64],
) {
    let d = content.len();
    let (u_self, u_cand) = u.split_at(d);
    let cand = |t: Term| -> &[f64] {
        match t {
            Term::SelfContent => content,
            Term::Users => users.expect("users term without aggregate"),
            Term::Tweets => tweets.expect("tweets term without aggregate"),
        }
    };
    let d_alpha: Vec<f64> = trace.terms.iter().map(|t| dot(d_e, cand(*t))).collect();
    let weighted: f64 = trace.alpha.iter().zip(&d_alpha).map(|(a, g)| a * g).sum();
    for (i, &t) in trace.terms.iter().enumerate() {
        let a = trace.alpha[i];
        let d_logit = a * (d_alpha[i] - weighted);
        let d_pre = d_logit * if trace.logits_pre[i] > 0.0 { 1.0 } else { slope };
        let target: &mut [f64] = match t {
            Term::SelfContent => &mut *d_content,
            Term::Users => &mut *d_users,
            Term::Tweets => &mut *d_tweets,
        };
        axpy(a, d_e, target);
        axpy(d_pre, u_cand, target);
        axpy(d_pre, u_self, d_content);
        let (du_self, du_cand) = d_u.split_at_mut(d);
        axpy(d_pre, content, du_self);
        axpy(d_pre, cand(t), du_cand);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossSign {
    /// `-[log σ(E_pos·E_v) + Σ log σ(-E_neg·E_v)]`, minimised.
    Standard,
    /// The un-negated expression, minimised as literally written.
    PaperLiteral,
}

impl std::str::FromStr for LossSign {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(LossSign::Standard),
            "paper-literal" => Ok(LossSign::PaperLiteral),
            other => Err(Error::Invalid(format!("unknown loss sign {other:?}"))),
        }
    }
}

impl std::fmt::Display for LossSign {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LossSign::Standard => "standard",
            LossSign::PaperLiteral => "paper-literal",
        })
    }
}

/// Loss of one (v, pos, negatives) group from the dot products.
pub fn nce_loss_from_scores(pos_score: f64, neg_scores: &[f64], sign: LossSign) -> f64 {
    let l = softplus(-pos_score) + neg_scores.iter().map(|&s| softplus(s)).sum::<f64>();
    match sign {
        LossSign::Standard => l,
        LossSign::PaperLiteral => -l,
    }
}

pub fn nce_loss(e_v: &[f64], e_pos: &[f64], e_neg: &[f64]) -> f64 {
    nce_loss_from_scores(dot(e_pos, e_v), &[dot(e_neg, e_v)], LossSign::Standard)
}

/// Derivatives of the loss w.r.t. the positive and each negative score.
fn nce_score_grads(pos_score: f64, neg_scores: &[f64], sign: LossSign) -> (f64, Vec<f64>) {
    let s = match sign {
        LossSign::Standard => 1.0,
        LossSign::PaperLiteral => -1.0,
    };
    (
        s * (sigmoid(pos_score) - 1.0),
        neg_scores.iter().map(|&n| s * sigmoid(n)).collect(),
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Triple {
    pub center: usize,
    pub positive: usize,
    pub negatives: Vec<usize>,
}

/// Node embedding and its attention coefficients.
#[derive(Debug, Clone)]
pub struct EmbeddingTrace {
    pub node: usize,
    pub attention: AttentionTrace,
    pub embedding: Vec<f64>,
}

/// Content embeddings for a set of nodes, addressable by global index.
pub struct ContentTable {
    index: HashMap<usize, usize>,
    pub nodes: Vec<usize>,
    projected: Vec<Vec<Vec<f64>>>,
    batch: batched::BiBatch,
}

fn check_attributes(model: &Model, attrs: &AttributeSet) -> Result<()> {
    if attrs.is_empty() {
        return Err(Error::Invalid("attribute set is empty".into()));
    }
    for (tag, x) in &attrs.attributes {
        let want = model.layout.projection(*tag).in_dim;
        if x.len() != want {
            return Err(Error::Dimension(format!("{tag:?} has length {}, model expects {want}", x.len())));
        }
    }
    Ok(())
}

impl ContentTable {
    pub fn build(model: &Model, attrs: &[AttributeSet], nodes: Vec<usize>) -> Result<Self> {
        let projected = nodes
            .par_iter()
            .map(|&v| {
                check_attributes(model, &attrs[v])?;
                Ok(attrs[v].attributes.iter().map(|(tag, x)| project(model, *tag, x)).collect())
            })
            .collect::<Result<Vec<Vec<Vec<f64>>>>>()?;
        let seqs: Vec<Vec<&[f64]>> = projected.iter().map(|p| p.iter().map(Vec::as_slice).collect()).collect();
        let batch = batched::bilstm_forward(
            &model.params,
            &model.layout.lstm(LstmSlot::ContentForward),
            &model.layout.lstm(LstmSlot::ContentBackward),
            &seqs,
        );
        let index = nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
        Ok(ContentTable {
            index,
            nodes,
            projected,
            batch,
        })
    }

    pub fn slot(&self, v: usize) -> usize {
        self.index[&v]
    }

    pub fn output(&self, v: usize) -> &[f64] {
        &self.batch.out[self.index[&v]]
    }

    /// Accumulates parameter gradients given the loss gradient w.r.t. each
    /// slot's content embedding.
    fn backward(&self, model: &Model, attrs: &[AttributeSet], d_content: &[Vec<f64>], grad: &mut [f64]) {
        let d = model.config.dim;
        let mut d_proj: Vec<Vec<Vec<f64>>> = self.projected.iter().map(|p| vec![vec![0.0; d]; p.len()]).collect();
        batched::bilstm_backward(
            &model.params,
            &model.layout.lstm(LstmSlot::ContentForward),
            &model.layout.lstm(LstmSlot::ContentBackward),
            &self.batch,
            d_content,
            grad,
            &mut d_proj,
        );
        let total = grad.len();
        let parts: Vec<Vec<f64>> = chunk_ranges(self.nodes.len())
            .into_par_iter()
            .map(|r| {
                let mut g = vec![0.0; total];
                for i in r {
                    if d_content[i].iter().all(|x| *x == 0.0) {
                        continue;
                    }
                    for ((tag, x), dp) in attrs[self.nodes[i]].attributes.iter().zip(&d_proj[i]) {
                        let seg = model.layout.projection(*tag);
                        axpy(1.0, dp, &mut g[seg.b..seg.b + d]);
                        for (j, &xj) in x.iter().enumerate() {
                            if xj != 0.0 {
                                axpy(xj, dp, &mut g[seg.w + j * d..seg.w + (j + 1) * d]);
                            }
                        }
                    }
                }
                g
            })
            .collect();
        sum_in_order(parts, grad);
    }
}

/// Neighbour aggregates of one type for a list of nodes; nodes without
/// neighbours of that type are absent.
struct AggregateBatch {
    /// Position in the batch for each node, if it has neighbours.
    member: Vec<Option<usize>>,
    inputs: Vec<Vec<usize>>,
    batch: batched::BiBatch,
}

impl AggregateBatch {
    fn build(model: &Model, kind: NodeKind, neighbors: &NeighborSets, content: &ContentTable, nodes: &[usize]) -> Self {
        let mut member = Vec::with_capacity(nodes.len());
        let mut inputs = Vec::new();
        for &v in nodes {
            let ids = neighbors.ids(kind, v);
            if ids.is_empty() {
                member.push(None);
            } else {
                member.push(Some(inputs.len()));
                inputs.push(ids);
            }
        }
        let seqs: Vec<Vec<&[f64]>> = inputs.iter().map(|ids| ids.iter().map(|&n| content.output(n)).collect()).collect();
        let (f, b) = LstmSlot::neighbor_pair(kind);
        let batch = batched::bilstm_forward(&model.params, &model.layout.lstm(f), &model.layout.lstm(b), &seqs);
        AggregateBatch { member, inputs, batch }
    }

    fn output(&self, i: usize) -> Option<&[f64]> {
        self.member[i].map(|m| self.batch.out[m].as_slice())
    }

    fn backward(
        &self,
        model: &Model,
        kind: NodeKind,
        content: &ContentTable,
        d_out: &[Vec<f64>],
        grad: &mut [f64],
        d_content: &mut [Vec<f64>],
    ) {
        let d = model.config.dim;
        let mut d_agg = vec![Vec::new(); self.inputs.len()];
        for (i, m) in self.member.iter().enumerate() {
            if let Some(m) = m {
                d_agg[*m] = d_out[i].clone();
            }
        }
        let mut d_in: Vec<Vec<Vec<f64>>> = self.inputs.iter().map(|ids| vec![vec![0.0; d]; ids.len()]).collect();
        let (f, b) = LstmSlot::neighbor_pair(kind);
        batched::bilstm_backward(&model.params, &model.layout.lstm(f), &model.layout.lstm(b), &self.batch, &d_agg, grad, &mut d_in);
        for (ids, gs) in self.inputs.iter().zip(&d_in) {
            for (&n, g) in ids.iter().zip(gs) {
                axpy(1.0, g, &mut d_content[content.slot(n)]);
            }
        }
    }
}

/// Final embeddings of a node list, with the state needed to backpropagate.
struct EmbeddingBatch {
    nodes: Vec<usize>,
    users: AggregateBatch,
    tweets: AggregateBatch,
    traces: Vec<EmbeddingTrace>,
}

impl EmbeddingBatch {
    fn build(model: &Model, neighbors: &NeighborSets, content: &ContentTable, nodes: Vec<usize>) -> Self {
        let users = AggregateBatch::build(model, NodeKind::User, neighbors, content, &nodes);
        let tweets = AggregateBatch::build(model, NodeKind::Tweet, neighbors, content, &nodes);
        let traces = nodes
            .iter()
            .enumerate()
            .map(|(i, &v)| {
                let (embedding, attention) = attention_forward(
                    model.attention_vector(),
                    model.config.leaky_slope,
                    content.output(v),
                    users.output(i),
                    tweets.output(i),
                );
                EmbeddingTrace {
                    node: v,
                    attention,
                    embedding,
                }
            })
            .collect();
        EmbeddingBatch {
            nodes,
            users,
            tweets,
            traces,
        }
    }

    /// Returns the loss gradient w.r.t. every content slot.
    fn backward(&self, model: &Model, content: &ContentTable, d_e: &[Vec<f64>], grad: &mut [f64]) -> Vec<Vec<f64>> {
        let d = model.config.dim;
        let a = model.layout.attention;
        let n = self.nodes.len();
        let mut d_content = vec![vec![0.0; d]; content.nodes.len()];
        let mut d_users = vec![vec![0.0; d]; n];
        let mut d_tweets = vec![vec![0.0; d]; n];
        for (i, t) in self.traces.iter().enumerate() {
            let mut d_self = vec![0.0; d];
            attention_backward(
                &model.params[a..a + 2 * d],
                model.config.leaky_slope,
                content.output(t.node),
                self.users.output(i),
                self.tweets.output(i),
                &t.attention,
                &d_e[i],
                &mut grad[a..a + 2 * d],
                &mut d_self,
                &mut d_users[i],
                &mut d_tweets[i],
            );
            axpy(1.0, &d_self, &mut d_content[content.slot(t.node)]);
        }
        self.users.backward(model, NodeKind::User, content, &d_users, grad, &mut d_content);
        self.tweets.backward(model, NodeKind::Tweet, content, &d_tweets, grad, &mut d_content);
        d_content
    }
}

#[derive(Debug, Clone)]
pub struct BatchResult {
    /// Mean loss over the batch's triples.
    pub loss: f64,
    pub per_triple: Vec<f64>,
    /// Positive and negative scores of each triple.
    pub scores: Vec<(f64, Vec<f64>)>,
}

fn chunk_ranges(n: usize) -> Vec<std::ops::Range<usize>> {
    let size = n.div_ceil(CHUNKS).max(1);
    (0..n).step_by(size).map(|s| s..(s + size).min(n)).collect()
}

fn sum_in_order(parts: Vec<Vec<f64>>, into: &mut [f64]) {
    for p in parts {
        axpy(1.0, &p, into);
    }
}

/// Forward pass for a batch; with `grad` present, also accumulates the gradient
/// of the mean batch loss.
pub fn batch_loss(
    model: &Model,
    attrs: &[AttributeSet],
    neighbors: &NeighborSets,
    triples: &[Triple],
    sign: LossSign,
    grad: Option<&mut [f64]>,
) -> Result<BatchResult> {
    let d = model.config.dim;
    let mut e_nodes: Vec<usize> = triples
        .iter()
        .flat_map(|t| std::iter::once(t.center).chain(std::iter::once(t.positive)).chain(t.negatives.iter().copied()))
        .collect();
    e_nodes.sort_unstable();
    e_nodes.dedup();
    let mut c_nodes: Vec<usize> = e_nodes
        .iter()
        .flat_map(|&v| {
            std::iter::once(v)
                .chain(neighbors.user[v].iter().map(|x| x.0))
                .chain(neighbors.tweet[v].iter().map(|x| x.0))
        })
        .collect();
    c_nodes.sort_unstable();
    c_nodes.dedup();

    let content = ContentTable::build(model, attrs, c_nodes)?;
    let emb = EmbeddingBatch::build(model, neighbors, &content, e_nodes);
    let e_slot: HashMap<usize, usize> = emb.nodes.iter().enumerate().map(|(i, &v)| (v, i)).collect();
    let e = |v: &usize| emb.traces[e_slot[v]].embedding.as_slice();

    let scale = 1.0 / triples.len().max(1) as f64;
    let mut per_triple = Vec::with_capacity(triples.len());
    let mut scores = Vec::with_capacity(triples.len());
    let mut d_e = vec![vec![0.0; d]; emb.nodes.len()];
    for t in triples {
        let (ev, ep) = (e(&t.center), e(&t.positive));
        let ps = dot(ev, ep);
        let ns: Vec<f64> = t.negatives.iter().map(|n| dot(ev, e(n))).collect();
        per_triple.push(nce_loss_from_scores(ps, &ns, sign));
        let (gp, gn) = nce_score_grads(ps, &ns, sign);
        let (cv, cp) = (e_slot[&t.center], e_slot[&t.positive]);
        axpy(gp * scale, ep, &mut d_e[cv]);
        axpy(gp * scale, ev, &mut d_e[cp]);
        for (n, g) in t.negatives.iter().zip(&gn) {
            axpy(g * scale, e(n), &mut d_e[cv]);
            axpy(g * scale, ev, &mut d_e[e_slot[n]]);
        }
        scores.push((ps, ns));
    }
    let loss = per_triple.iter().sum::<f64>() * scale;

    if let Some(grad) = grad {
        let d_content = emb.backward(model, &content, &d_e, grad);
        content.backward(model, attrs, &d_content, grad);
    }
    Ok(BatchResult { loss, per_triple, scores })
}

/// Embeddings and attention coefficients for every node.
pub fn embed_all(model: &Model, attrs: &[AttributeSet], neighbors: &NeighborSets) -> Result<Vec<EmbeddingTrace>> {
    let content = ContentTable::build(model, attrs, (0..attrs.len()).collect())?;
    Ok(EmbeddingBatch::build(model, neighbors, &content, (0..attrs.len()).collect()).traces)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::ModelConfig;

    fn small() -> ModelConfig {
        ModelConfig {
            dim: 8,
            text_dim: 5,
            image_dim: 3,
            leaky_slope: 0.2,
        }
    }

    fn user_attrs(seed: u64) -> AttributeSet {
        use rand::Rng;
        let mut r = crate::rng::stream(seed, "attrs");
        AttributeSet {
            kind: NodeKind::User,
            attributes: vec![
                (AttributeTag::UserScalars, (0..6).map(|_| r.random_range(-1.0..1.0)).collect()),
                (AttributeTag::Description, (0..5).map(|_| r.random_range(-1.0..1.0)).collect()),
            ],
        }
    }

    #[test]
    fn zero_model_gives_zero_content() {
        let m = Model::zeros(ModelConfig::default()).unwrap();
        let attrs = AttributeSet {
            kind: NodeKind::User,
            attributes: vec![
                (AttributeTag::UserScalars, vec![1.0; 6]),
                (AttributeTag::Description, vec![0.5; 384]),
            ],
        };
        let t = content_forward(&m, &attrs).unwrap();
        assert_eq!(t.output().len(), 128);
        assert!(t.output().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn empty_attribute_set_is_an_error() {
        let m = Model::zeros(small()).unwrap();
        let a = AttributeSet {
            kind: NodeKind::User,
            attributes: vec![],
        };
        assert!(content_forward(&m, &a).is_err());
    }

    #[test]
    fn single_attribute_mean_is_that_position() {
        let mut r = crate::rng::stream(3, "m");
        let m = Model::init(small(), &mut r).unwrap();
        let a = AttributeSet {
            kind: NodeKind::User,
            attributes: vec![(AttributeTag::UserScalars, vec![0.3, -0.2, 0.1, 0.9, -1.0, 1.0])],
        };
        let t = content_forward(&m, &a).unwrap();
        let h = 4;
        assert_eq!(&t.output()[..h], t.bi.forward.hidden_at(0, h));
        assert_eq!(&t.output()[h..], t.bi.backward.hidden_at(0, h));
    }

    #[test]
    fn aggregate_edge_cases() {
        let zero = Model::zeros(small()).unwrap();
        let f = vec![0.0; 8];
        let t = aggregate_forward(&zero, NodeKind::User, &[&f]).unwrap();
        assert!(t.out.iter().all(|&x| x == 0.0));
        assert!(aggregate_forward(&zero, NodeKind::User, &[]).is_none());

        let mut r = crate::rng::stream(4, "m");
        let m = Model::init(small(), &mut r).unwrap();
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 0.37).sin()).collect();
        let one = aggregate_forward(&m, NodeKind::Tweet, &[&x]).unwrap();
        let two = aggregate_forward(&m, NodeKind::Tweet, &[&x, &x]).unwrap();
        // the recurrent state makes the second step differ, so equality holds only
        // for the degenerate zero model; here we just check both are finite
        assert!(one.out.iter().chain(&two.out).all(|v| v.is_finite()));
    }

    #[test]
    fn identical_neighbours_match_single_for_stateless_cell() {
        // with zero recurrent weights each step sees the same input and zero
        // state contribution, and the forget path only carries c_prev forward;
        // zeroing the forget bias and weights makes every step identical
        let mut r = crate::rng::stream(5, "m");
        let mut m = Model::init(small(), &mut r).unwrap();
        for slot in [LstmSlot::TweetForward, LstmSlot::TweetBackward] {
            let seg = m.layout.lstm(slot);
            let h = seg.hidden;
            m.params[seg.u..seg.b].iter_mut().for_each(|x| *x = 0.0);
            for row in h..2 * h {
                m.params[seg.w + row * seg.input..seg.w + (row + 1) * seg.input]
                    .iter_mut()
                    .for_each(|x| *x = 0.0);
                m.params[seg.b + row] = -1e9;
            }
        }
        let x: Vec<f64> = (0..8).map(|i| (i as f64 * 0.37).cos()).collect();
        let one = aggregate_forward(&m, NodeKind::Tweet, &[&x]).unwrap();
        let two = aggregate_forward(&m, NodeKind::Tweet, &[&x, &x]).unwrap();
        for (a, b) in one.out.iter().zip(&two.out) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn neighbour_order_matters() {
        let mut r = crate::rng::stream(6, "m");
        let m = Model::init(small(), &mut r).unwrap();
        let a: Vec<f64> = (0..8).map(|i| i as f64 * 0.1).collect();
        let b: Vec<f64> = (0..8).map(|i| 1.0 - i as f64 * 0.2).collect();
        let ab = aggregate_forward(&m, NodeKind::User, &[&a, &b]).unwrap();
        let ba = aggregate_forward(&m, NodeKind::User, &[&b, &a]).unwrap();
        assert!(ab.out.iter().zip(&ba.out).any(|(x, y)| (x - y).abs() > 1e-9));
    }

    #[test]
    fn attention_cases() {
        let f1 = vec![0.5, -0.25, 1.0, 0.0];
        let fu = vec![0.1, 0.2, 0.3, 0.4];
        let ft = vec![-1.0, 0.0, 1.0, 2.0];
        let zero_u = vec![0.0; 8];
        let (_, t) = attention_forward(&zero_u, 0.2, &f1, Some(&fu), Some(&ft));
        for a in &t.alpha {
            assert!((a - 1.0 / 3.0).abs() < 1e-15);
        }
        let u: Vec<f64> = (0..8).map(|i| (i as f64 - 3.5) * 0.3).collect();
        let (e, t) = attention_forward(&u, 0.2, &f1, None, None);
        assert_eq!(t.alpha, vec![1.0]);
        assert_eq!(e, f1);
        let (_, t) = attention_forward(&u, 0.2, &f1, Some(&fu), Some(&ft));
        assert!((t.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(t.alpha.iter().all(|&a| a >= 0.0));
    }

    #[test]
    fn loss_anchors() {
        let z = vec![0.0; 4];
        assert!((nce_loss(&z, &z, &z) - 2.0 * 2f64.ln()).abs() < 1e-12);
        // E_v·E_pos = 2, E_v·E_neg = -2 -> -2 ln σ(2)
        let v = vec![1.0, 1.0];
        let p = vec![1.0, 1.0];
        let n = vec![-1.0, -1.0];
        assert!((nce_loss(&v, &p, &n) - 0.253_856_022_085_945_27).abs() < 1e-12);
        assert!(nce_loss_from_scores(60.0, &[-60.0], LossSign::Standard) < 1e-20);
        assert_eq!(
            nce_loss_from_scores(1.0, &[0.5], LossSign::PaperLiteral),
            -nce_loss_from_scores(1.0, &[0.5], LossSign::Standard)
        );
    }

    #[test]
    fn isolated_node_embedding_equals_content() {
        let mut r = crate::rng::stream(7, "m");
        let m = Model::init(small(), &mut r).unwrap();
        let attrs = vec![user_attrs(1)];
        let sets = NeighborSets {
            user: vec![vec![]],
            tweet: vec![vec![]],
        };
        let all = embed_all(&m, &attrs, &sets).unwrap();
        let c = content_forward(&m, &attrs[0]).unwrap();
        for (a, b) in all[0].embedding.iter().zip(c.output()) {
            assert!((a - b).abs() < 1e-14);
        }
        assert_eq!(all[0].attention.alpha, vec![1.0]);
    }

    #[test]
    fn embed_all_matches_per_node_composition() {
        let mut r = crate::rng::stream(11, "m");
        let m = Model::init(small(), &mut r).unwrap();
        let attrs: Vec<AttributeSet> = (0..5)
            .map(|i| {
                let mut a = user_attrs(i);
                a.attributes.truncate(1 + (i as usize % 2));
                a
            })
            .collect();
        let sets = NeighborSets {
            user: vec![vec![(1, 3), (2, 1)], vec![(0, 1)], vec![], vec![(4, 2), (0, 1), (1, 1)], vec![(3, 1)]],
            tweet: vec![vec![(3, 1)], vec![], vec![(4, 1), (0, 2)], vec![], vec![]],
        };
        let all = embed_all(&m, &attrs, &sets).unwrap();
        let content: Vec<ContentTrace> = attrs.iter().map(|a| content_forward(&m, a).unwrap()).collect();
        for (v, trace) in all.iter().enumerate() {
            let agg = |kind: NodeKind| {
                let ins: Vec<&[f64]> = sets.ids(kind, v).iter().map(|&n| content[n].output()).collect();
                aggregate_forward(&m, kind, &ins).map(|t| t.out)
            };
            let (fu, ft) = (agg(NodeKind::User), agg(NodeKind::Tweet));
            let (e, t) = attention_forward(
                m.attention_vector(),
                m.config.leaky_slope,
                content[v].output(),
                fu.as_deref(),
                ft.as_deref(),
            );
            assert_eq!(trace.attention.terms, t.terms);
            for (a, b) in trace.embedding.iter().zip(&e) {
                assert!((a - b).abs() < 1e-13, "node {v}: {a} vs {b}");
            }
        }
    }
}
