use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoders::AttributeSet;
use crate::error::{Error, Result};
use crate::graph::GraphStructure;
use crate::rng;
use crate::sampling::{positive_pairs, NegativeSampler, NeighborSets};

use super::embeddings::EmbeddingTable;
use super::network::{batch_loss, embed_all, LossSign, Triple};
use super::params::{Model, ModelConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub negatives_per_positive: usize,
    /// Number of (center, positive) pairs drawn per epoch from the full pair
    /// list; `None` visits every pair once per epoch.
    pub triples_per_epoch: Option<usize>,
    pub loss_sign: LossSign,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 5,
            batch_size: 64,
            learning_rate: 1e-3,
            seed: 0,
            negatives_per_positive: 1,
            triples_per_epoch: Some(4096),
            loss_sign: LossSign::Standard,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.negatives_per_positive == 0 || self.triples_per_epoch == Some(0) {
            return Err(Error::Invalid("batch size, negatives and triples per epoch must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Invalid(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }
}

/// Adaptive-moment optimiser state.
#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            params[i] -= self.lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Model,
    pub embeddings: EmbeddingTable,
    /// Mean triple loss of each epoch, in order.
    pub epoch_losses: Vec<f64>,
}

pub struct TrainData<'a> {
    pub graph: &'a GraphStructure,
    pub attributes: &'a [AttributeSet],
    pub neighbors: &'a NeighborSets,
    pub walks: &'a [Vec<Vec<usize>>],
    pub window: usize,
}

fn make_triples<R: Rng>(
    graph: &GraphStructure,
    pairs: &[(u32, u32)],
    picks: impl Iterator<Item = usize>,
    sampler: &NegativeSampler,
    negatives: usize,
    rng: &mut R,
) -> Result<Vec<Triple>> {
    picks
        .map(|i| {
            let (c, p) = pairs[i];
            let (c, p) = (c as usize, p as usize);
            let kind = graph.kind_of(p);
            let negs = (0..negatives).map(|_| sampler.sample(kind, rng)).collect::<Result<_>>()?;
            Ok(Triple {
                center: c,
                positive: p,
                negatives: negs,
            })
        })
        .collect()
}

pub fn train(data: &TrainData, model_config: ModelConfig, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    model_config.validate()?;
    let mut model = Model::init(model_config, &mut rng::stream(config.seed, "model.init"))?;
    let mut epoch_losses = Vec::with_capacity(config.epochs);

    if config.epochs > 0 {
        let pairs: Vec<(u32, u32)> = positive_pairs(data.walks.iter().flatten(), data.window)
            .map(|(a, b)| (a as u32, b as u32))
            .collect();
        if pairs.is_empty() {
            return Err(Error::Invalid("random walks produced no positive pairs".into()));
        }
        let sampler = NegativeSampler::new(data.graph)?;
        let mut adam = Adam::new(model.params.len(), config.learning_rate);
        let epoch_stream = rng::stream_seed(config.seed, "train.epoch");
        let mut grad = vec![0.0; model.params.len()];

        for epoch in 0..config.epochs {
            let mut rng = rng::indexed(epoch_stream, epoch as u64);
            let triples = match config.triples_per_epoch {
                Some(n) => {
                    let picks: Vec<usize> = (0..n).map(|_| rng.random_range(0..pairs.len())).collect();
                    make_triples(data.graph, &pairs, picks.into_iter(), &sampler, config.negatives_per_positive, &mut rng)?
                }
                None => {
                    let mut order: Vec<usize> = (0..pairs.len()).collect();
                    rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
                    make_triples(data.graph, &pairs, order.into_iter(), &sampler, config.negatives_per_positive, &mut rng)?
                }
            };
            let mut total = 0.0;
            for (b, batch) in triples.chunks(config.batch_size).enumerate() {
                grad.iter_mut().for_each(|g| *g = 0.0);
                let res = batch_loss(&model, data.attributes, data.neighbors, batch, config.loss_sign, Some(&mut grad))?;
                let grad_ok = grad.iter().all(|g| g.is_finite());
                if !res.loss.is_finite() || !grad_ok {
                    let bad = res.per_triple.iter().position(|l| !l.is_finite()).unwrap_or(0);
                    let detail = if grad_ok {
                        format!("batch loss {}", res.loss)
                    } else {
                        format!("non-finite gradient (batch loss {})", res.loss)
                    };
                    return Err(Error::NonFinite {
                        epoch,
                        batch: b,
                        node: data.graph.node_key(batch[bad].center),
                        detail,
                    });
                }
                total += res.per_triple.iter().sum::<f64>();
                adam.step(&mut model.params, &grad);
            }
            let mean = total / triples.len() as f64;
            log::info!("epoch {} mean loss {:.6}", epoch + 1, mean);
            epoch_losses.push(mean);
        }
    }

    let embeddings = embed_table(&model, data.graph, data.attributes, data.neighbors)?;
    Ok(TrainOutcome {
        model,
        embeddings,
        epoch_losses,
    })
}

/// Full forward pass over every node.
pub fn embed_table(
    model: &Model,
    graph: &GraphStructure,
    attributes: &[AttributeSet],
    neighbors: &NeighborSets,
) -> Result<EmbeddingTable> {
    let traces = embed_all(model, attributes, neighbors)?;
    if let Some(t) = traces.iter().find(|t| t.embedding.iter().any(|x| !x.is_finite())) {
        return Err(Error::Numeric(format!("non-finite embedding for {}", graph.node_key(t.node))));
    }
    let ids = (0..graph.node_count()).map(|v| graph.node_key(v)).collect();
    EmbeddingTable::from_traces(model.config.dim, ids, &traces)
}
