//! Bagged CART classification trees with Gini splits.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MaxFeatures {
    Sqrt,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    /// `None` grows trees until leaves are pure or cannot be split.
    pub max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            max_depth: None,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Node {
    Leaf { class: u8 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> u8 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    /// Fraction of trees voting for class 1.
    pub fn predict_proba(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        rows.iter()
            .map(|r| self.trees.iter().filter(|t| t.predict(r) == 1).count() as f64 / self.trees.len() as f64)
            .collect()
    }
}

fn gini(pos: usize, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let p = pos as f64 / n as f64;
    2.0 * p * (1.0 - p)
}

fn majority(y: &[u8], idx: &[usize]) -> u8 {
    let pos = idx.iter().filter(|&&i| y[i] == 1).count();
    u8::from(2 * pos > idx.len())
}

struct Builder<'a, R: Rng> {
    x: &'a [Vec<f64>],
    y: &'a [u8],
    mtry: usize,
    max_depth: Option<usize>,
    rng: R,
    nodes: Vec<Node>,
}

impl<R: Rng> Builder<'_, R> {
    /// Best (impurity, feature, threshold) over `features`, if any split separates the node.
    fn best_split(&self, idx: &[usize], features: &[usize]) -> Option<(f64, usize, f64)> {
        let n = idx.len();
        let total_pos = idx.iter().filter(|&&i| self.y[i] == 1).count();
        let mut best: Option<(f64, usize, f64)> = None;
        let mut vals: Vec<(f64, u8)> = Vec::with_capacity(n);
        for &f in features {
            vals.clear();
            vals.extend(idx.iter().map(|&i| (self.x[i][f], self.y[i])));
            vals.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut left_pos = 0;
            for k in 1..n {
                left_pos += vals[k - 1].1 as usize;
                if vals[k].0 <= vals[k - 1].0 {
                    continue;
                }
                let imp = (k as f64 * gini(left_pos, k) + (n - k) as f64 * gini(total_pos - left_pos, n - k)) / n as f64;
                if best.is_none_or(|b| imp < b.0) {
                    best = Some((imp, f, 0.5 * (vals[k - 1].0 + vals[k].0)));
                }
            }
        }
        best
    }

    fn grow(&mut self, idx: Vec<usize>, depth: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: majority(self.y, &idx),
        });
        let pos = idx.iter().filter(|&&i| self.y[i] == 1).count();
        if pos == 0 || pos == idx.len() || idx.len() < 2 || self.max_depth.is_some_and(|m| depth >= m) {
            return id;
        }
        let d = self.x[0].len();
        let mut order: Vec<usize> = (0..d).collect();
        order.shuffle(&mut self.rng);
        // draw mtry candidates; if none separates the node keep trying the rest
        let mut split = None;
        for chunk in order.chunks(self.mtry) {
            split = self.best_split(&idx, chunk);
            if split.is_some() {
                break;
            }
        }
        let Some((_, feature, threshold)) = split else {
            return id;
        };
        let (l, r): (Vec<usize>, Vec<usize>) = idx.iter().partition(|&&i| self.x[i][feature] <= threshold);
        let left = self.grow(l, depth + 1);
        let right = self.grow(r, depth + 1);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

pub fn forest_fit(x: &[Vec<f64>], y: &[u8], config: &ForestConfig) -> Result<ForestModel> {
    let n = x.len();
    if n == 0 || n != y.len() {
        return Err(Error::Dimension(format!("{n} rows for {} labels", y.len())));
    }
    if config.n_trees == 0 {
        return Err(Error::Invalid("forest needs at least one tree".into()));
    }
    let d = x[0].len();
    let mtry = match config.max_features {
        MaxFeatures::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
        MaxFeatures::All => d.max(1),
    };
    let stream = rng::stream_seed(config.seed, "eval.forest");
    let trees = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::indexed(stream, t as u64);
            let idx: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| r.random_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut b = Builder {
                x,
                y,
                mtry,
                max_depth: config.max_depth,
                rng: r,
                nodes: Vec::new(),
            };
            b.grow(idx, 0);
            Tree { nodes: b.nodes }
        })
        .collect();
    Ok(ForestModel { trees })
}
