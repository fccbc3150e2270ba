//! Finite-difference verification of the analytic gradients.

use rand::Rng;
use serde::Serialize;

use crate::encoders::{AttributeSet, AttributeTag};
use crate::error::Result;
use crate::graph::NodeKind;
use crate::linalg::softplus;
use crate::rng;
use crate::sampling::NeighborSets;

use super::network::{batch_loss, LossSign, Triple};
use super::params::{Model, ModelConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamSubset {
    All,
    ProjectionsOnly,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GradcheckReport {
    pub max_rel_err: f64,
    pub max_abs_err: f64,
    /// Parameter index with the largest relative error.
    pub worst_index: usize,
    pub checked: usize,
}

/// A small fixed problem: three users, three tweets, two neighbours of each type
/// per node, and one (center, positive, negative) triple.
pub struct MiniWorld {
    pub attributes: Vec<AttributeSet>,
    pub neighbors: NeighborSets,
    pub triple: Triple,
}

pub fn mini_config() -> ModelConfig {
    ModelConfig {
        dim: 8,
        text_dim: 5,
        image_dim: 4,
        leaky_slope: 0.2,
    }
}

pub fn mini_world(config: &ModelConfig, seed: u64) -> MiniWorld {
    let mut r = rng::stream(seed, "gradcheck.world");
    let mut vec = |n: usize| -> Vec<f64> { (0..n).map(|_| r.random_range(-1.0..1.0)).collect() };
    let mut attributes = Vec::new();
    for _ in 0..3 {
        attributes.push(AttributeSet {
            kind: NodeKind::User,
            attributes: vec![
                (AttributeTag::UserScalars, vec(6)),
                (AttributeTag::Description, vec(config.text_dim)),
            ],
        });
    }
    for _ in 0..3 {
        attributes.push(AttributeSet {
            kind: NodeKind::Tweet,
            attributes: vec![
                (AttributeTag::Text, vec(config.text_dim)),
                (AttributeTag::Image, vec(config.image_dim)),
                (AttributeTag::AuthorScalars, vec(6)),
                (AttributeTag::AuthorDescription, vec(config.text_dim)),
            ],
        });
    }
    let others = |v: usize, range: std::ops::Range<usize>| -> Vec<(usize, u32)> {
        range.filter(|&x| x != v).take(2).map(|x| (x, 1)).collect()
    };
    let neighbors = NeighborSets {
        user: (0..6).map(|v| others(v, 0..3)).collect(),
        tweet: (0..6).map(|v| others(v, 3..6)).collect(),
    };
    MiniWorld {
        attributes,
        neighbors,
        triple: Triple {
            center: 0,
            positive: 3,
            negatives: vec![4],
        },
    }
}

/// `softplus(x) - ln 2`, accurate near zero where the untrained model operates.
fn softplus_minus_ln2(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (x.exp_m1() / 2.0).ln_1p()
    } else {
        softplus(x) - std::f64::consts::LN_2
    }
}

/// The triple loss minus its constant `(1 + negatives) ln 2`. Differencing the
/// shifted value avoids losing the small loss changes to rounding of the constant.
fn shifted_loss_at(model: &Model, world: &MiniWorld) -> Result<f64> {
    let res = batch_loss(
        model,
        &world.attributes,
        &world.neighbors,
        std::slice::from_ref(&world.triple),
        LossSign::Standard,
        None,
    )?;
    let (pos, negs) = &res.scores[0];
    Ok(softplus_minus_ln2(-pos) + negs.iter().map(|&n| softplus_minus_ln2(n)).sum::<f64>())
}

pub fn gradient_check(model: &Model, world: &MiniWorld, h: f64, subset: ParamSubset) -> Result<GradcheckReport> {
    let mut analytic = vec![0.0; model.params.len()];
    batch_loss(
        model,
        &world.attributes,
        &world.neighbors,
        std::slice::from_ref(&world.triple),
        LossSign::Standard,
        Some(&mut analytic),
    )?;
    let indices: Vec<usize> = match subset {
        ParamSubset::All => (0..model.params.len()).collect(),
        ParamSubset::ProjectionsOnly => model.layout.projection_ranges().into_iter().flatten().collect(),
    };
    let mut probe = model.clone();
    let mut report = GradcheckReport {
        max_rel_err: 0.0,
        max_abs_err: 0.0,
        worst_index: 0,
        checked: indices.len(),
    };
    for i in indices {
        let orig = probe.params[i];
        probe.params[i] = orig + h;
        let up = shifted_loss_at(&probe, world)?;
        probe.params[i] = orig - h;
        let down = shifted_loss_at(&probe, world)?;
        probe.params[i] = orig;
        let fd = (up - down) / (2.0 * h);
        let a = analytic[i];
        let abs = (a - fd).abs();
        let rel = abs / (a.abs() + fd.abs()).max(1e-8);
        report.max_abs_err = report.max_abs_err.max(abs);
        if rel > report.max_rel_err {
            report.max_rel_err = rel;
            report.worst_index = i;
        }
    }
    Ok(report)
}

/// Gradient check of a freshly initialised `d = 8` model for `seed`.
pub fn check_seed(seed: u64) -> Result<GradcheckReport> {
    let config = mini_config();
    let model = Model::init(config, &mut rng::stream(seed, "gradcheck.model"))?;
    let world = mini_world(&config, seed);
    gradient_check(&model, &world, 1e-5, ParamSubset::All)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_model_passes() {
        let r = check_seed(7).unwrap();
        assert!(r.max_rel_err <= 1e-4, "{r:?}");
    }

    #[test]
    fn shifted_softplus_matches() {
        for x in [-3.0, -0.5, -1e-9, 0.0, 1e-9, 0.5, 3.0] {
            assert!((softplus_minus_ln2(x) - (softplus(x) - std::f64::consts::LN_2)).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_model_agrees_absolutely() {
        let config = mini_config();
        let model = Model::zeros(config).unwrap();
        let r = gradient_check(&model, &mini_world(&config, 3), 1e-5, ParamSubset::All).unwrap();
        assert!(r.max_abs_err <= 1e-6, "{r:?}");
    }

    #[test]
    fn projections_only() {
        let config = mini_config();
        let model = Model::init(config, &mut rng::stream(11, "gradcheck.model")).unwrap();
        let r = gradient_check(&model, &mini_world(&config, 11), 1e-5, ParamSubset::ProjectionsOnly).unwrap();
        assert!(r.max_rel_err <= 1e-6, "{r:?}");
    }
}
