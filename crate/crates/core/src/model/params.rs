use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::encoders::AttributeTag;
use crate::error::{Error, Result};
use crate::graph::{NodeKind, VectorDims};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    /// Embedding dimension; each LSTM direction has `dim / 2` hidden units.
    pub dim: usize,
    pub text_dim: usize,
    pub image_dim: usize,
    pub leaky_slope: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            dim: 128,
            text_dim: 384,
            image_dim: 2048,
            leaky_slope: 0.2,
        }
    }
}

impl ModelConfig {
    pub fn hidden(&self) -> usize {
        self.dim / 2
    }

    pub fn dims(&self) -> VectorDims {
        VectorDims {
            text_dim: self.text_dim,
            image_dim: self.image_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.dim % 2 != 0 {
            return Err(Error::Invalid(format!("embedding dimension must be even and positive, got {}", self.dim)));
        }
        if !self.leaky_slope.is_finite() {
            return Err(Error::Invalid(format!("leaky slope must be finite, got {}", self.leaky_slope)));
        }
        Ok(())
    }
}

/// The six LSTMs of the encoder.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LstmSlot {
    ContentForward,
    ContentBackward,
    UserForward,
    UserBackward,
    TweetForward,
    TweetBackward,
}

impl LstmSlot {
    pub const ALL: [LstmSlot; 6] = [
        LstmSlot::ContentForward,
        LstmSlot::ContentBackward,
        LstmSlot::UserForward,
        LstmSlot::UserBackward,
        LstmSlot::TweetForward,
        LstmSlot::TweetBackward,
    ];

    pub fn neighbor_pair(kind: NodeKind) -> (LstmSlot, LstmSlot) {
        match kind {
            NodeKind::User => (LstmSlot::UserForward, LstmSlot::UserBackward),
            NodeKind::Tweet => (LstmSlot::TweetForward, LstmSlot::TweetBackward),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionSegment {
    /// Input-major weights: `in_dim × dim`.
    pub w: usize,
    pub b: usize,
    pub in_dim: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LstmSegment {
    /// `4h × input`, gate rows ordered input, forget, cell, output.
    pub w: usize,
    /// `4h × h`
    pub u: usize,
    /// `4h`
    pub b: usize,
    pub input: usize,
    pub hidden: usize,
}

/// Offsets of every tensor inside the flat parameter vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub dim: usize,
    pub projections: [ProjectionSegment; 6],
    pub lstms: [LstmSegment; 6],
    /// `2 × dim`: first half scores the node's own content, second half the candidate.
    pub attention: usize,
    pub total: usize,
}

impl ParamLayout {
    pub fn new(config: &ModelConfig) -> Self {
        let d = config.dim;
        let h = config.hidden();
        let mut off = 0;
        let projections = AttributeTag::ALL.map(|tag| {
            let in_dim = tag.input_dim(config.dims());
            let seg = ProjectionSegment {
                w: off,
                b: off + in_dim * d,
                in_dim,
            };
            off += in_dim * d + d;
            seg
        });
        let lstms = LstmSlot::ALL.map(|_| {
            let seg = LstmSegment {
                w: off,
                u: off + 4 * h * d,
                b: off + 4 * h * d + 4 * h * h,
                input: d,
                hidden: h,
            };
            off += 4 * h * d + 4 * h * h + 4 * h;
            seg
        });
        let attention = off;
        off += 2 * d;
        ParamLayout {
            dim: d,
            projections,
            lstms,
            attention,
            total: off,
        }
    }

    pub fn projection(&self, tag: AttributeTag) -> ProjectionSegment {
        self.projections[tag.index()]
    }

    pub fn lstm(&self, slot: LstmSlot) -> LstmSegment {
        self.lstms[slot as usize]
    }

    /// Index ranges of the projection parameters.
    pub fn projection_ranges(&self) -> Vec<std::ops::Range<usize>> {
        self.projections
            .iter()
            .map(|p| p.w..p.b + self.dim)
            .collect()
    }
}

/// Parameters in one flat vector plus the layout that names its pieces.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub config: ModelConfig,
    pub layout: ParamLayout,
    pub params: Vec<f64>,
}

impl Model {
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        Ok(Model {
            config,
            params: vec![0.0; layout.total],
            layout,
        })
    }

    /// Uniform ±1/√fan-in weights, zero biases except forget gates at +1.
    pub fn init<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        let mut m = Model::zeros(config)?;
        let d = config.dim;
        for p in m.layout.projections {
            let a = 1.0 / (p.in_dim as f64).sqrt();
            for x in &mut m.params[p.w..p.w + p.in_dim * d] {
                *x = rng.random_range(-a..a);
            }
        }
        for l in m.layout.lstms {
            let h = l.hidden;
            let aw = 1.0 / (l.input as f64).sqrt();
            let au = 1.0 / (h as f64).sqrt();
            for x in &mut m.params[l.w..l.u] {
                *x = rng.random_range(-aw..aw);
            }
            for x in &mut m.params[l.u..l.b] {
                *x = rng.random_range(-au..au);
            }
            for x in &mut m.params[l.b + h..l.b + 2 * h] {
                *x = 1.0;
            }
        }
        let a = 1.0 / ((2 * d) as f64).sqrt();
        for x in &mut m.params[m.layout.attention..m.layout.attention + 2 * d] {
            *x = rng.random_range(-a..a);
        }
        Ok(m)
    }

    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let layout = ParamLayout::new(&config);
        if params.len() != layout.total {
            return Err(Error::Dimension(format!(
                "parameter vector has {} entries, layout needs {}",
                params.len(),
                layout.total
            )));
        }
        Ok(Model { config, layout, params })
    }

    pub fn attention_vector(&self) -> &[f64] {
        &self.params[self.layout.attention..self.layout.attention + 2 * self.config.dim]
    }

    pub fn is_finite(&self) -> bool {
        self.params.iter().all(|x| x.is_finite())
    }
}
