//! Feature concatenations used by the non-graph baselines.

use serde::{Deserialize, Serialize};

use crate::encoders::{AttributeSet, AttributeTag, N_SCALARS};
use crate::error::{Error, Result};
use crate::eval::{Design, View};
use crate::graph::{GraphStructure, NodeId, NodeKind, VectorDims};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineVariant {
    UserInfo,
    Textual,
    Visual,
    #[serde(rename = "tv")]
    TextualVisual,
    #[serde(rename = "utv")]
    UserTextualVisual,
    LateFusion,
    Gcn,
}

impl BaselineVariant {
    pub const ALL: [BaselineVariant; 7] = [
        BaselineVariant::UserInfo,
        BaselineVariant::Textual,
        BaselineVariant::Visual,
        BaselineVariant::TextualVisual,
        BaselineVariant::UserTextualVisual,
        BaselineVariant::LateFusion,
        BaselineVariant::Gcn,
    ];

    pub fn name(self) -> &'static str {
        match self {
            BaselineVariant::UserInfo => "userinfo",
            BaselineVariant::Textual => "textual",
            BaselineVariant::Visual => "visual",
            BaselineVariant::TextualVisual => "tv",
            BaselineVariant::UserTextualVisual => "utv",
            BaselineVariant::LateFusion => "latefusion",
            BaselineVariant::Gcn => "gcn",
        }
    }

    /// Whether rows are per (user, tweet) pair rather than per user.
    pub fn per_tweet(self) -> bool {
        matches!(
            self,
            BaselineVariant::Textual
                | BaselineVariant::Visual
                | BaselineVariant::TextualVisual
                | BaselineVariant::UserTextualVisual
        )
    }
}

impl std::str::FromStr for BaselineVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        BaselineVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| Error::Invalid(format!("unknown baseline variant {s:?}")))
    }
}

impl std::fmt::Display for BaselineVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Encoded attributes plus the modality sizes needed to zero-fill missing parts.
pub struct FeatureContext<'a> {
    pub graph: &'a GraphStructure,
    pub attributes: &'a [AttributeSet],
    pub dims: VectorDims,
}

impl FeatureContext<'_> {
    fn part(&self, global: usize, tag: AttributeTag, len: usize) -> Vec<f64> {
        self.attributes[global]
            .get(tag)
            .map_or_else(|| vec![0.0; len], <[f64]>::to_vec)
    }

    pub fn user_info(&self, user: u32) -> Vec<f64> {
        let g = self.graph.global(NodeId::user(user));
        let mut v = self.part(g, AttributeTag::UserScalars, N_SCALARS);
        v.extend(self.part(g, AttributeTag::Description, self.dims.text_dim));
        v
    }

    pub fn textual(&self, tweet: u32) -> Vec<f64> {
        self.part(self.graph.global(NodeId::tweet(tweet)), AttributeTag::Text, self.dims.text_dim)
    }

    pub fn visual(&self, tweet: u32) -> Vec<f64> {
        self.part(self.graph.global(NodeId::tweet(tweet)), AttributeTag::Image, self.dims.image_dim)
    }

    /// Tweets the user posted, retweeted or quoted, in index order.
    pub fn interacted_tweets(&self, user: u32) -> Vec<u32> {
        self.graph
            .distinct_neighbors(self.graph.global(NodeId::user(user)))
            .into_iter()
            .map(|g| self.graph.node_at(g).index)
            .collect()
    }
}

pub fn feature_dim(variant: BaselineVariant, dims: VectorDims) -> Option<usize> {
    let u = N_SCALARS + dims.text_dim;
    match variant {
        BaselineVariant::UserInfo => Some(u),
        BaselineVariant::Textual => Some(dims.text_dim),
        BaselineVariant::Visual => Some(dims.image_dim),
        BaselineVariant::TextualVisual => Some(dims.text_dim + dims.image_dim),
        BaselineVariant::UserTextualVisual => Some(u + dims.text_dim + dims.image_dim),
        BaselineVariant::LateFusion | BaselineVariant::Gcn => None,
    }
}

/// Feature vector of one example; per-tweet variants need `tweet`.
pub fn concat_features(variant: BaselineVariant, ctx: &FeatureContext, user: u32, tweet: Option<u32>) -> Result<Vec<f64>> {
    let need_tweet = || tweet.ok_or_else(|| Error::Invalid(format!("variant {variant} needs a tweet")));
    Ok(match variant {
        BaselineVariant::UserInfo => ctx.user_info(user),
        BaselineVariant::Textual => ctx.textual(need_tweet()?),
        BaselineVariant::Visual => ctx.visual(need_tweet()?),
        BaselineVariant::TextualVisual => {
            let t = need_tweet()?;
            let mut v = ctx.textual(t);
            v.extend(ctx.visual(t));
            v
        }
        BaselineVariant::UserTextualVisual => {
            let t = need_tweet()?;
            let mut v = ctx.user_info(user);
            v.extend(ctx.textual(t));
            v.extend(ctx.visual(t));
            v
        }
        BaselineVariant::LateFusion | BaselineVariant::Gcn => {
            return Err(Error::Invalid(format!("variant {variant} has no concatenated features")))
        }
    })
}

/// One feature view over the labelled `users` (example `i` is `users[i]`).
pub fn variant_view(variant: BaselineVariant, ctx: &FeatureContext, users: &[u32]) -> Result<View> {
    let mut rows = Vec::new();
    let mut example = Vec::new();
    for (i, &u) in users.iter().enumerate() {
        if variant.per_tweet() {
            for t in ctx.interacted_tweets(u) {
                rows.push(concat_features(variant, ctx, u, Some(t))?);
                example.push(i);
            }
        } else {
            rows.push(concat_features(variant, ctx, u, None)?);
            example.push(i);
        }
    }
    if rows.is_empty() {
        return Err(Error::Invalid(format!("variant {variant} produced no rows")));
    }
    Ok(View {
        x: Design::from_rows(rows)?,
        example,
    })
}

/// The single-modality views combined by late fusion.
pub fn late_fusion_views(ctx: &FeatureContext, users: &[u32]) -> Result<Vec<View>> {
    [BaselineVariant::UserInfo, BaselineVariant::Textual, BaselineVariant::Visual]
        .into_iter()
        .map(|v| variant_view(v, ctx, users))
        .collect()
}

pub(crate) fn kind_features(ctx: &FeatureContext, kind: NodeKind) -> Vec<Vec<f64>> {
    let range = ctx.graph.nodes_of(kind);
    range
        .clone()
        .map(|g| {
            let idx = (g - range.start) as u32;
            match kind {
                NodeKind::User => ctx.user_info(idx),
                NodeKind::Tweet => {
                    let mut v = ctx.textual(idx);
                    v.extend(ctx.visual(idx));
                    v
                }
            }
        })
        .collect()
}
