//! Comparison methods: modality concatenations, PCA, a homogeneous GCN, late
//! fusion and per-tweet voting.

pub mod concat;
pub mod fusion;
pub mod gcn;
pub mod pca;

pub use concat::{concat_features, feature_dim, late_fusion_views, variant_view, BaselineVariant, FeatureContext};
pub use fusion::{late_fusion_predict, vote_user_label, Fused};
pub use gcn::{gcn_embed, gcn_train, GcnConfig, GcnOutcome, NormalizedAdjacency};
pub use pca::{pca_fit, pca_reduce_padded, PcaModel};
