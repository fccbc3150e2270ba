//! The heterogeneous encoder: parameters, forward/backward passes, training,
//! gradient checking and persistence.

pub mod batched;
pub mod checkpoint;
pub mod embeddings;
pub mod gradcheck;
pub mod lstm;
pub mod network;
pub mod params;
pub mod train;

pub use embeddings::{AttentionWeights, EmbeddingTable};
pub use network::{nce_loss, nce_loss_from_scores, LossSign, Triple};
pub use params::{Model, ModelConfig};
pub use train::{embed_table, train, TrainConfig, TrainData, TrainOutcome};
