//! Node embeddings for user–item bipartite heterogeneous graphs.
//!
//! The crate is organised along the pipeline it implements:
//!
//! - [`graph`]: record types, JSON Lines ingestion and the immutable bipartite graph.
//! - [`encoders`]: attribute-vector construction, scalar normalisation and the
//!   hashing text encoder used when no precomputed vectors are supplied.
//! - [`sampling`]: random walks with restart, typed neighbour sets, windowed positive
//!   pairs and the activity-weighted negative sampler.
//! - [`model`]: the Bi-LSTM / attention encoder with hand-written gradients, training,
//!   gradient checking and embedding IO.
//! - [`baselines`]: concatenation features, PCA, a homogeneous GCN, late fusion and
//!   per-tweet voting.
//! - [`eval`]: logistic regression, random forest, metrics and stratified k-fold CV.
//! - [`analysis`]: political scores, k-means/silhouette clustering, activity and
//!   word-frequency statistics, 2D projection.
//! - [`synth`]: seeded generator of polarized datasets.
//! - [`pipeline`]: end-to-end helpers shared by the CLI and the acceptance suite.

pub mod analysis;
pub mod baselines;
pub mod encoders;
pub mod error;
pub mod eval;
pub mod graph;
pub mod linalg;
pub mod model;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod synth;
pub mod vectors;

pub use error::{Error, Result};
