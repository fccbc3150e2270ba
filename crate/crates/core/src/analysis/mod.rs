//! Polarization analysis: political scores, clustering, activity and word tables,
//! and 2D projections for plotting.

pub mod activity;
pub mod cluster;
pub mod project;
pub mod score;
pub mod words;

pub use activity::activity_stat;
pub use cluster::{cluster_embeddings, kmeans, silhouette, Clustering, KMeans, KScore, Silhouette};
pub use project::project_2d;
pub use score::{political_score, PoliticalScore, ELIGIBILITY_MIN};
pub use words::{default_stopwords, word_frequency};
