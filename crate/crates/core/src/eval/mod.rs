//! Classifiers, metrics and cross-validation.

pub mod cv;
pub mod design;
pub mod forest;
pub mod logreg;
pub mod metrics;

pub use cv::{cross_validate, cross_validate_views, stratified_folds, ClassifierSpec, CvOutcome, Preprocess, View};
pub use design::{Design, Standardizer};
pub use forest::{forest_fit, ForestConfig, ForestModel, MaxFeatures};
pub use logreg::{logreg_fit, LogRegConfig, LogRegModel};
pub use metrics::{auroc, compute_metrics, Confusion, MeanStd, MetricReport, Metrics};
