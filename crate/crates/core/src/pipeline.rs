//! End-to-end helpers: load a dataset directory, sample, train, and evaluate
//! embeddings or baselines on the labelled users.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::{activity_stat, cluster_embeddings, default_stopwords, project_2d, word_frequency, KScore};
use crate::baselines::{gcn_embed, late_fusion_views, variant_view, BaselineVariant, FeatureContext, GcnConfig};
use crate::encoders::{encode_graph, EncodedNodes, EncoderConfig};
use crate::error::{Error, Result};
use crate::eval::{cross_validate_views, ClassifierSpec, CvOutcome, Design, LogRegConfig, Preprocess, View};
use crate::graph::{build_graph, load_dataset, load_labels, BipartiteGraph, DatasetPaths, LabelRecord, Leaning, NodeId};
use crate::model::{train, EmbeddingTable, ModelConfig, TrainConfig, TrainData, TrainOutcome};
use crate::sampling::{generate_walks, neighbor_sets_from_walks, positive_pairs, NeighborSets, WalkConfig};

/// Every knob of a full run, seeded from one root seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSettings {
    pub seed: u64,
    pub encoder: EncoderConfig,
    pub walk: WalkConfig,
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub gcn: GcnConfig,
    pub folds: usize,
}

impl RunSettings {
    pub fn new(seed: u64) -> Self {
        RunSettings {
            seed,
            encoder: EncoderConfig::default(),
            walk: WalkConfig { seed, ..WalkConfig::default() },
            model: ModelConfig::default(),
            train: TrainConfig { seed, ..TrainConfig::default() },
            gcn: GcnConfig { seed, ..GcnConfig::default() },
            folds: 10,
        }
    }

    /// Propagates the root seed into every component.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        self.walk.seed = seed;
        self.train.seed = seed;
        self.gcn.seed = seed;
    }
}

/// Loads records (and `labels.jsonl` when present or given) and builds the graph.
pub fn load_graph(dir: &Path, encoder: &EncoderConfig, labels: Option<&Path>) -> Result<BipartiteGraph> {
    let data = load_dataset(&DatasetPaths::in_dir(dir), encoder.dims())?;
    let mut graph = build_graph(&data)?;
    let default = dir.join("labels.jsonl");
    let labels = labels.map(Path::to_path_buf).or_else(|| default.exists().then_some(default));
    if let Some(p) = labels {
        graph.attach_labels(&load_labels(&p)?)?;
    }
    Ok(graph)
}

pub struct Sampled {
    pub walks: Vec<Vec<Vec<usize>>>,
    pub neighbors: NeighborSets,
}

pub fn sample(graph: &BipartiteGraph, walk: &WalkConfig) -> Result<Sampled> {
    walk.validate()?;
    let walks = generate_walks(graph, walk);
    let neighbors = neighbor_sets_from_walks(graph, &walks, walk);
    Ok(Sampled { walks, neighbors })
}

pub struct Prepared {
    pub graph: BipartiteGraph,
    pub encoded: EncodedNodes,
    pub sampled: Sampled,
}

pub fn prepare(dir: &Path, settings: &RunSettings, labels: Option<&Path>) -> Result<Prepared> {
    let graph = load_graph(dir, &settings.encoder, labels)?;
    let encoded = encode_graph(&graph, &settings.encoder)?;
    let sampled = sample(&graph, &settings.walk)?;
    Ok(Prepared { graph, encoded, sampled })
}

pub fn train_embeddings(p: &Prepared, settings: &RunSettings) -> Result<TrainOutcome> {
    let model = ModelConfig {
        text_dim: settings.encoder.text_dim,
        image_dim: settings.encoder.image_dim,
        ..settings.model
    };
    let data = TrainData {
        graph: &p.graph,
        attributes: &p.encoded.sets,
        neighbors: &p.sampled.neighbors,
        walks: &p.sampled.walks,
        window: settings.walk.window,
    };
    train(&data, model, &settings.train)
}

/// Labelled users in index order and their classes (Right = 1).
pub fn labelled_users(graph: &BipartiteGraph) -> Result<(Vec<u32>, Vec<u8>)> {
    let labels = graph
        .labels()
        .ok_or_else(|| Error::Invalid("no labels attached to the graph".into()))?;
    let users = labels.users();
    let y = users
        .iter()
        .map(|&u| labels.leaning(u).expect("listed users are labelled").as_class())
        .collect();
    Ok((users, y))
}

/// One row per labelled user taken from an embedding table.
pub fn embedding_view(table: &EmbeddingTable, graph: &BipartiteGraph, users: &[u32]) -> Result<View> {
    let rows = users
        .iter()
        .map(|&u| table.user(graph.external_id(graph.global(NodeId::user(u)))).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>>>()?;
    Ok(View::per_example(Design::Dense(rows)))
}

pub fn default_classifier() -> ClassifierSpec {
    ClassifierSpec::Logreg(LogRegConfig::default())
}

pub fn evaluate_table(
    table: &EmbeddingTable,
    graph: &BipartiteGraph,
    spec: &ClassifierSpec,
    k: usize,
    seed: u64,
) -> Result<CvOutcome> {
    let (users, y) = labelled_users(graph)?;
    let view = embedding_view(table, graph, &users)?;
    cross_validate_views(&[view], &y, spec, k, seed, Preprocess::Standardize)
}

/// Cross-validated evaluation of the users listed in `labels`, in file order.
pub fn evaluate_labelled(
    table: &EmbeddingTable,
    labels: &[LabelRecord],
    spec: &ClassifierSpec,
    k: usize,
    seed: u64,
) -> Result<CvOutcome> {
    let rows = labels
        .iter()
        .map(|r| table.user(&r.user_id).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>>>()?;
    let y: Vec<u8> = labels.iter().map(|r| Leaning::from_score(r.score).as_class()).collect();
    cross_validate_views(&[View::per_example(Design::Dense(rows))], &y, spec, k, seed, Preprocess::Standardize)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster: usize,
    pub size: usize,
    /// Members with a political score.
    pub labelled: usize,
    pub mean_score: Option<f64>,
    pub users_per_unique_tweet: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoordRow {
    pub id: String,
    pub x: f64,
    pub y: f64,
    pub score: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisReport {
    pub chosen_k: usize,
    pub scanned: Vec<KScore>,
    /// Users whose silhouette was undefined and set to 0.
    pub degenerate: Vec<String>,
    pub clusters: Vec<ClusterSummary>,
    /// `(user id, cluster)` in user index order.
    pub assignments: Vec<(String, usize)>,
    #[serde(skip)]
    pub words: Vec<Vec<(String, usize)>>,
    #[serde(skip)]
    pub coords: Vec<CoordRow>,
}

/// Clusters every user's embedding and characterises the clusters.
pub fn analyze_users(
    table: &EmbeddingTable,
    graph: &BipartiteGraph,
    k_range: std::ops::RangeInclusive<usize>,
    seed: u64,
    top_words: usize,
) -> Result<AnalysisReport> {
    let ids: Vec<&str> = graph.users().iter().map(|u| u.external_id.as_str()).collect();
    let x = ids
        .iter()
        .map(|id| table.user(id).map(<[f64]>::to_vec))
        .collect::<Result<Vec<_>>>()?;
    let clustering = cluster_embeddings(&x, k_range, seed)?;
    let k = clustering.chosen_k;
    let score = |u: usize| graph.labels().and_then(|l| l.score(u as u32));

    let assignment: Vec<Option<usize>> = clustering.assignments.iter().map(|&c| Some(c)).collect();
    let activity = activity_stat(graph, &assignment, k);
    let stopwords = default_stopwords();
    let mut clusters = Vec::with_capacity(k);
    let mut words = Vec::with_capacity(k);
    for (c, act) in activity.into_iter().enumerate() {
        let members: Vec<usize> = (0..ids.len()).filter(|&u| clustering.assignments[u] == c).collect();
        let scores: Vec<f64> = members.iter().filter_map(|&u| score(u)).collect();
        clusters.push(ClusterSummary {
            cluster: c,
            size: members.len(),
            labelled: scores.len(),
            mean_score: (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64),
            users_per_unique_tweet: act,
        });
        let docs = members.iter().filter_map(|&u| graph.user(u as u32).description_text.as_deref());
        words.push(word_frequency(docs, &stopwords, top_words));
    }

    let coords = project_2d(&x)?
        .into_iter()
        .enumerate()
        .map(|(u, [cx, cy])| CoordRow {
            id: ids[u].to_owned(),
            x: cx,
            y: cy,
            score: score(u),
        })
        .collect();
    Ok(AnalysisReport {
        chosen_k: k,
        scanned: clustering.scanned,
        degenerate: clustering.degenerate.iter().map(|&i| ids[i].to_owned()).collect(),
        clusters,
        assignments: ids.iter().map(|s| s.to_string()).zip(clustering.assignments).collect(),
        words,
        coords,
    })
}

pub fn feature_context<'a>(p: &'a Prepared, settings: &RunSettings) -> FeatureContext<'a> {
    FeatureContext {
        graph: &p.graph,
        attributes: &p.encoded.sets,
        dims: settings.encoder.dims(),
    }
}

pub fn walk_pairs(p: &Prepared, window: usize) -> Vec<(usize, usize)> {
    positive_pairs(p.sampled.walks.iter().flatten(), window).collect()
}

/// GCN user embeddings as a table keyed like the encoder's output.
pub fn gcn_table(p: &Prepared, settings: &RunSettings) -> Result<EmbeddingTable> {
    let pairs = walk_pairs(p, settings.walk.window);
    let out = gcn_embed(&feature_context(p, settings), &pairs, &settings.gcn)?;
    let ids = (0..p.graph.node_count()).map(|v| p.graph.node_key(v)).collect();
    EmbeddingTable::new(settings.gcn.dim, ids, out.embeddings, Vec::new())
}

/// Cross-validated evaluation of one baseline variant on the labelled users.
pub fn evaluate_baseline(
    variant: BaselineVariant,
    p: &Prepared,
    settings: &RunSettings,
    spec: &ClassifierSpec,
) -> Result<CvOutcome> {
    let (users, y) = labelled_users(&p.graph)?;
    let ctx = feature_context(p, settings);
    let seed = settings.seed;
    let k = settings.folds;
    match variant {
        BaselineVariant::Gcn => {
            let table = gcn_table(p, settings)?;
            let view = embedding_view(&table, &p.graph, &users)?;
            cross_validate_views(&[view], &y, spec, k, seed, Preprocess::Standardize)
        }
        BaselineVariant::LateFusion => {
            cross_validate_views(&late_fusion_views(&ctx, &users)?, &y, spec, k, seed, Preprocess::None)
        }
        v => cross_validate_views(&[variant_view(v, &ctx, &users)?], &y, spec, k, seed, Preprocess::None),
    }
}
