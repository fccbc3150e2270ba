//! One function per subcommand. Each reads its inputs, writes its artifacts under
//! `--out` and finishes with a manifest.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use bihet::baselines::{variant_view, BaselineVariant};
use bihet::encoders::encode_graph;
use bihet::eval::{ClassifierSpec, CvOutcome, MetricReport};
use bihet::graph::{load_labels, Leaning};
use bihet::model::{checkpoint, embed_table, gradcheck, EmbeddingTable};
use bihet::pipeline;
use bihet::sampling::walks_to_text;
use bihet::synth::{self, SynthConfig};

use crate::config::Config;
use crate::error::CliError;
use crate::manifest::{dataset_inputs, Run};

/// Gradient checks at or below this relative error pass.
const GRADCHECK_TOLERANCE: f64 = 1e-4;

pub fn synth(cfg: &Config, out: &Path) -> Result<(), CliError> {
    let mut run = Run::start("synth", cfg, out)?;
    let config = SynthConfig {
        text_dim: cfg.run.encoder.text_dim,
        image_dim: cfg.run.encoder.image_dim,
        hash_seed: cfg.run.encoder.hash_seed,
        ..SynthConfig::profile(cfg.profile, cfg.seed())
    };
    let data = synth::generate(&config)?;
    synth::write(&data, out)?;
    for name in ["users.jsonl", "tweets.jsonl", "edges.jsonl", "labels.jsonl", "text_vectors.tsv", "image_vectors.tsv"] {
        run.output(name);
    }
    println!(
        "users {} tweets {} edges {}",
        data.dataset.users.len(),
        data.dataset.tweets.len(),
        data.dataset.edges.len()
    );
    run.finish()
}

#[derive(Serialize)]
struct IngestSummary {
    users: usize,
    tweets: usize,
    edges: usize,
    labelled_users: usize,
    isolated_nodes: usize,
}

pub fn ingest(cfg: &Config, data: &Path, labels: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let mut run = Run::start("ingest", cfg, out)?;
    run.inputs(dataset_inputs(data));
    if let Some(l) = labels {
        run.input(l);
    }
    let graph = pipeline::load_graph(data, &cfg.run.encoder, labels)?;
    let summary = IngestSummary {
        users: graph.n_users(),
        tweets: graph.n_tweets(),
        edges: graph.edge_count(),
        labelled_users: graph.labels().map_or(0, |l| l.len()),
        isolated_nodes: (0..graph.node_count()).filter(|&v| graph.degree(v) == 0).count(),
    };
    println!("users {} tweets {} edges {}", summary.users, summary.tweets, summary.edges);
    run.write("graph.txt", graph.serialize())?;
    run.write("summary.json", json(&summary))?;
    run.finish()
}

pub fn sample(cfg: &Config, data: &Path, out: &Path) -> Result<(), CliError> {
    let mut run = Run::start("sample", cfg, out)?;
    run.inputs(dataset_inputs(data));
    let graph = pipeline::load_graph(data, &cfg.run.encoder, None)?;
    let sampled = pipeline::sample(&graph, &cfg.run.walk)?;
    run.write("walks.txt", walks_to_text(&graph, &sampled.walks))?;
    run.write("neighbors.txt", sampled.neighbors.to_text(&graph))?;
    println!("walks {}", sampled.walks.iter().map(Vec::len).sum::<usize>());
    run.finish()
}

fn attention_text(table: &EmbeddingTable) -> String {
    let opt = |x: Option<f64>| x.map_or("NA".to_owned(), |v| v.to_string());
    let mut s = String::from("id\tself\tusers\ttweets\n");
    for (id, a) in table.ids.iter().zip(&table.attention) {
        let _ = writeln!(s, "{id}\t{}\t{}\t{}", a.self_content, opt(a.users), opt(a.tweets));
    }
    s
}

pub fn train(cfg: &Config, data: &Path, out: &Path) -> Result<(), CliError> {
    let mut run = Run::start("train", cfg, out)?;
    run.inputs(dataset_inputs(data));
    let prepared = pipeline::prepare(data, &cfg.run, None)?;
    let outcome = pipeline::train_embeddings(&prepared, &cfg.run)?;
    outcome.embeddings.export(&run.output("embeddings.tsv"))?;
    checkpoint::save(&run.output("checkpoint.bin"), &outcome.model, cfg.seed())?;
    run.write("attention.tsv", attention_text(&outcome.embeddings))?;
    run.write("losses.json", json(&outcome.epoch_losses))?;
    for (i, l) in outcome.epoch_losses.iter().enumerate() {
        println!("epoch {} loss {l:.6}", i + 1);
    }
    println!("embeddings {} x {}", outcome.embeddings.len(), outcome.embeddings.dim);
    run.finish()
}

pub fn embed(mut cfg: Config, data: &Path, checkpoint_path: &Path, out: &Path) -> Result<(), CliError> {
    let (model, trained_seed) = checkpoint::load(checkpoint_path)?;
    if !cfg.is_explicit("seed") {
        cfg.set("seed", trained_seed.to_string())?;
    }
    cfg.set("text_dim", model.config.text_dim.to_string())?;
    cfg.set("image_dim", model.config.image_dim.to_string())?;
    cfg.set("dim", model.config.dim.to_string())?;
    let mut run = Run::start("embed", &cfg, out)?;
    run.inputs(dataset_inputs(data));
    run.input(checkpoint_path);
    let graph = pipeline::load_graph(data, &cfg.run.encoder, None)?;
    let encoded = encode_graph(&graph, &cfg.run.encoder)?;
    let sampled = pipeline::sample(&graph, &cfg.run.walk)?;
    let table = embed_table(&model, &graph, &encoded.sets, &sampled.neighbors)?;
    table.export(&run.output("embeddings.tsv"))?;
    run.write("attention.tsv", attention_text(&table))?;
    println!("embeddings {} x {}", table.len(), table.dim);
    run.finish()
}

#[derive(Serialize)]
struct MetricsFile<'a> {
    subject: &'a str,
    classifier: &'a ClassifierSpec,
    k: usize,
    seed: u64,
    examples: usize,
    report: &'a MetricReport,
}

fn write_metrics(run: &mut Run, cfg: &Config, subject: &str, cv: &CvOutcome) -> Result<(), CliError> {
    let file = MetricsFile {
        subject,
        classifier: &cfg.classifier,
        k: cfg.run.folds,
        seed: cfg.seed(),
        examples: cv.scores.len(),
        report: &cv.report,
    };
    run.write("metrics.json", json(&file))?;
    run.write("metrics.txt", cv.report.to_table())
}

#[derive(Serialize)]
struct Prediction<'a> {
    user_id: &'a str,
    /// +1 predicted right-leaning, -1 left-leaning.
    score: f64,
    probability: f64,
}

pub fn baseline(
    cfg: &Config,
    variant: BaselineVariant,
    data: &Path,
    labels: Option<&Path>,
    out: &Path,
) -> Result<(), CliError> {
    let mut run = Run::start("baseline", cfg, out)?;
    run.inputs(dataset_inputs(data));
    if let Some(l) = labels {
        run.input(l);
    }
    let settings = &cfg.run;
    let prepared = pipeline::prepare(data, settings, labels)?;
    let (users, _) = pipeline::labelled_users(&prepared.graph)?;
    match variant {
        BaselineVariant::Gcn => {
            pipeline::gcn_table(&prepared, settings)?.export(&run.output("embeddings.tsv"))?;
        }
        BaselineVariant::UserInfo => {
            let ctx = pipeline::feature_context(&prepared, settings);
            let view = variant_view(variant, &ctx, &users)?;
            let mut vf = bihet::vectors::VectorFile::new(view.x.n_cols());
            for (&u, row) in users.iter().zip(view.x.to_dense()) {
                vf.push(prepared.graph.user(u).external_id.clone(), row)?;
            }
            vf.write(&run.output("features.tsv"))?;
        }
        _ => {}
    }
    let cv = pipeline::evaluate_baseline(variant, &prepared, settings, &cfg.classifier)?;
    let mut lines = String::new();
    for (&u, &p) in users.iter().zip(&cv.scores) {
        let pred = Prediction {
            user_id: &prepared.graph.user(u).external_id,
            score: if p >= 0.5 { 1.0 } else { -1.0 },
            probability: p,
        };
        lines.push_str(&serde_json::to_string(&pred).expect("prediction serializes"));
        lines.push('\n');
    }
    run.write("predictions.jsonl", lines)?;
    write_metrics(&mut run, cfg, variant.name(), &cv)?;
    print!("{variant}\n{}", cv.report.to_table());
    run.finish()
}

pub fn evaluate(cfg: &Config, embeddings: &Path, labels: &Path, out: Option<&Path>) -> Result<(), CliError> {
    let table = EmbeddingTable::import(embeddings, None)?;
    let records = load_labels(labels)?;
    let cv = pipeline::evaluate_labelled(&table, &records, &cfg.classifier, cfg.run.folds, cfg.seed())?;
    print!("{}", cv.report.to_table());
    if let Some(out) = out {
        let mut run = Run::start("evaluate", cfg, out)?;
        run.input(embeddings);
        run.input(labels);
        write_metrics(&mut run, cfg, "embeddings", &cv)?;
        run.finish()?;
    }
    Ok(())
}

pub fn analyze(cfg: &Config, embeddings: &Path, graph_dir: &Path, labels: Option<&Path>, out: &Path) -> Result<(), CliError> {
    let mut run = Run::start("analyze", cfg, out)?;
    run.input(embeddings);
    run.inputs(dataset_inputs(graph_dir));
    if let Some(l) = labels {
        run.input(l);
    }
    let table = EmbeddingTable::import(embeddings, None)?;
    let graph = pipeline::load_graph(graph_dir, &cfg.run.encoder, labels)?;
    let report = pipeline::analyze_users(&table, &graph, cfg.k_min..=cfg.k_max, cfg.seed(), cfg.top_words)?;
    run.write("clusters.json", json(&report))?;

    let na = |x: Option<f64>| x.map_or("NA".to_owned(), |v| v.to_string());
    let mut activity = String::from("cluster\tsize\tlabelled\tmean_score\tusers_per_unique_tweet\n");
    for c in &report.clusters {
        let _ = writeln!(
            activity,
            "{}\t{}\t{}\t{}\t{}",
            c.cluster,
            c.size,
            c.labelled,
            na(c.mean_score),
            na(c.users_per_unique_tweet)
        );
    }
    run.write("activity.tsv", activity)?;

    let mut words = String::from("cluster\trank\tword\tcount\n");
    for (c, list) in report.words.iter().enumerate() {
        for (rank, (w, n)) in list.iter().enumerate() {
            let _ = writeln!(words, "{c}\t{}\t{w}\t{n}", rank + 1);
        }
    }
    run.write("wordfreq.tsv", words)?;

    let mut coords = String::from("id\tx\ty\tscore\n");
    for r in &report.coords {
        let _ = writeln!(coords, "{}\t{}\t{}\t{}", r.id, r.x, r.y, na(r.score));
    }
    run.write("coords.tsv", coords)?;

    println!("chosen k {}", report.chosen_k);
    for c in &report.clusters {
        let leaning = c.mean_score.map(|s| match Leaning::from_score(s) {
            Leaning::Right => "right",
            Leaning::Left => "left",
        });
        println!(
            "cluster {} size {} mean score {} ({}) users per unique tweet {}",
            c.cluster,
            c.size,
            na(c.mean_score),
            leaning.unwrap_or("unlabelled"),
            na(c.users_per_unique_tweet)
        );
    }
    run.finish()
}

pub fn gradcheck(cfg: &Config, out: Option<&Path>) -> Result<(), CliError> {
    let report = gradcheck::check_seed(cfg.seed())?;
    println!(
        "max relative error {:.3e} (max abs {:.3e}, {} parameters)",
        report.max_rel_err, report.max_abs_err, report.checked
    );
    if let Some(out) = out {
        let mut run = Run::start("gradcheck", cfg, out)?;
        run.write("gradcheck.json", json(&report))?;
        run.finish()?;
    }
    if report.max_rel_err <= GRADCHECK_TOLERANCE {
        Ok(())
    } else {
        Err(CliError::Tolerance(format!(
            "gradient check failed: {:.3e} > {GRADCHECK_TOLERANCE:e}",
            report.max_rel_err
        )))
    }
}

fn json<T: Serialize + ?Sized>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("value serializes") + "\n"
}
