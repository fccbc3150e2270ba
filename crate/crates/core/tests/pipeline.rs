use std::path::Path;

use bihet::encoders::EncoderConfig;
use bihet::graph::{load_labels, LabelRecord};
use bihet::model::ModelConfig;
use bihet::pipeline::{analyze_users, default_classifier, evaluate_labelled, evaluate_table, prepare, train_embeddings, RunSettings};
use bihet::synth::{generate, write, Profile, SynthConfig};

fn tiny(seed: u64) -> SynthConfig {
    SynthConfig {
        users_per_community: 20,
        tweets_per_community: 60,
        p_in: 0.1,
        p_out: 0.01,
        text_dim: 24,
        image_dim: 12,
        ..SynthConfig::profile(Profile::Small, seed)
    }
}

fn settings(seed: u64) -> RunSettings {
    let mut s = RunSettings::new(seed);
    s.encoder = EncoderConfig {
        text_dim: 24,
        image_dim: 12,
        ..EncoderConfig::default()
    };
    s.model = ModelConfig {
        dim: 16,
        ..ModelConfig::default()
    };
    s.walk.walks_per_node = 2;
    s.train.triples_per_epoch = Some(512);
    s.folds = 5;
    s
}

fn synth_into(dir: &Path, seed: u64) {
    write(&generate(&tiny(seed)).unwrap(), dir).unwrap();
}

#[test]
fn untrained_embeddings_are_finite() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), 3);
    let mut s = settings(3);
    s.train.epochs = 0;
    let p = prepare(dir.path(), &s, None).unwrap();
    let out = train_embeddings(&p, &s).unwrap();
    assert!(out.epoch_losses.is_empty());
    assert_eq!(out.embeddings.len(), p.graph.node_count());
    for v in 0..p.graph.node_count() {
        let row = out.embeddings.get(&p.graph.node_key(v)).unwrap();
        assert_eq!(row.len(), 16);
        assert!(row.iter().all(|x| x.is_finite()));
    }
}

#[test]
fn training_lowers_the_loss_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), 4);
    let s = settings(4);
    let p = prepare(dir.path(), &s, None).unwrap();
    let out = train_embeddings(&p, &s).unwrap();
    let losses = &out.epoch_losses;
    assert_eq!(losses.len(), 5);
    assert!(losses.iter().all(|l| l.is_finite()));
    assert!(losses[4] < losses[0], "{losses:?}");

    let spec = default_classifier();
    let by_graph = evaluate_table(&out.embeddings, &p.graph, &spec, s.folds, s.seed).unwrap();
    let auroc = by_graph.report.auroc.mean;
    assert!((0.0..=1.0).contains(&auroc));
    assert_eq!(by_graph.report.folds.len(), s.folds);

    let map = p.graph.labels().unwrap();
    let in_index_order: Vec<LabelRecord> = map
        .users()
        .into_iter()
        .map(|u| LabelRecord {
            user_id: p.graph.user(u).external_id.clone(),
            score: map.score(u).unwrap(),
        })
        .collect();
    let same = evaluate_labelled(&out.embeddings, &in_index_order, &spec, s.folds, s.seed).unwrap();
    assert_eq!(same.report, by_graph.report);
    assert_eq!(same.scores, by_graph.scores);

    let labels = load_labels(&dir.path().join("labels.jsonl")).unwrap();
    let by_file = evaluate_labelled(&out.embeddings, &labels, &spec, s.folds, s.seed).unwrap();
    assert_eq!(by_file.scores.len(), labels.len());
}

#[test]
fn analysis_covers_every_user() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path(), 5);
    let mut s = settings(5);
    s.train.epochs = 1;
    let p = prepare(dir.path(), &s, None).unwrap();
    let out = train_embeddings(&p, &s).unwrap();
    let report = analyze_users(&out.embeddings, &p.graph, 2..=4, 5, 5).unwrap();
    let n = p.graph.n_users();
    assert!((2..=4).contains(&report.chosen_k));
    assert_eq!(report.scanned.len(), 3);
    assert_eq!(report.assignments.len(), n);
    assert_eq!(report.coords.len(), n);
    assert_eq!(report.clusters.iter().map(|c| c.size).sum::<usize>(), n);
    assert_eq!(report.words.len(), report.chosen_k);
    assert!(report.words.iter().all(|w| w.len() <= 5));
    let labelled = p.graph.labels().unwrap().len();
    assert_eq!(report.clusters.iter().map(|c| c.labelled).sum::<usize>(), labelled);
}
