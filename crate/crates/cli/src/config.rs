//! `key = value` run configuration merged with command-line flags.
//!
//! Resolution order is library defaults, then the config file, then flags.
//! Every key is validated up front, whichever subcommand is running, so a typo in
//! a shared config file surfaces immediately.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use bihet::eval::{ClassifierSpec, ForestConfig, LogRegConfig, MaxFeatures};
use bihet::model::LossSign;
use bihet::pipeline::RunSettings;
use bihet::synth::Profile;

use crate::error::CliError;

/// Every accepted key with a one-line description.
pub const KEYS: &[(&str, &str)] = &[
    ("seed", "root seed; every random stream is derived from it"),
    ("threads", "worker threads (1 gives bit-for-bit reproducible runs)"),
    ("profile", "synthetic dataset profile: small | medium"),
    ("text_dim", "text vector dimension"),
    ("image_dim", "image vector dimension"),
    ("hash_seed", "seed of the hashing text encoder"),
    ("walk_length", "random walk length"),
    ("window", "skip-gram window"),
    ("walks_per_node", "walks started from every node"),
    ("restart", "restart probability of each walk step"),
    ("topk_user", "user neighbours kept per node"),
    ("topk_tweet", "tweet neighbours kept per node"),
    ("dim", "embedding dimension"),
    ("leaky_slope", "negative slope of the attention LeakyReLU"),
    ("epochs", "training epochs"),
    ("batch_size", "triples per optimiser step"),
    ("learning_rate", "Adam step size"),
    ("negatives", "negatives per positive pair"),
    ("triples_per_epoch", "pairs drawn per epoch, or `all`"),
    ("loss_sign", "standard | paper-literal"),
    ("gcn_feature_dim", "GCN input width after PCA"),
    ("gcn_hidden", "GCN hidden width"),
    ("gcn_steps", "GCN optimiser steps"),
    ("gcn_batch_size", "positive pairs per GCN step"),
    ("gcn_learning_rate", "GCN Adam step size"),
    ("gcn_temperature", "InfoNCE temperature"),
    ("model", "classifier: logreg | rf"),
    ("k", "cross-validation folds"),
    ("c", "inverse L1 strength of logistic regression"),
    ("max_iter", "logistic regression iteration cap"),
    ("tol", "logistic regression objective tolerance"),
    ("n_trees", "random forest size"),
    ("max_depth", "tree depth limit, or `none`"),
    ("max_features", "features tried per split: sqrt | all"),
    ("k_min", "smallest k scanned by analyze"),
    ("k_max", "largest k scanned by analyze"),
    ("top_words", "words listed per cluster"),
];

/// Key reference appended to `--help`.
pub fn keys_help() -> String {
    let mut s = String::from("Config file keys (`key = value`, `#` comments; dashes and underscores are interchangeable):\n");
    for (k, doc) in KEYS {
        s.push_str(&format!("  {k:<20} {doc}\n"));
    }
    s
}

fn defaults() -> BTreeMap<String, String> {
    let run = RunSettings::new(0);
    let lr = LogRegConfig::default();
    let rf = ForestConfig::default();
    let pairs: Vec<(&str, String)> = vec![
        ("seed", "0".into()),
        ("threads", "1".into()),
        ("profile", "small".into()),
        ("text_dim", run.encoder.text_dim.to_string()),
        ("image_dim", run.encoder.image_dim.to_string()),
        ("hash_seed", run.encoder.hash_seed.to_string()),
        ("walk_length", run.walk.walk_length.to_string()),
        ("window", run.walk.window.to_string()),
        ("walks_per_node", run.walk.walks_per_node.to_string()),
        ("restart", run.walk.restart_prob.to_string()),
        ("topk_user", run.walk.topk_user.to_string()),
        ("topk_tweet", run.walk.topk_tweet.to_string()),
        ("dim", run.model.dim.to_string()),
        ("leaky_slope", run.model.leaky_slope.to_string()),
        ("epochs", run.train.epochs.to_string()),
        ("batch_size", run.train.batch_size.to_string()),
        ("learning_rate", run.train.learning_rate.to_string()),
        ("negatives", run.train.negatives_per_positive.to_string()),
        (
            "triples_per_epoch",
            run.train.triples_per_epoch.map_or("all".into(), |n| n.to_string()),
        ),
        ("loss_sign", run.train.loss_sign.to_string()),
        ("gcn_feature_dim", run.gcn.feature_dim.to_string()),
        ("gcn_hidden", run.gcn.hidden.to_string()),
        ("gcn_steps", run.gcn.steps.to_string()),
        ("gcn_batch_size", run.gcn.batch_size.to_string()),
        ("gcn_learning_rate", run.gcn.learning_rate.to_string()),
        ("gcn_temperature", run.gcn.temperature.to_string()),
        ("model", "logreg".into()),
        ("k", run.folds.to_string()),
        ("c", lr.c.to_string()),
        ("max_iter", lr.max_iter.to_string()),
        ("tol", lr.tol.to_string()),
        ("n_trees", rf.n_trees.to_string()),
        ("max_depth", rf.max_depth.map_or("none".into(), |d| d.to_string())),
        (
            "max_features",
            match rf.max_features {
                MaxFeatures::Sqrt => "sqrt",
                MaxFeatures::All => "all",
            }
            .into(),
        ),
        ("k_min", "2".into()),
        ("k_max", "8".into()),
        ("top_words", "20".into()),
    ];
    pairs.into_iter().map(|(k, v)| (k.to_owned(), v)).collect()
}

fn normalize(key: &str) -> String {
    key.trim().replace('-', "_")
}

/// Parses a config file body. Blank lines and lines starting with `#` are skipped.
pub fn parse_file(text: &str, origin: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("{origin}:{}: expected `key = value`", i + 1)))?;
        out.push((normalize(k), v.trim().to_owned()));
    }
    Ok(out)
}

/// Effective configuration of one invocation.
#[derive(Debug, Clone)]
pub struct Config {
    values: BTreeMap<String, String>,
    explicit: Vec<String>,
    pub run: RunSettings,
    pub classifier: ClassifierSpec,
    pub profile: Profile,
    pub threads: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub top_words: usize,
}

impl Config {
    pub fn resolve(file: Option<&Path>, flags: Vec<(&'static str, String)>) -> Result<Self, CliError> {
        let mut values = defaults();
        let mut explicit = Vec::new();
        let mut entries = Vec::new();
        if let Some(path) = file {
            let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
            entries.extend(parse_file(&text, &path.display().to_string())?);
        }
        entries.extend(flags.into_iter().map(|(k, v)| (k.to_owned(), v)));
        for (k, v) in entries {
            match values.get_mut(&k) {
                Some(slot) => *slot = v,
                None => return Err(CliError::Usage(format!("unknown config key `{k}`"))),
            }
            explicit.push(k);
        }
        Self::build(values, explicit)
    }

    fn build(values: BTreeMap<String, String>, explicit: Vec<String>) -> Result<Self, CliError> {
        let get = |k: &str| values[k].as_str();
        let seed: u64 = parse(get("seed"), "seed")?;
        let mut run = RunSettings::new(seed);
        run.encoder.text_dim = parse(get("text_dim"), "text_dim")?;
        run.encoder.image_dim = parse(get("image_dim"), "image_dim")?;
        run.encoder.hash_seed = parse(get("hash_seed"), "hash_seed")?;
        run.walk.walk_length = parse(get("walk_length"), "walk_length")?;
        run.walk.window = parse(get("window"), "window")?;
        run.walk.walks_per_node = parse(get("walks_per_node"), "walks_per_node")?;
        run.walk.restart_prob = parse(get("restart"), "restart")?;
        run.walk.topk_user = parse(get("topk_user"), "topk_user")?;
        run.walk.topk_tweet = parse(get("topk_tweet"), "topk_tweet")?;
        run.model.dim = parse(get("dim"), "dim")?;
        run.model.leaky_slope = parse(get("leaky_slope"), "leaky_slope")?;
        run.model.text_dim = run.encoder.text_dim;
        run.model.image_dim = run.encoder.image_dim;
        run.train.epochs = parse(get("epochs"), "epochs")?;
        run.train.batch_size = parse(get("batch_size"), "batch_size")?;
        run.train.learning_rate = parse(get("learning_rate"), "learning_rate")?;
        run.train.negatives_per_positive = parse(get("negatives"), "negatives")?;
        run.train.triples_per_epoch = optional(get("triples_per_epoch"), "all", "triples_per_epoch")?;
        run.train.loss_sign = parse::<LossSign>(get("loss_sign"), "loss_sign")?;
        run.gcn.feature_dim = parse(get("gcn_feature_dim"), "gcn_feature_dim")?;
        run.gcn.hidden = parse(get("gcn_hidden"), "gcn_hidden")?;
        run.gcn.dim = run.model.dim;
        run.gcn.steps = parse(get("gcn_steps"), "gcn_steps")?;
        run.gcn.batch_size = parse(get("gcn_batch_size"), "gcn_batch_size")?;
        run.gcn.learning_rate = parse(get("gcn_learning_rate"), "gcn_learning_rate")?;
        run.gcn.temperature = parse(get("gcn_temperature"), "gcn_temperature")?;
        run.folds = parse(get("k"), "k")?;

        let classifier = match get("model") {
            "logreg" => ClassifierSpec::Logreg(LogRegConfig {
                c: parse(get("c"), "c")?,
                tol: parse(get("tol"), "tol")?,
                max_iter: parse(get("max_iter"), "max_iter")?,
            }),
            "rf" => ClassifierSpec::Rf(ForestConfig {
                n_trees: parse(get("n_trees"), "n_trees")?,
                max_depth: optional(get("max_depth"), "none", "max_depth")?,
                max_features: match get("max_features") {
                    "sqrt" => MaxFeatures::Sqrt,
                    "all" => MaxFeatures::All,
                    other => return Err(bad("max_features", other)),
                },
                seed,
                ..ForestConfig::default()
            }),
            other => return Err(bad("model", other)),
        };
        let threads = parse(get("threads"), "threads")?;
        if threads == 0 {
            return Err(bad("threads", "0"));
        }
        Ok(Config {
            profile: parse(get("profile"), "profile")?,
            threads,
            k_min: parse(get("k_min"), "k_min")?,
            k_max: parse(get("k_max"), "k_max")?,
            top_words: parse(get("top_words"), "top_words")?,
            run,
            classifier,
            values,
            explicit,
        })
    }

    pub fn is_explicit(&self, key: &str) -> bool {
        self.explicit.iter().any(|k| k == key)
    }

    /// Replaces one value after resolution, for settings dictated by an input
    /// artifact (for example a checkpoint's dimensions).
    pub fn set(&mut self, key: &str, value: String) -> Result<(), CliError> {
        let mut values = self.values.clone();
        values.insert(key.to_owned(), value);
        let explicit = std::mem::take(&mut self.explicit);
        *self = Self::build(values, explicit)?;
        Ok(())
    }

    pub fn values(&self) -> &BTreeMap<String, String> {
        &self.values
    }

    pub fn seed(&self) -> u64 {
        self.run.seed
    }
}

fn bad(key: &str, value: &str) -> CliError {
    CliError::Usage(format!("invalid value {value:?} for `{key}`"))
}

fn parse<T: FromStr>(value: &str, key: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value))
}

fn optional<T: FromStr>(value: &str, none: &str, key: &str) -> Result<Option<T>, CliError> {
    if value == none {
        Ok(None)
    } else {
        parse(value, key).map(Some)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cover_every_documented_key() {
        let d = defaults();
        assert_eq!(d.len(), KEYS.len());
        for (k, _) in KEYS {
            assert!(d.contains_key(*k), "{k}");
        }
        Config::build(d, Vec::new()).unwrap();
    }

    #[test]
    fn flags_override_file_and_file_overrides_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "# comment\nepochs = 3\nwalk-length = 12\n\nseed=4\n").unwrap();
        let c = Config::resolve(Some(&path), vec![("epochs", "7".into())]).unwrap();
        assert_eq!(c.run.train.epochs, 7);
        assert_eq!(c.run.walk.walk_length, 12);
        assert_eq!(c.seed(), 4);
        assert_eq!(c.run.train.seed, 4);
        assert!(c.is_explicit("walk_length"));
        assert!(!c.is_explicit("window"));
    }

    #[test]
    fn unknown_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.conf");
        std::fs::write(&path, "epoch = 3\n").unwrap();
        let err = Config::resolve(Some(&path), Vec::new()).unwrap_err();
        assert!(err.to_string().contains("epoch"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn malformed_values_are_usage_errors() {
        assert!(Config::resolve(None, vec![("model", "svm".into())]).is_err());
        assert!(Config::resolve(None, vec![("epochs", "-1".into())]).is_err());
        let c = Config::resolve(None, vec![("triples_per_epoch", "all".into()), ("max_depth", "4".into())]).unwrap();
        assert_eq!(c.run.train.triples_per_epoch, None);
    }
}
