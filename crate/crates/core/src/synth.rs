//! Seeded generator of two-community polarized datasets.
//!
//! Users of community `c` author tweets of community `c`, interact with their own
//! community's tweets with probability `p_in` and with the other community's with
//! `p_out`. Descriptions, tweet texts and image "contents" are bags of pseudo-words
//! in which each word comes from the community vocabulary with probability
//! `content_signal` and from a shared vocabulary otherwise.

use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};
use serde::{Deserialize, Serialize};

use crate::encoders::hash_embed;
use crate::error::{Error, Result};
use crate::graph::{write_jsonl, Dataset, EdgeRecord, LabelRecord, Relation, TweetRecord, UserRecord, VectorDims};
use crate::rng;
use crate::vectors::VectorFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    Small,
    Medium,
}

impl std::str::FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(Profile::Small),
            "medium" => Ok(Profile::Medium),
            other => Err(Error::Invalid(format!("unknown synth profile {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub users_per_community: usize,
    pub tweets_per_community: usize,
    pub p_in: f64,
    pub p_out: f64,
    /// Log-normal parameters of the statuses count.
    pub statuses_mu: f64,
    pub statuses_sigma: f64,
    pub community_vocab: usize,
    pub shared_vocab: usize,
    pub words_per_doc: usize,
    pub content_signal: f64,
    pub description_rate: f64,
    pub image_rate: f64,
    /// Share of interactions recorded as quotes rather than retweets.
    pub quote_rate: f64,
    pub text_dim: usize,
    pub image_dim: usize,
    pub hash_seed: u64,
    pub seed: u64,
}

impl SynthConfig {
    pub fn profile(profile: Profile, seed: u64) -> Self {
        let base = SynthConfig {
            users_per_community: 100,
            tweets_per_community: 300,
            p_in: 0.03,
            p_out: 0.003,
            statuses_mu: 6.0,
            statuses_sigma: 1.5,
            community_vocab: 400,
            shared_vocab: 2000,
            words_per_doc: 10,
            content_signal: 0.3,
            description_rate: 0.8,
            image_rate: 0.3,
            quote_rate: 0.2,
            text_dim: 384,
            image_dim: 2048,
            hash_seed: 0,
            seed,
        };
        match profile {
            Profile::Small => base,
            Profile::Medium => SynthConfig {
                users_per_community: 500,
                tweets_per_community: 1500,
                p_in: 0.006,
                p_out: 0.0006,
                ..base
            },
        }
    }

    pub fn dims(&self) -> VectorDims {
        VectorDims {
            text_dim: self.text_dim,
            image_dim: self.image_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, p) in [
            ("p_in", self.p_in),
            ("p_out", self.p_out),
            ("content_signal", self.content_signal),
            ("description_rate", self.description_rate),
            ("image_rate", self.image_rate),
            ("quote_rate", self.quote_rate),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::Invalid(format!("{name} must lie in [0, 1], got {p}")));
            }
        }
        if self.users_per_community == 0
            || self.tweets_per_community == 0
            || self.community_vocab == 0
            || self.shared_vocab == 0
            || self.words_per_doc == 0
        {
            return Err(Error::Invalid("synth counts must be at least 1".into()));
        }
        if !(self.statuses_sigma >= 0.0) {
            return Err(Error::Invalid("statuses sigma must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: Dataset,
    pub labels: Vec<LabelRecord>,
    /// Community (0 or 1) of every user and tweet, in record order.
    pub user_community: Vec<u8>,
    pub tweet_community: Vec<u8>,
    pub text_vectors: VectorFile,
    pub image_vectors: VectorFile,
}

const PREFIX: [&str; 2] = ["lw", "rw"];

fn document<R: Rng>(config: &SynthConfig, community: u8, kind: &str, rng: &mut R) -> String {
    (0..config.words_per_doc)
        .map(|_| {
            if rng.random::<f64>() < config.content_signal {
                format!("{kind}{}{}", PREFIX[community as usize], rng.random_range(0..config.community_vocab))
            } else {
                format!("{kind}sw{}", rng.random_range(0..config.shared_vocab))
            }
        })
        .collect::<Vec<_>>()
        .join(" ")
}

fn count<R: Rng>(dist: &LogNormal<f64>, rng: &mut R) -> u64 {
    dist.sample(rng).round().min(1e12) as u64
}

pub fn generate(config: &SynthConfig) -> Result<SynthOutput> {
    config.validate()?;
    let seed = config.seed;
    let statuses = LogNormal::new(config.statuses_mu, config.statuses_sigma)
        .map_err(|e| Error::Invalid(format!("statuses distribution: {e}")))?;
    let other = LogNormal::new(5.0, 1.5).expect("valid constants");
    let mut text_vectors = VectorFile::new(config.text_dim);
    let mut image_vectors = VectorFile::new(config.image_dim);

    let mut r = rng::stream(seed, "synth.users");
    let n_u = config.users_per_community;
    let mut users = Vec::with_capacity(2 * n_u);
    let mut user_community = Vec::with_capacity(2 * n_u);
    let mut labels = Vec::with_capacity(2 * n_u);
    for c in 0..2u8 {
        for i in 0..n_u {
            let id = format!("u{}{:05}", PREFIX[c as usize].as_bytes()[0] as char, i);
            let description = (r.random::<f64>() < config.description_rate).then(|| document(config, c, "", &mut r));
            if let Some(d) = &description {
                text_vectors.push(format!("user:{id}"), hash_embed(d, config.text_dim, config.hash_seed))?;
            }
            users.push(UserRecord {
                external_id: id.clone(),
                followers: count(&other, &mut r),
                friends: count(&other, &mut r),
                listed: count(&other, &mut r) / 20,
                statuses: count(&statuses, &mut r),
                favorites: count(&other, &mut r),
                verified: r.random::<f64>() < 0.05,
                description_text: description,
                description_vec: None,
                synthetic: false,
            });
            user_community.push(c);
            labels.push(LabelRecord {
                user_id: id,
                score: if c == 0 { -1.0 } else { 1.0 },
            });
        }
    }

    let mut r = rng::stream(seed, "synth.tweets");
    let n_t = config.tweets_per_community;
    let mut tweets = Vec::with_capacity(2 * n_t);
    let mut tweet_community = Vec::with_capacity(2 * n_t);
    let mut edges = Vec::new();
    for c in 0..2u8 {
        for i in 0..n_t {
            let id = format!("t{}{:06}", PREFIX[c as usize].as_bytes()[0] as char, i);
            let author = c as usize * n_u + r.random_range(0..n_u);
            let text = document(config, c, "", &mut r);
            text_vectors.push(format!("tweet:{id}"), hash_embed(&text, config.text_dim, config.hash_seed))?;
            let has_image = r.random::<f64>() < config.image_rate;
            if has_image {
                let visual = document(config, c, "img", &mut r);
                image_vectors.push(format!("tweet:{id}"), hash_embed(&visual, config.image_dim, config.hash_seed))?;
            }
            edges.push(EdgeRecord {
                user_external_id: users[author].external_id.clone(),
                tweet_external_id: id.clone(),
                relation: Relation::Post,
            });
            tweets.push(TweetRecord {
                external_id: id,
                author_external_id: users[author].external_id.clone(),
                text: Some(text),
                has_image,
                author: None,
                text_vec: None,
                image_vec: None,
            });
            tweet_community.push(c);
        }
    }

    let mut r = rng::stream(seed, "synth.interactions");
    for (u, user) in users.iter().enumerate() {
        for (t, tweet) in tweets.iter().enumerate() {
            let p = if user_community[u] == tweet_community[t] { config.p_in } else { config.p_out };
            let hit = r.random::<f64>() < p;
            let quote = r.random::<f64>() < config.quote_rate;
            if hit && tweet.author_external_id != user.external_id {
                edges.push(EdgeRecord {
                    user_external_id: user.external_id.clone(),
                    tweet_external_id: tweet.external_id.clone(),
                    relation: if quote { Relation::Quote } else { Relation::Retweet },
                });
            }
        }
    }

    Ok(SynthOutput {
        dataset: Dataset { users, tweets, edges },
        labels,
        user_community,
        tweet_community,
        text_vectors,
        image_vectors,
    })
}

/// Writes `users.jsonl`, `tweets.jsonl`, `edges.jsonl`, `labels.jsonl` and the
/// two vector sidecars into `dir` (created if missing).
pub fn write(output: &SynthOutput, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_jsonl(&dir.join("users.jsonl"), &output.dataset.users)?;
    write_jsonl(&dir.join("tweets.jsonl"), &output.dataset.tweets)?;
    write_jsonl(&dir.join("edges.jsonl"), &output.dataset.edges)?;
    write_jsonl(&dir.join("labels.jsonl"), &output.labels)?;
    output.text_vectors.write(&dir.join("text_vectors.tsv"))?;
    output.image_vectors.write(&dir.join("image_vectors.tsv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny(seed: u64) -> SynthConfig {
        SynthConfig {
            users_per_community: 10,
            tweets_per_community: 20,
            text_dim: 16,
            image_dim: 8,
            ..SynthConfig::profile(Profile::Small, seed)
        }
    }

    #[test]
    fn counts_match_config() {
        let out = generate(&tiny(1)).unwrap();
        assert_eq!(out.dataset.users.len(), 20);
        assert_eq!(out.dataset.tweets.len(), 40);
        assert_eq!(out.labels.len(), 20);
        let posts = out.dataset.edges.iter().filter(|e| e.relation == Relation::Post).count();
        assert_eq!(posts, 40);
    }

    #[test]
    fn no_cross_edges_when_p_out_is_zero() {
        let cfg = SynthConfig {
            p_in: 1.0,
            p_out: 0.0,
            ..tiny(2)
        };
        let out = generate(&cfg).unwrap();
        let comm = |id: &str| id.as_bytes()[1];
        assert!(out.dataset.edges.iter().all(|e| comm(&e.user_external_id) == comm(&e.tweet_external_id)));
        assert!(out.dataset.edges.len() > 40);
    }

    #[test]
    fn authors_share_the_tweet_community() {
        let out = generate(&tiny(3)).unwrap();
        for t in &out.dataset.tweets {
            assert_eq!(t.author_external_id.as_bytes()[1], t.external_id.as_bytes()[1]);
        }
    }

    #[test]
    fn invalid_probability_rejected() {
        let cfg = SynthConfig { p_in: 1.5, ..tiny(0) };
        assert!(generate(&cfg).is_err());
    }
}
