//! Random walks with restart, typed neighbour sets, positive pairs and negatives.

mod alias;

pub use alias::AliasTable;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{GraphStructure, NodeKind};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkConfig {
    pub walk_length: usize,
    pub window: usize,
    pub walks_per_node: usize,
    pub restart_prob: f64,
    pub topk_user: usize,
    pub topk_tweet: usize,
    pub seed: u64,
}

impl Default for WalkConfig {
    fn default() -> Self {
        WalkConfig {
            walk_length: 30,
            window: 5,
            walks_per_node: 10,
            restart_prob: 0.5,
            topk_user: 10,
            topk_tweet: 10,
            seed: 0,
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.walk_length == 0 {
            return Err(Error::Invalid("walk_length must be positive".into()));
        }
        if self.window >= self.walk_length {
            return Err(Error::Invalid(format!(
                "window ({}) must be smaller than walk_length ({})",
                self.window, self.walk_length
            )));
        }
        if self.walks_per_node == 0 {
            return Err(Error::Invalid("walks_per_node must be positive".into()));
        }
        if !(0.0..=1.0).contains(&self.restart_prob) {
            return Err(Error::Invalid("restart_prob must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// One walk of `walk_length` global node indices starting at `start`. At each
/// step the walk returns to `start` with probability `restart_prob`, otherwise it
/// moves to a uniformly chosen distinct neighbour.
pub fn rwr_walk<R: Rng + ?Sized>(graph: &GraphStructure, start: usize, config: &WalkConfig, rng: &mut R) -> Vec<usize> {
    let mut walk = Vec::with_capacity(config.walk_length);
    walk.push(start);
    let mut cur = start;
    let mut nbrs = graph.distinct_neighbors(cur);
    while walk.len() < config.walk_length {
        let restart = rng.random::<f64>() < config.restart_prob;
        let next = if restart || nbrs.is_empty() {
            start
        } else {
            nbrs[rng.random_range(0..nbrs.len())]
        };
        if next != cur {
            nbrs = graph.distinct_neighbors(next);
        }
        cur = next;
        walk.push(cur);
    }
    walk
}

/// `walks_per_node` walks from every node, grouped by start node. Each start node
/// draws from its own stream, so the result does not depend on thread count.
pub fn generate_walks(graph: &GraphStructure, config: &WalkConfig) -> Vec<Vec<Vec<usize>>> {
    let stream = rng::stream_seed(config.seed, "sampling.walks");
    (0..graph.node_count())
        .into_par_iter()
        .map(|v| {
            let mut r = rng::indexed(stream, v as u64);
            (0..config.walks_per_node)
                .map(|_| rwr_walk(graph, v, config, &mut r))
                .collect()
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NeighborSets {
    /// Per global node: user-type neighbours as (global index, visit count).
    pub user: Vec<Vec<(usize, u32)>>,
    /// Per global node: tweet-type neighbours as (global index, visit count).
    pub tweet: Vec<Vec<(usize, u32)>>,
}

impl NeighborSets {
    pub fn of(&self, kind: NodeKind, v: usize) -> &[(usize, u32)] {
        match kind {
            NodeKind::User => &self.user[v],
            NodeKind::Tweet => &self.tweet[v],
        }
    }

    pub fn ids(&self, kind: NodeKind, v: usize) -> Vec<usize> {
        self.of(kind, v).iter().map(|(n, _)| *n).collect()
    }

    pub fn to_text(&self, graph: &GraphStructure) -> String {
        let mut out = String::new();
        for v in 0..self.user.len() {
            for (kind, list) in [(NodeKind::User, &self.user[v]), (NodeKind::Tweet, &self.tweet[v])] {
                out.push_str(&graph.node_key(v));
                out.push('\t');
                out.push_str(kind.prefix());
                out.push('\t');
                let items: Vec<String> = list
                    .iter()
                    .map(|(n, c)| format!("{}:{}", graph.node_key(*n), c))
                    .collect();
                out.push_str(&items.join(" "));
                out.push('\n');
            }
        }
        out
    }
}

/// Visit counts (start node excluded), split by type and truncated to the top-k,
/// ordered by count descending then index ascending.
pub fn neighbor_sets_from_walks(graph: &GraphStructure, walks: &[Vec<Vec<usize>>], config: &WalkConfig) -> NeighborSets {
    let per_node: Vec<(Vec<(usize, u32)>, Vec<(usize, u32)>)> = walks
        .par_iter()
        .enumerate()
        .map(|(v, node_walks)| {
            let mut counts: std::collections::BTreeMap<usize, u32> = Default::default();
            for w in node_walks {
                for &n in w {
                    if n != v {
                        *counts.entry(n).or_insert(0) += 1;
                    }
                }
            }
            let mut users = Vec::new();
            let mut tweets = Vec::new();
            for (n, c) in counts {
                match graph.kind_of(n) {
                    NodeKind::User => users.push((n, c)),
                    NodeKind::Tweet => tweets.push((n, c)),
                }
            }
            for (list, k) in [(&mut users, config.topk_user), (&mut tweets, config.topk_tweet)] {
                list.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
                list.truncate(k);
            }
            (users, tweets)
        })
        .collect();
    let (user, tweet) = per_node.into_iter().unzip();
    NeighborSets { user, tweet }
}

pub fn build_neighbor_sets(graph: &GraphStructure, config: &WalkConfig) -> Result<NeighborSets> {
    config.validate()?;
    let walks = generate_walks(graph, config);
    Ok(neighbor_sets_from_walks(graph, &walks, config))
}

/// All ordered pairs `(w[i], w[j])` with `0 < |i - j| <= window` and `w[i] != w[j]`.
pub fn positive_pairs<'a, I>(walks: I, window: usize) -> impl Iterator<Item = (usize, usize)> + 'a
where
    I: IntoIterator<Item = &'a Vec<usize>> + 'a,
{
    walks.into_iter().flat_map(move |w| {
        (0..w.len()).flat_map(move |i| {
            let lo = i.saturating_sub(window);
            let hi = (i + window).min(w.len() - 1);
            (lo..=hi).filter_map(move |j| (j != i && w[i] != w[j]).then_some((w[i], w[j])))
        })
    })
}

/// Negatives: users drawn with probability proportional to `statuses + 1`,
/// tweets uniformly.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    users: Option<AliasTable>,
    user_offset: usize,
    n_tweets: usize,
    tweet_offset: usize,
}

impl NegativeSampler {
    pub fn new(graph: &GraphStructure) -> Result<Self> {
        let weights: Vec<f64> = graph.users().iter().map(|u| u.statuses as f64 + 1.0).collect();
        let users = if weights.is_empty() {
            None
        } else {
            Some(AliasTable::new(&weights)?)
        };
        Ok(NegativeSampler {
            users,
            user_offset: graph.nodes_of(NodeKind::User).start,
            n_tweets: graph.n_tweets(),
            tweet_offset: graph.nodes_of(NodeKind::Tweet).start,
        })
    }

    pub fn user_probabilities(&self) -> Option<&[f64]> {
        self.users.as_ref().map(|t| t.probabilities())
    }

    pub fn sample<R: Rng + ?Sized>(&self, kind: NodeKind, rng: &mut R) -> Result<usize> {
        match kind {
            NodeKind::User => {
                let t = self
                    .users
                    .as_ref()
                    .ok_or_else(|| Error::Invalid("no user nodes to sample negatives from".into()))?;
                Ok(self.user_offset + t.sample(rng))
            }
            NodeKind::Tweet => {
                if self.n_tweets == 0 {
                    return Err(Error::Invalid("no tweet nodes to sample negatives from".into()));
                }
                Ok(self.tweet_offset + rng.random_range(0..self.n_tweets))
            }
        }
    }
}

pub fn walks_to_text(graph: &GraphStructure, walks: &[Vec<Vec<usize>>]) -> String {
    let mut out = String::new();
    for w in walks.iter().flatten() {
        let ids: Vec<String> = w.iter().map(|&n| graph.node_key(n)).collect();
        out.push_str(&ids.join(" "));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_graph, Dataset, EdgeRecord, Relation, TweetRecord, UserRecord};

    fn user(id: &str, statuses: u64) -> UserRecord {
        UserRecord {
            external_id: id.into(),
            followers: 0,
            friends: 0,
            listed: 0,
            statuses,
            favorites: 0,
            verified: false,
            description_text: None,
            description_vec: None,
            synthetic: false,
        }
    }

    fn tweet(id: &str, author: &str) -> TweetRecord {
        TweetRecord {
            external_id: id.into(),
            author_external_id: author.into(),
            text: Some("x".into()),
            has_image: false,
            author: None,
            text_vec: None,
            image_vec: None,
        }
    }

    /// One tweet hub retweeted by `leaves` users (plus isolated extras).
    pub(crate) fn star(leaves: usize) -> GraphStructure {
        let users: Vec<UserRecord> = (0..leaves).map(|i| user(&format!("u{i}"), i as u64)).collect();
        let edges = (0..leaves)
            .map(|i| EdgeRecord {
                user_external_id: format!("u{i}"),
                tweet_external_id: "hub".into(),
                relation: Relation::Retweet,
            })
            .collect();
        let d = Dataset {
            users,
            tweets: vec![tweet("hub", "u0")],
            edges,
        };
        build_graph(&d).unwrap().structure().clone()
    }

    #[test]
    fn full_restart_stays_home() {
        let g = star(3);
        let cfg = WalkConfig {
            restart_prob: 1.0,
            ..Default::default()
        };
        let mut r = rng::stream(1, "t");
        let w = rwr_walk(&g, 3, &cfg, &mut r);
        assert_eq!(w.len(), 30);
        assert!(w.iter().all(|&n| n == 3));
    }

    #[test]
    fn two_node_path_alternates() {
        let g = star(1);
        let cfg = WalkConfig {
            restart_prob: 0.0,
            ..Default::default()
        };
        let mut r = rng::stream(1, "t");
        let w = rwr_walk(&g, 0, &cfg, &mut r);
        for (i, n) in w.iter().enumerate() {
            assert_eq!(*n, i % 2);
        }
    }

    #[test]
    fn isolated_start_repeats() {
        let d = Dataset {
            users: vec![user("a", 0), user("b", 0)],
            tweets: vec![tweet("t", "a")],
            edges: vec![],
        };
        let g = build_graph(&d).unwrap();
        let cfg = WalkConfig {
            restart_prob: 0.0,
            ..Default::default()
        };
        let mut r = rng::stream(1, "t");
        assert!(rwr_walk(&g, 1, &cfg, &mut r).iter().all(|&n| n == 1));
        let sets = build_neighbor_sets(&g, &cfg).unwrap();
        assert!(sets.user[1].is_empty() && sets.tweet[1].is_empty());
    }

    #[test]
    fn hub_keeps_topk_leaves() {
        let g = star(5);
        let hub = 5;
        let cfg = WalkConfig {
            topk_user: 3,
            seed: 11,
            ..Default::default()
        };
        let sets = build_neighbor_sets(&g, &cfg).unwrap();
        let users = &sets.user[hub];
        assert_eq!(users.len(), 3);
        assert!(users.windows(2).all(|w| w[0].1 >= w[1].1));
        assert!(sets.tweet[hub].is_empty());

        // brute-force recount over the very same seeded walks
        let walks = generate_walks(&g, &cfg);
        let mut counts = vec![0u32; 5];
        for w in &walks[hub] {
            for &n in w {
                if n != hub {
                    counts[n] += 1;
                }
            }
        }
        let mut order: Vec<usize> = (0..5).collect();
        order.sort_by(|a, b| counts[*b].cmp(&counts[*a]).then(a.cmp(b)));
        let expected: Vec<(usize, u32)> = order[..3].iter().map(|&i| (i, counts[i])).collect();
        assert_eq!(users, &expected);
        assert_eq!(sets, build_neighbor_sets(&g, &cfg).unwrap());
    }

    #[test]
    fn neighbor_lists_never_mix_types() {
        let g = star(4);
        let sets = build_neighbor_sets(&g, &WalkConfig::default()).unwrap();
        for v in 0..g.node_count() {
            assert!(sets.user[v].iter().all(|(n, _)| g.kind_of(*n) == NodeKind::User && *n != v));
            assert!(sets.tweet[v].iter().all(|(n, _)| g.kind_of(*n) == NodeKind::Tweet && *n != v));
        }
    }

    #[test]
    fn window_pairs_enumeration() {
        let walks = vec![vec![0, 1, 2]];
        let pairs: Vec<_> = positive_pairs(&walks, 1).collect();
        assert_eq!(pairs, vec![(0, 1), (1, 0), (1, 2), (2, 1)]);
        let same = vec![vec![4, 4, 4, 4]];
        assert_eq!(positive_pairs(&same, 2).count(), 0);
    }

    #[test]
    fn window_pair_count_bound() {
        // distinct nodes: the count equals the combinatorial bound exactly
        let walks = vec![(0..30).collect::<Vec<usize>>()];
        let bound = 2 * (29 + 28 + 27 + 26 + 25);
        assert_eq!(positive_pairs(&walks, 5).count(), bound);
        let g = star(4);
        let mut r = rng::stream(3, "t");
        let w = vec![rwr_walk(&g, 0, &WalkConfig::default(), &mut r)];
        assert!(positive_pairs(&w, 5).count() <= bound);
    }

    #[test]
    fn negative_sampler_targets() {
        let d = Dataset {
            users: vec![user("A", 3), user("B", 1), user("C", 0)],
            tweets: vec![tweet("t0", "A"), tweet("t1", "A"), tweet("t2", "A")],
            edges: vec![],
        };
        let g = build_graph(&d).unwrap();
        let s = NegativeSampler::new(&g).unwrap();
        let p = s.user_probabilities().unwrap();
        assert!((p[0] - 4.0 / 7.0).abs() < 1e-15);
        assert!((p[1] - 2.0 / 7.0).abs() < 1e-15);
        assert!((p[2] - 1.0 / 7.0).abs() < 1e-15);
        let mut r = rng::stream(5, "t");
        let n = 100_000;
        let mut tc = [0usize; 3];
        for _ in 0..n {
            tc[s.sample(NodeKind::Tweet, &mut r).unwrap() - 3] += 1;
        }
        for c in tc {
            assert!((c as f64 / n as f64 - 1.0 / 3.0).abs() < 0.02);
        }
    }

    #[test]
    fn negative_sampler_edge_cases() {
        let d = Dataset {
            users: vec![user("only", 9)],
            tweets: vec![],
            edges: vec![],
        };
        let g = build_graph(&d).unwrap();
        let s = NegativeSampler::new(&g).unwrap();
        let mut r = rng::stream(5, "t");
        assert!((0..50).all(|_| s.sample(NodeKind::User, &mut r).unwrap() == 0));
        assert!(s.sample(NodeKind::Tweet, &mut r).is_err());
    }

    #[test]
    fn config_validation() {
        let bad = WalkConfig {
            window: 30,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        assert!(WalkConfig::default().validate().is_ok());
    }
}
