//! Records, JSON Lines ingestion, and the immutable bipartite user–tweet graph.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::ops::Deref;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vectors::VectorFile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum NodeKind {
    User,
    Tweet,
}

impl NodeKind {
    pub fn prefix(self) -> &'static str {
        match self {
            NodeKind::User => "user",
            NodeKind::Tweet => "tweet",
        }
    }

    pub fn other(self) -> NodeKind {
        match self {
            NodeKind::User => NodeKind::Tweet,
            NodeKind::Tweet => NodeKind::User,
        }
    }
}

/// A typed node handle; `index` is dense within its kind.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId {
    pub kind: NodeKind,
    pub index: u32,
}

impl NodeId {
    pub fn user(index: u32) -> Self {
        NodeId {
            kind: NodeKind::User,
            index,
        }
    }

    pub fn tweet(index: u32) -> Self {
        NodeId {
            kind: NodeKind::Tweet,
            index,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Post,
    Retweet,
    Quote,
}

impl Relation {
    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Post => "post",
            Relation::Retweet => "retweet",
            Relation::Quote => "quote",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    #[serde(rename = "id")]
    pub external_id: String,
    pub followers: u64,
    pub friends: u64,
    pub listed: u64,
    pub statuses: u64,
    pub favorites: u64,
    pub verified: bool,
    #[serde(rename = "description", default, skip_serializing_if = "Option::is_none")]
    pub description_text: Option<String>,
    #[serde(skip)]
    pub description_vec: Option<Vec<f64>>,
    /// Created from author characteristics embedded in a tweet record rather
    /// than read from the user file.
    #[serde(skip)]
    pub synthetic: bool,
}

/// Author characteristics as captured alongside a retweeted/quoted tweet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuthorSnapshot {
    pub followers: u64,
    pub friends: u64,
    pub listed: u64,
    pub statuses: u64,
    pub favorites: u64,
    pub verified: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TweetRecord {
    #[serde(rename = "id")]
    pub external_id: String,
    #[serde(rename = "author_id")]
    pub author_external_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub text: Option<String>,
    #[serde(default)]
    pub has_image: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub author: Option<AuthorSnapshot>,
    #[serde(skip)]
    pub text_vec: Option<Vec<f64>>,
    #[serde(skip)]
    pub image_vec: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EdgeRecord {
    #[serde(rename = "user_id")]
    pub user_external_id: String,
    #[serde(rename = "tweet_id")]
    pub tweet_external_id: String,
    pub relation: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRecord {
    pub user_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub users: Vec<UserRecord>,
    pub tweets: Vec<TweetRecord>,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone)]
pub struct DatasetPaths {
    pub users: PathBuf,
    pub tweets: PathBuf,
    pub edges: PathBuf,
    pub text_vectors: Option<PathBuf>,
    pub image_vectors: Option<PathBuf>,
}

impl DatasetPaths {
    /// Standard file names inside `dir`; sidecars are picked up when present.
    pub fn in_dir(dir: &Path) -> Self {
        let opt = |name: &str| {
            let p = dir.join(name);
            p.exists().then_some(p)
        };
        DatasetPaths {
            users: dir.join("users.jsonl"),
            tweets: dir.join("tweets.jsonl"),
            edges: dir.join("edges.jsonl"),
            text_vectors: opt("text_vectors.tsv"),
            image_vectors: opt("image_vectors.tsv"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VectorDims {
    pub text_dim: usize,
    pub image_dim: usize,
}

impl Default for VectorDims {
    fn default() -> Self {
        VectorDims {
            text_dim: 384,
            image_dim: 2048,
        }
    }
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        out.push(rec);
    }
    Ok(out)
}

pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<()> {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).map_err(|e| Error::Invalid(e.to_string()))?);
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Sidecar lookup accepts kind-qualified keys (`user:ID`) and bare ids.
fn lookup<'a>(map: &'a HashMap<String, Vec<f64>>, kind: NodeKind, id: &str) -> Option<&'a Vec<f64>> {
    map.get(&format!("{}:{}", kind.prefix(), id)).or_else(|| map.get(id))
}

fn read_sidecar(path: &Path, expected_dim: usize) -> Result<HashMap<String, Vec<f64>>> {
    let file = VectorFile::read(path)?;
    if file.dim != expected_dim {
        return Err(Error::Dimension(format!(
            "{} declares dimension {}, configured dimension is {}",
            path.display(),
            file.dim,
            expected_dim
        )));
    }
    Ok(file.into_map())
}

/// Reads the three record files, attaches sidecar vectors and checks that every
/// author and edge endpoint resolves.
pub fn load_dataset(paths: &DatasetPaths, dims: VectorDims) -> Result<Dataset> {
    let mut users: Vec<UserRecord> = read_jsonl(&paths.users)?;
    let mut tweets: Vec<TweetRecord> = read_jsonl(&paths.tweets)?;
    let edges: Vec<EdgeRecord> = read_jsonl(&paths.edges)?;

    let mut user_ids: HashSet<String> = HashSet::with_capacity(users.len());
    for (i, u) in users.iter().enumerate() {
        if !user_ids.insert(u.external_id.clone()) {
            return Err(Error::parse(&paths.users, i + 1, format!("duplicate user id {}", u.external_id)));
        }
    }
    let mut tweet_ids: HashSet<String> = HashSet::with_capacity(tweets.len());
    for (i, t) in tweets.iter().enumerate() {
        if !tweet_ids.insert(t.external_id.clone()) {
            return Err(Error::parse(&paths.tweets, i + 1, format!("duplicate tweet id {}", t.external_id)));
        }
    }

    for t in &tweets {
        if user_ids.contains(&t.author_external_id) {
            continue;
        }
        match &t.author {
            Some(snap) => {
                user_ids.insert(t.author_external_id.clone());
                users.push(UserRecord {
                    external_id: t.author_external_id.clone(),
                    followers: snap.followers,
                    friends: snap.friends,
                    listed: snap.listed,
                    statuses: snap.statuses,
                    favorites: snap.favorites,
                    verified: snap.verified,
                    description_text: snap.description.clone(),
                    description_vec: None,
                    synthetic: true,
                });
            }
            None => {
                return Err(Error::Reference(format!(
                    "tweet {} has unknown author {}",
                    t.external_id, t.author_external_id
                )))
            }
        }
    }

    for e in &edges {
        for id in [&e.user_external_id, &e.tweet_external_id] {
            if !user_ids.contains(id) && !tweet_ids.contains(id) {
                return Err(Error::Reference(format!(
                    "edge ({}, {}, {}) references unknown node {}",
                    e.user_external_id,
                    e.tweet_external_id,
                    e.relation.as_str(),
                    id
                )));
            }
        }
    }

    if let Some(p) = &paths.text_vectors {
        let map = read_sidecar(p, dims.text_dim)?;
        for u in &mut users {
            u.description_vec = lookup(&map, NodeKind::User, &u.external_id).cloned();
        }
        for t in &mut tweets {
            t.text_vec = lookup(&map, NodeKind::Tweet, &t.external_id).cloned();
        }
    }
    if let Some(p) = &paths.image_vectors {
        let map = read_sidecar(p, dims.image_dim)?;
        for t in &mut tweets {
            t.image_vec = lookup(&map, NodeKind::Tweet, &t.external_id).cloned();
        }
    }

    log::info!(
        "loaded {} users, {} tweets, {} edges",
        users.len(),
        tweets.len(),
        edges.len()
    );
    Ok(Dataset { users, tweets, edges })
}

pub fn load_labels(path: &Path) -> Result<Vec<LabelRecord>> {
    let labels: Vec<LabelRecord> = read_jsonl(path)?;
    for (i, l) in labels.iter().enumerate() {
        if !(-1.0..=1.0).contains(&l.score) {
            return Err(Error::parse(path, i + 1, format!("score {} outside [-1, 1]", l.score)));
        }
    }
    Ok(labels)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    /// Global node index.
    pub node: usize,
    pub relation: Relation,
}

/// Everything about the graph that training may see. Labels are not reachable
/// from here.
#[derive(Debug, Clone)]
pub struct GraphStructure {
    users: Vec<UserRecord>,
    tweets: Vec<TweetRecord>,
    user_index: HashMap<String, u32>,
    tweet_index: HashMap<String, u32>,
    tweet_author: Vec<u32>,
    adjacency: Vec<Vec<Neighbor>>,
    edge_count: usize,
}

/// Political leaning used only as an evaluation target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Leaning {
    Left,
    Right,
}

impl Leaning {
    /// Scores at or above zero are right-leaning.
    pub fn from_score(score: f64) -> Leaning {
        if score >= 0.0 {
            Leaning::Right
        } else {
            Leaning::Left
        }
    }

    /// Right is the positive class.
    pub fn as_class(self) -> u8 {
        match self {
            Leaning::Left => 0,
            Leaning::Right => 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct LabelMap {
    scores: HashMap<u32, f64>,
}

impl LabelMap {
    pub fn score(&self, user: u32) -> Option<f64> {
        self.scores.get(&user).copied()
    }

    pub fn leaning(&self, user: u32) -> Option<Leaning> {
        self.score(user).map(Leaning::from_score)
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    /// Labelled users in ascending index order.
    pub fn users(&self) -> Vec<u32> {
        let mut v: Vec<u32> = self.scores.keys().copied().collect();
        v.sort_unstable();
        v
    }
}

#[derive(Debug, Clone)]
pub struct BipartiteGraph {
    structure: GraphStructure,
    labels: Option<LabelMap>,
}

impl Deref for BipartiteGraph {
    type Target = GraphStructure;

    fn deref(&self) -> &GraphStructure {
        &self.structure
    }
}

impl BipartiteGraph {
    pub fn structure(&self) -> &GraphStructure {
        &self.structure
    }

    pub fn labels(&self) -> Option<&LabelMap> {
        self.labels.as_ref()
    }

    /// Attaches evaluation labels. Unknown user ids are a reference error.
    pub fn attach_labels(&mut self, records: &[LabelRecord]) -> Result<()> {
        let mut scores = HashMap::with_capacity(records.len());
        for r in records {
            let idx = self
                .structure
                .user_index
                .get(&r.user_id)
                .ok_or_else(|| Error::Reference(format!("label for unknown user {}", r.user_id)))?;
            scores.insert(*idx, r.score);
        }
        self.labels = Some(LabelMap { scores });
        Ok(())
    }
}

/// Builds the graph. Fails on same-relation duplicates and on any edge whose
/// endpoints are not one user and one tweet.
pub fn build_graph(data: &Dataset) -> Result<BipartiteGraph> {
    let users = data.users.clone();
    let tweets = data.tweets.clone();
    let user_index: HashMap<String, u32> = users
        .iter()
        .enumerate()
        .map(|(i, u)| (u.external_id.clone(), i as u32))
        .collect();
    let tweet_index: HashMap<String, u32> = tweets
        .iter()
        .enumerate()
        .map(|(i, t)| (t.external_id.clone(), i as u32))
        .collect();
    let n_users = users.len();

    let mut tweet_author = Vec::with_capacity(tweets.len());
    for t in &tweets {
        let a = user_index
            .get(&t.author_external_id)
            .ok_or_else(|| Error::Reference(format!("tweet {} has unknown author {}", t.external_id, t.author_external_id)))?;
        tweet_author.push(*a);
    }

    let mut seen: HashSet<(u32, u32, Relation)> = HashSet::with_capacity(data.edges.len());
    let mut adjacency: Vec<Vec<Neighbor>> = vec![Vec::new(); n_users + tweets.len()];
    for e in &data.edges {
        let u = match user_index.get(&e.user_external_id) {
            Some(u) => *u,
            None if tweet_index.contains_key(&e.user_external_id) => {
                return Err(Error::Bipartite(format!(
                    "edge user endpoint {} is a tweet",
                    e.user_external_id
                )))
            }
            None => return Err(Error::Reference(format!("unknown user {}", e.user_external_id))),
        };
        let t = match tweet_index.get(&e.tweet_external_id) {
            Some(t) => *t,
            None if user_index.contains_key(&e.tweet_external_id) => {
                return Err(Error::Bipartite(format!(
                    "edge ({}, {}) connects two users",
                    e.user_external_id, e.tweet_external_id
                )))
            }
            None => return Err(Error::Reference(format!("unknown tweet {}", e.tweet_external_id))),
        };
        if !seen.insert((u, t, e.relation)) {
            return Err(Error::DuplicateEdge(format!(
                "({}, {}, {})",
                e.user_external_id,
                e.tweet_external_id,
                e.relation.as_str()
            )));
        }
        let tg = n_users + t as usize;
        adjacency[u as usize].push(Neighbor {
            node: tg,
            relation: e.relation,
        });
        adjacency[tg].push(Neighbor {
            node: u as usize,
            relation: e.relation,
        });
    }
    for list in &mut adjacency {
        list.sort_by_key(|n| (n.node, n.relation));
    }

    let structure = GraphStructure {
        users,
        tweets,
        user_index,
        tweet_index,
        tweet_author,
        adjacency,
        edge_count: seen.len(),
    };
    structure.check_bipartite()?;
    Ok(BipartiteGraph {
        structure,
        labels: None,
    })
}

impl GraphStructure {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_tweets(&self) -> usize {
        self.tweets.len()
    }

    pub fn node_count(&self) -> usize {
        self.users.len() + self.tweets.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn users(&self) -> &[UserRecord] {
        &self.users
    }

    pub fn tweets(&self) -> &[TweetRecord] {
        &self.tweets
    }

    pub fn user(&self, index: u32) -> &UserRecord {
        &self.users[index as usize]
    }

    pub fn tweet(&self, index: u32) -> &TweetRecord {
        &self.tweets[index as usize]
    }

    pub fn author_of(&self, tweet: u32) -> u32 {
        self.tweet_author[tweet as usize]
    }

    pub fn global(&self, id: NodeId) -> usize {
        match id.kind {
            NodeKind::User => id.index as usize,
            NodeKind::Tweet => self.users.len() + id.index as usize,
        }
    }

    pub fn node_at(&self, global: usize) -> NodeId {
        if global < self.users.len() {
            NodeId {
                kind: NodeKind::User,
                index: global as u32,
            }
        } else {
            NodeId {
                kind: NodeKind::Tweet,
                index: (global - self.users.len()) as u32,
            }
        }
    }

    pub fn kind_of(&self, global: usize) -> NodeKind {
        if global < self.users.len() {
            NodeKind::User
        } else {
            NodeKind::Tweet
        }
    }

    pub fn external_id(&self, global: usize) -> &str {
        let id = self.node_at(global);
        match id.kind {
            NodeKind::User => &self.users[id.index as usize].external_id,
            NodeKind::Tweet => &self.tweets[id.index as usize].external_id,
        }
    }

    /// Kind-qualified key used in embedding tables, e.g. `user:42`.
    pub fn node_key(&self, global: usize) -> String {
        format!("{}:{}", self.kind_of(global).prefix(), self.external_id(global))
    }

    pub fn user_by_external(&self, id: &str) -> Option<u32> {
        self.user_index.get(id).copied()
    }

    pub fn tweet_by_external(&self, id: &str) -> Option<u32> {
        self.tweet_index.get(id).copied()
    }

    pub fn neighbors(&self, global: usize) -> &[Neighbor] {
        &self.adjacency[global]
    }

    pub fn degree(&self, global: usize) -> usize {
        self.adjacency[global].len()
    }

    /// Distinct counterpart nodes (relations collapsed), ascending.
    pub fn distinct_neighbors(&self, global: usize) -> Vec<usize> {
        let mut v: Vec<usize> = self.adjacency[global].iter().map(|n| n.node).collect();
        v.dedup();
        v
    }

    /// Global indices of all nodes of one kind.
    pub fn nodes_of(&self, kind: NodeKind) -> std::ops::Range<usize> {
        match kind {
            NodeKind::User => 0..self.users.len(),
            NodeKind::Tweet => self.users.len()..self.node_count(),
        }
    }

    pub fn check_bipartite(&self) -> Result<()> {
        for (a, list) in self.adjacency.iter().enumerate() {
            for n in list {
                if self.kind_of(a) == self.kind_of(n.node) {
                    return Err(Error::Bipartite(format!(
                        "edge between {} and {}",
                        self.node_key(a),
                        self.node_key(n.node)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Canonical text form; identical inputs give byte-identical output.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# bihet graph v1");
        let _ = writeln!(
            out,
            "users {} tweets {} edges {}",
            self.n_users(),
            self.n_tweets(),
            self.edge_count
        );
        for (i, u) in self.users.iter().enumerate() {
            let _ = writeln!(out, "U\t{}\t{}", i, u.external_id);
        }
        for (i, t) in self.tweets.iter().enumerate() {
            let _ = writeln!(out, "T\t{}\t{}\t{}", i, t.external_id, self.tweet_author[i]);
        }
        for u in 0..self.n_users() {
            for n in &self.adjacency[u] {
                let _ = writeln!(
                    out,
                    "E\t{}\t{}\t{}",
                    u,
                    n.node - self.n_users(),
                    n.relation.as_str()
                );
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn user(id: &str, statuses: u64) -> UserRecord {
        UserRecord {
            external_id: id.into(),
            followers: 1,
            friends: 2,
            listed: 0,
            statuses,
            favorites: 3,
            verified: false,
            description_text: Some(format!("about {id}")),
            description_vec: None,
            synthetic: false,
        }
    }

    pub(crate) fn tweet(id: &str, author: &str) -> TweetRecord {
        TweetRecord {
            external_id: id.into(),
            author_external_id: author.into(),
            text: Some(format!("text of {id}")),
            has_image: false,
            author: None,
            text_vec: None,
            image_vec: None,
        }
    }

    fn edge(u: &str, t: &str, r: Relation) -> EdgeRecord {
        EdgeRecord {
            user_external_id: u.into(),
            tweet_external_id: t.into(),
            relation: r,
        }
    }

    #[test]
    fn minimal_graph() {
        let d = Dataset {
            users: vec![user("u1", 1)],
            tweets: vec![tweet("t1", "u1")],
            edges: vec![edge("u1", "t1", Relation::Post)],
        };
        let g = build_graph(&d).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.edge_count(), 1);
        assert_eq!(g.degree(0), 1);
        assert_eq!(g.degree(1), 1);
    }

    #[test]
    fn retweet_star_and_degree_sums() {
        let d = Dataset {
            users: vec![user("u1", 1), user("u2", 1), user("u3", 1)],
            tweets: vec![tweet("t1", "u1")],
            edges: vec![
                edge("u1", "t1", Relation::Post),
                edge("u1", "t1", Relation::Retweet),
                edge("u2", "t1", Relation::Retweet),
                edge("u3", "t1", Relation::Quote),
            ],
        };
        let g = build_graph(&d).unwrap();
        let hub = g.global(NodeId {
            kind: NodeKind::Tweet,
            index: 0,
        });
        assert_eq!(g.degree(hub), 4);
        assert_eq!(g.distinct_neighbors(hub), vec![0, 1, 2]);
        let user_sum: usize = g.nodes_of(NodeKind::User).map(|v| g.degree(v)).sum();
        let tweet_sum: usize = g.nodes_of(NodeKind::Tweet).map(|v| g.degree(v)).sum();
        assert_eq!(user_sum, g.edge_count());
        assert_eq!(tweet_sum, g.edge_count());
    }

    #[test]
    fn same_relation_duplicates_rejected() {
        let d = Dataset {
            users: vec![user("u1", 1)],
            tweets: vec![tweet("t1", "u1")],
            edges: vec![edge("u1", "t1", Relation::Retweet), edge("u1", "t1", Relation::Retweet)],
        };
        assert!(matches!(build_graph(&d), Err(Error::DuplicateEdge(_))));
    }

    #[test]
    fn user_user_edge_rejected() {
        let d = Dataset {
            users: vec![user("u1", 1), user("u2", 1)],
            tweets: vec![tweet("t1", "u1")],
            edges: vec![edge("u1", "u2", Relation::Retweet)],
        };
        assert!(matches!(build_graph(&d), Err(Error::Bipartite(_))));
    }

    #[test]
    fn isolated_nodes_are_kept_and_serialization_is_stable() {
        let d = Dataset {
            users: vec![user("u1", 1), user("lonely", 0)],
            tweets: vec![tweet("t1", "u1"), tweet("t2", "u1")],
            edges: vec![edge("u1", "t1", Relation::Post)],
        };
        let g = build_graph(&d).unwrap();
        assert_eq!(g.node_count(), 4);
        assert_eq!(g.degree(1), 0);
        assert_eq!(g.serialize(), build_graph(&d).unwrap().serialize());
    }

    #[test]
    fn labels_are_attached_by_external_id() {
        let d = Dataset {
            users: vec![user("u1", 1)],
            tweets: vec![tweet("t1", "u1")],
            edges: vec![],
        };
        let mut g = build_graph(&d).unwrap();
        g.attach_labels(&[LabelRecord {
            user_id: "u1".into(),
            score: 0.0,
        }])
        .unwrap();
        assert_eq!(g.labels().unwrap().leaning(0), Some(Leaning::Right));
        assert!(g
            .attach_labels(&[LabelRecord {
                user_id: "nobody".into(),
                score: 0.5
            }])
            .is_err());
    }
}
