use std::collections::{BTreeSet, HashSet};

use crate::graph::{GraphStructure, NodeId, Relation};

/// Retweet/quote intensity per cluster: distinct (member, tweet) interactions
/// divided by the distinct tweets members touched. `None` for clusters that
/// touched no tweet. `assignment[u]` is the cluster of user `u`, if any.
pub fn activity_stat(graph: &GraphStructure, assignment: &[Option<usize>], n_clusters: usize) -> Vec<Option<f64>> {
    let mut pairs = vec![HashSet::new(); n_clusters];
    let mut tweets = vec![BTreeSet::new(); n_clusters];
    for (u, c) in assignment.iter().enumerate() {
        let Some(c) = *c else { continue };
        for n in graph.neighbors(graph.global(NodeId::user(u as u32))) {
            if matches!(n.relation, Relation::Retweet | Relation::Quote) {
                pairs[c].insert((u, n.node));
                tweets[c].insert(n.node);
            }
        }
    }
    pairs
        .iter()
        .zip(&tweets)
        .map(|(p, t)| (!t.is_empty()).then(|| p.len() as f64 / t.len() as f64))
        .collect()
}
