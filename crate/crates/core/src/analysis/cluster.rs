//! k-means with k-means++ seeding and silhouette-based choice of k.

use std::ops::RangeInclusive;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::squared_distance;
use crate::rng;

const MAX_LLOYD: usize = 300;
const RESTARTS: u64 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Within-cluster sum of squares after each Lloyd iteration.
    pub inertia_trace: Vec<f64>,
}

impl KMeans {
    pub fn inertia(&self) -> f64 {
        *self.inertia_trace.last().unwrap_or(&f64::INFINITY)
    }
}

fn plus_plus<R: Rng>(x: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![x[rng.random_range(0..x.len())].clone()];
    let mut d2: Vec<f64> = x.iter().map(|p| squared_distance(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let mut t = rng.random_range(0.0..total);
            let mut chosen = x.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                if t < w {
                    chosen = i;
                    break;
                }
                t -= w;
            }
            chosen
        } else {
            rng.random_range(0..x.len())
        };
        centroids.push(x[pick].clone());
        for (i, p) in x.iter().enumerate() {
            d2[i] = d2[i].min(squared_distance(p, &centroids[centroids.len() - 1]));
        }
    }
    centroids
}

fn means(x: &[Vec<f64>], assign: &[usize], k: usize, old: &[Vec<f64>]) -> (Vec<Vec<f64>>, Vec<usize>) {
    let d = x[0].len();
    let mut sums = vec![vec![0.0; d]; k];
    let mut counts = vec![0usize; k];
    for (p, &a) in x.iter().zip(assign) {
        crate::linalg::axpy(1.0, p, &mut sums[a]);
        counts[a] += 1;
    }
    let cents = sums
        .into_iter()
        .zip(&counts)
        .enumerate()
        .map(|(c, (s, &n))| if n > 0 { s.into_iter().map(|v| v / n as f64).collect() } else { old[c].clone() })
        .collect();
    (cents, counts)
}

fn inertia(x: &[Vec<f64>], assign: &[usize], cents: &[Vec<f64>]) -> f64 {
    x.iter().zip(assign).map(|(p, &a)| squared_distance(p, &cents[a])).sum()
}

/// Lloyd iterations from k-means++ seeds. A point moves only to a strictly closer
/// centroid, and an empty cluster takes the point farthest from its centroid.
pub fn kmeans<R: Rng>(x: &[Vec<f64>], k: usize, rng: &mut R) -> Result<KMeans> {
    if k == 0 || k > x.len() {
        return Err(Error::Invalid(format!("cannot form {k} clusters from {} points", x.len())));
    }
    let mut cents = plus_plus(x, k, rng);
    let mut assign = vec![usize::MAX; x.len()];
    let mut trace = Vec::new();
    for _ in 0..MAX_LLOYD {
        let mut changed = false;
        for (i, p) in x.iter().enumerate() {
            let mut best = assign[i];
            let mut best_d = if best == usize::MAX { f64::INFINITY } else { squared_distance(p, &cents[best]) };
            for (c, cent) in cents.iter().enumerate() {
                let d = squared_distance(p, cent);
                if d < best_d {
                    best = c;
                    best_d = d;
                }
            }
            if best != assign[i] {
                assign[i] = best;
                changed = true;
            }
        }
        let (mut new_cents, mut counts) = means(x, &assign, k, &cents);
        while let Some(empty) = counts.iter().position(|&n| n == 0) {
            let far = (0..x.len())
                .filter(|&i| counts[assign[i]] > 1)
                .max_by(|&a, &b| {
                    squared_distance(&x[a], &new_cents[assign[a]])
                        .total_cmp(&squared_distance(&x[b], &new_cents[assign[b]]))
                        .then(b.cmp(&a))
                })
                .expect("k <= n leaves a cluster with two members");
            assign[far] = empty;
            changed = true;
            (new_cents, counts) = means(x, &assign, k, &new_cents);
        }
        cents = new_cents;
        trace.push(inertia(x, &assign, &cents));
        if !changed {
            break;
        }
    }
    Ok(KMeans {
        assignments: assign,
        centroids: cents,
        inertia_trace: trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Silhouette {
    pub mean: f64,
    pub per_point: Vec<f64>,
    /// Points whose `max(a, b)` was zero (coincident points); scored 0.
    pub degenerate: Vec<usize>,
}

/// Euclidean silhouette; members of singleton clusters score 0.
pub fn silhouette(x: &[Vec<f64>], assign: &[usize], k: usize) -> Silhouette {
    let n = x.len();
    let mut sizes = vec![0usize; k];
    for &a in assign {
        sizes[a] += 1;
    }
    let mut per_point = vec![0.0; n];
    let mut degenerate = Vec::new();
    for i in 0..n {
        let mut sums = vec![0.0; k];
        for j in 0..n {
            if i != j {
                sums[assign[j]] += squared_distance(&x[i], &x[j]).sqrt();
            }
        }
        let own = assign[i];
        let a = if sizes[own] > 1 { sums[own] / (sizes[own] - 1) as f64 } else { 0.0 };
        let b = (0..k)
            .filter(|&c| c != own && sizes[c] > 0)
            .map(|c| sums[c] / sizes[c] as f64)
            .fold(f64::INFINITY, f64::min);
        let denom = a.max(b);
        if !(denom > 0.0) || !b.is_finite() {
            degenerate.push(i);
            continue;
        }
        if sizes[own] > 1 {
            per_point[i] = (b - a) / denom;
        }
    }
    let mean = per_point.iter().sum::<f64>() / n.max(1) as f64;
    Silhouette {
        mean,
        per_point,
        degenerate,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KScore {
    pub k: usize,
    pub silhouette: f64,
    pub inertia: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub chosen_k: usize,
    pub assignments: Vec<usize>,
    pub scanned: Vec<KScore>,
    pub degenerate: Vec<usize>,
}

/// Best of several k-means restarts for each `k`, then the `k` with the highest
/// mean silhouette (the smaller `k` on ties).
pub fn cluster_embeddings(x: &[Vec<f64>], k_range: RangeInclusive<usize>, seed: u64) -> Result<Clustering> {
    let n = x.len();
    if k_range.is_empty() || *k_range.start() < 2 || *k_range.end() + 1 > n {
        return Err(Error::Invalid(format!(
            "k range {}..={} must lie within [2, {}]",
            k_range.start(),
            k_range.end(),
            n.saturating_sub(1)
        )));
    }
    let stream = rng::stream_seed(seed, "analysis.kmeans");
    let mut best: Option<(Silhouette, KMeans, usize)> = None;
    let mut scanned = Vec::new();
    for k in k_range {
        let mut fit: Option<KMeans> = None;
        for restart in 0..RESTARTS {
            let mut r = rng::indexed(stream, k as u64 * RESTARTS + restart);
            let m = kmeans(x, k, &mut r)?;
            if fit.as_ref().is_none_or(|f| m.inertia() < f.inertia()) {
                fit = Some(m);
            }
        }
        let fit = fit.expect("at least one restart");
        let s = silhouette(x, &fit.assignments, k);
        scanned.push(KScore {
            k,
            silhouette: s.mean,
            inertia: fit.inertia(),
        });
        if best.as_ref().is_none_or(|b| s.mean > b.0.mean) {
            best = Some((s, fit, k));
        }
    }
    let (s, fit, k) = best.expect("non-empty k range");
    Ok(Clustering {
        chosen_k: k,
        assignments: fit.assignments,
        scanned,
        degenerate: s.degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_points_split_and_flag() {
        let x = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let mut r = rng::stream(0, "t");
        let m = kmeans(&x, 2, &mut r).unwrap();
        assert_ne!(m.assignments[0], m.assignments[1]);
        let s = silhouette(&x, &m.assignments, 2);
        assert_eq!(s.degenerate, vec![0, 1]);
        assert_eq!(s.per_point, vec![0.0, 0.0]);
    }

    #[test]
    fn inertia_non_increasing() {
        let mut r = rng::stream(1, "pts");
        let x: Vec<Vec<f64>> = (0..60).map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
        let m = kmeans(&x, 4, &mut r).unwrap();
        assert!(m.inertia_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn range_checked() {
        let x = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(cluster_embeddings(&x, 2..=3, 0).is_err());
        assert!(cluster_embeddings(&x, 1..=2, 0).is_err());
        assert!(cluster_embeddings(&x, 2..=2, 0).is_ok());
    }

    #[test]
    fn deterministic() {
        let x: Vec<Vec<f64>> = (0..30).map(|i| vec![(i as f64).sin(), (i as f64 * 0.5).cos()]).collect();
        assert_eq!(cluster_embeddings(&x, 2..=5, 4).unwrap(), cluster_embeddings(&x, 2..=5, 4).unwrap());
    }
}
