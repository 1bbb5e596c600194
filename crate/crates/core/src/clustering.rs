//! One-dimensional DBSCAN with `minPts = 1` and the epsilon search that
//! targets a cluster count.
//!
//! With `minPts = 1` every point is a core point, so no point is ever
//! labelled noise: the clusters are the connected components of the graph
//! joining points at distance `<= epsilon`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Neighbourhood size for a core point. Fixed so that outliers form their
/// own singleton clusters instead of being discarded.
pub const MIN_PTS: usize = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cluster {
    /// Indices into the clustered vector, ordered by value then index.
    pub member_indices: Vec<usize>,
    /// Member values, ascending.
    pub member_values: Vec<f64>,
}

impl Cluster {
    pub fn len(&self) -> usize {
        self.member_indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.member_indices.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.member_values.iter().sum::<f64>() / self.member_values.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.member_values[0]
    }

    pub fn max(&self) -> f64 {
        *self.member_values.last().unwrap()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Clustering {
    pub epsilon: f64,
    pub min_pts: usize,
    /// Sorted by mean, ascending.
    pub clusters: Vec<Cluster>,
}

impl Clustering {
    pub fn len(&self) -> usize {
        self.clusters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clusters.is_empty()
    }

    /// Cluster index of every input point.
    pub fn labels(&self) -> Vec<usize> {
        let n = self.clusters.iter().map(Cluster::len).sum();
        let mut labels = vec![0; n];
        for (c, cluster) in self.clusters.iter().enumerate() {
            for &i in &cluster.member_indices {
                labels[i] = c;
            }
        }
        labels
    }
}

fn check_values(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::Empty("values to cluster"));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite(i));
    }
    Ok(())
}

/// Indices of `values` sorted by value, ties by index.
fn sorted_order(values: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    order
}

pub fn dbscan_1d(values: &[f64], epsilon: f64) -> Result<Clustering> {
    check_values(values)?;
    if epsilon.is_nan() || epsilon < 0.0 || !epsilon.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "epsilon must be finite and non-negative, got {epsilon}"
        )));
    }

    let order = sorted_order(values);
    let sorted: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let n = sorted.len();

    // Region query over sorted positions: every q with |sorted[q] - sorted[p]| <= eps.
    let neighbourhood = |p: usize| {
        let v = sorted[p];
        let lo = sorted[..p].partition_point(|&x| v - x > epsilon);
        let hi = p + 1 + sorted[p + 1..].partition_point(|&x| x - v <= epsilon);
        lo..hi
    };

    let mut label: Vec<Option<usize>> = vec![None; n];
    let mut n_clusters = 0;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if label[seed].is_some() {
            continue;
        }
        // minPts = 1: the seed alone qualifies as a core point.
        let id = n_clusters;
        n_clusters += 1;
        label[seed] = Some(id);
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for q in neighbourhood(p) {
                if label[q].is_none() {
                    label[q] = Some(id);
                    queue.push_back(q);
                }
            }
        }
    }

    let mut clusters: Vec<Cluster> = (0..n_clusters)
        .map(|_| Cluster {
            member_indices: Vec::new(),
            member_values: Vec::new(),
        })
        .collect();
    for (pos, l) in label.into_iter().enumerate() {
        let c = &mut clusters[l.expect("every point is labelled")];
        c.member_indices.push(order[pos]);
        c.member_values.push(sorted[pos]);
    }
    clusters.sort_by(|a, b| a.mean().total_cmp(&b.mean()));

    Ok(Clustering {
        epsilon,
        min_pts: MIN_PTS,
        clusters,
    })
}

/// Inclusive bounds on an acceptable cluster count.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountRange {
    pub min: usize,
    pub max: usize,
}

impl CountRange {
    pub fn new(min: usize, max: usize) -> Self {
        CountRange { min, max }
    }

    pub fn contains(&self, k: usize) -> bool {
        (self.min..=self.max).contains(&k)
    }

    fn distance(&self, k: usize) -> usize {
        self.min.saturating_sub(k).max(k.saturating_sub(self.max))
    }
}

impl Default for CountRange {
    fn default() -> Self {
        CountRange { min: 6, max: 9 }
    }
}

/// Every attainable `(count, smallest epsilon)` pair, count descending.
///
/// The count only changes when epsilon crosses one of the consecutive
/// gaps of the sorted values, so the candidates are `0` and each distinct
/// positive gap.
pub fn attainable_counts(values: &[f64]) -> Result<Vec<(usize, f64)>> {
    check_values(values)?;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut gaps: Vec<f64> = sorted
        .windows(2)
        .map(|w| w[1] - w[0])
        .filter(|g| *g > 0.0)
        .collect();
    gaps.sort_by(f64::total_cmp);

    let mut out = vec![(1 + gaps.len(), 0.0)];
    let mut thresholds = gaps.clone();
    thresholds.dedup();
    for g in thresholds {
        // gaps strictly wider than g still separate clusters
        let wider = gaps.len() - gaps.partition_point(|&x| x <= g);
        out.push((1 + wider, g));
    }
    Ok(out)
}

/// Picks the cluster count closest to `target_k` and returns the smallest
/// epsilon that produces it.
///
/// Preference order: `target_k` itself; otherwise the attainable count in
/// `range` nearest to `target_k`; otherwise the attainable count nearest to
/// `range`. Ties go to the larger count.
pub fn find_epsilon(
    values: &[f64],
    target_k: usize,
    range: CountRange,
) -> Result<(f64, Clustering)> {
    if range.min == 0 || range.min > range.max || !range.contains(target_k) {
        return Err(Error::InvalidArgument(format!(
            "target_k {target_k} must lie in a range [{}, {}] with minimum >= 1",
            range.min, range.max
        )));
    }
    let candidates = attainable_counts(values)?;
    let key = |&(k, _): &(usize, f64)| {
        let in_range = range.contains(k);
        let primary = if in_range { 0 } else { 1 };
        let dist = if in_range {
            k.abs_diff(target_k)
        } else {
            range.distance(k)
        };
        // larger count wins ties
        (primary, dist, std::cmp::Reverse(k))
    };
    let &(_, epsilon) = candidates
        .iter()
        .min_by_key(|c| key(c))
        .expect("at least one attainable count");
    let clustering = dbscan_1d(values, epsilon)?;
    Ok((epsilon, clustering))
}
