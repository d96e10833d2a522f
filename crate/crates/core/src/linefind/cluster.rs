use crate::dataset::CentroidSet;
use crate::error::{Error, Result};
use crate::geometry::squared_distance;

/// Disjoint centroid-index sets covering every centroid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterPartition {
    /// Each cluster sorted ascending; clusters ordered by their smallest member.
    pub clusters: Vec<Vec<usize>>,
}

struct DisjointSets {
    parent: Vec<usize>,
}

impl DisjointSets {
    fn new(n: usize) -> Self {
        Self { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        let (lo, hi) = (ra.min(rb), ra.max(rb));
        self.parent[hi] = lo;
        true
    }

    fn groups(&mut self) -> Vec<Vec<usize>> {
        let n = self.parent.len();
        let mut by_root = vec![Vec::new(); n];
        for i in 0..n {
            let r = self.find(i);
            by_root[r].push(i);
        }
        by_root.into_iter().filter(|g| !g.is_empty()).collect()
    }
}

/// Agglomerative single-linkage clusters, stopped when `k` clusters remain.
///
/// Merges follow the centroid pairs in ascending `(distance, i, j)` order.
fn cut(edges: &[(f64, usize, usize)], n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut sets = DisjointSets::new(n);
    let mut count = n;
    for &(_, i, j) in edges {
        if count <= k {
            break;
        }
        if sets.union(i, j) {
            count -= 1;
        }
    }
    sets.groups()
}

/// Folds every singleton cluster into the cluster holding its nearest other
/// centroid (ties → lowest centroid id), lowest singleton first.
fn merge_singletons(cs: &CentroidSet, mut clusters: Vec<Vec<usize>>) -> Vec<Vec<usize>> {
    while let Some(pos) = clusters
        .iter()
        .enumerate()
        .filter(|(_, c)| c.len() == 1)
        .min_by_key(|(_, c)| c[0])
        .map(|(pos, _)| pos)
    {
        let s = clusters[pos][0];
        let mut nearest: Option<(f64, usize)> = None;
        for other in (0..cs.len()).filter(|&o| o != s) {
            let d = squared_distance(cs.get(s), cs.get(other));
            if nearest.is_none_or(|(bd, _)| d < bd) {
                nearest = Some((d, other));
            }
        }
        let Some((_, target)) = nearest else { break };
        let single = clusters.remove(pos);
        let dest = clusters
            .iter()
            .position(|c| c.contains(&target))
            .expect("every centroid belongs to a cluster");
        clusters[dest].extend(single);
        clusters[dest].sort_unstable();
    }
    clusters.sort_by_key(|c| c[0]);
    clusters
}

/// Partitions the centroids into `m` single-linkage clusters of at least two
/// centroids each.
///
/// The dendrogram is cut at `m` clusters and singletons are folded into the
/// cluster of their nearest centroid. When folding leaves fewer than `m`
/// clusters, progressively finer cuts are tried until one yields exactly `m`.
pub fn single_linkage(cs: &CentroidSet, m: usize) -> Result<ClusterPartition> {
    let n = cs.len();
    if n < 2 {
        return Err(Error::LineFinding("clustering needs at least two centroids".into()));
    }
    if m == 0 || m > n / 2 {
        return Err(Error::LineFinding(format!(
            "cannot form {m} clusters of two or more centroids from {n} centroids (at most {})",
            n / 2
        )));
    }
    let mut edges = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            edges.push((squared_distance(cs.get(i), cs.get(j)), i, j));
        }
    }
    edges.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));

    let mut most = 0;
    for k in m..=n {
        let clusters = merge_singletons(cs, cut(&edges, n, k));
        if clusters.len() == m {
            return Ok(ClusterPartition { clusters });
        }
        most = most.max(clusters.len());
    }
    Err(Error::LineFinding(format!(
        "single linkage cannot produce {m} clusters of two or more centroids; \
         reduce the number of lines (at most {most} reachable)"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line(xs: &[f64]) -> CentroidSet {
        CentroidSet::from_rows(xs.iter().map(|&x| vec![x, 0.0]).collect()).unwrap()
    }

    #[test]
    fn two_tight_pairs() {
        let p = single_linkage(&line(&[0.0, 1.0, 10.0, 11.0]), 2).unwrap();
        assert_eq!(p.clusters, vec![vec![0, 1], vec![2, 3]]);
    }

    #[test]
    fn one_cluster() {
        let p = single_linkage(&line(&[0.0, 1.0, 10.0, 11.0]), 1).unwrap();
        assert_eq!(p.clusters, vec![vec![0, 1, 2, 3]]);
        let p = single_linkage(&line(&[0.0, 1.0, 2.0]), 1).unwrap();
        assert_eq!(p.clusters, vec![vec![0, 1, 2]]);
    }

    #[test]
    fn outlier_is_folded_into_nearest_cluster() {
        // A plain cut at two clusters isolates 100; folding it in leaves one
        // cluster, so the next finer cut is used instead.
        let p = single_linkage(&line(&[0.0, 1.0, 5.0, 6.0, 100.0]), 2).unwrap();
        assert_eq!(p.clusters, vec![vec![0, 1], vec![2, 3, 4]]);
    }

    #[test]
    fn rejects_too_many_clusters() {
        assert!(single_linkage(&line(&[0.0, 1.0, 2.0]), 2).is_err());
        assert!(single_linkage(&line(&[0.0, 1.0]), 0).is_err());
    }

    #[test]
    fn partition_is_disjoint_and_exhaustive() {
        let xs: Vec<f64> = (0..40).map(|i| ((i * 37) % 23) as f64 + 0.1 * i as f64).collect();
        for m in 1..=10 {
            let p = single_linkage(&line(&xs), m).unwrap();
            assert_eq!(p.clusters.len(), m);
            let mut all: Vec<usize> = p.clusters.concat();
            all.sort_unstable();
            assert_eq!(all, (0..40).collect::<Vec<_>>());
            assert!(p.clusters.iter().all(|c| c.len() >= 2));
        }
    }
}
