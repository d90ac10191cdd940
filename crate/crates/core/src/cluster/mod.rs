//! Per-camera merging of same-identity images.
//!
//! Bottom-up average-linkage clustering on cosine distance, optionally
//! restricted to merges along a k-nearest-neighbour connectivity graph, and
//! silhouette-driven selection of the cluster count.

mod linkage;
mod silhouette;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::EmbeddingMatrix;

pub use silhouette::{silhouette, silhouette_rows};

/// L2-normalized rows in f64.
#[derive(Clone, Debug)]
pub struct UnitRows {
    n: usize,
    dim: usize,
    values: Vec<f64>,
}

impl UnitRows {
    pub fn from_embeddings(emb: &EmbeddingMatrix) -> Result<Self> {
        let dim = emb.dim();
        let mut values = Vec::with_capacity(emb.rows() * dim);
        for i in 0..emb.rows() {
            let row = emb.row(i);
            let norm = row.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
            if norm == 0.0 {
                return Err(Error::Input(format!("embedding row {i} has zero norm")));
            }
            values.extend(row.iter().map(|&v| v as f64 / norm));
        }
        Ok(UnitRows {
            n: emb.rows(),
            dim,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn cosine_distance(&self, i: usize, j: usize) -> f64 {
        1.0 - dot(self.row(i), self.row(j))
    }
}

/// Source of pairwise cosine distances.
pub trait Distances: Sync {
    fn len(&self) -> usize;
    fn is_empty(&self) -> bool {
        self.len() == 0
    }
    fn distance(&self, i: usize, j: usize) -> f64;
}

impl Distances for UnitRows {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn distance(&self, i: usize, j: usize) -> f64 {
        self.cosine_distance(i, j)
    }
}

/// Dense symmetric distance matrix, computed once and shared by the kNN
/// graph, linkage and silhouette passes over one point set.
#[derive(Clone, Debug)]
pub struct PairwiseDistances {
    n: usize,
    values: Vec<f64>,
}

impl PairwiseDistances {
    pub fn new(points: &UnitRows) -> Self {
        let n = points.n;
        let mut values = vec![0.0f64; n * n];
        values
            .par_chunks_mut(n.max(1))
            .enumerate()
            .for_each(|(i, row)| {
                for (j, v) in row.iter_mut().enumerate().skip(i + 1) {
                    *v = points.cosine_distance(i, j);
                }
            });
        // mirror the upper triangle in tiles to keep reads local
        const TILE: usize = 64;
        for bi in (0..n).step_by(TILE) {
            for bj in (0..=bi).step_by(TILE) {
                for i in bi..(bi + TILE).min(n) {
                    for j in bj..(bj + TILE).min(i) {
                        values[i * n + j] = values[j * n + i];
                    }
                }
            }
        }
        PairwiseDistances { n, values }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n..(i + 1) * self.n]
    }
}

impl Distances for PairwiseDistances {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn distance(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }
}

/// Symmetric neighbourhood graph without self-loops.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConnectivityGraph {
    n: usize,
    adjacency: Vec<Vec<usize>>,
}

impl ConnectivityGraph {
    pub fn new(adjacency: Vec<Vec<usize>>) -> Result<Self> {
        let n = adjacency.len();
        for (i, list) in adjacency.iter().enumerate() {
            if list.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Input(format!(
                    "neighbors of node {i} must be sorted and distinct"
                )));
            }
            for &j in list {
                if j == i {
                    return Err(Error::Input(format!("self-loop at node {i}")));
                }
                if j >= n {
                    return Err(Error::Dimension(format!("node {i} links to {j} of {n}")));
                }
                if adjacency[j].binary_search(&i).is_err() {
                    return Err(Error::Input(format!("edge {i}-{j} is not symmetric")));
                }
            }
        }
        Ok(ConnectivityGraph { n, adjacency })
    }

    /// Builds the symmetric union of directed edges; duplicates and self-loops dropped.
    pub fn from_directed(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let edges: Vec<(usize, usize)> = edges.into_iter().filter(|(a, b)| a != b).collect();
        let mut degree = vec![0usize; n];
        for &(a, b) in &edges {
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut adjacency: Vec<Vec<usize>> =
            degree.iter().map(|&d| Vec::with_capacity(d)).collect();
        for &(a, b) in &edges {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        for list in &mut adjacency {
            list.sort_unstable();
            list.dedup();
        }
        ConnectivityGraph { n, adjacency }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn n_edges(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Connected component id per node, numbered by first node.
    pub fn components(&self) -> Vec<usize> {
        let mut comp = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for s in 0..self.n {
            if comp[s] != usize::MAX {
                continue;
            }
            comp[s] = next;
            stack.push(s);
            while let Some(x) = stack.pop() {
                for &y in &self.adjacency[x] {
                    if comp[y] == usize::MAX {
                        comp[y] = next;
                        stack.push(y);
                    }
                }
            }
            next += 1;
        }
        comp
    }
}

/// One merge. Ids below `n` are points; the merge at step `s` creates id `n + s`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MergeStep {
    pub cluster_a: usize,
    pub cluster_b: usize,
    pub distance: f64,
    pub size: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dendrogram {
    n_points: usize,
    steps: Vec<MergeStep>,
}

impl Dendrogram {
    pub(crate) fn from_steps(n_points: usize, steps: Vec<MergeStep>) -> Self {
        Dendrogram { n_points, steps }
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn steps(&self) -> &[MergeStep] {
        &self.steps
    }

    /// Smallest cluster count this dendrogram reaches.
    pub fn min_clusters(&self) -> usize {
        self.n_points - self.steps.len()
    }

    /// Labels after applying merges until `n_clusters` remain (or the
    /// dendrogram runs out). Labels are numbered in order of first point.
    pub fn cut(&self, n_clusters: usize) -> Vec<usize> {
        let n = self.n_points;
        let apply = n.saturating_sub(n_clusters).min(self.steps.len());
        let mut parent: Vec<usize> = (0..n).collect();
        // representative point of each dendrogram id
        let mut rep: Vec<usize> = (0..n).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for step in &self.steps[..apply] {
            let ra = find(&mut parent, rep[step.cluster_a]);
            let rb = find(&mut parent, rep[step.cluster_b]);
            parent[rb] = ra;
            rep.push(ra);
        }
        let mut label_of_root = vec![usize::MAX; n];
        let mut next = 0;
        (0..n)
            .map(|i| {
                let r = find(&mut parent, i);
                if label_of_root[r] == usize::MAX {
                    label_of_root[r] = next;
                    next += 1;
                }
                label_of_root[r]
            })
            .collect()
    }
}

/// Result of [`agglomerate`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Clustering {
    /// Cluster id per point, numbered by first occurrence.
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    /// False when connectivity prevented reaching the requested count; the
    /// partition is then at component granularity.
    pub reached: bool,
}

/// Each node linked to its `k_c` nearest neighbours by cosine distance,
/// symmetrized by union. Ties go to the lower index.
pub fn knn_connectivity(embeddings: &EmbeddingMatrix, k_c: usize) -> Result<ConnectivityGraph> {
    let points = UnitRows::from_embeddings(embeddings)?;
    knn_connectivity_rows(&points, k_c)
}

pub fn knn_connectivity_rows(points: &UnitRows, k_c: usize) -> Result<ConnectivityGraph> {
    knn_connectivity_with(points, k_c)
}

pub fn knn_connectivity_with(points: &impl Distances, k_c: usize) -> Result<ConnectivityGraph> {
    let n = points.len();
    if n < 2 {
        return Err(Error::Size(format!(
            "connectivity needs at least 2 points, got {n}"
        )));
    }
    if k_c == 0 {
        return Err(Error::Parameter("k_c must be at least 1".into()));
    }
    let k = k_c.min(n - 1);
    let directed: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map_init(
            || vec![0.0f64; n],
            |buf, i| {
                // k-th smallest distance, then everything below it and the
                // lowest-index ties at it
                for (j, slot) in buf.iter_mut().enumerate() {
                    *slot = if j == i {
                        f64::INFINITY
                    } else {
                        points.distance(i, j)
                    };
                }
                let threshold = *buf.select_nth_unstable_by(k - 1, f64::total_cmp).1;
                let mut chosen: Vec<usize> = (0..n)
                    .filter(|&j| j != i && points.distance(i, j).total_cmp(&threshold).is_lt())
                    .collect();
                let ties = (0..n)
                    .filter(|&j| j != i && points.distance(i, j).total_cmp(&threshold).is_eq());
                let missing = k - chosen.len();
                chosen.extend(ties.take(missing));
                chosen
            },
        )
        .collect();
    Ok(ConnectivityGraph::from_directed(
        n,
        directed
            .into_iter()
            .enumerate()
            .flat_map(|(i, js)| js.into_iter().map(move |j| (i, j))),
    ))
}

/// Full dendrogram, or a constrained one that stops at `stop_at` clusters.
pub fn linkage(
    points: &UnitRows,
    connectivity: Option<&ConnectivityGraph>,
    stop_at: usize,
) -> Result<Dendrogram> {
    linkage_with(points, points, connectivity, stop_at)
}

/// [`linkage`] reading point-to-point distances from `distances`.
pub fn linkage_with(
    points: &UnitRows,
    distances: &impl Distances,
    connectivity: Option<&ConnectivityGraph>,
    stop_at: usize,
) -> Result<Dendrogram> {
    if distances.len() != points.len() {
        return Err(Error::Dimension(format!(
            "{} distance rows for {} points",
            distances.len(),
            points.len()
        )));
    }
    match connectivity {
        Some(g) => {
            if g.len() != points.len() {
                return Err(Error::Dimension(format!(
                    "connectivity has {} nodes for {} points",
                    g.len(),
                    points.len()
                )));
            }
            Ok(linkage::constrained(points, g, stop_at.max(1)))
        }
        None => Ok(linkage::unconstrained(distances)),
    }
}

/// Average-linkage agglomerative clustering down to `n_clusters` clusters.
pub fn agglomerate(
    embeddings: &EmbeddingMatrix,
    n_clusters: usize,
    connectivity: Option<&ConnectivityGraph>,
) -> Result<Clustering> {
    let points = UnitRows::from_embeddings(embeddings)?;
    agglomerate_rows(&points, n_clusters, connectivity)
}

pub fn agglomerate_rows(
    points: &UnitRows,
    n_clusters: usize,
    connectivity: Option<&ConnectivityGraph>,
) -> Result<Clustering> {
    let n = points.len();
    if n_clusters == 0 || n_clusters > n {
        return Err(Error::Parameter(format!(
            "n_clusters must be in 1..={n}, got {n_clusters}"
        )));
    }
    let dendrogram = linkage(points, connectivity, n_clusters)?;
    let labels = dendrogram.cut(n_clusters);
    let found = labels.iter().max().map_or(0, |m| m + 1);
    Ok(Clustering {
        labels,
        n_clusters: found,
        reached: found == n_clusters,
    })
}

/// Default silhouette search range for `n` points with about
/// `images_per_identity` images per cluster: `[⌊n/2r⌋, ⌈2n/r⌉]` clamped to
/// `[2, n - 1]`. `None` when `n < 3`.
pub fn default_search_range(n: usize, images_per_identity: usize) -> Option<(usize, usize)> {
    if n < 3 {
        return None;
    }
    let r = images_per_identity.max(1);
    let lo = (n / (2 * r)).max(2);
    let hi = (2 * n).div_ceil(r).min(n - 1);
    Some((lo.min(hi), hi))
}

/// Cluster count in `[search_min, search_max]` with the highest mean
/// silhouette; ties go to the smaller count. Every count is a cut of one
/// dendrogram.
pub fn select_cluster_count(
    embeddings: &EmbeddingMatrix,
    connectivity: Option<&ConnectivityGraph>,
    search_min: usize,
    search_max: usize,
) -> Result<usize> {
    let points = UnitRows::from_embeddings(embeddings)?;
    select_cluster_count_rows(&points, connectivity, search_min, search_max)
}

pub fn select_cluster_count_rows(
    points: &UnitRows,
    connectivity: Option<&ConnectivityGraph>,
    search_min: usize,
    search_max: usize,
) -> Result<usize> {
    Ok(select_and_cut_rows(points, connectivity, search_min, search_max)?.0)
}

/// [`select_cluster_count_rows`] together with the partition at the chosen
/// count, built from a single dendrogram.
pub fn select_and_cut_rows(
    points: &UnitRows,
    connectivity: Option<&ConnectivityGraph>,
    search_min: usize,
    search_max: usize,
) -> Result<(usize, Clustering)> {
    select_and_cut_with(points, points, connectivity, search_min, search_max)
}

pub fn select_and_cut_with(
    points: &UnitRows,
    distances: &impl Distances,
    connectivity: Option<&ConnectivityGraph>,
    search_min: usize,
    search_max: usize,
) -> Result<(usize, Clustering)> {
    let n = points.len();
    if search_min < 2 || search_min > search_max || search_max + 1 > n {
        return Err(Error::Parameter(format!(
            "search range must satisfy 2 <= min <= max <= n - 1 (n = {n}), got [{search_min}, {search_max}]"
        )));
    }
    let dendrogram = linkage_with(points, distances, connectivity, search_min)?;
    let lowest = dendrogram.min_clusters().max(search_min);
    // connectivity may never get below the range
    let count = if lowest > search_max {
        search_max
    } else {
        silhouette::best_cut(distances, &dendrogram, lowest, search_max)
    };
    let labels = dendrogram.cut(count);
    let found = labels.iter().max().map_or(0, |m| m + 1);
    Ok((
        count,
        Clustering {
            labels,
            n_clusters: found,
            reached: found == count,
        },
    ))
}
