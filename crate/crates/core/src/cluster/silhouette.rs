use rayon::prelude::*;

use super::{Dendrogram, Distances, UnitRows};
use crate::error::{Error, Result};
use crate::model::EmbeddingMatrix;

/// Mean silhouette under cosine distance. Singleton clusters score 0, as do
/// points whose intra and nearest-cluster distances are both 0.
pub fn silhouette(embeddings: &EmbeddingMatrix, labels: &[usize]) -> Result<f64> {
    let points = UnitRows::from_embeddings(embeddings)?;
    silhouette_rows(&points, labels)
}

pub fn silhouette_rows(points: &UnitRows, labels: &[usize]) -> Result<f64> {
    let n = points.len();
    if labels.len() != n {
        return Err(Error::Dimension(format!(
            "{} labels for {n} points",
            labels.len()
        )));
    }
    // compact label ids
    let mut ids: Vec<usize> = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    if ids.len() < 2 {
        return Err(Error::Parameter(
            "silhouette needs at least 2 clusters".into(),
        ));
    }
    let compact: Vec<usize> = labels
        .iter()
        .map(|l| ids.binary_search(l).expect("label present"))
        .collect();
    let k = ids.len();
    let mut sizes = vec![0usize; k];
    for &c in &compact {
        sizes[c] += 1;
    }
    let scores: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut sums = vec![0.0f64; k];
            for j in 0..n {
                if j != i {
                    sums[compact[j]] += points.cosine_distance(i, j);
                }
            }
            point_score(&sums, &sizes, compact[i], |_| true)
        })
        .collect();
    Ok(scores.iter().sum::<f64>() / n as f64)
}

/// Silhouette of one point given its distance sums to every cluster column.
#[inline]
fn point_score(sums: &[f64], sizes: &[usize], own: usize, alive: impl Fn(usize) -> bool) -> f64 {
    if sizes[own] <= 1 {
        return 0.0;
    }
    let a = sums[own] / (sizes[own] - 1) as f64;
    let mut b = f64::INFINITY;
    for c in 0..sums.len() {
        if c != own && alive(c) {
            b = b.min(sums[c] / sizes[c] as f64);
        }
    }
    let denom = a.max(b);
    if denom <= 0.0 || !b.is_finite() {
        0.0
    } else {
        (b - a) / denom
    }
}

/// Walks the dendrogram from `hi` clusters down to `lo`, keeping per-point
/// distance sums per cluster. Each point also caches its nearest other
/// cluster, which only needs a full rescan when that cluster takes part in
/// a merge.
pub(crate) fn best_cut(
    points: &impl Distances,
    dendrogram: &Dendrogram,
    lo: usize,
    hi: usize,
) -> usize {
    let n = points.len();
    let labels = dendrogram.cut(hi);
    let k = hi;
    let mut sums = vec![0.0f64; n * k];
    sums.par_chunks_mut(k).enumerate().for_each(|(i, row)| {
        for j in 0..n {
            if j != i {
                row[labels[j]] += points.distance(i, j);
            }
        }
    });
    let mut sizes = vec![0usize; k];
    for &l in &labels {
        sizes[l] += 1;
    }
    let mut own = labels.clone();
    let mut alive = vec![true; k];
    let steps = dendrogram.steps();
    let mut col_of: Vec<usize> = labels;
    for step in &steps[..n - hi] {
        let c = col_of[step.cluster_a];
        col_of.push(c);
    }

    // (mean distance, column) of the nearest other cluster per point
    let nearest = |row: &[f64], sizes: &[usize], own: usize, alive: &[bool]| -> (f64, usize) {
        let mut best = (f64::INFINITY, usize::MAX);
        for c in 0..row.len() {
            if c != own && alive[c] {
                let m = row[c] / sizes[c] as f64;
                if m < best.0 {
                    best = (m, c);
                }
            }
        }
        best
    };
    let score = |row: &[f64], sizes: &[usize], own: usize, b: f64| -> f64 {
        if sizes[own] <= 1 {
            return 0.0;
        }
        let a = row[own] / (sizes[own] - 1) as f64;
        let denom = a.max(b);
        if denom <= 0.0 || !b.is_finite() {
            0.0
        } else {
            (b - a) / denom
        }
    };
    let mut near: Vec<(f64, usize)> = (0..n)
        .into_par_iter()
        .map(|i| nearest(&sums[i * k..(i + 1) * k], &sizes, own[i], &alive))
        .collect();
    let mut per_point: Vec<f64> = (0..n)
        .map(|i| score(&sums[i * k..(i + 1) * k], &sizes, own[i], near[i].0))
        .collect();

    let mut best_count = hi;
    let mut best_score = per_point.iter().sum::<f64>() / n as f64;
    let mut count = hi;
    for step in &steps[n - hi..n - lo] {
        let ca = col_of[step.cluster_a];
        let cb = col_of[step.cluster_b];
        col_of.push(ca);
        sizes[ca] += sizes[cb];
        sizes[cb] = 0;
        alive[cb] = false;
        let (sizes, alive) = (&sizes, &alive);
        sums.chunks_mut(k)
            .zip(own.iter_mut())
            .zip(near.iter_mut())
            .zip(per_point.iter_mut())
            .for_each(|(((row, o), nb), s)| {
                row[ca] += row[cb];
                row[cb] = 0.0;
                if *o == cb {
                    *o = ca;
                }
                if nb.1 == ca || nb.1 == cb || *o == ca {
                    *nb = nearest(row, sizes, *o, alive);
                } else {
                    let m = row[ca] / sizes[ca] as f64;
                    if m < nb.0 || (m == nb.0 && ca < nb.1) {
                        *nb = (m, ca);
                    }
                }
                *s = score(row, sizes, *o, nb.0);
            });
        count -= 1;
        let s = per_point.iter().sum::<f64>() / n as f64;
        // walking downwards, >= hands ties to the smaller count
        if s >= best_score {
            best_score = s;
            best_count = count;
        }
    }
    best_count
}
