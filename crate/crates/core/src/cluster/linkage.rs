//! Average-linkage agglomeration on cosine distance.
//!
//! On unit vectors the average pairwise cosine distance between clusters
//! `A` and `B` is `1 - (ΣA · ΣB) / (|A| |B|)`, so cluster sums are enough to
//! evaluate linkage exactly. The constrained path uses that identity and a
//! heap over connectivity edges; the unconstrained path runs the nearest
//! neighbour chain over a condensed distance matrix.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::{ConnectivityGraph, Dendrogram, Distances, MergeStep, UnitRows};
use crate::linalg::dot;

/// Candidate merge `(a, b)` with `a < b`, ordered by `(dist, a, b)`.
#[derive(Clone, Copy, PartialEq)]
struct Edge {
    dist: f64,
    a: u32,
    b: u32,
}

impl Edge {
    fn new(dist: f64, x: usize, y: usize) -> Self {
        Edge {
            dist,
            a: x.min(y) as u32,
            b: x.max(y) as u32,
        }
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.a.cmp(&other.a))
            .then(self.b.cmp(&other.b))
    }
}

/// Heap entry for a cluster's best edge; stale once `version` moves on.
#[derive(Clone, Copy, PartialEq)]
struct Best {
    edge: Edge,
    owner: u32,
    version: u32,
}

impl Eq for Best {}

impl Ord for Best {
    // Max-heap ordering that pops the smallest edge.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .edge
            .key_cmp(&self.edge)
            .then(other.owner.cmp(&self.owner))
    }
}

impl PartialOrd for Best {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Merges only clusters joined by a connectivity edge, until `stop_at`
/// clusters remain or no admissible merge is left.
///
/// Every cluster keeps its neighbour distances and its best edge; the heap
/// holds one live entry per cluster.
pub(crate) fn constrained(
    points: &UnitRows,
    graph: &ConnectivityGraph,
    stop_at: usize,
) -> Dendrogram {
    let n = points.len();
    let dim = points.dim();
    let total = 2 * n;
    let mut sums: Vec<f64> = Vec::with_capacity(total * dim);
    sums.extend_from_slice(points.values());
    let mut sizes: Vec<usize> = Vec::with_capacity(total);
    sizes.resize(n, 1);
    let mut alive: Vec<bool> = Vec::with_capacity(total);
    alive.resize(n, true);
    let mut version: Vec<u32> = vec![0; n];
    let mut best: Vec<Option<Edge>> = vec![None; n];
    let mut seen: Vec<usize> = vec![usize::MAX; total];

    let linkage = |sums: &[f64], sizes: &[usize], a: usize, b: usize| -> f64 {
        let sa = &sums[a * dim..(a + 1) * dim];
        let sb = &sums[b * dim..(b + 1) * dim];
        1.0 - dot(sa, sb) / (sizes[a] * sizes[b]) as f64
    };
    let lowest = |owner: usize, list: &[(usize, f64)]| -> Option<Edge> {
        list.iter()
            .map(|&(y, d)| Edge::new(d, owner, y))
            .min_by(Edge::key_cmp)
    };

    // neighbour lists hold (id, linkage distance); dead ids linger until a rescan
    let mut neighbors: Vec<Vec<(usize, f64)>> = Vec::with_capacity(total);
    for a in 0..n {
        neighbors.push(
            graph
                .neighbors(a)
                .iter()
                .map(|&b| (b, linkage(&sums, &sizes, a, b)))
                .collect(),
        );
    }
    let mut heap = BinaryHeap::with_capacity(total);
    for a in 0..n {
        best[a] = lowest(a, &neighbors[a]);
        if let Some(edge) = best[a] {
            heap.push(Best {
                edge,
                owner: a as u32,
                version: 0,
            });
        }
    }

    let mut steps = Vec::with_capacity(n.saturating_sub(stop_at));
    let mut remaining = n;
    while remaining > stop_at {
        let Some(entry) = heap.pop() else { break };
        let owner = entry.owner as usize;
        if !alive[owner] || version[owner] != entry.version {
            continue;
        }
        let Edge { dist, a, b } = entry.edge;
        let (ea, eb) = (a as usize, b as usize);
        let new_id = sizes.len();
        alive[ea] = false;
        alive[eb] = false;
        let size = sizes[ea] + sizes[eb];
        for k in 0..dim {
            let v = sums[ea * dim + k] + sums[eb * dim + k];
            sums.push(v);
        }
        sizes.push(size);
        alive.push(true);
        version.push(0);

        let na = std::mem::take(&mut neighbors[ea]);
        let nb = std::mem::take(&mut neighbors[eb]);
        let mut joined: Vec<(usize, f64)> = Vec::with_capacity(na.len() + nb.len());
        for &(y, _) in na.iter().chain(&nb) {
            if alive[y] && y != new_id && seen[y] != new_id {
                seen[y] = new_id;
                joined.push((y, linkage(&sums, &sizes, y, new_id)));
            }
        }
        for &(y, d) in &joined {
            let list = &mut neighbors[y];
            list.push((new_id, d));
            let candidate = Edge::new(d, y, new_id);
            let updated = match best[y] {
                Some(e)
                    if e.a as usize == ea
                        || e.b as usize == ea
                        || e.a as usize == eb
                        || e.b as usize == eb =>
                {
                    list.retain(|&(z, _)| alive[z]);
                    lowest(y, list)
                }
                Some(e) if candidate.key_cmp(&e).is_lt() => Some(candidate),
                Some(e) => Some(e),
                None => Some(candidate),
            };
            if updated != best[y] {
                best[y] = updated;
                version[y] += 1;
                if let Some(edge) = updated {
                    heap.push(Best {
                        edge,
                        owner: y as u32,
                        version: version[y],
                    });
                }
            }
        }
        let own = lowest(new_id, &joined);
        best.push(own);
        if let Some(edge) = own {
            heap.push(Best {
                edge,
                owner: new_id as u32,
                version: 0,
            });
        }
        neighbors.push(joined);
        steps.push(MergeStep {
            cluster_a: ea,
            cluster_b: eb,
            distance: dist,
            size,
        });
        remaining -= 1;
    }
    Dendrogram::from_steps(n, steps)
}

#[inline]
fn condensed_index(n: usize, i: usize, j: usize) -> usize {
    let (i, j) = if i < j { (i, j) } else { (j, i) };
    // row-major upper triangle without the diagonal
    i * n - i * (i + 1) / 2 + (j - i - 1)
}

/// Full unconstrained dendrogram.
pub(crate) fn unconstrained(points: &impl Distances) -> Dendrogram {
    let n = points.len();
    if n < 2 {
        return Dendrogram::from_steps(n, Vec::new());
    }
    let mut dist = vec![0.0f64; n * (n - 1) / 2];
    for i in 0..n {
        let base = condensed_index(n, i, i + 1);
        for j in i + 1..n {
            dist[base + (j - i - 1)] = points.distance(i, j);
        }
    }

    let mut size = vec![1usize; n];
    let mut active = vec![true; n];
    let mut raw: Vec<(f64, usize, usize)> = Vec::with_capacity(n - 1);
    let mut chain: Vec<usize> = Vec::with_capacity(n);
    let mut first_active = 0usize;

    for _ in 0..n - 1 {
        if chain.is_empty() {
            while !active[first_active] {
                first_active += 1;
            }
            chain.push(first_active);
        }
        let (a, b, d) = loop {
            let a = *chain.last().unwrap();
            let prev = if chain.len() >= 2 {
                Some(chain[chain.len() - 2])
            } else {
                None
            };
            let mut best = usize::MAX;
            let mut best_d = f64::INFINITY;
            if let Some(p) = prev {
                best = p;
                best_d = dist[condensed_index(n, a, p)];
            }
            for k in 0..n {
                if k == a || !active[k] {
                    continue;
                }
                let d = dist[condensed_index(n, a, k)];
                if d < best_d || (d == best_d && Some(best) != prev && k < best) {
                    best = k;
                    best_d = d;
                }
            }
            if Some(best) == prev {
                chain.pop();
                chain.pop();
                break (a, best, best_d);
            }
            chain.push(best);
        };
        // merge b into a's slot
        let (keep, gone) = if a < b { (a, b) } else { (b, a) };
        let (sk, sg) = (size[keep] as f64, size[gone] as f64);
        for (k, &alive) in active.iter().enumerate() {
            if !alive || k == keep || k == gone {
                continue;
            }
            let ik = condensed_index(n, keep, k);
            let ig = condensed_index(n, gone, k);
            dist[ik] = (sk * dist[ik] + sg * dist[ig]) / (sk + sg);
        }
        active[gone] = false;
        size[keep] += size[gone];
        raw.push((d, keep, gone));
    }

    // Slots double as representative points: every merge record names one
    // point from each side. Sort by distance and rebuild ids with union-find.
    let mut order: Vec<usize> = (0..raw.len()).collect();
    order.sort_by(|&x, &y| raw[x].0.total_cmp(&raw[y].0));
    let mut parent: Vec<usize> = (0..n).collect();
    let mut cluster_of_root: Vec<usize> = (0..n).collect();
    let mut sizes: Vec<usize> = vec![1; n];
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut steps = Vec::with_capacity(raw.len());
    for (s, &k) in order.iter().enumerate() {
        let (d, p, q) = raw[k];
        let (rp, rq) = (find(&mut parent, p), find(&mut parent, q));
        let (ca, cb) = (cluster_of_root[rp], cluster_of_root[rq]);
        let (lo, hi) = if ca < cb { (ca, cb) } else { (cb, ca) };
        let merged = sizes[rp] + sizes[rq];
        parent[rq] = rp;
        sizes[rp] = merged;
        cluster_of_root[rp] = n + s;
        steps.push(MergeStep {
            cluster_a: lo,
            cluster_b: hi,
            distance: d,
            size: merged,
        });
    }
    Dendrogram::from_steps(n, steps)
}
