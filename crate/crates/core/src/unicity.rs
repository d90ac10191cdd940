//! Unicity-constrained matching of probe identities to gallery identities.
//!
//! One-shot data is solved with a single assignment over the image
//! similarities. Multi-shot data goes through three stages: same-camera
//! images are merged into identity sets, every (probe camera, gallery
//! camera) pair is solved as its own assignment over set-to-set
//! similarities and each probe set keeps its best candidate, and finally
//! each matched pair of sets is resolved image by image.
//!
//! Set members are positions within their split, as are the gallery indices
//! in rankings.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cluster::{self, PairwiseDistances, UnitRows};
use crate::error::{Error, Result};
use crate::io::cosine_similarity_matrix;
use crate::lap;
use crate::model::{
    Dataset, EmbeddingMatrix, Features, IdentitySet, MatchOutcome, ProbeMatch, Sample,
    SimilarityMatrix, Split, Timings,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    OneShot,
    MultiShot,
}

/// Fixed cluster count for one camera of one split.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CameraCount {
    pub split: Split,
    pub camera_id: u32,
    pub n_clusters: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub k_c: usize,
    pub k_a: usize,
    pub use_sparse: bool,
    pub use_connectivity: bool,
    /// Worker threads; 0 and 1 both run sequentially.
    pub workers: usize,
    pub cluster_count_override: Vec<CameraCount>,
    pub images_per_identity_hint: usize,
    /// Merge same-camera images by ground-truth label instead of clustering.
    pub oracle_merge: bool,
    /// Merge same-camera images at all; off leaves every image a singleton.
    pub mergence: bool,
    /// Solve camera pairs separately; off solves one assignment over all sets.
    pub divide_and_conquer: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            mode: Mode::MultiShot,
            k_c: 60,
            k_a: 60,
            use_sparse: true,
            use_connectivity: true,
            workers: 1,
            cluster_count_override: Vec::new(),
            images_per_identity_hint: 4,
            oracle_merge: false,
            mergence: true,
            divide_and_conquer: true,
        }
    }
}

impl PipelineConfig {
    pub fn one_shot() -> Self {
        PipelineConfig {
            mode: Mode::OneShot,
            ..Default::default()
        }
    }

    /// Sort-by-similarity baseline.
    pub fn greedy() -> Self {
        PipelineConfig {
            mergence: false,
            divide_and_conquer: false,
            ..Default::default()
        }
    }

    pub fn is_greedy(&self) -> bool {
        self.mode == Mode::MultiShot && !self.mergence && !self.divide_and_conquer
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_c == 0 || self.k_a == 0 {
            return Err(Error::Parameter("k_c and k_a must be at least 1".into()));
        }
        if self.images_per_identity_hint == 0 {
            return Err(Error::Parameter(
                "images_per_identity_hint must be at least 1".into(),
            ));
        }
        if self
            .cluster_count_override
            .iter()
            .any(|c| c.n_clusters == 0)
        {
            return Err(Error::Parameter(
                "cluster count overrides must be positive".into(),
            ));
        }
        Ok(())
    }

    fn override_for(&self, split: Split, camera_id: u32) -> Option<usize> {
        self.cluster_count_override
            .iter()
            .find(|c| c.split == split && c.camera_id == camera_id)
            .map(|c| c.n_clusters)
    }
}

/// Candidate produced by one camera-pair subproblem, or the conquered result.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityMatch {
    /// Index into the probe identity sets.
    pub probe_identity: usize,
    /// Index into the gallery identity sets.
    pub gallery_identity: usize,
    pub similarity: f32,
    pub camera_pair: (u32, u32),
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineRun {
    pub outcome: MatchOutcome,
    pub timings: Timings,
}

// ---------------------------------------------------------------- helpers

fn with_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn solve(sim: &SimilarityMatrix, config: &PipelineConfig) -> Result<Vec<Option<usize>>> {
    let assignment = if config.use_sparse && config.k_a < sim.n_gallery() {
        lap::solve_sparse(&lap::sparsify(sim, config.k_a)?)?
    } else {
        lap::solve_dense(sim)?
    };
    Ok(assignment.column_of_rows(sim.n_probe()))
}

/// Gallery positions by descending similarity, lower position first on ties.
fn similarity_order(row: &[f32]) -> Vec<u32> {
    // one u64 key per entry: inverted total-order bits of the value, then the index
    let mut keys: Vec<u64> = row
        .iter()
        .enumerate()
        .map(|(j, &v)| {
            let bits = v.to_bits() as i32;
            let ordered = (bits ^ (((bits >> 31) as u32) >> 1) as i32) as u32 ^ 0x8000_0000;
            (u64::from(!ordered) << 32) | j as u64
        })
        .collect();
    keys.sort_unstable();
    keys.into_iter().map(|k| k as u32).collect()
}

fn argmax(row: &[f32], candidates: impl IntoIterator<Item = usize>) -> Option<usize> {
    let mut best: Option<usize> = None;
    for j in candidates {
        match best {
            Some(b) if row[j] > row[b] || (row[j] == row[b] && j < b) => best = Some(j),
            None => best = Some(j),
            _ => {}
        }
    }
    best
}

/// `assigned`, then the remaining `members` by similarity, then everything
/// else by similarity.
fn refined_ranking(row: &[f32], members: &[usize], assigned: usize) -> Vec<u32> {
    let order = similarity_order(row);
    let mut is_member = vec![false; row.len()];
    for &g in members {
        is_member[g] = true;
    }
    let mut ranking = Vec::with_capacity(order.len());
    ranking.push(assigned as u32);
    ranking.extend(
        order
            .iter()
            .filter(|&&g| g as usize != assigned && is_member[g as usize]),
    );
    ranking.extend(order.iter().filter(|&&g| !is_member[g as usize]));
    ranking
}

fn singleton_sets(dataset: &Dataset, split: Split) -> Vec<IdentitySet> {
    (0..dataset.split_positions(split).len())
        .map(|p| IdentitySet::singleton(dataset.by_split(split, p).camera_id, split, p))
        .collect()
}

fn gallery_owner(gallery_sets: &[IdentitySet], n_gallery: usize) -> Result<Vec<usize>> {
    let mut owner = vec![usize::MAX; n_gallery];
    for (v, set) in gallery_sets.iter().enumerate() {
        for &g in set.members() {
            if g >= n_gallery || owner[g] != usize::MAX {
                return Err(Error::Integrity(format!(
                    "gallery image {g} is out of range or in two identity sets"
                )));
            }
            owner[g] = v;
        }
    }
    if let Some(g) = owner.iter().position(|&o| o == usize::MAX) {
        return Err(Error::Integrity(format!(
            "gallery image {g} is in no identity set"
        )));
    }
    Ok(owner)
}

/// Probe×gallery similarities for the dataset, computing cosines if needed.
pub fn similarity_for<'a>(
    dataset: &Dataset,
    features: &'a Features,
) -> Result<Cow<'a, SimilarityMatrix>> {
    match features {
        Features::Similarity(s) => {
            if s.n_probe() != dataset.n_probe() || s.n_gallery() != dataset.n_gallery() {
                return Err(Error::Dimension(format!(
                    "similarity is {}x{} for {} probes and {} galleries",
                    s.n_probe(),
                    s.n_gallery(),
                    dataset.n_probe(),
                    dataset.n_gallery()
                )));
            }
            Ok(Cow::Borrowed(s))
        }
        Features::Embeddings(e) => {
            let rows = |split| embedding_rows(dataset, split, e);
            Ok(Cow::Owned(cosine_similarity_matrix(
                e,
                &rows(Split::Probe)?,
                &rows(Split::Gallery)?,
            )?))
        }
    }
}

fn embedding_rows(dataset: &Dataset, split: Split, e: &EmbeddingMatrix) -> Result<Vec<usize>> {
    dataset
        .split_positions(split)
        .iter()
        .map(|&k| {
            let s = &dataset.samples()[k];
            match s.embedding_index {
                Some(r) if r < e.rows() => Ok(r),
                Some(r) => Err(Error::Integrity(format!(
                    "{} points at embedding row {r} of {}",
                    s.image_id,
                    e.rows()
                ))),
                None => Err(Error::Input(format!("{} has no embedding row", s.image_id))),
            }
        })
        .collect()
}

// ---------------------------------------------------------------- one-shot

/// Single assignment over the whole probe×gallery matrix.
pub fn one_shot_match(
    dataset: &Dataset,
    sim: &SimilarityMatrix,
    config: &PipelineConfig,
) -> Result<MatchOutcome> {
    if sim.n_probe() > sim.n_gallery() {
        return Err(Error::InfeasibleOneShot {
            n_probe: sim.n_probe(),
            n_gallery: sim.n_gallery(),
        });
    }
    let cols = solve(sim, config)?;
    let matches = (0..sim.n_probe())
        .into_par_iter()
        .map(|i| {
            let j = cols[i].expect("square or wide assignments match every row");
            ProbeMatch {
                probe: i,
                gallery_identity: j,
                matched_gallery: j,
                camera_pair: (dataset.probe(i).camera_id, dataset.gallery(j).camera_id),
                ranking: refined_ranking(sim.row(i), &[j], j),
            }
        })
        .collect();
    Ok(MatchOutcome {
        gallery_sets: singleton_sets(dataset, Split::Gallery),
        matches,
    })
}

/// Every probe takes its most similar gallery image.
pub fn greedy_match(dataset: &Dataset, sim: &SimilarityMatrix) -> MatchOutcome {
    let matches = (0..sim.n_probe())
        .into_par_iter()
        .map(|i| {
            let ranking = similarity_order(sim.row(i));
            let j = ranking[0] as usize;
            ProbeMatch {
                probe: i,
                gallery_identity: j,
                matched_gallery: j,
                camera_pair: (dataset.probe(i).camera_id, dataset.gallery(j).camera_id),
                ranking,
            }
        })
        .collect();
    MatchOutcome {
        gallery_sets: singleton_sets(dataset, Split::Gallery),
        matches,
    }
}

// ---------------------------------------------------------------- mergence

/// Same-camera identity sets for one split, ordered by camera and then by
/// first member.
pub fn merge_sisc(
    dataset: &Dataset,
    split: Split,
    embeddings: Option<&EmbeddingMatrix>,
    config: &PipelineConfig,
) -> Result<Vec<IdentitySet>> {
    if !config.mergence {
        let mut sets = singleton_sets(dataset, split);
        sets.sort_by_key(|s| (s.camera_id, s.members()[0]));
        return Ok(sets);
    }
    let cameras: Vec<(u32, Vec<usize>)> = dataset.positions_by_camera(split).into_iter().collect();
    let per_camera: Vec<Vec<IdentitySet>> = cameras
        .par_iter()
        .map(|(camera, positions)| {
            let labels = if config.oracle_merge {
                oracle_labels(dataset, split, positions)?
            } else {
                let e = embeddings.ok_or_else(|| {
                    Error::Config(
                        "clustering needs embeddings; use oracle merging or disable mergence"
                            .into(),
                    )
                })?;
                cluster_camera(dataset, split, *camera, positions, e, config)?
            };
            let n_sets = labels.iter().max().map_or(0, |m| m + 1);
            let mut members = vec![Vec::new(); n_sets];
            for (k, &l) in labels.iter().enumerate() {
                members[l].push(positions[k]);
            }
            members
                .into_iter()
                .map(|m| IdentitySet::new(*camera, split, m))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    Ok(per_camera.into_iter().flatten().collect())
}

fn oracle_labels(dataset: &Dataset, split: Split, positions: &[usize]) -> Result<Vec<usize>> {
    let mut ids: BTreeMap<u32, usize> = BTreeMap::new();
    positions
        .iter()
        .map(|&p| {
            let s = dataset.by_split(split, p);
            let l = s.identity_label.ok_or_else(|| {
                Error::Input(format!("oracle merging needs a label for {}", s.image_id))
            })?;
            let next = ids.len();
            Ok(*ids.entry(l).or_insert(next))
        })
        .collect()
}

fn cluster_camera(
    dataset: &Dataset,
    split: Split,
    camera: u32,
    positions: &[usize],
    embeddings: &EmbeddingMatrix,
    config: &PipelineConfig,
) -> Result<Vec<usize>> {
    let n = positions.len();
    if n == 1 {
        return Ok(vec![0]);
    }
    let rows: Vec<usize> = positions
        .iter()
        .map(|&p| {
            let s = dataset.by_split(split, p);
            s.embedding_index
                .filter(|&r| r < embeddings.rows())
                .ok_or_else(|| Error::Input(format!("{} has no embedding row", s.image_id)))
        })
        .collect::<Result<_>>()?;
    let points = UnitRows::from_embeddings(&embeddings.select(&rows)?)?;
    let range = cluster::default_search_range(n, config.images_per_identity_hint);
    let fixed = config.override_for(split, camera);
    if fixed.is_none() && range.is_none() {
        return Ok((0..n).collect());
    }
    let distances = PairwiseDistances::new(&points);
    let graph = if config.use_connectivity {
        Some(cluster::knn_connectivity_with(&distances, config.k_c)?)
    } else {
        None
    };
    let labels = match (fixed, range) {
        (Some(k), _) => {
            let k = k.min(n);
            cluster::linkage_with(&points, &distances, graph.as_ref(), k)?.cut(k)
        }
        (None, Some((lo, hi))) => {
            cluster::select_and_cut_with(&points, &distances, graph.as_ref(), lo, hi)?
                .1
                .labels
        }
        (None, None) => unreachable!(),
    };
    Ok(labels)
}

// ---------------------------------------------------------------- identity matching

/// Largest image similarity between any member of `p` and any member of `g`.
pub fn identity_similarity(p: &IdentitySet, g: &IdentitySet, sim: &SimilarityMatrix) -> f32 {
    let mut best = f32::NEG_INFINITY;
    for &i in p.members() {
        let row = sim.row(i);
        for &j in g.members() {
            best = best.max(row[j]);
        }
    }
    best
}

/// Set-to-set similarity matrix for the given probe and gallery set indices.
fn identity_matrix(
    probe_sets: &[IdentitySet],
    gallery_sets: &[IdentitySet],
    rows: &[usize],
    cols: &[usize],
    sim: &SimilarityMatrix,
) -> SimilarityMatrix {
    let mut values = Vec::with_capacity(rows.len() * cols.len());
    let mut image_best = vec![f32::NEG_INFINITY; cols.len()];
    for &u in rows {
        image_best.iter_mut().for_each(|v| *v = f32::NEG_INFINITY);
        for &i in probe_sets[u].members() {
            let row = sim.row(i);
            for (c, &v) in cols.iter().enumerate() {
                let m = &mut image_best[c];
                for &j in gallery_sets[v].members() {
                    *m = m.max(row[j]);
                }
            }
        }
        values.extend_from_slice(&image_best);
    }
    SimilarityMatrix::new(rows.len(), cols.len(), values).expect("finite maxima of finite values")
}

fn group_by_camera(sets: &[IdentitySet]) -> BTreeMap<u32, Vec<usize>> {
    let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (k, s) in sets.iter().enumerate() {
        out.entry(s.camera_id).or_default().push(k);
    }
    out
}

/// Solves every camera pair with distinct cameras and keeps, per probe set,
/// the candidate with the largest similarity. Without divide and conquer a
/// single assignment covers all sets.
pub fn divide_and_conquer(
    probe_sets: &[IdentitySet],
    gallery_sets: &[IdentitySet],
    sim: &SimilarityMatrix,
    config: &PipelineConfig,
) -> Result<Vec<IdentityMatch>> {
    let probe_cams = group_by_camera(probe_sets);
    let gallery_cams = group_by_camera(gallery_sets);
    let blocks: Vec<(Vec<usize>, Vec<usize>)> = if config.divide_and_conquer {
        let mut blocks = Vec::new();
        for (cp, rows) in &probe_cams {
            let before = blocks.len();
            for (cg, cols) in &gallery_cams {
                if cp != cg {
                    blocks.push((rows.clone(), cols.clone()));
                }
            }
            if blocks.len() == before {
                return Err(Error::Config(format!(
                    "probe camera {cp} has no gallery camera to pair with"
                )));
            }
        }
        blocks
    } else {
        vec![(
            (0..probe_sets.len()).collect(),
            (0..gallery_sets.len()).collect(),
        )]
    };

    let candidates: Vec<Vec<IdentityMatch>> = blocks
        .par_iter()
        .map(|(rows, cols)| {
            let m = identity_matrix(probe_sets, gallery_sets, rows, cols, sim);
            let assigned = solve(&m, config)?;
            Ok(assigned
                .iter()
                .enumerate()
                .filter_map(|(r, c)| {
                    c.map(|c| {
                        let (u, v) = (rows[r], cols[c]);
                        IdentityMatch {
                            probe_identity: u,
                            gallery_identity: v,
                            similarity: m.get(r, c),
                            camera_pair: (probe_sets[u].camera_id, gallery_sets[v].camera_id),
                        }
                    })
                })
                .collect())
        })
        .collect::<Result<_>>()?;

    // conquer
    let mut best: Vec<Option<IdentityMatch>> = vec![None; probe_sets.len()];
    for c in candidates.into_iter().flatten() {
        let slot = &mut best[c.probe_identity];
        let better = match slot {
            None => true,
            Some(b) => {
                c.similarity > b.similarity
                    || (c.similarity == b.similarity
                        && (c.camera_pair.1, c.gallery_identity)
                            < (b.camera_pair.1, b.gallery_identity))
            }
        };
        if better {
            *slot = Some(c);
        }
    }
    let owner = gallery_owner(gallery_sets, sim.n_gallery())?;
    Ok(best
        .into_iter()
        .enumerate()
        .map(|(u, b)| {
            b.unwrap_or_else(|| {
                // unmatched in every subproblem
                let p = &probe_sets[u];
                let mut best: Option<(usize, usize)> = None;
                for &i in p.members() {
                    let j = argmax(sim.row(i), 0..sim.n_gallery()).expect("non-empty gallery");
                    if best.is_none_or(|(bi, bj)| sim.get(i, j) > sim.get(bi, bj)) {
                        best = Some((i, j));
                    }
                }
                let (bi, bj) = best.expect("non-empty probe set");
                let v = owner[bj];
                IdentityMatch {
                    probe_identity: u,
                    gallery_identity: v,
                    similarity: sim.get(bi, bj),
                    camera_pair: (p.camera_id, gallery_sets[v].camera_id),
                }
            })
        })
        .collect())
}

// ---------------------------------------------------------------- image matching

/// Resolves each matched pair of sets image by image. Probe images left
/// over when the gallery set is smaller take their best image in that set.
pub fn image_level_refine(
    probe_sets: &[IdentitySet],
    gallery_sets: &[IdentitySet],
    matches: &[IdentityMatch],
    sim: &SimilarityMatrix,
) -> Result<MatchOutcome> {
    let mut covered = vec![false; probe_sets.len()];
    for m in matches {
        if m.probe_identity >= probe_sets.len() || m.gallery_identity >= gallery_sets.len() {
            return Err(Error::Dimension(
                "identity match refers to a missing set".into(),
            ));
        }
        covered[m.probe_identity] = true;
    }
    if let Some(u) = covered.iter().position(|c| !c) {
        return Err(Error::Input(format!("probe set {u} has no identity match")));
    }
    let per_match: Vec<Vec<ProbeMatch>> = matches
        .par_iter()
        .map(|m| {
            let p = probe_sets[m.probe_identity].members();
            let g = gallery_sets[m.gallery_identity].members();
            let sub = sim.submatrix(p, g);
            let cols = lap::solve_dense(&sub)?.column_of_rows(p.len());
            Ok(p.iter()
                .enumerate()
                .map(|(r, &i)| {
                    let c = cols[r]
                        .or_else(|| argmax(sub.row(r), 0..g.len()))
                        .expect("non-empty gallery set");
                    ProbeMatch {
                        probe: i,
                        gallery_identity: m.gallery_identity,
                        matched_gallery: g[c],
                        camera_pair: m.camera_pair,
                        ranking: refined_ranking(sim.row(i), g, g[c]),
                    }
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<ProbeMatch> = per_match.into_iter().flatten().collect();
    all.sort_by_key(|m| m.probe);
    Ok(MatchOutcome {
        gallery_sets: gallery_sets.to_vec(),
        matches: all,
    })
}

// ---------------------------------------------------------------- pipeline

fn elapsed(timings: &mut Timings, stage: &str, start: Instant) {
    *timings.entry(stage.to_string()).or_insert(0.0) += start.elapsed().as_secs_f64();
}

fn match_dataset(
    dataset: &Dataset,
    features: &Features,
    config: &PipelineConfig,
    gallery_sets: Option<&[IdentitySet]>,
) -> Result<PipelineRun> {
    config.validate()?;
    if dataset.n_probe() == 0 || dataset.n_gallery() == 0 {
        return Err(Error::Size(format!(
            "need probes and galleries, got {} and {}",
            dataset.n_probe(),
            dataset.n_gallery()
        )));
    }
    let mut timings = Timings::new();
    let total = Instant::now();
    with_pool(config.workers, || {
        let t = Instant::now();
        let sim = similarity_for(dataset, features)?;
        elapsed(&mut timings, "similarity", t);
        let embeddings = match features {
            Features::Embeddings(e) => Some(e),
            Features::Similarity(_) => None,
        };

        let outcome = if config.mode == Mode::OneShot {
            let t = Instant::now();
            let o = one_shot_match(dataset, &sim, config)?;
            elapsed(&mut timings, "assignment", t);
            o
        } else if config.is_greedy() {
            let t = Instant::now();
            let o = greedy_match(dataset, &sim);
            elapsed(&mut timings, "ranking", t);
            o
        } else {
            let t = Instant::now();
            let probe_sets = merge_sisc(dataset, Split::Probe, embeddings, config)?;
            let gallery_sets = match gallery_sets {
                Some(g) => g.to_vec(),
                None => merge_sisc(dataset, Split::Gallery, embeddings, config)?,
            };
            elapsed(&mut timings, "mergence", t);
            let t = Instant::now();
            let matches = divide_and_conquer(&probe_sets, &gallery_sets, &sim, config)?;
            elapsed(&mut timings, "identity_matching", t);
            let t = Instant::now();
            let o = image_level_refine(&probe_sets, &gallery_sets, &matches, &sim)?;
            elapsed(&mut timings, "image_matching", t);
            o
        };
        elapsed(&mut timings, "total", total);
        Ok(PipelineRun { outcome, timings })
    })
}

pub fn run_pipeline(
    dataset: &Dataset,
    features: &Features,
    config: &PipelineConfig,
) -> Result<PipelineRun> {
    match_dataset(dataset, features, config, None)
}

/// Dataset, features and outcome after [`add_probes`].
#[derive(Clone, Debug, PartialEq)]
pub struct Increment {
    pub dataset: Dataset,
    pub features: Features,
    pub outcome: MatchOutcome,
    /// Timings of the incremental run only.
    pub timings: Timings,
}

/// Matches `new_probes` against all galleries, reusing the gallery sets of
/// `outcome` and leaving earlier probe results untouched.
///
/// `new_features` holds embeddings for the new samples (rows follow
/// `embedding_index`, or sample order when unset) or their similarity rows.
pub fn add_probes(
    dataset: &Dataset,
    features: &Features,
    outcome: &MatchOutcome,
    new_probes: Vec<Sample>,
    new_features: &Features,
    config: &PipelineConfig,
) -> Result<Increment> {
    if outcome.matches.len() != dataset.n_probe() {
        return Err(Error::Integrity(format!(
            "outcome covers {} probes, dataset has {}",
            outcome.matches.len(),
            dataset.n_probe()
        )));
    }
    let mut seen: BTreeSet<&str> = dataset
        .samples()
        .iter()
        .map(|s| s.image_id.as_str())
        .collect();
    for s in &new_probes {
        if s.split != Split::Probe {
            return Err(Error::Input(format!(
                "{} is not a probe sample",
                s.image_id
            )));
        }
        if !seen.insert(&s.image_id) {
            return Err(Error::Input(format!("duplicate image_id {}", s.image_id)));
        }
    }
    if new_probes.is_empty() {
        return Ok(Increment {
            dataset: dataset.clone(),
            features: features.clone(),
            outcome: outcome.clone(),
            timings: Timings::new(),
        });
    }

    let mut new_probes = new_probes;
    let (merged_features, sub_features) = match (features, new_features) {
        (Features::Embeddings(base), Features::Embeddings(extra)) => {
            let mut all = base.clone();
            let offset = all.append(extra)?;
            for (k, s) in new_probes.iter_mut().enumerate() {
                let r = s.embedding_index.unwrap_or(k);
                if r >= extra.rows() {
                    return Err(Error::Integrity(format!(
                        "{} points at row {r} of {} new embeddings",
                        s.image_id,
                        extra.rows()
                    )));
                }
                s.embedding_index = Some(offset + r);
            }
            let all = Features::Embeddings(all);
            (all.clone(), all)
        }
        (Features::Similarity(base), Features::Similarity(extra)) => {
            if extra.n_probe() != new_probes.len() {
                return Err(Error::Integrity(format!(
                    "{} similarity rows for {} new probes",
                    extra.n_probe(),
                    new_probes.len()
                )));
            }
            let mut all = base.clone();
            all.append_rows(extra)?;
            (
                Features::Similarity(all),
                Features::Similarity(extra.clone()),
            )
        }
        _ => {
            return Err(Error::Input(
                "new probes must use the same feature kind as the dataset".into(),
            ))
        }
    };

    // galleries keep their relative order, so gallery positions are shared
    let mut sub_samples: Vec<Sample> = dataset
        .samples()
        .iter()
        .filter(|s| s.split == Split::Gallery)
        .cloned()
        .collect();
    sub_samples.extend(new_probes.iter().cloned());
    let sub = Dataset::new(sub_samples)?;
    let reuse = (!outcome.gallery_sets.is_empty()).then_some(outcome.gallery_sets.as_slice());
    let run = match_dataset(&sub, &sub_features, config, reuse)?;

    let base_n = dataset.n_probe();
    let mut merged = outcome.clone();
    merged
        .matches
        .extend(run.outcome.matches.into_iter().map(|mut m| {
            m.probe += base_n;
            m
        }));
    let mut samples = dataset.samples().to_vec();
    samples.extend(new_probes);
    Ok(Increment {
        dataset: Dataset::new(samples)?,
        features: merged_features,
        outcome: merged,
        timings: run.timings,
    })
}
