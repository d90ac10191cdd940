//! Domain types shared by the matching pipeline.
//!
//! Similarities are always "higher is better". Probe and gallery images are
//! addressed by their position within their split (probe position `i`,
//! gallery position `j`), which is also the row/column order of every
//! probe×gallery [`SimilarityMatrix`].

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Probe,
    Gallery,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Probe => "probe",
            Split::Gallery => "gallery",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "probe" | "query" => Ok(Split::Probe),
            "gallery" => Ok(Split::Gallery),
            other => Err(Error::Input(format!("unknown split {other:?}"))),
        }
    }
}

/// One person image's record.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sample {
    pub image_id: String,
    pub camera_id: u32,
    pub split: Split,
    /// Ground-truth person identity, only used for evaluation and synthesis.
    pub identity_label: Option<u32>,
    /// Row of this sample in the accompanying [`EmbeddingMatrix`].
    pub embedding_index: Option<usize>,
}

/// A validated collection of samples, split into probe and gallery views.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    samples: Vec<Sample>,
    probes: Vec<usize>,
    galleries: Vec<usize>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(samples.len());
        for s in &samples {
            if !seen.insert(s.image_id.as_str()) {
                return Err(Error::Integrity(format!(
                    "duplicate image_id {:?}",
                    s.image_id
                )));
            }
        }
        for split in [Split::Probe, Split::Gallery] {
            let mut labeled = 0usize;
            let mut total = 0usize;
            for s in samples.iter().filter(|s| s.split == split) {
                total += 1;
                labeled += s.identity_label.is_some() as usize;
            }
            if labeled != 0 && labeled != total {
                return Err(Error::Integrity(format!(
                    "{} split mixes labeled and unlabeled samples ({labeled} of {total} labeled)",
                    split.as_str()
                )));
            }
        }
        let probes = (0..samples.len())
            .filter(|&k| samples[k].split == Split::Probe)
            .collect();
        let galleries = (0..samples.len())
            .filter(|&k| samples[k].split == Split::Gallery)
            .collect();
        Ok(Dataset {
            samples,
            probes,
            galleries,
        })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Sample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn n_probe(&self) -> usize {
        self.probes.len()
    }

    pub fn n_gallery(&self) -> usize {
        self.galleries.len()
    }

    pub fn probe(&self, i: usize) -> &Sample {
        &self.samples[self.probes[i]]
    }

    pub fn gallery(&self, j: usize) -> &Sample {
        &self.samples[self.galleries[j]]
    }

    /// Sample indices of the probe split, in probe-position order.
    pub fn probe_indices(&self) -> &[usize] {
        &self.probes
    }

    pub fn gallery_indices(&self) -> &[usize] {
        &self.galleries
    }

    pub fn split_positions(&self, split: Split) -> &[usize] {
        match split {
            Split::Probe => &self.probes,
            Split::Gallery => &self.galleries,
        }
    }

    pub fn by_split(&self, split: Split, pos: usize) -> &Sample {
        &self.samples[self.split_positions(split)[pos]]
    }

    /// Ground-truth labels for both splits, or `None` when either split is
    /// unlabeled.
    pub fn labels(&self) -> Option<Labels> {
        let collect = |idx: &[usize]| -> Option<Vec<u32>> {
            idx.iter()
                .map(|&k| self.samples[k].identity_label)
                .collect()
        };
        Some(Labels {
            probe: collect(&self.probes)?,
            gallery: collect(&self.galleries)?,
            probe_cameras: self
                .probes
                .iter()
                .map(|&k| self.samples[k].camera_id)
                .collect(),
            gallery_cameras: self
                .galleries
                .iter()
                .map(|&k| self.samples[k].camera_id)
                .collect(),
        })
    }

    /// Positions within `split` grouped by camera, cameras in ascending order.
    pub fn positions_by_camera(&self, split: Split) -> BTreeMap<u32, Vec<usize>> {
        let mut out: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (pos, &k) in self.split_positions(split).iter().enumerate() {
            out.entry(self.samples[k].camera_id).or_default().push(pos);
        }
        out
    }
}

/// Ground-truth identities and cameras, indexed by probe / gallery position.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Labels {
    pub probe: Vec<u32>,
    pub gallery: Vec<u32>,
    pub probe_cameras: Vec<u32>,
    pub gallery_cameras: Vec<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f32>,
}

impl EmbeddingMatrix {
    pub fn new(rows: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if rows == 0 || dim == 0 {
            return Err(Error::Dimension(format!(
                "embedding matrix must be non-empty, got {rows}x{dim}"
            )));
        }
        if rows.checked_mul(dim) != Some(values.len()) {
            return Err(Error::Dimension(format!(
                "{} values do not fill a {rows}x{dim} matrix",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite embedding value at row {}, column {}",
                k / dim,
                k % dim
            )));
        }
        Ok(EmbeddingMatrix { rows, dim, values })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::Dimension("ragged embedding rows".into()));
        }
        Self::new(rows.len(), dim, rows.concat())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    /// Gathers the given rows into a new matrix.
    pub fn select(&self, rows: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(rows.len() * self.dim);
        for &r in rows {
            if r >= self.rows {
                return Err(Error::Dimension(format!(
                    "row {r} out of range for {} embedding rows",
                    self.rows
                )));
            }
            values.extend_from_slice(self.row(r));
        }
        Self::new(rows.len(), self.dim, values)
    }

    /// Appends the rows of `other`, returning the row offset of its first row.
    pub fn append(&mut self, other: &EmbeddingMatrix) -> Result<usize> {
        if other.dim != self.dim {
            return Err(Error::Dimension(format!(
                "cannot append dim {} rows to dim {} matrix",
                other.dim, self.dim
            )));
        }
        let offset = self.rows;
        self.values.extend_from_slice(&other.values);
        self.rows += other.rows;
        Ok(offset)
    }

    /// L2-normalized copy. Zero rows are rejected.
    pub fn normalized(&self) -> Result<Self> {
        let mut values = self.values.clone();
        for (i, row) in values.chunks_mut(self.dim).enumerate() {
            let norm = row
                .iter()
                .map(|&v| (v as f64) * (v as f64))
                .sum::<f64>()
                .sqrt();
            if norm == 0.0 {
                return Err(Error::Input(format!("embedding row {i} has zero norm")));
            }
            for v in row.iter_mut() {
                *v = (*v as f64 / norm) as f32;
            }
        }
        Ok(EmbeddingMatrix {
            rows: self.rows,
            dim: self.dim,
            values,
        })
    }
}

/// Dense row-major probe×gallery similarity scores.
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarityMatrix {
    n_probe: usize,
    n_gallery: usize,
    values: Vec<f32>,
}

impl SimilarityMatrix {
    pub fn new(n_probe: usize, n_gallery: usize, values: Vec<f32>) -> Result<Self> {
        if n_probe.checked_mul(n_gallery) != Some(values.len()) {
            return Err(Error::Dimension(format!(
                "{} values do not fill a {n_probe}x{n_gallery} matrix",
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Input(format!(
                "non-finite similarity at ({}, {})",
                k / n_gallery,
                k % n_gallery
            )));
        }
        Ok(SimilarityMatrix {
            n_probe,
            n_gallery,
            values,
        })
    }

    pub fn from_rows(rows: &[Vec<f32>]) -> Result<Self> {
        let n_gallery = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != n_gallery) {
            return Err(Error::Dimension("ragged similarity rows".into()));
        }
        Self::new(rows.len(), n_gallery, rows.concat())
    }

    pub fn n_probe(&self) -> usize {
        self.n_probe
    }

    pub fn n_gallery(&self) -> usize {
        self.n_gallery
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f32 {
        self.values[i * self.n_gallery + j]
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.n_gallery..(i + 1) * self.n_gallery]
    }

    pub fn transposed(&self) -> SimilarityMatrix {
        let mut values = vec![0.0; self.values.len()];
        for i in 0..self.n_probe {
            for j in 0..self.n_gallery {
                values[j * self.n_probe + i] = self.get(i, j);
            }
        }
        SimilarityMatrix {
            n_probe: self.n_gallery,
            n_gallery: self.n_probe,
            values,
        }
    }

    /// Submatrix on the given probe rows and gallery columns.
    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> SimilarityMatrix {
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            let row = self.row(i);
            values.extend(cols.iter().map(|&j| row[j]));
        }
        SimilarityMatrix {
            n_probe: rows.len(),
            n_gallery: cols.len(),
            values,
        }
    }

    /// Appends probe rows with the same gallery width.
    pub fn append_rows(&mut self, other: &SimilarityMatrix) -> Result<()> {
        if other.n_gallery != self.n_gallery {
            return Err(Error::Dimension(format!(
                "cannot append rows of width {} to width {}",
                other.n_gallery, self.n_gallery
            )));
        }
        self.values.extend_from_slice(&other.values);
        self.n_probe += other.n_probe;
        Ok(())
    }
}

/// A group of same-camera, same-split images treated as one person identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdentitySet {
    pub camera_id: u32,
    pub split: Split,
    members: Vec<usize>,
}

impl IdentitySet {
    /// `members` are positions within `split`.
    pub fn new(camera_id: u32, split: Split, mut members: Vec<usize>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::Input("identity set must have members".into()));
        }
        members.sort_unstable();
        if members.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Input("identity set has repeated members".into()));
        }
        Ok(IdentitySet {
            camera_id,
            split,
            members,
        })
    }

    pub fn singleton(camera_id: u32, split: Split, member: usize) -> Self {
        IdentitySet {
            camera_id,
            split,
            members: vec![member],
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }
}

/// One-to-one partial row→column mapping with its total similarity.
#[derive(Clone, Debug, PartialEq)]
pub struct Assignment {
    pairs: Vec<(usize, usize)>,
    total_similarity: f64,
}

impl Assignment {
    /// Rejects pairs that reuse a row or a column. Pairs are stored sorted
    /// by row.
    pub fn new(mut pairs: Vec<(usize, usize)>, total_similarity: f64) -> Result<Self> {
        pairs.sort_unstable();
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Input("assignment reuses a row".into()));
        }
        let mut cols: Vec<usize> = pairs.iter().map(|p| p.1).collect();
        cols.sort_unstable();
        if cols.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Input("assignment reuses a column".into()));
        }
        Ok(Assignment {
            pairs,
            total_similarity,
        })
    }

    /// Builds an assignment whose total is summed from `value` in row order.
    pub fn from_pairs(
        pairs: Vec<(usize, usize)>,
        value: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut a = Self::new(pairs, 0.0)?;
        a.total_similarity = a.pairs.iter().map(|&(r, c)| value(r, c)).sum();
        Ok(a)
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    pub fn total_similarity(&self) -> f64 {
        self.total_similarity
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    /// Column per row, `None` for unmatched rows.
    pub fn column_of_rows(&self, n_rows: usize) -> Vec<Option<usize>> {
        let mut out = vec![None; n_rows];
        for &(r, c) in &self.pairs {
            out[r] = Some(c);
        }
        out
    }
}

/// Final image-level result for one probe image.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeMatch {
    /// Probe position.
    pub probe: usize,
    /// Index into [`MatchOutcome::gallery_sets`].
    pub gallery_identity: usize,
    /// Gallery position of the rank-1 image.
    pub matched_gallery: usize,
    /// (probe camera, gallery camera) of the subproblem that produced the match.
    pub camera_pair: (u32, u32),
    /// Refined ranking of all gallery positions; `ranking[0] == matched_gallery`.
    pub ranking: Vec<u32>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchOutcome {
    pub gallery_sets: Vec<IdentitySet>,
    /// One entry per probe image, in probe-position order.
    pub matches: Vec<ProbeMatch>,
}

impl MatchOutcome {
    pub fn rank1(&self) -> Vec<usize> {
        self.matches.iter().map(|m| m.matched_gallery).collect()
    }
}

pub type Timings = BTreeMap<String, f64>;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// `cmc[k]` is the fraction of probes with a correct match within rank `k + 1`.
    pub cmc: Vec<f64>,
    pub map: f64,
    pub p_um: f64,
    pub timings: Timings,
}

impl EvalReport {
    pub fn rank(&self, k: usize) -> Option<f64> {
        k.checked_sub(1).and_then(|i| self.cmc.get(i)).copied()
    }
}

/// Image features handed to the pipeline.
#[derive(Clone, Debug, PartialEq)]
pub enum Features {
    /// Rows referenced by [`Sample::embedding_index`].
    Embeddings(EmbeddingMatrix),
    /// Precomputed probe×gallery similarities.
    Similarity(SimilarityMatrix),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(id: &str, split: Split, label: Option<u32>) -> Sample {
        Sample {
            image_id: id.into(),
            camera_id: 0,
            split,
            identity_label: label,
            embedding_index: None,
        }
    }

    #[test]
    fn assignment_rejects_repeated_rows_and_columns() {
        assert!(Assignment::new(vec![(0, 1), (0, 2)], 0.0).is_err());
        assert!(Assignment::new(vec![(0, 1), (1, 1)], 0.0).is_err());
        let a = Assignment::new(vec![(1, 0), (0, 1)], 2.0).unwrap();
        assert_eq!(a.pairs(), &[(0, 1), (1, 0)]);
    }

    #[test]
    fn dataset_rejects_duplicates_and_mixed_labels() {
        let dup = vec![
            sample("a", Split::Probe, None),
            sample("a", Split::Gallery, None),
        ];
        assert!(matches!(Dataset::new(dup), Err(Error::Integrity(_))));
        let mixed = vec![
            sample("a", Split::Probe, Some(1)),
            sample("b", Split::Probe, None),
        ];
        assert!(matches!(Dataset::new(mixed), Err(Error::Integrity(_))));
        // labeled probes with unlabeled galleries is allowed, but yields no labels
        let ok = Dataset::new(vec![
            sample("a", Split::Probe, Some(1)),
            sample("b", Split::Gallery, None),
        ])
        .unwrap();
        assert!(ok.labels().is_none());
    }

    #[test]
    fn matrices_reject_non_finite() {
        assert!(SimilarityMatrix::new(1, 2, vec![0.0, f32::NAN]).is_err());
        assert!(EmbeddingMatrix::new(1, 1, vec![f32::INFINITY]).is_err());
        assert!(EmbeddingMatrix::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn transpose_and_submatrix() {
        let s = SimilarityMatrix::from_rows(&[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]).unwrap();
        let t = s.transposed();
        assert_eq!(t.n_probe(), 3);
        assert_eq!(t.get(2, 1), 6.0);
        let sub = s.submatrix(&[1], &[2, 0]);
        assert_eq!(sub.values(), &[6.0, 4.0]);
    }
}
