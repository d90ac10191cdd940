//! Dataset ingestion and result persistence.
//!
//! Metadata is UTF-8 CSV with a header naming `image_id`, `camera_id`,
//! `split` and optionally `person_id`. Embedding (`UEMB`) and similarity
//! (`USIM`) files share one little-endian layout:
//!
//! ```text
//! offset  size  field
//! 0       4     magic
//! 4       4     u32 version (1)
//! 8       8     u64 rows
//! 16      8     u64 columns
//! 24      4·r·c f32 values, row-major
//! ```
//!
//! Binary rows are bound to metadata line order (embeddings) or to probe /
//! gallery order (similarities); integrity is checked by counts.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::dot;
use crate::model::{
    Dataset, EmbeddingMatrix, EvalReport, Features, MatchOutcome, Sample, SimilarityMatrix, Split,
};
use crate::synth::SynthConfig;

pub const EMBEDDING_MAGIC: [u8; 4] = *b"UEMB";
pub const SIMILARITY_MAGIC: [u8; 4] = *b"USIM";
pub const FORMAT_VERSION: u32 = 1;
const HEADER_LEN: usize = 24;

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

// ---------------------------------------------------------------- metadata

pub fn load_metadata(path: &Path) -> Result<Vec<Sample>> {
    parse_metadata(&read_file(path)?)
}

pub fn parse_metadata(bytes: &[u8]) -> Result<Vec<Sample>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);
    let headers = reader
        .headers()
        .map_err(|e| Error::Parse {
            line: 1,
            msg: e.to_string(),
        })?
        .clone();
    let column = |name: &str| headers.iter().position(|h| h.eq_ignore_ascii_case(name));
    let missing = |name: &str| Error::Parse {
        line: 1,
        msg: format!("header lacks column {name:?}"),
    };
    let c_id = column("image_id").ok_or_else(|| missing("image_id"))?;
    let c_cam = column("camera_id").ok_or_else(|| missing("camera_id"))?;
    let c_split = column("split").ok_or_else(|| missing("split"))?;
    let c_person = column("person_id");

    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            msg: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |c: usize| record.get(c).unwrap_or("");
        let parse_err = |msg: String| Error::Parse { line, msg };
        let image_id = field(c_id);
        if image_id.is_empty() {
            return Err(parse_err("empty image_id".into()));
        }
        let camera_id = field(c_cam)
            .parse::<u32>()
            .map_err(|e| parse_err(format!("camera_id {:?}: {e}", field(c_cam))))?;
        let split = field(c_split)
            .parse::<Split>()
            .map_err(|e| parse_err(e.to_string()))?;
        let identity_label = match c_person.map(field) {
            None | Some("") => None,
            Some(v) => Some(
                v.parse::<u32>()
                    .map_err(|e| parse_err(format!("person_id {v:?}: {e}")))?,
            ),
        };
        samples.push(Sample {
            image_id: image_id.to_string(),
            camera_id,
            split,
            identity_label,
            embedding_index: None,
        });
    }
    Ok(samples)
}

pub fn write_metadata(samples: &[Sample]) -> Vec<u8> {
    let mut out = String::from("image_id,camera_id,split,person_id\n");
    for s in samples {
        let person = s.identity_label.map(|l| l.to_string()).unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{}\n",
            s.image_id,
            s.camera_id,
            s.split.as_str(),
            person
        ));
    }
    out.into_bytes()
}

pub fn save_metadata(samples: &[Sample], path: &Path) -> Result<()> {
    write_file(path, &write_metadata(samples))
}

// ---------------------------------------------------------------- binaries

fn encode_matrix(magic: [u8; 4], rows: usize, cols: usize, values: &[f32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + values.len() * 4);
    out.extend_from_slice(&magic);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

fn decode_matrix(magic: [u8; 4], bytes: &[u8]) -> Result<(usize, usize, Vec<f32>)> {
    let fmt = |offset: usize, msg: String| Error::Format {
        offset: offset as u64,
        msg,
    };
    if bytes.len() < 4 || bytes[..4] != magic {
        return Err(fmt(
            0,
            format!("expected magic {:?}", String::from_utf8_lossy(&magic)),
        ));
    }
    if bytes.len() < HEADER_LEN {
        return Err(fmt(bytes.len(), "truncated header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(fmt(4, format!("unsupported version {version}")));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap());
    let payload = bytes.len() - HEADER_LEN;
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(4))
        .filter(|&b| b <= usize::MAX as u64)
        .ok_or_else(|| fmt(8, format!("shape {rows}x{cols} overflows")))?;
    if (payload as u64) < expected {
        return Err(fmt(
            bytes.len(),
            format!("truncated data: {rows}x{cols} needs {expected} bytes, found {payload}"),
        ));
    }
    if (payload as u64) > expected {
        return Err(fmt(
            HEADER_LEN + expected as usize,
            "trailing bytes after matrix data".into(),
        ));
    }
    let mut values = Vec::with_capacity(expected as usize / 4);
    for (k, chunk) in bytes[HEADER_LEN..].chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(fmt(HEADER_LEN + 4 * k, "non-finite value".into()));
        }
        values.push(v);
    }
    Ok((rows as usize, cols as usize, values))
}

pub fn encode_embeddings(m: &EmbeddingMatrix) -> Vec<u8> {
    encode_matrix(EMBEDDING_MAGIC, m.rows(), m.dim(), m.values())
}

pub fn decode_embeddings(bytes: &[u8]) -> Result<EmbeddingMatrix> {
    let (rows, dim, values) = decode_matrix(EMBEDDING_MAGIC, bytes)?;
    EmbeddingMatrix::new(rows, dim, values)
}

pub fn load_embeddings(path: &Path) -> Result<EmbeddingMatrix> {
    decode_embeddings(&read_file(path)?)
}

pub fn save_embeddings(m: &EmbeddingMatrix, path: &Path) -> Result<()> {
    write_file(path, &encode_embeddings(m))
}

pub fn encode_similarity(m: &SimilarityMatrix) -> Vec<u8> {
    encode_matrix(SIMILARITY_MAGIC, m.n_probe(), m.n_gallery(), m.values())
}

pub fn decode_similarity(bytes: &[u8]) -> Result<SimilarityMatrix> {
    let (rows, cols, values) = decode_matrix(SIMILARITY_MAGIC, bytes)?;
    SimilarityMatrix::new(rows, cols, values)
}

pub fn load_similarity(path: &Path) -> Result<SimilarityMatrix> {
    decode_similarity(&read_file(path)?)
}

pub fn save_similarity(m: &SimilarityMatrix, path: &Path) -> Result<()> {
    write_file(path, &encode_similarity(m))
}

// ---------------------------------------------------------------- similarity

fn unit_rows(emb: &EmbeddingMatrix, rows: &[usize]) -> Result<Vec<f64>> {
    let dim = emb.dim();
    let mut out = Vec::with_capacity(rows.len() * dim);
    for &r in rows {
        if r >= emb.rows() {
            return Err(Error::Dimension(format!(
                "row {r} out of range for {} embedding rows",
                emb.rows()
            )));
        }
        let row = emb.row(r);
        let norm = row.iter().map(|&v| v as f64 * v as f64).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Input(format!("embedding row {r} has zero norm")));
        }
        out.extend(row.iter().map(|&v| v as f64 / norm));
    }
    Ok(out)
}

/// Cosine similarity between the given probe rows and gallery rows.
pub fn cosine_similarity_matrix(
    embeddings: &EmbeddingMatrix,
    probe_rows: &[usize],
    gallery_rows: &[usize],
) -> Result<SimilarityMatrix> {
    let dim = embeddings.dim();
    let p = unit_rows(embeddings, probe_rows)?;
    let g = unit_rows(embeddings, gallery_rows)?;
    let m = gallery_rows.len();
    let mut values = vec![0.0f32; probe_rows.len() * m];
    if m > 0 {
        values.par_chunks_mut(m).enumerate().for_each(|(i, out)| {
            let pi = &p[i * dim..(i + 1) * dim];
            for (j, o) in out.iter_mut().enumerate() {
                *o = dot(pi, &g[j * dim..(j + 1) * dim]) as f32;
            }
        });
    }
    SimilarityMatrix::new(probe_rows.len(), m, values)
}

// ---------------------------------------------------------------- manifest

/// Points at one metadata file and exactly one of embeddings / similarity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub metadata: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub similarity: Option<PathBuf>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.version != FORMAT_VERSION {
            return Err(Error::Input(format!(
                "unsupported manifest version {}",
                self.version
            )));
        }
        if self.embeddings.is_some() == self.similarity.is_some() {
            return Err(Error::Input(
                "manifest must name exactly one of embeddings / similarity".into(),
            ));
        }
        Ok(())
    }
}

/// Parses manifest text; paths are left as written.
pub fn parse_manifest(text: &str) -> Result<DatasetManifest> {
    let m: DatasetManifest =
        toml::from_str(text).map_err(|e| Error::Input(format!("manifest: {e}")))?;
    m.validate()?;
    Ok(m)
}

/// Reads a manifest and resolves relative paths against its directory.
pub fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut m = parse_manifest(&text).map_err(|e| match e {
        Error::Input(msg) => Error::Input(format!("{}: {msg}", path.display())),
        other => other,
    })?;
    let base = path.parent().unwrap_or(Path::new("."));
    // absolute paths survive the join unchanged
    m.metadata = base.join(&m.metadata);
    m.embeddings = m.embeddings.map(|p| base.join(p));
    m.similarity = m.similarity.map(|p| base.join(p));
    Ok(m)
}

pub fn save_manifest(m: &DatasetManifest, path: &Path) -> Result<()> {
    m.validate()?;
    let text = toml::to_string(m).map_err(|e| Error::Serde(e.to_string()))?;
    write_file(path, text.as_bytes())
}

fn load_parts(manifest: &DatasetManifest) -> Result<(Vec<Sample>, Features)> {
    manifest.validate()?;
    let mut samples = load_metadata(&manifest.metadata)?;
    let features = if let Some(p) = &manifest.embeddings {
        let emb = load_embeddings(p)?;
        if emb.rows() != samples.len() {
            return Err(Error::Integrity(format!(
                "{} embedding rows for {} metadata records",
                emb.rows(),
                samples.len()
            )));
        }
        for (k, s) in samples.iter_mut().enumerate() {
            s.embedding_index = Some(k);
        }
        Features::Embeddings(emb)
    } else {
        let p = manifest.similarity.as_ref().expect("validated manifest");
        Features::Similarity(load_similarity(p)?)
    };
    Ok((samples, features))
}

/// Loads metadata and features, binding embedding rows to line order.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<(Dataset, Features)> {
    let (samples, features) = load_parts(manifest)?;
    let dataset = Dataset::new(samples)?;
    if let Features::Similarity(sim) = &features {
        if sim.n_probe() != dataset.n_probe() || sim.n_gallery() != dataset.n_gallery() {
            return Err(Error::Integrity(format!(
                "similarity is {}x{} but metadata has {} probes and {} galleries",
                sim.n_probe(),
                sim.n_gallery(),
                dataset.n_probe(),
                dataset.n_gallery()
            )));
        }
    }
    Ok((dataset, features))
}

/// Loads a batch of new probe samples. Similarity files hold one row per
/// new probe against the existing galleries.
pub fn load_increment(manifest: &DatasetManifest) -> Result<(Vec<Sample>, Features)> {
    let (samples, features) = load_parts(manifest)?;
    if let Some(s) = samples.iter().find(|s| s.split != Split::Probe) {
        return Err(Error::Input(format!(
            "{} is not a probe sample",
            s.image_id
        )));
    }
    if let Features::Similarity(sim) = &features {
        if sim.n_probe() != samples.len() {
            return Err(Error::Integrity(format!(
                "{} similarity rows for {} new probes",
                sim.n_probe(),
                samples.len()
            )));
        }
    }
    Ok((samples, features))
}

/// Writes `manifest.toml`, `metadata.csv` and the feature file into `dir`.
pub fn save_dataset(dataset: &Dataset, features: &Features, dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_metadata(dataset.samples(), &dir.join("metadata.csv"))?;
    let mut manifest = DatasetManifest {
        version: FORMAT_VERSION,
        metadata: "metadata.csv".into(),
        embeddings: None,
        similarity: None,
    };
    match features {
        Features::Embeddings(e) => {
            // rows must follow line order
            let rows: Vec<usize> = dataset
                .samples()
                .iter()
                .map(|s| {
                    s.embedding_index
                        .ok_or_else(|| Error::Input(format!("{} has no embedding", s.image_id)))
                })
                .collect::<Result<_>>()?;
            save_embeddings(&e.select(&rows)?, &dir.join("embeddings.uemb"))?;
            manifest.embeddings = Some("embeddings.uemb".into());
        }
        Features::Similarity(s) => {
            save_similarity(s, &dir.join("similarity.usim"))?;
            manifest.similarity = Some("similarity.usim".into());
        }
    }
    let path = dir.join("manifest.toml");
    save_manifest(&manifest, &path)?;
    Ok(path)
}

// ---------------------------------------------------------------- fixtures

/// Synthetic instance description, optionally with calibration results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthFixture {
    pub synth: SynthConfig,
    /// Values measured when the fixture was calibrated; informational.
    #[serde(default)]
    pub observed: BTreeMap<String, f64>,
}

pub fn parse_synth_fixture(text: &str) -> Result<SynthFixture> {
    let f: SynthFixture =
        toml::from_str(text).map_err(|e| Error::Input(format!("synth fixture: {e}")))?;
    f.synth.validate()?;
    Ok(f)
}

pub fn load_synth_fixture(path: &Path) -> Result<SynthFixture> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_synth_fixture(&text)
}

// ---------------------------------------------------------------- outcome

pub const OUTCOME_FORMAT: &str = "unimatch-outcome/1";
pub const REPORT_FORMAT: &str = "unimatch-report/1";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutcomeFile {
    pub format: String,
    pub probe_ids: Vec<String>,
    pub gallery_ids: Vec<String>,
    pub outcome: MatchOutcome,
}

impl OutcomeFile {
    pub fn new(dataset: &Dataset, outcome: &MatchOutcome) -> Self {
        OutcomeFile {
            format: OUTCOME_FORMAT.into(),
            probe_ids: (0..dataset.n_probe())
                .map(|i| dataset.probe(i).image_id.clone())
                .collect(),
            gallery_ids: (0..dataset.n_gallery())
                .map(|j| dataset.gallery(j).image_id.clone())
                .collect(),
            outcome: outcome.clone(),
        }
    }

    /// Checks that the outcome addresses this dataset's probes and galleries.
    pub fn check_against(&self, dataset: &Dataset) -> Result<()> {
        let again = OutcomeFile::new(dataset, &MatchOutcome::default());
        if again.probe_ids != self.probe_ids || again.gallery_ids != self.gallery_ids {
            return Err(Error::Integrity(
                "outcome image ids do not match the dataset".into(),
            ));
        }
        Ok(())
    }
}

pub fn encode_outcome(file: &OutcomeFile) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec(file).map_err(|e| Error::Serde(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn decode_outcome(bytes: &[u8]) -> Result<OutcomeFile> {
    let file: OutcomeFile =
        serde_json::from_slice(bytes).map_err(|e| Error::Input(format!("outcome: {e}")))?;
    if file.format != OUTCOME_FORMAT {
        return Err(Error::Input(format!(
            "unknown outcome format {:?}",
            file.format
        )));
    }
    Ok(file)
}

pub fn save_outcome(file: &OutcomeFile, path: &Path) -> Result<()> {
    let f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(f);
    w.write_all(&encode_outcome(file)?)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

pub fn load_outcome(path: &Path) -> Result<OutcomeFile> {
    decode_outcome(&read_file(path)?)
}

// ---------------------------------------------------------------- report

/// Metric block of a report; ranks are percentages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    pub rank1: f64,
    pub rank5: f64,
    pub rank10: f64,
    pub rank20: f64,
    pub map: f64,
    pub p_um: f64,
}

impl MetricSummary {
    /// `None` when the report carries no CMC curve.
    pub fn from_report(r: &EvalReport) -> Option<Self> {
        let at = |k: usize| {
            r.cmc
                .get(k - 1)
                .or(r.cmc.last())
                .copied()
                .map(|v| 100.0 * v)
        };
        Some(MetricSummary {
            rank1: at(1)?,
            rank5: at(5)?,
            rank10: at(10)?,
            rank20: at(20)?,
            map: 100.0 * r.map,
            p_um: 100.0 * r.p_um,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rank1Entry {
    pub probe_id: String,
    pub gallery_id: String,
    pub gallery_identity: usize,
    pub camera_pair: (u32, u32),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format: String,
    /// Echo of the run configuration.
    pub config: BTreeMap<String, serde_json::Value>,
    pub metrics: Option<MetricSummary>,
    pub timings: BTreeMap<String, f64>,
    pub matches: Vec<Rank1Entry>,
}

impl ReportFile {
    pub fn new(
        config: BTreeMap<String, serde_json::Value>,
        report: &EvalReport,
        outcome: &MatchOutcome,
        dataset: &Dataset,
    ) -> Self {
        ReportFile {
            format: REPORT_FORMAT.into(),
            config,
            metrics: MetricSummary::from_report(report),
            timings: report.timings.clone(),
            matches: outcome
                .matches
                .iter()
                .map(|m| Rank1Entry {
                    probe_id: dataset.probe(m.probe).image_id.clone(),
                    gallery_id: dataset.gallery(m.matched_gallery).image_id.clone(),
                    gallery_identity: m.gallery_identity,
                    camera_pair: m.camera_pair,
                })
                .collect(),
        }
    }
}

pub fn encode_report(report: &ReportFile) -> Result<Vec<u8>> {
    let mut out = serde_json::to_vec_pretty(report).map_err(|e| Error::Serde(e.to_string()))?;
    out.push(b'\n');
    Ok(out)
}

pub fn decode_report(bytes: &[u8]) -> Result<ReportFile> {
    serde_json::from_slice(bytes).map_err(|e| Error::Input(format!("report: {e}")))
}

pub fn save_report(report: &ReportFile, path: &Path) -> Result<()> {
    write_file(path, &encode_report(report)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_by_one_embedding() {
        let bytes = encode_embeddings(&EmbeddingMatrix::new(1, 1, vec![0.5]).unwrap());
        assert_eq!(bytes.len(), 28);
        assert_eq!(&bytes[..4], b"UEMB");
        let m = decode_embeddings(&bytes).unwrap();
        assert_eq!(m.values(), &[0.5]);
    }

    #[test]
    fn format_errors_name_offsets() {
        let good = encode_similarity(&SimilarityMatrix::new(1, 2, vec![0.5, 0.25]).unwrap());
        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(matches!(
            decode_similarity(&bad_magic),
            Err(Error::Format { offset: 0, .. })
        ));
        let mut bad_version = good.clone();
        bad_version[4] = 2;
        assert!(matches!(
            decode_similarity(&bad_version),
            Err(Error::Format { offset: 4, .. })
        ));
        assert!(matches!(
            decode_similarity(&good[..good.len() - 1]),
            Err(Error::Format { .. })
        ));
        // embeddings magic is not accepted for similarities
        assert!(decode_embeddings(&good).is_err());
        let mut nan = good.clone();
        nan[24..28].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(
            decode_similarity(&nan),
            Err(Error::Format { offset: 24, .. })
        ));
        let mut huge = good.clone();
        huge[8..16].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(matches!(
            decode_similarity(&huge),
            Err(Error::Format { offset: 8, .. })
        ));
    }

    #[test]
    fn metadata_fixture() {
        let text = b"image_id,camera_id,split,person_id\n\
                     p0,0,probe,7\n\
                     p1,1,probe,8\n\
                     g0,2,gallery,7\n\
                     g1,3,gallery,8\n";
        let s = parse_metadata(text).unwrap();
        assert_eq!(s.len(), 4);
        assert_eq!(s[2].image_id, "g0");
        assert_eq!(s[2].camera_id, 2);
        assert_eq!(s[2].split, Split::Gallery);
        assert_eq!(s[3].identity_label, Some(8));
        assert_eq!(parse_metadata(&write_metadata(&s)).unwrap(), s);
    }

    #[test]
    fn metadata_errors() {
        assert!(parse_metadata(b"image_id,camera_id,split\n")
            .unwrap()
            .is_empty());
        let bad = b"image_id,camera_id,split\na,0,probe\nb,x,probe\n";
        assert!(matches!(
            parse_metadata(bad),
            Err(Error::Parse { line: 3, .. })
        ));
        let bad_split = b"image_id,camera_id,split\na,0,sideways\n";
        assert!(matches!(
            parse_metadata(bad_split),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_metadata(b"id,cam\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        let dup = parse_metadata(b"image_id,camera_id,split\na,0,probe\na,1,gallery\n").unwrap();
        assert!(matches!(Dataset::new(dup), Err(Error::Integrity(_))));
    }

    #[test]
    fn cosine_basics() {
        let e = EmbeddingMatrix::new(3, 2, vec![1.0, 0.0, 2.0, 0.0, 0.0, 3.0]).unwrap();
        let s = cosine_similarity_matrix(&e, &[0], &[1, 2]).unwrap();
        assert_eq!(s.values(), &[1.0, 0.0]);
        let z = EmbeddingMatrix::new(2, 2, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let err = cosine_similarity_matrix(&z, &[0], &[1]).unwrap_err();
        assert!(err.to_string().contains("row 1"));
    }

    #[test]
    fn manifest_requires_one_feature_file() {
        let m = DatasetManifest {
            version: 1,
            metadata: "m.csv".into(),
            embeddings: Some("e".into()),
            similarity: Some("s".into()),
        };
        assert!(m.validate().is_err());
    }
}
