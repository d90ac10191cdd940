//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 internal error.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use crate::bench;
use crate::error::Error;
use crate::io::{self, OutcomeFile, ReportFile};
use crate::metrics::{evaluate, EvalProtocol, UnicityVariant};
use crate::model::{Dataset, EvalReport, Features, MatchOutcome, Split, Timings};
use crate::synth::{self, SynthConfig};
use crate::unicity::{self, CameraCount, Mode, PipelineConfig};

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "unimatch",
    version,
    about = "Unicity-constrained probe/gallery identity matching"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Match a dataset and write outcome.json and report.json.
    Match(MatchArgs),
    /// Print CMC, mAP and P_um of a saved outcome.
    Eval(EvalArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
    /// Time the acceleration ladder on one instance.
    Bench(BenchArgs),
    /// Match new probes against an already matched dataset.
    AddProbes(AddProbesArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    OneShot,
    MultiShot,
}

#[derive(Clone, Debug, Args)]
pub struct PipelineArgs {
    #[arg(long, value_enum, default_value = "multi-shot")]
    pub mode: ModeArg,
    /// Candidates kept per row by the sparse assignment (k_a).
    #[arg(long = "sparse-k", default_value_t = 60)]
    pub sparse_k: usize,
    /// Neighbours per image in the clustering connectivity graph (k_c).
    #[arg(long = "connectivity-k", default_value_t = 60)]
    pub connectivity_k: usize,
    #[arg(long)]
    pub no_sparse: bool,
    #[arg(long)]
    pub no_connectivity: bool,
    /// Worker threads; 0 or 1 runs sequentially.
    #[arg(long, default_value_t = 1)]
    pub parallel: usize,
    /// Merge same-camera images by their ground-truth labels.
    #[arg(long)]
    pub oracle_merge: bool,
    /// Expected images per identity per camera, used for the cluster-count range.
    #[arg(long, default_value_t = 4)]
    pub images_per_identity: usize,
    /// Fixed cluster count for one camera, as `probe:CAM=N` or `gallery:CAM=N`.
    #[arg(long = "cluster-count", value_parser = parse_camera_count)]
    pub cluster_count: Vec<CameraCount>,
    /// Recorded in the report; matching itself draws no random numbers.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl PipelineArgs {
    pub fn config(&self) -> PipelineConfig {
        PipelineConfig {
            mode: match self.mode {
                ModeArg::OneShot => Mode::OneShot,
                ModeArg::MultiShot => Mode::MultiShot,
            },
            k_c: self.connectivity_k,
            k_a: self.sparse_k,
            use_sparse: !self.no_sparse,
            use_connectivity: !self.no_connectivity,
            workers: self.parallel,
            cluster_count_override: self.cluster_count.clone(),
            images_per_identity_hint: self.images_per_identity,
            oracle_merge: self.oracle_merge,
            ..Default::default()
        }
    }
}

fn parse_camera_count(s: &str) -> Result<CameraCount, String> {
    let err = || format!("expected probe:CAM=N or gallery:CAM=N, got {s:?}");
    let (split, rest) = s.split_once(':').ok_or_else(err)?;
    let (camera, count) = rest.split_once('=').ok_or_else(err)?;
    Ok(CameraCount {
        split: split.parse::<Split>().map_err(|_| err())?,
        camera_id: camera.trim().parse().map_err(|_| err())?,
        n_clusters: count.trim().parse().map_err(|_| err())?,
    })
}

#[derive(Debug, Args)]
pub struct MatchArgs {
    #[arg(long, env = "UNIMATCH_MANIFEST")]
    pub manifest: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, env = "UNIMATCH_OUT", default_value = "unimatch-out")]
    pub out: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum UnicityArg {
    Symmetric,
    GalleryOnly,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long, env = "UNIMATCH_MANIFEST")]
    pub manifest: PathBuf,
    #[arg(long)]
    pub outcome: PathBuf,
    #[arg(long, default_value_t = 50)]
    pub max_rank: usize,
    /// Keep gallery images sharing camera and identity with the probe.
    #[arg(long)]
    pub keep_same_camera: bool,
    #[arg(long, value_enum, default_value = "symmetric")]
    pub unicity: UnicityArg,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// TOML file with a `[synth]` table; flags below override its values.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[arg(long)]
    pub identities: Option<usize>,
    #[arg(long)]
    pub cameras: Option<u32>,
    /// Images per identity per camera, `N` or `MIN-MAX`.
    #[arg(long, value_parser = parse_range)]
    pub images: Option<(usize, usize)>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub offset: Option<f64>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    pub probe_cameras: Option<Vec<u32>>,
    #[arg(long, value_delimiter = ',')]
    pub gallery_cameras: Option<Vec<u32>>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write similarities instead of embeddings.
    #[arg(long)]
    pub similarity: bool,
    #[arg(long, env = "UNIMATCH_OUT", default_value = "unimatch-out")]
    pub out: PathBuf,
}

fn parse_range(s: &str) -> Result<(usize, usize), String> {
    let parse = |v: &str| {
        v.trim()
            .parse::<usize>()
            .map_err(|_| format!("expected N or MIN-MAX, got {s:?}"))
    };
    match s.split_once('-') {
        Some((lo, hi)) => Ok((parse(lo)?, parse(hi)?)),
        None => {
            let n = parse(s)?;
            Ok((n, n))
        }
    }
}

impl SynthArgs {
    pub fn config(&self) -> Result<SynthConfig, Error> {
        let mut c = match &self.fixture {
            Some(path) => io::load_synth_fixture(path)?.synth,
            None => SynthConfig {
                n_identities: 100,
                n_cameras: 4,
                images_per_identity_per_camera: (2, 6),
                dim: 64,
                camera_offset_scale: 0.5,
                noise_scale: 1.0,
                probe_cameras: vec![0, 1],
                gallery_cameras: vec![2, 3],
                seed: 0,
            },
        };
        if let Some(v) = self.identities {
            c.n_identities = v;
        }
        if let Some(v) = self.cameras {
            c.n_cameras = v;
        }
        if let Some(v) = self.images {
            c.images_per_identity_per_camera = v;
        }
        if let Some(v) = self.dim {
            c.dim = v;
        }
        if let Some(v) = self.offset {
            c.camera_offset_scale = v;
        }
        if let Some(v) = self.noise {
            c.noise_scale = v;
        }
        if let Some(v) = &self.probe_cameras {
            c.probe_cameras = v.clone();
        }
        if let Some(v) = &self.gallery_cameras {
            c.gallery_cameras = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, conflicts_with = "fixture", required_unless_present = "fixture")]
    pub manifest: Option<PathBuf>,
    /// Synthetic fixture to generate instead of loading a manifest.
    #[arg(long)]
    pub fixture: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    /// Workers for the parallel row.
    #[arg(long, default_value_t = 4)]
    pub workers: usize,
    #[arg(long, default_value_t = 3)]
    pub repeats: usize,
    /// Also write the rows as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AddProbesArgs {
    /// Dataset the existing outcome was computed on.
    #[arg(long, env = "UNIMATCH_MANIFEST")]
    pub manifest: PathBuf,
    #[arg(long)]
    pub outcome: PathBuf,
    /// Manifest of the new probe samples.
    #[arg(long = "new")]
    pub new_manifest: PathBuf,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
    #[arg(long, env = "UNIMATCH_OUT", default_value = "unimatch-out")]
    pub out: PathBuf,
}

/// Failure of a subcommand, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Serde(_) => EXIT_INTERNAL,
            _ => EXIT_DATA,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

/// Parses `args` (program name first), runs the command and returns the
/// exit code. Results go to stdout, diagnostics to stderr.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

pub fn execute(command: &Command) -> CliResult {
    match command {
        Command::Match(a) => cmd_match(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Synth(a) => cmd_synth(a),
        Command::Bench(a) => cmd_bench(a),
        Command::AddProbes(a) => cmd_add_probes(a),
    }
}

fn load(manifest: &Path) -> CliResult<(Dataset, Features)> {
    Ok(io::load_dataset(&io::load_manifest(manifest)?)?)
}

fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| Failure {
        code: EXIT_DATA,
        message: format!("cannot create {}: {e}", dir.display()),
    })
}

fn config_echo(
    command: &str,
    config: &PipelineConfig,
    seed: u64,
    inputs: &[(&str, &Path)],
) -> CliResult<BTreeMap<String, Value>> {
    let mut echo = BTreeMap::new();
    echo.insert("command".into(), json!(command));
    echo.insert("seed".into(), json!(seed));
    let pipeline =
        serde_json::to_value(config).map_err(|e| Failure::from(Error::Serde(e.to_string())))?;
    echo.insert("pipeline".into(), pipeline);
    for (k, p) in inputs {
        echo.insert((*k).into(), json!(p.display().to_string()));
    }
    Ok(echo)
}

/// Metrics when the dataset is labeled, else an empty report.
fn score(dataset: &Dataset, outcome: &MatchOutcome, timings: &Timings) -> CliResult<EvalReport> {
    let mut report = match dataset.labels() {
        Some(labels) => evaluate(
            outcome,
            &labels,
            &EvalProtocol::default(),
            UnicityVariant::Symmetric,
        )?,
        None => EvalReport::default(),
    };
    report.timings = timings.clone();
    Ok(report)
}

fn write_results(
    dir: &Path,
    dataset: &Dataset,
    outcome: &MatchOutcome,
    report: &EvalReport,
    echo: BTreeMap<String, Value>,
) -> CliResult {
    create_dir(dir)?;
    io::save_outcome(
        &OutcomeFile::new(dataset, outcome),
        &dir.join("outcome.json"),
    )?;
    io::save_report(
        &ReportFile::new(echo, report, outcome, dataset),
        &dir.join("report.json"),
    )?;
    Ok(())
}

fn print_summary(report: &EvalReport) {
    match io::MetricSummary::from_report(report) {
        Some(m) => println!(
            "rank-1 {:.2}  rank-5 {:.2}  rank-10 {:.2}  rank-20 {:.2}  mAP {:.2}  P_um {:.2}",
            m.rank1, m.rank5, m.rank10, m.rank20, m.map, m.p_um
        ),
        None => println!("no ground-truth labels; metrics skipped"),
    }
}

fn cmd_match(a: &MatchArgs) -> CliResult {
    let (dataset, features) = load(&a.manifest)?;
    let config = a.pipeline.config();
    let run = unicity::run_pipeline(&dataset, &features, &config)?;
    let report = score(&dataset, &run.outcome, &run.timings)?;
    let echo = config_echo(
        "match",
        &config,
        a.pipeline.seed,
        &[("manifest", &a.manifest)],
    )?;
    write_results(&a.out, &dataset, &run.outcome, &report, echo)?;
    print_summary(&report);
    println!("wrote {}", a.out.display());
    Ok(())
}

fn cmd_eval(a: &EvalArgs) -> CliResult {
    let (dataset, _) = load(&a.manifest)?;
    let file = io::load_outcome(&a.outcome)?;
    file.check_against(&dataset)?;
    let labels = dataset.labels().ok_or_else(|| {
        Failure::from(Error::Input(
            "dataset has no ground-truth person_id labels".into(),
        ))
    })?;
    let protocol = EvalProtocol {
        exclude_same_camera_same_id: !a.keep_same_camera,
        max_rank: a.max_rank,
    };
    let variant = match a.unicity {
        UnicityArg::Symmetric => UnicityVariant::Symmetric,
        UnicityArg::GalleryOnly => UnicityVariant::GalleryOnly,
    };
    let r = evaluate(&file.outcome, &labels, &protocol, variant)?;
    println!("{:<8} {:>7}", "metric", "value");
    for k in [1, 5, 10, 20] {
        if let Some(v) = r.rank(k) {
            println!("{:<8} {:>7.2}", format!("rank-{k}"), 100.0 * v);
        }
    }
    println!("{:<8} {:>7.2}", "mAP", 100.0 * r.map);
    println!("{:<8} {:>7.2}", "P_um", 100.0 * r.p_um);
    Ok(())
}

fn cmd_synth(a: &SynthArgs) -> CliResult {
    let config = a.config()?;
    let s = synth::generate(&config)?;
    let features = if a.similarity {
        let rows = |split| {
            (0..s.dataset.split_positions(split).len())
                .map(|p| {
                    s.dataset
                        .by_split(split, p)
                        .embedding_index
                        .expect("synthetic")
                })
                .collect::<Vec<_>>()
        };
        Features::Similarity(io::cosine_similarity_matrix(
            &s.embeddings,
            &rows(Split::Probe),
            &rows(Split::Gallery),
        )?)
    } else {
        Features::Embeddings(s.embeddings.clone())
    };
    let manifest = io::save_dataset(&s.dataset, &features, &a.out)?;
    println!(
        "{} images ({} probe, {} gallery) -> {}",
        s.dataset.len(),
        s.dataset.n_probe(),
        s.dataset.n_gallery(),
        manifest.display()
    );
    Ok(())
}

fn cmd_bench(a: &BenchArgs) -> CliResult {
    let (dataset, features) = match (&a.manifest, &a.fixture) {
        (Some(m), _) => load(m)?,
        (None, Some(f)) => {
            let s = synth::generate(&io::load_synth_fixture(f)?.synth)?;
            (s.dataset, Features::Embeddings(s.embeddings))
        }
        (None, None) => unreachable!("clap requires one input"),
    };
    let rows = bench::bench(
        &dataset,
        &features,
        &a.pipeline.config(),
        a.workers,
        a.repeats,
    )?;
    print!("{}", bench::format_table(&rows));
    if let Some(path) = &a.out {
        let bytes = serde_json::to_vec_pretty(&rows)
            .map_err(|e| Failure::from(Error::Serde(e.to_string())))?;
        std::fs::write(path, bytes).map_err(|e| {
            Failure::from(Error::Io {
                path: path.clone(),
                source: e,
            })
        })?;
    }
    Ok(())
}

fn cmd_add_probes(a: &AddProbesArgs) -> CliResult {
    let (dataset, features) = load(&a.manifest)?;
    let base = io::load_outcome(&a.outcome)?;
    base.check_against(&dataset)?;
    let (new_probes, new_features) = io::load_increment(&io::load_manifest(&a.new_manifest)?)?;
    let config = a.pipeline.config();
    let inc = unicity::add_probes(
        &dataset,
        &features,
        &base.outcome,
        new_probes,
        &new_features,
        &config,
    )?;
    let report = score(&inc.dataset, &inc.outcome, &inc.timings)?;
    let echo = config_echo(
        "add-probes",
        &config,
        a.pipeline.seed,
        &[
            ("manifest", &a.manifest),
            ("outcome", &a.outcome),
            ("new", &a.new_manifest),
        ],
    )?;
    write_results(&a.out, &inc.dataset, &inc.outcome, &report, echo)?;
    let merged = io::save_dataset(&inc.dataset, &inc.features, &a.out.join("dataset"))?;
    print_summary(&report);
    println!(
        "wrote {} (merged dataset {})",
        a.out.display(),
        merged.display()
    );
    Ok(())
}
