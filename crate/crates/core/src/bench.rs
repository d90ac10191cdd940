//! Acceleration ladder: the same instance under progressively more
//! accelerations, timed and scored.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::metrics::{evaluate, EvalProtocol, UnicityVariant};
use crate::model::{Dataset, Features, MatchOutcome};
use crate::unicity::{run_pipeline, PipelineConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub label: String,
    pub config: PipelineConfig,
    /// Fastest matching time over the repeats, similarity computation excluded.
    pub seconds: f64,
    /// Rank-1 in percent; `None` without ground truth.
    pub rank1: Option<f64>,
}

/// No acceleration, then connectivity, sparse assignment and workers added
/// one at a time on top of `base`.
pub fn ladder(base: &PipelineConfig, workers: usize) -> Vec<(String, PipelineConfig)> {
    let none = PipelineConfig {
        use_connectivity: false,
        use_sparse: false,
        workers: 1,
        ..base.clone()
    };
    let connectivity = PipelineConfig {
        use_connectivity: true,
        ..none.clone()
    };
    let sparse = PipelineConfig {
        use_sparse: true,
        ..connectivity.clone()
    };
    let parallel = PipelineConfig {
        workers: workers.max(1),
        ..sparse.clone()
    };
    vec![
        ("none".into(), none),
        ("+connectivity".into(), connectivity),
        ("+sparse".into(), sparse),
        (format!("+parallel({})", workers.max(1)), parallel),
    ]
}

/// Matching time of one run, with the similarity stage taken out.
pub fn matching_seconds(timings: &crate::model::Timings) -> f64 {
    let total = timings.get("total").copied().unwrap_or(0.0);
    let similarity = timings.get("similarity").copied().unwrap_or(0.0);
    (total - similarity).max(0.0)
}

/// Runs every row `repeats` times, interleaving rows between repeats, and
/// keeps the fastest time per row.
pub fn run_rows(
    dataset: &Dataset,
    features: &Features,
    rows: &[(String, PipelineConfig)],
    repeats: usize,
) -> Result<Vec<(BenchRow, MatchOutcome)>> {
    let labels = dataset.labels();
    let mut best = vec![f64::INFINITY; rows.len()];
    let mut outcomes: Vec<Option<MatchOutcome>> = vec![None; rows.len()];
    for _ in 0..repeats.max(1) {
        for (k, (_, config)) in rows.iter().enumerate() {
            let run = run_pipeline(dataset, features, config)?;
            best[k] = best[k].min(matching_seconds(&run.timings));
            outcomes[k].get_or_insert(run.outcome);
        }
    }
    rows.iter()
        .zip(best)
        .zip(outcomes)
        .map(|(((label, config), seconds), outcome)| {
            let outcome = outcome.expect("at least one repeat");
            let rank1 = match &labels {
                Some(l) => Some(
                    100.0
                        * evaluate(
                            &outcome,
                            l,
                            &EvalProtocol::default(),
                            UnicityVariant::Symmetric,
                        )?
                        .cmc[0],
                ),
                None => None,
            };
            Ok((
                BenchRow {
                    label: label.clone(),
                    config: config.clone(),
                    seconds,
                    rank1,
                },
                outcome,
            ))
        })
        .collect()
}

pub fn bench(
    dataset: &Dataset,
    features: &Features,
    base: &PipelineConfig,
    workers: usize,
    repeats: usize,
) -> Result<Vec<BenchRow>> {
    Ok(
        run_rows(dataset, features, &ladder(base, workers), repeats)?
            .into_iter()
            .map(|(row, _)| row)
            .collect(),
    )
}

/// Plain-text table, one line per row.
pub fn format_table(rows: &[BenchRow]) -> String {
    let mut out = format!(
        "{:<16} {:>10} {:>8}\n",
        "configuration", "time (s)", "rank-1"
    );
    for r in rows {
        let rank1 = r.rank1.map_or("-".to_string(), |v| format!("{v:.2}"));
        out.push_str(&format!(
            "{:<16} {:>10.3} {:>8}\n",
            r.label, r.seconds, rank1
        ));
    }
    out
}
