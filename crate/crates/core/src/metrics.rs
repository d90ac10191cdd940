//! CMC, mean average precision and the unicity measure P_um.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{EvalReport, Labels, MatchOutcome};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalProtocol {
    /// Skip gallery images sharing both camera and identity with the probe.
    pub exclude_same_camera_same_id: bool,
    pub max_rank: usize,
}

impl Default for EvalProtocol {
    fn default() -> Self {
        EvalProtocol {
            exclude_same_camera_same_id: true,
            max_rank: 50,
        }
    }
}

/// Which conflicts remove a probe from N_um.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnicityVariant {
    /// Gallery-side and probe-side conflicts.
    #[default]
    Symmetric,
    /// Only different probe identities sharing a rank-1 gallery identity.
    GalleryOnly,
}

fn check_shapes(outcome: &MatchOutcome, labels: &Labels) -> Result<()> {
    if outcome.matches.len() != labels.probe.len() {
        return Err(Error::Dimension(format!(
            "{} matches for {} labeled probes",
            outcome.matches.len(),
            labels.probe.len()
        )));
    }
    for m in &outcome.matches {
        if m.probe >= labels.probe.len() {
            return Err(Error::Dimension(format!("probe {} out of range", m.probe)));
        }
        if let Some(&g) = m
            .ranking
            .iter()
            .find(|&&g| g as usize >= labels.gallery.len())
        {
            return Err(Error::Dimension(format!(
                "probe {} ranks gallery {g} of {}",
                m.probe,
                labels.gallery.len()
            )));
        }
    }
    Ok(())
}

/// Relevance flags for one probe's ranking after exclusion.
fn relevance(labels: &Labels, protocol: &EvalProtocol, probe: usize, ranking: &[u32]) -> Vec<bool> {
    let id = labels.probe[probe];
    let cam = labels.probe_cameras[probe];
    ranking
        .iter()
        .map(|&g| g as usize)
        .filter(|&g| {
            !(protocol.exclude_same_camera_same_id
                && labels.gallery[g] == id
                && labels.gallery_cameras[g] == cam)
        })
        .map(|g| labels.gallery[g] == id)
        .collect()
}

fn relevance_all(
    outcome: &MatchOutcome,
    labels: &Labels,
    protocol: &EvalProtocol,
) -> Result<Vec<Vec<bool>>> {
    if protocol.max_rank == 0 {
        return Err(Error::Parameter("max_rank must be at least 1".into()));
    }
    check_shapes(outcome, labels)?;
    outcome
        .matches
        .iter()
        .map(|m| {
            let rel = relevance(labels, protocol, m.probe, &m.ranking);
            if rel.iter().any(|&r| r) {
                Ok(rel)
            } else {
                Err(Error::Protocol(format!(
                    "probe {} has no correct gallery image in its ranking",
                    m.probe
                )))
            }
        })
        .collect()
}

/// `cmc[k]` is the fraction of probes whose first correct image is within rank `k + 1`.
pub fn cmc(outcome: &MatchOutcome, labels: &Labels, protocol: &EvalProtocol) -> Result<Vec<f64>> {
    let rel = relevance_all(outcome, labels, protocol)?;
    Ok(cmc_from_relevance(&rel, protocol.max_rank))
}

fn cmc_from_relevance(rel: &[Vec<bool>], max_rank: usize) -> Vec<f64> {
    let mut hits = vec![0usize; max_rank];
    for r in rel {
        let first = r.iter().position(|&x| x).expect("checked");
        if first < max_rank {
            hits[first] += 1;
        }
    }
    let n = rel.len().max(1) as f64;
    let mut acc = 0;
    hits.iter()
        .map(|&h| {
            acc += h;
            acc as f64 / n
        })
        .collect()
}

fn average_precision(rel: &[bool]) -> f64 {
    let mut found = 0usize;
    let mut sum = 0.0;
    for (k, &r) in rel.iter().enumerate() {
        if r {
            found += 1;
            sum += found as f64 / (k + 1) as f64;
        }
    }
    sum / found as f64
}

pub fn mean_average_precision(
    outcome: &MatchOutcome,
    labels: &Labels,
    protocol: &EvalProtocol,
) -> Result<f64> {
    let rel = relevance_all(outcome, labels, protocol)?;
    Ok(map_from_relevance(&rel))
}

fn map_from_relevance(rel: &[Vec<bool>]) -> f64 {
    if rel.is_empty() {
        return 0.0;
    }
    rel.iter().map(|r| average_precision(r)).sum::<f64>() / rel.len() as f64
}

/// Fraction of probe images whose rank-1 match is free of ambiguity.
pub fn p_um(outcome: &MatchOutcome, labels: &Labels, variant: UnicityVariant) -> Result<f64> {
    check_shapes(outcome, labels)?;
    let n = outcome.matches.len();
    if n == 0 {
        return Ok(0.0);
    }
    // ground-truth identity of the rank-1 gallery image per probe
    let mut claimed = vec![0u32; labels.probe.len()];
    for m in &outcome.matches {
        let top = *m
            .ranking
            .first()
            .ok_or_else(|| Error::Input(format!("probe {} has an empty ranking", m.probe)))?;
        claimed[m.probe] = labels.gallery[top as usize];
    }
    // gallery identity -> probe identities claiming it
    let mut claimants: HashMap<u32, Vec<u32>> = HashMap::new();
    // probe identity -> gallery identities it claims
    let mut claims: HashMap<u32, Vec<u32>> = HashMap::new();
    for m in &outcome.matches {
        let (p, g) = (labels.probe[m.probe], claimed[m.probe]);
        let c = claimants.entry(g).or_default();
        if !c.contains(&p) {
            c.push(p);
        }
        let c = claims.entry(p).or_default();
        if !c.contains(&g) {
            c.push(g);
        }
    }
    let good = outcome
        .matches
        .iter()
        .filter(|m| {
            let (p, g) = (labels.probe[m.probe], claimed[m.probe]);
            let gallery_ok = claimants[&g].len() == 1;
            let probe_ok = variant == UnicityVariant::GalleryOnly || claims[&p].len() == 1;
            gallery_ok && probe_ok
        })
        .count();
    Ok(good as f64 / n as f64)
}

/// All three metrics; timings are left empty.
pub fn evaluate(
    outcome: &MatchOutcome,
    labels: &Labels,
    protocol: &EvalProtocol,
    variant: UnicityVariant,
) -> Result<EvalReport> {
    let rel = relevance_all(outcome, labels, protocol)?;
    Ok(EvalReport {
        cmc: cmc_from_relevance(&rel, protocol.max_rank),
        map: map_from_relevance(&rel),
        p_um: p_um(outcome, labels, variant)?,
        timings: Default::default(),
    })
}
