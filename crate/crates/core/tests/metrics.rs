use proptest::prelude::*;
use unimatch::metrics::{
    cmc, evaluate, mean_average_precision, p_um, EvalProtocol, UnicityVariant,
};
use unimatch::model::{Labels, MatchOutcome, ProbeMatch};

fn outcome(rankings: Vec<Vec<u32>>) -> MatchOutcome {
    MatchOutcome {
        gallery_sets: vec![],
        matches: rankings
            .into_iter()
            .enumerate()
            .map(|(i, r)| ProbeMatch {
                probe: i,
                gallery_identity: 0,
                matched_gallery: r[0] as usize,
                camera_pair: (0, 1),
                ranking: r,
            })
            .collect(),
    }
}

/// Random labels and permuted rankings where every probe keeps a correct
/// image after same-camera exclusion.
fn arb_case() -> impl Strategy<Value = (Labels, MatchOutcome)> {
    (1usize..12, 2usize..16, 1u32..5)
        .prop_flat_map(|(n, m, ids)| {
            (
                prop::collection::vec((0..ids, 0u32..3), n),
                prop::collection::vec((0..ids, 0u32..3), m),
                prop::collection::vec(Just((0..m as u32).collect::<Vec<u32>>()).prop_shuffle(), n),
            )
        })
        .prop_filter_map("probe without a correct image", |(p, g, rankings)| {
            let labels = Labels {
                probe: p.iter().map(|x| x.0).collect(),
                probe_cameras: p.iter().map(|x| x.1).collect(),
                gallery: g.iter().map(|x| x.0).collect(),
                gallery_cameras: g.iter().map(|x| x.1).collect(),
            };
            let ok = (0..p.len()).all(|i| {
                (0..g.len()).any(|j| {
                    labels.gallery[j] == labels.probe[i]
                        && labels.gallery_cameras[j] != labels.probe_cameras[i]
                })
            });
            ok.then(|| (labels, outcome(rankings)))
        })
}

/// Ranking with excluded entries removed, as relevance flags.
fn flags(labels: &Labels, probe: usize, ranking: &[u32]) -> Vec<bool> {
    ranking
        .iter()
        .map(|&g| g as usize)
        .filter(|&g| {
            !(labels.gallery[g] == labels.probe[probe]
                && labels.gallery_cameras[g] == labels.probe_cameras[probe])
        })
        .map(|g| labels.gallery[g] == labels.probe[probe])
        .collect()
}

fn ap_by_definition(rel: &[bool]) -> f64 {
    let hits: Vec<usize> = (0..rel.len()).filter(|&k| rel[k]).collect();
    let precisions: Vec<f64> = hits
        .iter()
        .map(|&k| rel[..=k].iter().filter(|&&r| r).count() as f64 / (k + 1) as f64)
        .collect();
    precisions.iter().sum::<f64>() / precisions.len() as f64
}

#[test]
fn perfect_ranking_scores_one() {
    let labels = Labels {
        probe: vec![0, 1, 1],
        probe_cameras: vec![0, 0, 0],
        gallery: vec![1, 0, 1, 0],
        gallery_cameras: vec![1, 1, 1, 1],
    };
    let o = outcome(vec![vec![1, 3, 0, 2], vec![0, 2, 1, 3], vec![2, 0, 3, 1]]);
    let r = evaluate(
        &o,
        &labels,
        &EvalProtocol::default(),
        UnicityVariant::Symmetric,
    )
    .unwrap();
    assert_eq!(r.cmc[0], 1.0);
    assert_eq!(r.map, 1.0);
    assert_eq!(r.p_um, 1.0);
}

#[test]
fn misaligned_outcome_is_rejected() {
    let labels = Labels {
        probe: vec![0],
        probe_cameras: vec![0],
        gallery: vec![0],
        gallery_cameras: vec![1],
    };
    let o = outcome(vec![vec![0], vec![0]]);
    assert!(cmc(&o, &labels, &EvalProtocol::default()).is_err());
    let o = outcome(vec![vec![3]]);
    assert!(p_um(&o, &labels, UnicityVariant::Symmetric).is_err());
}

proptest! {
    #[test]
    fn cmc_matches_first_hit((labels, o) in arb_case(), max_rank in 1usize..20) {
        let protocol = EvalProtocol { exclude_same_camera_same_id: true, max_rank };
        let got = cmc(&o, &labels, &protocol).unwrap();
        prop_assert_eq!(got.len(), max_rank);
        for k in 1..=max_rank {
            let hits = o.matches.iter()
                .filter(|m| flags(&labels, m.probe, &m.ranking).iter().take(k).any(|&r| r))
                .count();
            prop_assert_eq!(got[k - 1], hits as f64 / o.matches.len() as f64);
        }
        prop_assert!(got.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn map_matches_definition((labels, o) in arb_case()) {
        let got = mean_average_precision(&o, &labels, &EvalProtocol::default()).unwrap();
        let want = o.matches.iter()
            .map(|m| ap_by_definition(&flags(&labels, m.probe, &m.ranking)))
            .sum::<f64>() / o.matches.len() as f64;
        prop_assert!((got - want).abs() < 1e-12);
        prop_assert!((0.0..=1.0).contains(&got));
    }

    #[test]
    fn p_um_matches_pairwise_check((labels, o) in arb_case()) {
        let claim = |i: usize| labels.gallery[o.matches[i].ranking[0] as usize];
        let id = |i: usize| labels.probe[i];
        let n = o.matches.len();
        let gallery_clean = |i: usize| (0..n).all(|j| id(j) == id(i) || claim(j) != claim(i));
        let probe_clean = |i: usize| (0..n).all(|j| id(j) != id(i) || claim(j) == claim(i));
        let sym = (0..n).filter(|&i| gallery_clean(i) && probe_clean(i)).count() as f64 / n as f64;
        let gal = (0..n).filter(|&i| gallery_clean(i)).count() as f64 / n as f64;
        prop_assert_eq!(p_um(&o, &labels, UnicityVariant::Symmetric).unwrap(), sym);
        prop_assert_eq!(p_um(&o, &labels, UnicityVariant::GalleryOnly).unwrap(), gal);
    }
}
