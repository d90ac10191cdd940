//! Sweeps synthetic noise levels and prints greedy versus unicity Rank-1.
//!
//! `cargo run --release --example calibrate -- one-shot|multi-shot`

use std::time::Instant;

use unimatch::metrics::{evaluate, EvalProtocol, UnicityVariant};
use unimatch::model::Features;
use unimatch::synth::{generate, SynthConfig};
use unimatch::unicity::{run_pipeline, PipelineConfig};

fn rank1(s: &unimatch::synth::SynthDataset, config: &PipelineConfig) -> (f64, f64) {
    let features = Features::Embeddings(s.embeddings.clone());
    let t = Instant::now();
    let run = run_pipeline(&s.dataset, &features, config).unwrap();
    let secs = t.elapsed().as_secs_f64();
    let protocol = EvalProtocol {
        exclude_same_camera_same_id: false,
        ..Default::default()
    };
    let r = evaluate(
        &run.outcome,
        &s.labels(),
        &protocol,
        UnicityVariant::Symmetric,
    )
    .unwrap();
    (100.0 * r.cmc[0], secs)
}

fn one_shot(noises: &[f64]) {
    for &noise in noises {
        let (mut g, mut u, mut wins) = (0.0, 0.0, 0);
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for seed in 0..50 {
            let s = generate(&SynthConfig::one_shot(316, noise, seed)).unwrap();
            let a = rank1(&s, &PipelineConfig::greedy()).0;
            let b = rank1(&s, &PipelineConfig::one_shot()).0;
            g += a;
            lo = lo.min(a);
            hi = hi.max(a);
            u += b;
            wins += (b > a) as usize;
        }
        println!(
            "noise {noise:.3}: greedy {:.2} [{lo:.1}, {hi:.1}] unicity {:.2} wins {wins}/50",
            g / 50.0,
            u / 50.0
        );
    }
}

fn multi_shot(offsets: &[f64], noises: &[f64], ids: usize, images: (usize, usize)) {
    for &offset in offsets {
        for &noise in noises {
            let cfg = SynthConfig {
                n_identities: ids,
                n_cameras: 4,
                images_per_identity_per_camera: images,
                dim: 64,
                camera_offset_scale: offset,
                noise_scale: noise,
                probe_cameras: vec![0, 1],
                gallery_cameras: vec![2, 3],
                seed: 1,
            };
            let s = generate(&cfg).unwrap();
            let (g, tg) = rank1(&s, &PipelineConfig::greedy());
            let oracle = PipelineConfig {
                oracle_merge: true,
                ..Default::default()
            };
            let (o, to) = rank1(&s, &oracle);
            let (c, tc) = rank1(&s, &PipelineConfig::default());
            println!(
                "offset {offset:.2} noise {noise:.2} n={} : greedy {g:.2} ({tg:.2}s) oracle {o:.2} ({to:.2}s) cluster {c:.2} ({tc:.2}s)",
                s.dataset.len()
            );
        }
    }
}

fn main() {
    let which = std::env::args().nth(1).unwrap_or_default();
    match which.as_str() {
        "one-shot" => one_shot(&[1.325, 1.33, 1.335]),
        "multi-shot" => multi_shot(&[0.5], &[0.8, 0.9], 500, (2, 6)),
        "band" => multi_shot(&[0.5], &[1.2, 1.4, 1.6, 1.8, 2.0], 100, (2, 6)),
        _ => eprintln!("usage: calibrate one-shot|multi-shot|band"),
    }
}
