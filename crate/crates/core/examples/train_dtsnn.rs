//! Trains the spiking denoiser on DED ground truth from a simulated dual
//! recording, in dynamic- and fixed-threshold mode, and compares both with
//! the classical filters on a held-out recording.
//!
//! cargo run --release --example train_dtsnn -- [iterations]

use std::time::Instant;

use evdn::ded::{ded_pipeline, DedParams};
use evdn::dtsnn::{denoise_stream, event_frames, fit, make_samples, op_count, save_checkpoint, Network, SampleConfig, ThresholdMode, TrainConfig};
use evdn::filters::Filter;
use evdn::metrics::denoise_accuracy;
use evdn::simulator::{dual_sample, MovingBar, NoiseParams, PixelModelParams, Scene, SceneKind};
use evdn::Geometry;

fn main() -> evdn::Result<()> {
    let iterations = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(200);
    let g = Geometry::new(64, 64);
    let bar = MovingBar {
        width: 4.0,
        length: 24.0,
        velocity: 80.0,
        ..MovingBar::default()
    };
    let record = |seconds: u64, seed: u64| -> evdn::Result<_> {
        let scene = Scene::new(SceneKind::MovingBar(bar.clone()), g, seconds * 1_000_000)?;
        dual_sample(&scene, &PixelModelParams::default(), &NoiseParams::uniform(10.0, seed), 2 * seed + 1, 2 * seed + 2, 0.0)
    };
    let train = record(10, 1)?;
    let test = record(3, 2)?;

    let gt = ded_pipeline(&train, &DedParams::default())?;
    let samples = make_samples(train.s1.stream(), &gt, &SampleConfig::default())?;
    println!("{} training samples", samples.len());

    for f in Filter::defaults() {
        let acc = denoise_accuracy(&f.apply(test.s1.stream())?, &test.s1)?;
        println!("{:<12} DA {:.4}", f.name(), acc.da);
    }

    let cfg = TrainConfig {
        iterations,
        ..TrainConfig::default()
    };
    for mode in [ThresholdMode::Dynamic, ThresholdMode::Fixed(0.5)] {
        let mut net = Network::new(mode, 5);
        let started = Instant::now();
        let history = fit(&mut net, &samples, &cfg, |_, _| {})?;
        let pred = denoise_stream(&net, test.s1.stream(), 10_000, cfg.time_steps)?;
        let acc = denoise_accuracy(&pred, &test.s1)?;
        let frames = event_frames(test.s1.stream(), 10_000)?;
        let ops = op_count(&net, &frames[..cfg.time_steps])?;
        println!(
            "{mode:?}: loss {:.4} -> {:.4} in {:.1?}; test DA {:.4}; ops snn {} ann {} ({:.1}x)",
            history[0].total,
            history.last().unwrap().total,
            started.elapsed(),
            acc.da,
            ops.snn_ops,
            ops.ann_macs,
            ops.ratio
        );
        if mode == ThresholdMode::Dynamic {
            save_checkpoint(&net, std::env::temp_dir().join("evdn_dt.dtsn"))?;
        }
    }
    Ok(())
}
