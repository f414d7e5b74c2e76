//! Renders a moving bar twice with independent background-activity noise
//! and writes both samplings plus a manifest.
//!
//! cargo run --release --example simulate_dual -- [out_dir]

use std::path::PathBuf;

use evdn::evio::{write_events, DatasetManifest, Format, SequenceEntry, Split};
use evdn::simulator::{dual_sample, MovingBar, NoiseParams, PixelModelParams, Scene, SceneKind, ThresholdLevel};
use evdn::{Geometry, Label};

fn main() -> evdn::Result<()> {
    let out: PathBuf = std::env::args().nth(1).unwrap_or_else(|| "sim_out".into()).into();
    std::fs::create_dir_all(&out).map_err(|e| evdn::Error::Io { path: out.clone(), source: e })?;

    let geometry = Geometry::new(128, 128);
    let scene = Scene::new(SceneKind::MovingBar(MovingBar::default()), geometry, 1_000_000)?;
    let level = ThresholdLevel::Minus30;
    let pix = PixelModelParams {
        contrast_threshold: level.contrast_threshold(),
        ..PixelModelParams::default()
    };
    let noise = NoiseParams::uniform(level.noise_rate(), 0);
    let dual = dual_sample(&scene, &pix, &noise, 42, 43, 0.0)?;

    for (name, s) in [("s1", &dual.s1), ("s2", &dual.s2)] {
        println!(
            "{name}: {} events, {} signal, {} noise",
            s.len(),
            s.count(Label::Signal),
            s.count(Label::Noise)
        );
        write_events(s, out.join(format!("{name}.evd")), Format::Binary)?;
    }

    let mut manifest = DatasetManifest::new(geometry, 10_000);
    manifest.sequences.push(SequenceEntry {
        name: "bar".into(),
        raw: vec!["s1.evd".into(), "s2.evd".into()],
        gt: Some("s1.evd".into()),
        split: Split::Train,
    });
    manifest.save(out.join("manifest.json"))?;
    println!("wrote {}", out.display());
    Ok(())
}
