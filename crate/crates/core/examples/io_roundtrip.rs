//! Writes a labeled stream in both on-disk formats and reads it back.

use evdn::evio::{read_events, write_events, Format};
use evdn::simulator::{dual_sample, MovingBar, NoiseParams, PixelModelParams, Scene, SceneKind};
use evdn::Geometry;

fn main() -> evdn::Result<()> {
    let scene = Scene::new(SceneKind::MovingBar(MovingBar::default()), Geometry::new(64, 64), 200_000)?;
    let s = dual_sample(&scene, &PixelModelParams::default(), &NoiseParams::default(), 1, 2, 0.0)?.s1;
    let dir = std::env::temp_dir();
    for (fmt, name) in [(Format::Text, "evdn_roundtrip.txt"), (Format::Binary, "evdn_roundtrip.evd")] {
        let path = dir.join(name);
        write_events(&s, &path, fmt)?;
        let back = read_events(&path, fmt)?;
        let bytes = std::fs::metadata(&path).map(|m| m.len()).unwrap_or(0);
        println!("{fmt:?}: {} events, {bytes} bytes, identical: {}", back.len(), back == s);
    }
    Ok(())
}
