//! Dual-sampling ground truth: the full two-stage pipeline and each stage
//! alone, scored against the simulator's labels.

use std::time::Instant;

use evdn::ded::{ded_with_stages, DedParams, Stages};
use evdn::metrics::denoise_accuracy;
use evdn::simulator::{dual_sample, MovingBar, NoiseParams, PixelModelParams, Scene, SceneKind};
use evdn::Geometry;

fn main() -> evdn::Result<()> {
    let scene = Scene::new(SceneKind::MovingBar(MovingBar::default()), Geometry::new(128, 128), 1_000_000)?;
    let dual = dual_sample(&scene, &PixelModelParams::default(), &NoiseParams::default(), 1, 2, 0.0)?;
    let params = DedParams::default();

    for (name, stages) in [
        ("full", Stages::FULL),
        ("spatial only", Stages::SPATIAL_ONLY),
        ("correlation only", Stages::CORRELATION_ONLY),
    ] {
        let started = Instant::now();
        let gt = ded_with_stages(&dual, &params, stages)?;
        let elapsed = started.elapsed();
        let acc = denoise_accuracy(&gt, &dual.s1)?;
        println!(
            "{name:>16}: SR {:.4}  NR {:.4}  DA {:.4}  ({elapsed:.1?})",
            acc.sr.unwrap_or(f64::NAN),
            acc.nr.unwrap_or(f64::NAN),
            acc.da
        );
    }
    Ok(())
}
