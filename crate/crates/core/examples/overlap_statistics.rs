//! How often two independent noise samplings fire at the same pixel in the
//! same window, per threshold preset, on a static scene.

use evdn::metrics::overlap_rate;
use evdn::simulator::{dual_sample, NoiseParams, PixelModelParams, Scene, SceneKind, ThresholdLevel};
use evdn::{binarize, Geometry, Polarity, TimeWindow};

fn main() -> evdn::Result<()> {
    let g = Geometry::new(128, 128);
    let dt = 10_000;
    let scene = Scene::new(SceneKind::Constant { log_intensity: 0.0 }, g, 100 * dt)?;
    for level in [ThresholdLevel::Nominal, ThresholdLevel::Minus10, ThresholdLevel::Minus20, ThresholdLevel::Minus30] {
        let pix = PixelModelParams {
            contrast_threshold: level.contrast_threshold(),
            ..PixelModelParams::default()
        };
        let dual = dual_sample(&scene, &pix, &NoiseParams::uniform(level.noise_rate(), 0), 5, 6, 0.0)?;
        let mut sum = 0.0;
        let mut n = 0;
        for k in 0..100 {
            let w = TimeWindow::new(k * dt, (k + 1) * dt)?;
            for p in Polarity::BOTH {
                sum += overlap_rate(&binarize(dual.s1.stream(), w, p), &binarize(dual.s2.stream(), w, p))?;
                n += 1;
            }
        }
        println!("{level:?}: rate {} ev/px/s, mean overlap {:.5}", level.noise_rate(), sum / n as f64);
    }
    Ok(())
}
