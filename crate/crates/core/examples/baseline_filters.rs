//! The three classical filters on one noisy stream at rising noise rates.

use evdn::filters::Filter;
use evdn::metrics::denoise_accuracy;
use evdn::simulator::{render_signal_events, sample_ba_noise, MovingTexture, NoiseParams, PixelModelParams, Scene, SceneKind};
use evdn::{Geometry, LabeledEventStream};

fn main() -> evdn::Result<()> {
    let g = Geometry::new(96, 96);
    let scene = Scene::new(SceneKind::MovingTexture(MovingTexture::default()), g, 500_000)?;
    let signal = render_signal_events(&scene, &PixelModelParams::default())?;

    for rate in [1.0, 5.0, 20.0] {
        let noise = sample_ba_noise(&NoiseParams::uniform(rate, 9), g, scene.duration)?;
        let noisy = LabeledEventStream::merge(&signal, &noise)?;
        println!("noise rate {rate} ev/px/s, {} events", noisy.len());
        for f in Filter::defaults() {
            let acc = denoise_accuracy(&f.apply(noisy.stream())?, &noisy)?;
            println!(
                "  {:<12} SR {:.3}  NR {:.3}  DA {:.3}",
                f.name(),
                acc.sr.unwrap_or(f64::NAN),
                acc.nr.unwrap_or(f64::NAN),
                acc.da
            );
        }
    }
    Ok(())
}
