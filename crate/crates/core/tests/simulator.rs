//! Simulator and end-to-end DED behaviour on simulated recordings.

use evdn::ded::{ded_pipeline, ded_with_stages, DedParams, Stages};
use evdn::filters::Filter;
use evdn::metrics::denoise_accuracy;
use evdn::simulator::{dual_sample, render_signal_events, sample_ba_noise, MovingBar, NoiseParams, PixelModelParams, Scene, SceneKind};
use evdn::window::{window_bounds, window_count};
use evdn::{binarize, Geometry, Label, Polarity};

#[test]
fn ramp_crosses_five_times() {
    let (slope, c, dt_sim, duration) = (0.52, 0.1, 100u64, 1_000_000u64);
    let scene = Scene::new(SceneKind::Ramp { base: 0.0, slope }, Geometry::new(4, 3), duration).unwrap();
    let pix = PixelModelParams {
        contrast_threshold: c,
        dt_sim_us: dt_sim,
        ..Default::default()
    };
    let out = render_signal_events(&scene, &pix).unwrap();

    // Scalar integrator over the same sampling grid.
    let mut reference = 0.0;
    let mut count = 0;
    let mut t = dt_sim;
    while t < duration {
        let l = slope * t as f64 * 1e-6;
        while l - reference >= c {
            reference += c;
            count += 1;
        }
        t += dt_sim;
    }
    assert_eq!(count, 5);
    for y in 0..3 {
        for x in 0..4 {
            let px: Vec<_> = out.events().iter().filter(|e| e.x == x && e.y == y).collect();
            assert_eq!(px.len(), count, "pixel ({x},{y})");
            assert!(px.iter().all(|e| e.p == Polarity::Positive));
        }
    }
}

#[test]
fn bar_events_only_where_intensity_moves() {
    let g = Geometry::new(40, 32);
    let duration = 300_000;
    let scene = Scene::new(SceneKind::MovingBar(MovingBar::default()), g, duration).unwrap();
    let pix = PixelModelParams::default();
    let out = render_signal_events(&scene, &pix).unwrap();
    let mut active = vec![false; g.pixel_count()];
    for e in out.events() {
        active[g.index(e.x, e.y)] = true;
    }
    let mut moving = 0;
    for y in 0..g.height {
        for x in 0..g.width {
            let l0 = scene.log_intensity(x, y, 0.0);
            let mut fires = false;
            let mut t = pix.dt_sim_us;
            while t < duration {
                if (scene.log_intensity(x, y, t as f64) - l0).abs() >= pix.contrast_threshold {
                    fires = true;
                    break;
                }
                t += pix.dt_sim_us;
            }
            moving += fires as usize;
            assert_eq!(active[g.index(x, y)], fires, "pixel ({x},{y})");
        }
    }
    assert!(moving > 0 && moving < g.pixel_count());
}

#[test]
fn poisson_total_within_four_sigma() {
    let g = Geometry::new(100, 100);
    let sigma = 50_000f64.sqrt();
    for seed in 0..8 {
        let n = sample_ba_noise(&NoiseParams::uniform(5.0, seed), g, 1_000_000).unwrap().len() as f64;
        assert!((n - 50_000.0).abs() < 4.0 * sigma, "seed {seed}: {n}");
    }
}

fn bar_dual(g: Geometry, duration: u64, rate: f64) -> evdn::simulator::DualStream {
    let scene = Scene::new(SceneKind::MovingBar(MovingBar::default()), g, duration).unwrap();
    dual_sample(&scene, &PixelModelParams::default(), &NoiseParams::uniform(rate, 3), 1, 2, 0.0).unwrap()
}

#[test]
fn overlap_concentrates_on_signal() {
    let g = Geometry::new(64, 64);
    let dual = bar_dual(g, 500_000, 5.0);
    let dt = 10_000;
    let (mut sig_both, mut sig_either, mut bg_both, mut bg_either) = (0u64, 0u64, 0u64, 0u64);
    for k in 0..window_count(500_000, dt) {
        let w = window_bounds(k, dt);
        for p in Polarity::BOTH {
            let mut signal_px = vec![false; g.pixel_count()];
            for (e, l) in dual.s1.iter().chain(dual.s2.iter()) {
                if l == Label::Signal && w.contains(e.t) && e.p == p {
                    signal_px[g.index(e.x, e.y)] = true;
                }
            }
            let (a, b) = (binarize(dual.s1.stream(), w, p), binarize(dual.s2.stream(), w, p));
            for i in 0..g.pixel_count() {
                let (x, y) = (a.get_index(i), b.get_index(i));
                let (both, either) = if signal_px[i] { (&mut sig_both, &mut sig_either) } else { (&mut bg_both, &mut bg_either) };
                *both += (x && y) as u64;
                *either += (x || y) as u64;
            }
        }
    }
    let sig = sig_both as f64 / sig_either as f64;
    let bg = bg_both as f64 / bg_either as f64;
    assert!(sig > 0.9 && sig > 50.0 * bg, "signal {sig}, background {bg}");
}

#[test]
fn noise_free_signal_survives() {
    let dual = bar_dual(Geometry::new(128, 128), 1_000_000, 0.0);
    let p = DedParams::default();
    let spatial = ded_with_stages(&dual, &p, Stages::SPATIAL_ONLY).unwrap();
    assert_eq!(denoise_accuracy(&spatial, &dual.s1).unwrap().sr, Some(1.0));
    let full = denoise_accuracy(&ded_pipeline(&dual, &p).unwrap(), &dual.s1).unwrap();
    assert!(full.sr.unwrap() >= 0.95, "{full:?}");
}

#[test]
fn pure_noise_is_rejected() {
    let g = Geometry::new(128, 128);
    let scene = Scene::new(SceneKind::Constant { log_intensity: 1.0 }, g, 1_000_000).unwrap();
    let dual = dual_sample(&scene, &PixelModelParams::default(), &NoiseParams::default(), 5, 6, 0.0).unwrap();
    let acc = denoise_accuracy(&ded_pipeline(&dual, &DedParams::default()).unwrap(), &dual.s1).unwrap();
    assert!(acc.nr.unwrap() >= 0.99, "{acc:?}");
}

#[test]
fn baselines_beat_chance_on_bar() {
    let dual = bar_dual(Geometry::new(64, 64), 2_000_000, 10.0);
    for f in Filter::defaults() {
        let acc = denoise_accuracy(&f.apply(dual.s1.stream()).unwrap(), &dual.s1).unwrap();
        assert!(acc.da > 0.5, "{}: {acc:?}", f.name());
    }
}

#[test]
fn jitter_free_signal_is_shared() {
    let dual = bar_dual(Geometry::new(48, 48), 200_000, 3.0);
    assert_eq!(dual.s1.select(Label::Signal), dual.s2.select(Label::Signal));
    assert!(dual.s1.labels().iter().chain(dual.s2.labels()).all(|l| *l != Label::Unlabeled));
    assert!(dual.s1.select(Label::Noise) != dual.s2.select(Label::Noise));
}
