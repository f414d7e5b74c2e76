use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Geometry;

/// Bright or dark bar translating horizontally; wraps around once fully out
/// of view. Intensities are linear (not log) and must be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingBar {
    pub width: f64,
    /// Vertical extent in pixels, centred on the sensor.
    pub length: f64,
    /// Pixels per second; negative moves left.
    pub velocity: f64,
    pub start_x: f64,
    pub background: f64,
    pub foreground: f64,
}

impl Default for MovingBar {
    fn default() -> Self {
        MovingBar {
            width: 8.0,
            length: 48.0,
            velocity: 60.0,
            start_x: 0.0,
            background: 1.0,
            foreground: 4.0,
        }
    }
}

/// Sum of random plane waves in log intensity, translating at constant velocity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MovingTexture {
    pub seed: u64,
    pub velocity: (f64, f64),
    /// Peak log-intensity amplitude of each component.
    pub amplitude: f64,
    /// Mean wavelength in pixels.
    pub wavelength: f64,
    pub components: usize,
}

impl Default for MovingTexture {
    fn default() -> Self {
        MovingTexture {
            seed: 7,
            velocity: (40.0, 15.0),
            amplitude: 0.35,
            wavelength: 12.0,
            components: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum SceneKind {
    Constant { log_intensity: f64 },
    MovingBar(MovingBar),
    MovingTexture(MovingTexture),
    /// Uniform log intensity `base + slope * t_seconds`.
    Ramp { base: f64, slope: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub kind: SceneKind,
    pub geometry: Geometry,
    pub duration: u64,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Wave {
    kx: f64,
    ky: f64,
    phase: f64,
}

/// Precomputed per-scene state used during rendering.
pub(crate) enum Evaluator<'a> {
    Constant(f64),
    Bar { bar: &'a MovingBar, span: f64, y0: f64 },
    Texture { tex: &'a MovingTexture, waves: Vec<Wave> },
    Ramp { base: f64, slope: f64 },
}

impl Scene {
    pub fn new(kind: SceneKind, geometry: Geometry, duration: u64) -> Result<Self> {
        let scene = Scene { kind, geometry, duration };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = |v: f64, name: &str| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(format!("scene {name} must be finite")))
            }
        };
        match &self.kind {
            SceneKind::Constant { log_intensity } => finite(*log_intensity, "intensity")?,
            SceneKind::Ramp { base, slope } => {
                finite(*base, "base")?;
                finite(*slope, "slope")?;
            }
            SceneKind::MovingBar(b) => {
                for (v, n) in [(b.width, "width"), (b.length, "length"), (b.velocity, "velocity"), (b.start_x, "start")] {
                    finite(v, n)?;
                }
                if b.width <= 0.0 || b.length <= 0.0 {
                    return Err(Error::invalid("bar width and length must be positive"));
                }
                if !(b.background > 0.0 && b.foreground > 0.0) || !b.background.is_finite() || !b.foreground.is_finite() {
                    return Err(Error::invalid("bar intensities must be positive and finite"));
                }
            }
            SceneKind::MovingTexture(t) => {
                finite(t.velocity.0, "velocity")?;
                finite(t.velocity.1, "velocity")?;
                finite(t.amplitude, "amplitude")?;
                if !(t.wavelength > 0.0) || !t.wavelength.is_finite() {
                    return Err(Error::invalid("texture wavelength must be positive"));
                }
            }
        }
        Ok(())
    }

    pub(crate) fn evaluator(&self) -> Evaluator<'_> {
        match &self.kind {
            SceneKind::Constant { log_intensity } => Evaluator::Constant(*log_intensity),
            SceneKind::Ramp { base, slope } => Evaluator::Ramp { base: *base, slope: *slope },
            SceneKind::MovingBar(bar) => Evaluator::Bar {
                bar,
                span: self.geometry.width as f64 + bar.width,
                y0: (self.geometry.height as f64 - bar.length) / 2.0,
            },
            SceneKind::MovingTexture(tex) => {
                let mut rng = ChaCha8Rng::seed_from_u64(tex.seed);
                let waves = (0..tex.components)
                    .map(|_| {
                        let angle = rng.random_range(0.0..std::f64::consts::TAU);
                        let lambda = tex.wavelength * rng.random_range(0.7..1.4);
                        let k = std::f64::consts::TAU / lambda;
                        Wave {
                            kx: k * angle.cos(),
                            ky: k * angle.sin(),
                            phase: rng.random_range(0.0..std::f64::consts::TAU),
                        }
                    })
                    .collect();
                Evaluator::Texture { tex, waves }
            }
        }
    }

    /// Log intensity at pixel centre `(x, y)` and time `t_us`.
    pub fn log_intensity(&self, x: u16, y: u16, t_us: f64) -> f64 {
        self.evaluator().eval(x, y, t_us)
    }
}

fn overlap(a0: f64, a1: f64, b0: f64, b1: f64) -> f64 {
    (a1.min(b1) - a0.max(b0)).max(0.0)
}

impl Evaluator<'_> {
    pub(crate) fn is_static(&self) -> bool {
        matches!(self, Evaluator::Constant(_))
    }

    pub(crate) fn eval(&self, x: u16, y: u16, t_us: f64) -> f64 {
        let ts = t_us * 1e-6;
        match self {
            Evaluator::Constant(l) => *l,
            Evaluator::Ramp { base, slope } => base + slope * ts,
            Evaluator::Bar { bar, span, y0 } => {
                let cy = overlap(y as f64, y as f64 + 1.0, *y0, y0 + bar.length);
                let left = (bar.start_x + bar.velocity * ts + bar.width).rem_euclid(*span) - bar.width;
                let cx = overlap(x as f64, x as f64 + 1.0, left, left + bar.width);
                let cov = cx * cy;
                (bar.background + (bar.foreground - bar.background) * cov).ln()
            }
            Evaluator::Texture { tex, waves } => {
                let px = x as f64 + 0.5 - tex.velocity.0 * ts;
                let py = y as f64 + 0.5 - tex.velocity.1 * ts;
                waves
                    .iter()
                    .map(|w| tex.amplitude * (w.kx * px + w.ky * py + w.phase).sin())
                    .sum()
            }
        }
    }
}
