//! Behavioural event-camera model.
//!
//! Signal events come from a per-pixel log-intensity reference: whenever the
//! current log intensity departs from the reference by at least the contrast
//! threshold, an event of the matching sign is emitted and the reference moves
//! by exactly one threshold. Background activity is an independent homogeneous
//! Poisson process per pixel and polarity.

mod dual;
mod noise;
mod scene;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use dual::{dual_sample, DualStream};
pub use noise::{sample_ba_noise, NoiseParams, RateMap};
pub use scene::{MovingBar, MovingTexture, Scene, SceneKind};

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Label, LabeledEventStream, Polarity};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelModelParams {
    /// Contrast threshold in log-intensity units.
    pub contrast_threshold: f64,
    pub refractory_us: u64,
    pub dt_sim_us: u64,
}

impl Default for PixelModelParams {
    fn default() -> Self {
        PixelModelParams {
            contrast_threshold: ThresholdLevel::Minus30.contrast_threshold(),
            refractory_us: 0,
            dt_sim_us: 100,
        }
    }
}

impl PixelModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.contrast_threshold > 0.0) || !self.contrast_threshold.is_finite() {
            return Err(Error::invalid("contrast threshold must be positive"));
        }
        if self.dt_sim_us == 0 {
            return Err(Error::invalid("simulation step must be positive"));
        }
        Ok(())
    }
}

/// Camera threshold presets, relative to a nominal setting. Lower thresholds
/// trade a smaller contrast step for more background activity. The numbers
/// are a desk-scale calibration, not measurements of a particular sensor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdLevel {
    Nominal,
    Minus10,
    Minus20,
    Minus30,
}

impl ThresholdLevel {
    pub fn contrast_threshold(self) -> f64 {
        match self {
            ThresholdLevel::Nominal => 0.25,
            ThresholdLevel::Minus10 => 0.225,
            ThresholdLevel::Minus20 => 0.2,
            ThresholdLevel::Minus30 => 0.175,
        }
    }

    /// Background-activity rate in events per pixel per second, both polarities.
    pub fn noise_rate(self) -> f64 {
        match self {
            ThresholdLevel::Nominal => 0.25,
            ThresholdLevel::Minus10 => 0.5,
            ThresholdLevel::Minus20 => 1.0,
            ThresholdLevel::Minus30 => 2.0,
        }
    }
}

impl std::str::FromStr for ThresholdLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "0" | "nominal" => Ok(ThresholdLevel::Nominal),
            "-10" | "minus10" => Ok(ThresholdLevel::Minus10),
            "-20" | "minus20" => Ok(ThresholdLevel::Minus20),
            "-30" | "minus30" => Ok(ThresholdLevel::Minus30),
            other => Err(Error::invalid(format!("unknown threshold level '{other}'"))),
        }
    }
}

/// Renders the noise-free event stream of `scene`. Every event is labeled signal.
pub fn render_signal_events(scene: &Scene, pix: &PixelModelParams) -> Result<LabeledEventStream> {
    scene.validate()?;
    pix.validate()?;
    let g = scene.geometry;
    let eval = scene.evaluator();
    if eval.is_static() || scene.duration == 0 {
        return Ok(LabeledEventStream::uniform(
            EventStream::empty(g, scene.duration),
            Label::Signal,
        ));
    }
    let rows: Vec<Vec<Event>> = (0..g.height)
        .into_par_iter()
        .map(|y| {
            let mut out = Vec::new();
            for x in 0..g.width {
                render_pixel(|t| eval.eval(x, y, t), scene.duration, pix, |t, p| {
                    out.push(Event::new(t, x, y, p))
                });
            }
            out
        })
        .collect();
    let mut events: Vec<Event> = rows.into_iter().flatten().collect();
    events.sort();
    Ok(LabeledEventStream::uniform(
        EventStream::from_parts_unchecked(g, scene.duration, events),
        Label::Signal,
    ))
}

/// Single-pixel reference-crossing model. Crossing times are linearly
/// interpolated inside each simulation step and rounded up to whole
/// microseconds.
///
/// The reference is always exactly `base + k·C` for integer `k`.
fn render_pixel(log_i: impl Fn(f64) -> f64, duration: u64, pix: &PixelModelParams, mut emit: impl FnMut(u64, Polarity)) {
    let c = pix.contrast_threshold;
    let base = log_i(0.0);
    let mut k: i64 = 0;
    let mut prev_l = base;
    let mut prev_t = 0u64;
    let mut last_event: Option<u64> = None;
    let mut t = pix.dt_sim_us;
    while t < duration {
        let l = log_i(t as f64);
        let d = l - base;
        loop {
            let (next, p) = if d >= (k + 1) as f64 * c {
                (k + 1, Polarity::Positive)
            } else if d <= (k - 1) as f64 * c {
                (k - 1, Polarity::Negative)
            } else {
                break;
            };
            let level = base + next as f64 * c;
            let frac = if l != prev_l { (level - prev_l) / (l - prev_l) } else { 1.0 };
            let te = prev_t + ((t - prev_t) as f64 * frac.clamp(0.0, 1.0)).ceil() as u64;
            let te = te.clamp(prev_t + 1, t);
            k = next;
            let blocked = last_event.is_some_and(|le| te < le + pix.refractory_us);
            if !blocked {
                emit(te, p);
                last_event = Some(te);
            }
        }
        prev_l = l;
        prev_t = t;
        t += pix.dt_sim_us;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Geometry;

    #[test]
    fn constant_scene_is_silent() {
        let s = Scene::new(SceneKind::Constant { log_intensity: 1.0 }, Geometry::new(8, 8), 1_000_000).unwrap();
        assert!(render_signal_events(&s, &PixelModelParams::default()).unwrap().is_empty());
    }

    #[test]
    fn refractory_suppresses_bursts() {
        let s = Scene::new(SceneKind::Ramp { base: 0.0, slope: 2.0 }, Geometry::new(1, 1), 1_000_000).unwrap();
        let pix = PixelModelParams {
            contrast_threshold: 0.1,
            ..Default::default()
        };
        let free = render_signal_events(&s, &pix).unwrap().len();
        let gated = render_signal_events(&s, &PixelModelParams { refractory_us: 100_000, ..pix }).unwrap();
        assert!(gated.len() < free);
        let ts: Vec<u64> = gated.events().iter().map(|e| e.t).collect();
        assert!(ts.windows(2).all(|w| w[1] - w[0] >= 100_000));
    }

    #[test]
    fn invalid_params() {
        let s = Scene::new(SceneKind::Ramp { base: 0.0, slope: 1.0 }, Geometry::new(1, 1), 1000).unwrap();
        let bad = PixelModelParams {
            contrast_threshold: 0.0,
            ..Default::default()
        };
        assert!(render_signal_events(&s, &bad).is_err());
        let bad = PixelModelParams {
            dt_sim_us: 0,
            ..Default::default()
        };
        assert!(render_signal_events(&s, &bad).is_err());
    }
}
