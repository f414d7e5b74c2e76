use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ThresholdLevel;
use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Geometry, Label, LabeledEventStream, Polarity};

/// Background-activity rate in events per pixel per second, summed over
/// both polarities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RateMap {
    Uniform(f64),
    /// Row-major, one entry per pixel.
    PerPixel(Vec<f64>),
}

impl RateMap {
    fn at(&self, i: usize) -> f64 {
        match self {
            RateMap::Uniform(r) => *r,
            RateMap::PerPixel(v) => v[i],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub rate: RateMap,
    /// Fraction of noise events that are positive.
    pub positive_fraction: f64,
    pub seed: u64,
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams {
            rate: RateMap::Uniform(ThresholdLevel::Minus30.noise_rate()),
            positive_fraction: 0.5,
            seed: 0,
        }
    }
}

impl NoiseParams {
    pub fn uniform(rate: f64, seed: u64) -> Self {
        NoiseParams {
            rate: RateMap::Uniform(rate),
            seed,
            ..Default::default()
        }
    }

    pub fn validate(&self, geometry: Geometry) -> Result<()> {
        let ok = |r: f64| r.is_finite() && r >= 0.0;
        match &self.rate {
            RateMap::Uniform(r) if !ok(*r) => return Err(Error::invalid(format!("noise rate {r} must be >= 0"))),
            RateMap::PerPixel(v) => {
                if v.len() != geometry.pixel_count() {
                    return Err(Error::invalid(format!(
                        "rate map has {} entries for {} pixels",
                        v.len(),
                        geometry.pixel_count()
                    )));
                }
                if let Some(r) = v.iter().find(|r| !ok(**r)) {
                    return Err(Error::invalid(format!("noise rate {r} must be >= 0")));
                }
            }
            _ => {}
        }
        if !(0.0..=1.0).contains(&self.positive_fraction) {
            return Err(Error::invalid("positive fraction must lie in [0, 1]"));
        }
        Ok(())
    }
}

/// Draws background activity over `[0, duration)`. Each row uses its own
/// ChaCha stream derived from the seed, so the output does not depend on how
/// rows are scheduled.
pub fn sample_ba_noise(noise: &NoiseParams, geometry: Geometry, duration: u64) -> Result<LabeledEventStream> {
    noise.validate(geometry)?;
    let seconds = duration as f64 * 1e-6;
    let rows: Vec<Vec<Event>> = (0..geometry.height)
        .into_par_iter()
        .map(|y| {
            let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
            rng.set_stream(y as u64);
            let mut out = Vec::new();
            for x in 0..geometry.width {
                let rate = noise.rate.at(geometry.index(x, y));
                for (p, frac) in [
                    (Polarity::Negative, 1.0 - noise.positive_fraction),
                    (Polarity::Positive, noise.positive_fraction),
                ] {
                    let mean = rate * frac * seconds;
                    if mean <= 0.0 || duration == 0 {
                        continue;
                    }
                    let n = Poisson::new(mean).expect("positive mean").sample(&mut rng) as u64;
                    for _ in 0..n {
                        out.push(Event::new(rng.random_range(0..duration), x, y, p));
                    }
                }
            }
            out
        })
        .collect();
    let mut events: Vec<Event> = rows.into_iter().flatten().collect();
    events.sort();
    Ok(LabeledEventStream::uniform(
        EventStream::from_parts_unchecked(geometry, duration, events),
        Label::Noise,
    ))
}
