//! Conversion between event streams and network tensors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::lif::ThresholdMap;
use super::network::Network;
use super::tensor::Tensor;
use super::train::Sample;
use crate::error::{Error, Result};
use crate::event::{EventStream, Label, LabeledEventStream};
use crate::window::{window_count, window_index};

pub const TH_LOW: f64 = 0.3;
pub const TH_HIGH: f64 = 0.8;

/// One 2-channel binary frame per window; channel 0 holds negative events.
pub fn event_frames(stream: &EventStream, dt: u64) -> Result<Vec<Tensor>> {
    if dt == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    let g = stream.geometry();
    let (h, w) = (g.height as usize, g.width as usize);
    let mut frames = vec![Tensor::zeros(2, h, w); window_count(stream.duration(), dt)];
    for e in stream.events() {
        frames[window_index(e.t, dt)].set(e.p.channel(), e.y as usize, e.x as usize, 1.0);
    }
    Ok(frames)
}

/// One 1-channel frame per window marking pixels with a signal event of
/// either polarity.
pub fn signal_frames(gt: &LabeledEventStream, dt: u64) -> Result<Vec<Tensor>> {
    if dt == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    let g = gt.stream().geometry();
    let (h, w) = (g.height as usize, g.width as usize);
    let mut frames = vec![Tensor::zeros(1, h, w); window_count(gt.stream().duration(), dt)];
    for (e, l) in gt.iter() {
        if l == Label::Signal {
            frames[window_index(e.t, dt)].set(0, e.y as usize, e.x as usize, 1.0);
        }
    }
    Ok(frames)
}

/// Threshold targets per window: `TH_LOW` where a signal event lies within
/// Chebyshev radius `r` in any of the `k` windows centred on the current
/// one, `TH_HIGH` elsewhere.
pub fn make_threshold_labels(gt: &LabeledEventStream, dt: u64, k: usize, r: usize) -> Result<Vec<ThresholdMap>> {
    if k == 0 {
        return Err(Error::invalid("threshold labels need at least one window"));
    }
    let sig = signal_frames(gt, dt)?;
    let g = gt.stream().geometry();
    let (h, w) = (g.height as usize, g.width as usize);
    let dilated: Vec<Vec<bool>> = sig.iter().map(|f| dilate(&f.data, h, w, r)).collect();
    let n = dilated.len();
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub((k - 1) / 2);
            let hi = (i + k / 2).min(n - 1);
            let values = (0..h * w)
                .map(|p| if (lo..=hi).any(|j| dilated[j][p]) { TH_LOW } else { TH_HIGH })
                .collect();
            ThresholdMap::new(h, w, values)
        })
        .collect()
}

fn dilate(src: &[f64], h: usize, w: usize, r: usize) -> Vec<bool> {
    let mut rows = vec![false; h * w];
    for y in 0..h {
        for x in 0..w {
            if src[y * w + x] != 0.0 {
                for xx in x.saturating_sub(r)..=(x + r).min(w - 1) {
                    rows[y * w + xx] = true;
                }
            }
        }
    }
    let mut out = vec![false; h * w];
    for y in 0..h {
        for x in 0..w {
            if rows[y * w + x] {
                for yy in y.saturating_sub(r)..=(y + r).min(h - 1) {
                    out[yy * w + x] = true;
                }
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleConfig {
    pub dt_us: u64,
    pub time_steps: usize,
    /// Square crop side; `0` keeps whole frames.
    pub crop: usize,
    /// Random crops drawn per chunk of `time_steps` windows.
    pub crops_per_chunk: usize,
    pub label_windows: usize,
    pub label_radius: usize,
    pub seed: u64,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            dt_us: 10_000,
            time_steps: 5,
            crop: 32,
            crops_per_chunk: 4,
            label_windows: 3,
            label_radius: 1,
            seed: 0,
        }
    }
}

/// Cuts a noisy stream and its ground truth into training samples: chunks
/// of consecutive windows, cropped at seeded random positions.
pub fn make_samples(raw: &EventStream, gt: &LabeledEventStream, cfg: &SampleConfig) -> Result<Vec<Sample>> {
    raw.geometry().ensure_same(&gt.stream().geometry())?;
    if cfg.time_steps == 0 || cfg.crops_per_chunk == 0 {
        return Err(Error::invalid("samples need T >= 1 and at least one crop per chunk"));
    }
    let g = raw.geometry();
    let (h, w) = (g.height as usize, g.width as usize);
    let crop = if cfg.crop == 0 { h.max(w) } else { cfg.crop };
    if crop > h || crop > w {
        return Err(Error::invalid(format!("crop {crop} exceeds frame {w}x{h}")));
    }
    let inputs = event_frames(raw, cfg.dt_us)?;
    let targets = signal_frames(gt, cfg.dt_us)?;
    let labels = make_threshold_labels(gt, cfg.dt_us, cfg.label_windows, cfg.label_radius)?;
    let n = inputs.len().min(targets.len());
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for start in (0..n.saturating_sub(cfg.time_steps - 1)).step_by(cfg.time_steps) {
        let steps = start..start + cfg.time_steps;
        for _ in 0..cfg.crops_per_chunk {
            let y0 = rng.random_range(0..=h - crop);
            let x0 = rng.random_range(0..=w - crop);
            let label_tensor = |m: &ThresholdMap| Tensor::from_vec(1, h, w, m.values().to_vec()).map(|t| t.crop(y0, x0, crop, crop));
            out.push(Sample {
                frames: steps.clone().map(|i| inputs[i].crop(y0, x0, crop, crop)).collect(),
                gt: steps.clone().map(|i| targets[i].crop(y0, x0, crop, crop)).collect(),
                labels: steps.clone().map(|i| label_tensor(&labels[i])).collect::<Result<_>>()?,
            });
        }
    }
    Ok(out)
}

/// Labels every event of `stream` by running the network over whole frames
/// in chunks of `time_steps` windows, resetting state between chunks. An
/// event is signal iff the output spikes at its pixel in its window.
pub fn denoise_stream(net: &Network, stream: &EventStream, dt: u64, time_steps: usize) -> Result<LabeledEventStream> {
    if time_steps == 0 {
        return Err(Error::invalid("time steps must be positive"));
    }
    let frames = event_frames(stream, dt)?;
    if frames.is_empty() {
        return Ok(LabeledEventStream::uniform(stream.clone(), Label::Noise));
    }
    let outputs: Vec<Vec<Tensor>> = frames
        .par_chunks(time_steps)
        .map(|chunk| net.forward(chunk).map(|o| o.outputs))
        .collect::<Result<_>>()?;
    let outputs: Vec<Tensor> = outputs.into_iter().flatten().collect();
    let labels = stream
        .events()
        .iter()
        .map(|e| {
            let fired = outputs[window_index(e.t, dt)].at(0, e.y as usize, e.x as usize) != 0.0;
            if fired {
                Label::Signal
            } else {
                Label::Noise
            }
        })
        .collect();
    LabeledEventStream::new(stream.clone(), labels)
}
