//! Denoising accuracy, dual-stream overlap and distribution statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Label, LabeledEventStream};
use crate::frame::BinaryFrame;

/// Returned by [`event_snr`] when a stream contains no noise events.
pub const SNR_CAP_DB: f64 = 100.0;

/// Confusion counts and the accuracy ratios derived from them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub tp: usize,
    pub tn: usize,
    pub gp: usize,
    pub gn: usize,
    /// Signal retained, `tp / gp`. `None` when there is no signal.
    pub sr: Option<f64>,
    /// Noise removed, `tn / gn`. `None` when there is no noise.
    pub nr: Option<f64>,
    pub da: f64,
    /// Set when one of the two terms was undefined and DA fell back to the other.
    pub degenerate: bool,
}

impl Accuracy {
    pub fn from_counts(tp: usize, tn: usize, gp: usize, gn: usize) -> Self {
        let sr = (gp > 0).then(|| tp as f64 / gp as f64);
        let nr = (gn > 0).then(|| tn as f64 / gn as f64);
        let (da, degenerate) = match (sr, nr) {
            (Some(s), Some(n)) => ((s + n) / 2.0, false),
            (Some(s), None) => (s, true),
            (None, Some(n)) => (n, true),
            (None, None) => (1.0, true),
        };
        Accuracy {
            tp,
            tn,
            gp,
            gn,
            sr,
            nr,
            da,
            degenerate,
        }
    }
}

/// Scores `pred` against `gt`. Both must hold the same events; matching is
/// by exact `(t, x, y, p)` in canonical order. Unlabeled ground-truth events
/// are ignored; an unlabeled prediction counts as removed.
pub fn denoise_accuracy(pred: &LabeledEventStream, gt: &LabeledEventStream) -> Result<Accuracy> {
    if pred.len() != gt.len() {
        return Err(Error::EventSetMismatch(format!(
            "prediction has {} events, ground truth {}",
            pred.len(),
            gt.len()
        )));
    }
    let (mut tp, mut tn, mut gp, mut gn) = (0, 0, 0, 0);
    for (i, ((pe, pl), (ge, gl))) in pred.iter().zip(gt.iter()).enumerate() {
        if pe != ge {
            return Err(Error::EventSetMismatch(format!(
                "event {i}: prediction {pe:?} vs ground truth {ge:?}"
            )));
        }
        let kept = pl == Label::Signal;
        match gl {
            Label::Signal => {
                gp += 1;
                tp += kept as usize;
            }
            Label::Noise => {
                gn += 1;
                tn += !kept as usize;
            }
            Label::Unlabeled => {}
        }
    }
    Ok(Accuracy::from_counts(tp, tn, gp, gn))
}

/// Intersection over union of the set pixels; 0 when both frames are empty.
pub fn overlap_rate(f1: &BinaryFrame, f2: &BinaryFrame) -> Result<f64> {
    f1.ensure_compatible(f2)?;
    let (mut both, mut either) = (0u64, 0u64);
    for (a, b) in f1.words().iter().zip(f2.words()) {
        both += (a & b).count_ones() as u64;
        either += (a | b).count_ones() as u64;
    }
    Ok(if either == 0 { 0.0 } else { both as f64 / either as f64 })
}

/// Fraction of `patch`×`patch` tiles with no set pixel. Partial tiles at the
/// right and bottom edges count as tiles.
pub fn blank_patch_ratio(frame: &BinaryFrame, patch: usize) -> Result<f64> {
    if patch == 0 {
        return Err(Error::invalid("patch size must be positive"));
    }
    let g = frame.geometry();
    let (w, h) = (g.width as usize, g.height as usize);
    let (pw, ph) = (w.div_ceil(patch), h.div_ceil(patch));
    if pw * ph == 0 {
        return Ok(1.0);
    }
    let mut occupied = vec![false; pw * ph];
    for (x, y) in frame.pixels() {
        occupied[(y as usize / patch) * pw + x as usize / patch] = true;
    }
    let blank = occupied.iter().filter(|o| !**o).count();
    Ok(blank as f64 / (pw * ph) as f64)
}

/// Share of raw events that survive denoising.
pub fn preservation_rate(pred_events: usize, raw_events: usize) -> f64 {
    if raw_events == 0 {
        1.0
    } else {
        pred_events as f64 / raw_events as f64
    }
}

/// `10 log10(signal / noise)` over labeled events, capped at [`SNR_CAP_DB`].
pub fn event_snr(stream: &LabeledEventStream) -> Result<f64> {
    let signal = stream.count(Label::Signal);
    let noise = stream.count(Label::Noise);
    if signal + noise == 0 {
        return Err(Error::invalid("event SNR needs at least one labeled event"));
    }
    if noise == 0 {
        return Ok(SNR_CAP_DB);
    }
    if signal == 0 {
        return Ok(-SNR_CAP_DB);
    }
    Ok((10.0 * (signal as f64 / noise as f64).log10()).clamp(-SNR_CAP_DB, SNR_CAP_DB))
}

/// Everything `eval` writes for one prediction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenoiseReport {
    pub method: String,
    pub tp: usize,
    pub tn: usize,
    pub gp: usize,
    pub gn: usize,
    pub sr: Option<f64>,
    pub nr: Option<f64>,
    pub da: f64,
    pub da_degenerate: bool,
    /// SNR of the retained events, judged by ground-truth labels.
    pub esnr_db: Option<f64>,
    pub overlap_rate: Option<f64>,
    pub blank_patch_ratio: f64,
    pub preservation_rate: f64,
    pub runtime_ms: Option<f64>,
}

impl DenoiseReport {
    /// Accuracy and distribution statistics of `pred` against `gt`. The blank
    /// patch ratio is taken over the occupancy of all retained events.
    pub fn build(method: &str, pred: &LabeledEventStream, gt: &LabeledEventStream, patch: usize) -> Result<Self> {
        let acc = denoise_accuracy(pred, gt)?;
        let kept: Vec<_> = pred
            .iter()
            .zip(gt.labels())
            .filter(|((_, l), _)| *l == Label::Signal)
            .map(|((e, _), g)| (*e, *g))
            .collect();
        let retained_truth = LabeledEventStream::from_unsorted(pred.geometry(), pred.duration(), kept.clone())?;
        let esnr_db = event_snr(&retained_truth).ok();
        let window = crate::frame::TimeWindow {
            start: 0,
            end: pred.duration().max(1),
        };
        let occupancy = BinaryFrame::from_pixels(
            pred.geometry(),
            crate::event::Polarity::Positive,
            window,
            kept.iter().map(|(e, _)| (e.x, e.y)),
        );
        Ok(DenoiseReport {
            method: method.to_string(),
            tp: acc.tp,
            tn: acc.tn,
            gp: acc.gp,
            gn: acc.gn,
            sr: acc.sr,
            nr: acc.nr,
            da: acc.da,
            da_degenerate: acc.degenerate,
            esnr_db,
            overlap_rate: None,
            blank_patch_ratio: blank_patch_ratio(&occupancy, patch)?,
            preservation_rate: preservation_rate(kept.len(), pred.len()),
            runtime_ms: None,
        })
    }
}
