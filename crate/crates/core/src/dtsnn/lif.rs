//! Leaky integrate-and-fire dynamics with an optional per-pixel threshold:
//!
//! ```text
//! H = V_prev + U
//! S = Heaviside(H - threshold)        (Heaviside(0) = 1)
//! V = V_reset * S + (H / tau) * (1 - S)
//! ```

use serde::{Deserialize, Serialize};

use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const TH_MIN: f64 = 0.1;
pub const TH_MAX: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LifParams {
    pub tau: f64,
    pub v_reset: f64,
    /// Threshold of every neuron except the output layer in dynamic mode.
    pub v_th: f64,
}

impl Default for LifParams {
    fn default() -> Self {
        LifParams {
            tau: 2.0,
            v_reset: 0.0,
            v_th: 0.5,
        }
    }
}

impl LifParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau >= 1.0) || !self.v_reset.is_finite() || !self.v_th.is_finite() {
            return Err(Error::invalid("LIF needs tau >= 1 and finite reset/threshold"));
        }
        Ok(())
    }
}

/// Spike function: the exact Heaviside step, or its arctan smoothing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SpikeFn {
    Heaviside,
    Smooth { alpha: f64 },
}

impl SpikeFn {
    #[inline]
    pub fn apply(self, x: f64) -> f64 {
        match self {
            SpikeFn::Heaviside => {
                if x >= 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            SpikeFn::Smooth { alpha } => smooth_spike(x, alpha),
        }
    }
}

/// `atan(π α x / 2) / π + 1/2`
#[inline]
pub fn smooth_spike(x: f64, alpha: f64) -> f64 {
    (std::f64::consts::PI * alpha * x / 2.0).atan() / std::f64::consts::PI + 0.5
}

/// Derivative of [`smooth_spike`]; stands in for the Heaviside derivative
/// during backpropagation.
#[inline]
pub fn surrogate_spike_grad(x: f64, alpha: f64) -> f64 {
    let z = std::f64::consts::PI * alpha * x / 2.0;
    alpha / (2.0 * (1.0 + z * z))
}

/// Per-pixel firing thresholds of the output layer, each in `[TH_MIN, TH_MAX]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdMap {
    pub height: usize,
    pub width: usize,
    values: Vec<f64>,
}

impl ThresholdMap {
    pub fn new(height: usize, width: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != height * width {
            return Err(Error::Shape(format!("{} thresholds for {height}x{width}", values.len())));
        }
        if let Some(v) = values.iter().find(|v| !(TH_MIN..=TH_MAX).contains(*v)) {
            return Err(Error::invalid(format!("threshold {v} outside [{TH_MIN}, {TH_MAX}]")));
        }
        Ok(ThresholdMap { height, width, values })
    }

    /// Caller guarantees length and range.
    pub(crate) fn from_raw(height: usize, width: usize, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), height * width);
        ThresholdMap { height, width, values }
    }

    pub fn uniform(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width])
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Every value raised by `delta`, clamped to the valid range.
    pub fn raised(&self, delta: f64) -> ThresholdMap {
        ThresholdMap {
            height: self.height,
            width: self.width,
            values: self.values.iter().map(|v| (v + delta).clamp(TH_MIN, TH_MAX)).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Threshold<'a> {
    Scalar(f64),
    /// Broadcast over channels.
    Map(&'a ThresholdMap),
}

/// Membrane potentials of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct LifState {
    pub v: Tensor,
}

impl LifState {
    pub fn zeros(channels: usize, height: usize, width: usize) -> Self {
        LifState {
            v: Tensor::zeros(channels, height, width),
        }
    }
}

/// One update of a layer of LIF neurons. Returns the new state and spikes.
pub fn lif_step(state: &LifState, input: &Tensor, threshold: Threshold<'_>, params: &LifParams) -> Result<(LifState, Tensor)> {
    state.v.ensure_shape(input)?;
    if let Threshold::Map(m) = threshold {
        if m.height != input.height || m.width != input.width {
            return Err(Error::Shape(format!(
                "threshold map {}x{} for input {}x{}",
                m.height, m.width, input.height, input.width
            )));
        }
    }
    let mut h = input.clone();
    for (hv, v) in h.data.iter_mut().zip(&state.v.data) {
        *hv += v;
    }
    let mut s = Tensor::zeros(input.channels, input.height, input.width);
    let mut v = Tensor::zeros(input.channels, input.height, input.width);
    integrate(&h, threshold, params, SpikeFn::Heaviside, &mut s, &mut v);
    Ok((LifState { v }, s))
}

/// Spikes and post-spike potentials from membrane potentials `h`.
pub(crate) fn integrate(h: &Tensor, threshold: Threshold<'_>, params: &LifParams, spike: SpikeFn, s: &mut Tensor, v: &mut Tensor) {
    let plane = h.plane();
    for (i, hv) in h.data.iter().enumerate() {
        let th = match threshold {
            Threshold::Scalar(t) => t,
            Threshold::Map(m) => m.values[i % plane],
        };
        let sv = spike.apply(hv - th);
        s.data[i] = sv;
        v.data[i] = params.v_reset * sv + (hv / params.tau) * (1.0 - sv);
    }
}
