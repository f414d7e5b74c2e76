use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::conv::Conv2d;
use super::lif::{integrate, LifParams, SpikeFn, Threshold, ThresholdMap, TH_MAX, TH_MIN};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const INPUT_CHANNELS: usize = 2;
/// Output channels of the denoising branch, input to output.
pub const EDB_CHANNELS: [usize; 4] = [8, 16, 8, 1];
/// Output channels of the threshold branch; the last layer is analog.
pub const DTB_CHANNELS: [usize; 3] = [8, 8, 1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThresholdMode {
    /// The threshold branch sets the output layer's per-pixel thresholds.
    Dynamic,
    /// The output layer fires at this constant threshold.
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub edb: Vec<Conv2d>,
    pub dtb: Vec<Conv2d>,
    pub mode: ThresholdMode,
    pub lif: LifParams,
    /// Width of the arctan surrogate.
    pub alpha: f64,
}

/// Spikes fired per layer over a whole forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeCounts {
    pub edb: Vec<u64>,
    pub dtb: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForwardOutput {
    /// Binary `1 × H × W` frame per step.
    pub outputs: Vec<Tensor>,
    /// Output-layer thresholds per step (constant maps in fixed mode).
    pub threshold_maps: Vec<ThresholdMap>,
    /// Output-layer membrane potential before the spike decision, per step.
    pub potentials: Vec<Tensor>,
    pub spikes: SpikeCounts,
    /// Accumulate operations actually triggered by non-zero layer inputs.
    pub snn_ops: u64,
    /// Multiply-accumulates of the same topology run densely.
    pub ann_macs: u64,
}

/// Everything the backward pass needs from one time step.
pub(crate) struct StepTrace {
    /// Input of every denoising-branch conv; `edb_in[0]` is the event frame.
    pub edb_in: Vec<Tensor>,
    pub edb_h: Vec<Tensor>,
    pub edb_s: Vec<Tensor>,
    pub dtb_in: Vec<Tensor>,
    pub dtb_h: Vec<Tensor>,
    pub dtb_s: Vec<Tensor>,
    /// Squashed threshold-branch output, dynamic mode only.
    pub sig: Option<Tensor>,
    pub threshold: Tensor,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ForwardOptions {
    pub spike: SpikeFn,
    /// Added to every output-layer threshold, then clamped to the valid range.
    pub threshold_offset: f64,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions {
            spike: SpikeFn::Heaviside,
            threshold_offset: 0.0,
        }
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl Network {
    /// The standard two-branch architecture.
    pub fn new(mode: ThresholdMode, seed: u64) -> Self {
        Self::with_channels(mode, &EDB_CHANNELS, &DTB_CHANNELS, seed).expect("standard architecture is valid")
    }

    /// Custom branch widths; each branch must end in one channel.
    pub fn with_channels(mode: ThresholdMode, edb: &[usize], dtb: &[usize], seed: u64) -> Result<Self> {
        for (name, c) in [("denoising", edb), ("threshold", dtb)] {
            if c.last() != Some(&1) || c.contains(&0) {
                return Err(Error::invalid(format!("{name} branch must be non-empty, end in 1 channel, and have no empty layer")));
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut stack = |channels: &[usize]| {
            let mut cin = INPUT_CHANNELS;
            channels
                .iter()
                .map(|&c| {
                    let mut conv = Conv2d::new(cin, c);
                    conv.init(&mut rng, 1.0, 0.0);
                    cin = c;
                    conv
                })
                .collect::<Vec<_>>()
        };
        let edb = stack(edb);
        let dtb = stack(dtb);
        Ok(Network {
            edb,
            dtb,
            mode,
            lif: LifParams::default(),
            alpha: 2.0,
        })
    }

    pub fn param_count(&self) -> usize {
        self.edb.iter().chain(&self.dtb).map(Conv2d::param_count).sum()
    }

    pub fn uses_threshold_branch(&self) -> bool {
        self.mode == ThresholdMode::Dynamic
    }

    pub(crate) fn check_input(&self, frames: &[Tensor]) -> Result<()> {
        let first = frames.first().ok_or_else(|| Error::invalid("forward needs at least one step"))?;
        if first.channels != INPUT_CHANNELS {
            return Err(Error::Shape(format!("expected {INPUT_CHANNELS} input channels, got {}", first.channels)));
        }
        if let Some(f) = frames.iter().find(|f| f.shape() != first.shape()) {
            return Err(Error::Shape(format!("step shape {:?} differs from {:?}", f.shape(), first.shape())));
        }
        Ok(())
    }

    pub fn forward(&self, frames: &[Tensor]) -> Result<ForwardOutput> {
        self.forward_with(frames, ForwardOptions::default())
    }

    pub fn forward_with(&self, frames: &[Tensor], opts: ForwardOptions) -> Result<ForwardOutput> {
        self.check_input(frames)?;
        let traces = self.run(frames, opts);
        let (h, w) = (frames[0].height, frames[0].width);
        let mut spikes = SpikeCounts {
            edb: vec![0; self.edb.len()],
            dtb: vec![0; self.dtb.len() - 1],
        };
        let (mut snn_ops, mut ann_macs) = (0u64, 0u64);
        let mut out = ForwardOutput {
            outputs: Vec::with_capacity(frames.len()),
            threshold_maps: Vec::with_capacity(frames.len()),
            potentials: Vec::with_capacity(frames.len()),
            spikes: spikes.clone(),
            snn_ops: 0,
            ann_macs: 0,
        };
        for tr in traces {
            for (l, conv) in self.edb.iter().enumerate() {
                spikes.edb[l] += tr.edb_s[l].count_nonzero() as u64;
                snn_ops += conv.sparse_ops(&tr.edb_in[l]);
                ann_macs += conv.dense_macs(h, w);
            }
            if self.uses_threshold_branch() {
                for (l, conv) in self.dtb.iter().enumerate() {
                    if l < tr.dtb_s.len() {
                        spikes.dtb[l] += tr.dtb_s[l].count_nonzero() as u64;
                    }
                    snn_ops += conv.sparse_ops(&tr.dtb_in[l]);
                    ann_macs += conv.dense_macs(h, w);
                }
            }
            let th = tr.threshold.data.clone();
            out.threshold_maps.push(ThresholdMap::new(h, w, th)?);
            out.potentials.push(tr.edb_h.last().unwrap().clone());
            out.outputs.push(tr.edb_s.last().unwrap().clone());
        }
        out.spikes = spikes;
        out.snn_ops = snn_ops;
        out.ann_macs = ann_macs;
        Ok(out)
    }

    /// Runs all steps from zero state and records per-step intermediates.
    pub(crate) fn run(&self, frames: &[Tensor], opts: ForwardOptions) -> Vec<StepTrace> {
        let (h, w) = (frames[0].height, frames[0].width);
        let mut edb_v: Vec<Tensor> = self.edb.iter().map(|c| Tensor::zeros(c.out_channels, h, w)).collect();
        let mut dtb_v: Vec<Tensor> = self.dtb.iter().map(|c| Tensor::zeros(c.out_channels, h, w)).collect();
        let fixed = Threshold::Scalar(self.lif.v_th);
        let mut traces = Vec::with_capacity(frames.len());

        let layer = |conv: &Conv2d, input: &Tensor, v: &mut Tensor, th: Threshold<'_>| -> (Tensor, Tensor) {
            let mut hm = conv.forward(input);
            for (a, b) in hm.data.iter_mut().zip(&v.data) {
                *a += b;
            }
            let mut s = Tensor::zeros(hm.channels, h, w);
            integrate(&hm, th, &self.lif, opts.spike, &mut s, v);
            (hm, s)
        };

        for x in frames {
            let mut dtb_in = Vec::new();
            let (mut dtb_h, mut dtb_s) = (Vec::new(), Vec::new());
            let (threshold, sig) = match self.mode {
                ThresholdMode::Dynamic => {
                    let mut cur = x.clone();
                    let n = self.dtb.len();
                    for l in 0..n - 1 {
                        let (hm, s) = layer(&self.dtb[l], &cur, &mut dtb_v[l], fixed);
                        dtb_in.push(std::mem::replace(&mut cur, s.clone()));
                        dtb_h.push(hm);
                        dtb_s.push(s);
                    }
                    let z = self.dtb[n - 1].forward(&cur);
                    dtb_in.push(cur);
                    let sig = Tensor {
                        data: z.data.iter().map(|v| sigmoid(*v)).collect(),
                        ..z
                    };
                    let th = Tensor {
                        data: sig
                            .data
                            .iter()
                            .map(|s| (TH_MIN + (TH_MAX - TH_MIN) * s + opts.threshold_offset).clamp(TH_MIN, TH_MAX))
                            .collect(),
                        ..sig.clone()
                    };
                    (th, Some(sig))
                }
                ThresholdMode::Fixed(v) => (Tensor::filled(1, h, w, v + opts.threshold_offset), None),
            };

            let mut edb_in = Vec::with_capacity(self.edb.len());
            let (mut edb_h, mut edb_s) = (Vec::new(), Vec::new());
            let mut cur = x.clone();
            let n = self.edb.len();
            for l in 0..n {
                let (hm, s) = if l + 1 == n {
                    let map = ThresholdMap::from_raw(h, w, threshold.data.clone());
                    layer(&self.edb[l], &cur, &mut edb_v[l], Threshold::Map(&map))
                } else {
                    layer(&self.edb[l], &cur, &mut edb_v[l], fixed)
                };
                edb_in.push(std::mem::replace(&mut cur, s.clone()));
                edb_h.push(hm);
                edb_s.push(s);
            }
            traces.push(StepTrace {
                edb_in,
                edb_h,
                edb_s,
                dtb_in,
                dtb_h,
                dtb_s,
                sig,
                threshold,
            });
        }
        traces
    }
}
