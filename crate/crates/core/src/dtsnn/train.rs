//! Backpropagation through time with the arctan surrogate, and Adam.
//!
//! Per LIF layer and step, with `σ' = surrogate(H - th)`:
//!
//! ```text
//! dV/dH  = (1 - S)/τ + (V_reset - H/τ)·σ'
//! gH     = gS·σ' + gV·dV/dH            (gV arrives from the next step's H)
//! gth    = -σ'·(gS + gV·(V_reset - H/τ))
//! ```

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::conv::Conv2d;
use super::lif::{smooth_spike, surrogate_spike_grad, SpikeFn, TH_MAX, TH_MIN};
use super::network::{ForwardOptions, Network, StepTrace, ThresholdMode};
use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Probability clamp for the BCE term.
const P_EPS: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub l1: f64,
    pub bce: f64,
    pub threshold: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            l1: 1.0,
            bce: 1.0,
            threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub weights: LossWeights,
    pub alpha: f64,
    pub time_steps: usize,
    /// Optimizer steps run by [`fit`].
    pub iterations: usize,
    /// Seeds the batch order.
    pub seed: u64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            lr: 0.002,
            batch_size: 8,
            weights: LossWeights::default(),
            alpha: 2.0,
            time_steps: 5,
            iterations: 200,
            seed: 0,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let w = &self.weights;
        if !(self.lr > 0.0) || self.batch_size == 0 || self.time_steps == 0 {
            return Err(Error::invalid("training needs lr > 0, batch size >= 1 and T >= 1"));
        }
        if [w.l1, w.bce, w.threshold].iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::invalid("loss weights must be finite and non-negative"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::invalid("surrogate width must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || !(self.eps > 0.0) {
            return Err(Error::invalid("Adam needs betas in [0, 1) and eps > 0"));
        }
        Ok(())
    }
}

/// One training example: `T` input frames (2 channels), and per step a
/// 1-channel signal frame and a 1-channel threshold label map.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub frames: Vec<Tensor>,
    pub gt: Vec<Tensor>,
    pub labels: Vec<Tensor>,
}

impl Sample {
    pub(crate) fn validate(&self, net: &Network) -> Result<()> {
        net.check_input(&self.frames)?;
        let (_, h, w) = self.frames[0].shape();
        let t = self.frames.len();
        if self.gt.len() != t || self.labels.len() != t {
            return Err(Error::Shape(format!(
                "{t} input steps, {} GT steps, {} label steps",
                self.gt.len(),
                self.labels.len()
            )));
        }
        for g in self.gt.iter().chain(&self.labels) {
            if g.shape() != (1, h, w) {
                return Err(Error::Shape(format!("target shape {:?}, expected (1, {h}, {w})", g.shape())));
            }
        }
        if self.gt.iter().flat_map(|g| &g.data).any(|v| *v != 0.0 && *v != 1.0) {
            return Err(Error::invalid("GT frames must be binary"));
        }
        Ok(())
    }
}

/// Loss terms averaged over steps, pixels and the batch.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LossComponents {
    pub l1: f64,
    pub bce: f64,
    pub threshold: f64,
    pub total: f64,
}

impl LossComponents {
    fn add(&mut self, o: &LossComponents) {
        self.l1 += o.l1;
        self.bce += o.bce;
        self.threshold += o.threshold;
        self.total += o.total;
    }

    fn scale(&mut self, k: f64) {
        self.l1 *= k;
        self.bce *= k;
        self.threshold *= k;
        self.total *= k;
    }
}

/// Parameter gradients, laid out like the network's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub edb: Vec<(Vec<f64>, Vec<f64>)>,
    pub dtb: Vec<(Vec<f64>, Vec<f64>)>,
}

impl Gradients {
    pub fn zeros(net: &Network) -> Self {
        let z = |c: &Conv2d| (vec![0.0; c.weight.len()], vec![0.0; c.bias.len()]);
        Gradients {
            edb: net.edb.iter().map(z).collect(),
            dtb: net.dtb.iter().map(z).collect(),
        }
    }

    /// Flattened in the order of [`flat_params`].
    pub fn flatten(&self) -> Vec<f64> {
        self.edb
            .iter()
            .chain(&self.dtb)
            .flat_map(|(w, b)| w.iter().chain(b))
            .copied()
            .collect()
    }

    fn add(&mut self, o: &Gradients) {
        for (a, b) in self.edb.iter_mut().chain(self.dtb.iter_mut()).zip(o.edb.iter().chain(&o.dtb)) {
            a.0.iter_mut().zip(&b.0).for_each(|(x, y)| *x += y);
            a.1.iter_mut().zip(&b.1).for_each(|(x, y)| *x += y);
        }
    }

    fn scale(&mut self, k: f64) {
        for (w, b) in self.edb.iter_mut().chain(self.dtb.iter_mut()) {
            w.iter_mut().chain(b.iter_mut()).for_each(|v| *v *= k);
        }
    }
}

/// Every weight and bias, EDB layers first, each layer weights then bias.
pub fn flat_params(net: &Network) -> Vec<f64> {
    net.edb
        .iter()
        .chain(&net.dtb)
        .flat_map(|c| c.weight.iter().chain(&c.bias))
        .copied()
        .collect()
}

pub fn set_flat_params(net: &mut Network, flat: &[f64]) -> Result<()> {
    if flat.len() != net.param_count() {
        return Err(Error::Shape(format!("{} values for {} parameters", flat.len(), net.param_count())));
    }
    let mut it = flat.iter();
    for c in net.edb.iter_mut().chain(net.dtb.iter_mut()) {
        c.weight.iter_mut().chain(c.bias.iter_mut()).for_each(|v| *v = *it.next().unwrap());
    }
    Ok(())
}

/// Loss of one sample without gradients.
pub fn sample_loss(net: &Network, sample: &Sample, weights: &LossWeights, spike: SpikeFn) -> Result<LossComponents> {
    sample.validate(net)?;
    let traces = net.run(&sample.frames, ForwardOptions { spike, threshold_offset: 0.0 });
    Ok(loss_and_grads(net, sample, &traces, weights, false).0)
}

/// Loss and parameter gradients of one sample.
pub fn sample_gradients(net: &Network, sample: &Sample, weights: &LossWeights, spike: SpikeFn) -> Result<(LossComponents, Gradients)> {
    sample.validate(net)?;
    let traces = net.run(&sample.frames, ForwardOptions { spike, threshold_offset: 0.0 });
    let (loss, grads) = loss_and_grads(net, sample, &traces, weights, true);
    Ok((loss, grads.expect("gradients requested")))
}

struct LayerGrad<'a> {
    h: &'a Tensor,
    s: &'a Tensor,
}

/// Backward through one LIF nonlinearity. `g_s` is the gradient on the
/// spikes, `g_v` the carry from the next step, `g_h_extra` any direct
/// gradient on `H`. Updates `g_v` to the carry for the previous step and
/// returns `(gH, gth)` where `gth` is per element.
fn lif_backward(
    net: &Network,
    lg: LayerGrad<'_>,
    th: &dyn Fn(usize) -> f64,
    g_s: &Tensor,
    g_v: &mut Tensor,
    g_h_extra: Option<&[f64]>,
) -> (Tensor, Vec<f64>) {
    let p = &net.lif;
    let n = lg.h.data.len();
    let mut gh = Tensor::zeros(lg.h.channels, lg.h.height, lg.h.width);
    let mut gth = vec![0.0; n];
    for i in 0..n {
        let hv = lg.h.data[i];
        let sv = lg.s.data[i];
        let sg = surrogate_spike_grad(hv - th(i), net.alpha);
        let reset_term = p.v_reset - hv / p.tau;
        let gv = g_v.data[i];
        let mut g = g_s.data[i] * sg + gv * ((1.0 - sv) / p.tau + reset_term * sg);
        gth[i] = -sg * (g_s.data[i] + gv * reset_term);
        if let Some(extra) = g_h_extra {
            g += extra[i];
        }
        gh.data[i] = g;
    }
    // H = V_prev + U, so the carry equals gH.
    g_v.data.copy_from_slice(&gh.data);
    (gh, gth)
}

fn loss_and_grads(
    net: &Network,
    sample: &Sample,
    traces: &[StepTrace],
    w: &LossWeights,
    want_grads: bool,
) -> (LossComponents, Option<Gradients>) {
    let steps = traces.len();
    let (h, wd) = (sample.frames[0].height, sample.frames[0].width);
    let norm = 1.0 / (steps * h * wd) as f64;
    let dynamic = net.mode == ThresholdMode::Dynamic;
    let alpha = net.alpha;
    let mut loss = LossComponents::default();

    // Direct loss gradients per step on output spikes, output H and thresholds.
    let mut g_out = Vec::with_capacity(steps);
    let mut g_hout = Vec::with_capacity(steps);
    let mut g_th_loss = Vec::with_capacity(steps);
    for (t, tr) in traces.iter().enumerate() {
        let s = tr.edb_s.last().unwrap();
        let hout = tr.edb_h.last().unwrap();
        let gt = &sample.gt[t];
        let mut gs = Tensor::zeros(1, h, wd);
        let mut ghd = vec![0.0; h * wd];
        let mut gthd = vec![0.0; h * wd];
        for i in 0..h * wd {
            let (sv, g, th) = (s.data[i], gt.data[i], tr.threshold.data[i]);
            let d = sv - g;
            loss.l1 += d.abs();
            gs.data[i] = w.l1 * d.signum() * (d != 0.0) as u8 as f64 * norm;

            let x = hout.data[i] - th;
            let p = smooth_spike(x, alpha).clamp(P_EPS, 1.0 - P_EPS);
            loss.bce -= g * p.ln() + (1.0 - g) * (1.0 - p).ln();
            let dp = (p - g) / (p * (1.0 - p)) * surrogate_spike_grad(x, alpha) * w.bce * norm;
            ghd[i] = dp;
            gthd[i] = -dp;

            if dynamic {
                let d = th - sample.labels[t].data[i];
                loss.threshold += d.abs();
                gthd[i] += w.threshold * d.signum() * (d != 0.0) as u8 as f64 * norm;
            }
        }
        g_out.push(gs);
        g_hout.push(ghd);
        g_th_loss.push(gthd);
    }
    loss.l1 *= norm;
    loss.bce *= norm;
    loss.threshold *= norm;
    loss.total = w.l1 * loss.l1 + w.bce * loss.bce + w.threshold * loss.threshold;
    if !want_grads {
        return (loss, None);
    }

    let mut grads = Gradients::zeros(net);
    let mut edb_gv: Vec<Tensor> = net.edb.iter().map(|c| Tensor::zeros(c.out_channels, h, wd)).collect();
    let mut dtb_gv: Vec<Tensor> = net.dtb.iter().map(|c| Tensor::zeros(c.out_channels, h, wd)).collect();
    let fixed_th = net.lif.v_th;
    let last = net.edb.len() - 1;

    for t in (0..steps).rev() {
        let tr = &traces[t];
        let mut g_s = g_out[t].clone();
        let mut g_th_map = g_th_loss[t].clone();
        for l in (0..=last).rev() {
            let lg = LayerGrad {
                h: &tr.edb_h[l],
                s: &tr.edb_s[l],
            };
            let (gh, gth) = if l == last {
                let thr = &tr.threshold.data;
                lif_backward(net, lg, &|i| thr[i % (h * wd)], &g_s, &mut edb_gv[l], Some(&g_hout[t]))
            } else {
                lif_backward(net, lg, &|_| fixed_th, &g_s, &mut edb_gv[l], None)
            };
            if l == last {
                for (a, b) in g_th_map.iter_mut().zip(&gth) {
                    *a += b;
                }
            }
            let (gw, gb) = &mut grads.edb[l];
            net.edb[l].backward_params(&tr.edb_in[l], &gh, gw, gb);
            if l > 0 {
                g_s = net.edb[l].backward_input(&gh);
            }
        }

        if dynamic {
            let sig = tr.sig.as_ref().expect("dynamic trace has squashed output");
            let mut gz = Tensor::zeros(1, h, wd);
            for i in 0..h * wd {
                gz.data[i] = g_th_map[i] * (TH_MAX - TH_MIN) * sig.data[i] * (1.0 - sig.data[i]);
            }
            let dl = net.dtb.len() - 1;
            let (gw, gb) = &mut grads.dtb[dl];
            net.dtb[dl].backward_params(&tr.dtb_in[dl], &gz, gw, gb);
            let mut g_s = net.dtb[dl].backward_input(&gz);
            for l in (0..dl).rev() {
                let lg = LayerGrad {
                    h: &tr.dtb_h[l],
                    s: &tr.dtb_s[l],
                };
                let (gh, _) = lif_backward(net, lg, &|_| fixed_th, &g_s, &mut dtb_gv[l], None);
                let (gw, gb) = &mut grads.dtb[l];
                net.dtb[l].backward_params(&tr.dtb_in[l], &gh, gw, gb);
                if l > 0 {
                    g_s = net.dtb[l].backward_input(&gh);
                }
            }
        }
    }
    (loss, Some(grads))
}

/// Adam moment estimates over the flattened parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl Adam {
    pub fn new(net: &Network) -> Self {
        let n = net.param_count();
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            step: 0,
        }
    }

    pub fn update(&mut self, net: &mut Network, grads: &Gradients, cfg: &TrainConfig) {
        self.step += 1;
        let g = grads.flatten();
        let mut p = flat_params(net);
        let bc1 = 1.0 - cfg.beta1.powi(self.step as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.step as i32);
        for i in 0..p.len() {
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g[i];
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            let mh = self.m[i] / bc1;
            let vh = self.v[i] / bc2;
            p[i] -= cfg.lr * mh / (vh.sqrt() + cfg.eps);
        }
        set_flat_params(net, &p).expect("same network");
    }
}

/// Averages loss and gradients over `batch` (computed in parallel, reduced
/// in order) and applies one Adam update.
pub fn train_step(net: &mut Network, opt: &mut Adam, batch: &[Sample], cfg: &TrainConfig, step: usize) -> Result<LossComponents> {
    cfg.validate()?;
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let frozen = &*net;
    let results: Vec<Result<(LossComponents, Gradients)>> = batch
        .par_iter()
        .map(|s| sample_gradients(frozen, s, &cfg.weights, SpikeFn::Heaviside))
        .collect();
    let mut loss = LossComponents::default();
    let mut grads = Gradients::zeros(net);
    for r in results {
        let (l, g) = r?;
        loss.add(&l);
        grads.add(&g);
    }
    let k = 1.0 / batch.len() as f64;
    loss.scale(k);
    grads.scale(k);
    if !loss.total.is_finite() || grads.flatten().iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFiniteLoss {
            step,
            detail: format!("l1={} bce={} threshold={}", loss.l1, loss.bce, loss.threshold),
        });
    }
    opt.update(net, &grads, cfg);
    Ok(loss)
}

/// Runs `cfg.iterations` Adam steps over batches drawn from `samples` in
/// seeded epoch-shuffled order. `on_step` sees each step's loss.
pub fn fit(net: &mut Network, samples: &[Sample], cfg: &TrainConfig, mut on_step: impl FnMut(usize, &LossComponents)) -> Result<Vec<LossComponents>> {
    cfg.validate()?;
    if samples.is_empty() {
        return Err(Error::invalid("no training samples"));
    }
    if let Some(s) = samples.iter().find(|s| s.frames.len() != cfg.time_steps) {
        return Err(Error::Shape(format!("sample has {} steps, config expects {}", s.frames.len(), cfg.time_steps)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut opt = Adam::new(net);
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut pos = order.len();
    let mut history = Vec::with_capacity(cfg.iterations);
    for step in 0..cfg.iterations {
        let mut batch = Vec::with_capacity(cfg.batch_size);
        for _ in 0..cfg.batch_size {
            if pos == order.len() {
                order.shuffle(&mut rng);
                pos = 0;
            }
            batch.push(samples[order[pos]].clone());
            pos += 1;
        }
        let loss = train_step(net, &mut opt, &batch, cfg, step)?;
        on_step(step, &loss);
        history.push(loss);
    }
    Ok(history)
}
