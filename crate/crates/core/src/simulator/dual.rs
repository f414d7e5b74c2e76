use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::{render_signal_events, sample_ba_noise, NoiseParams, PixelModelParams, Scene};
use crate::error::{Error, Result};
use crate::event::{Event, Label, LabeledEventStream};

/// Two co-registered samplings of one scene: a shared signal component and
/// independent noise.
#[derive(Debug, Clone, PartialEq)]
pub struct DualStream {
    pub s1: LabeledEventStream,
    pub s2: LabeledEventStream,
}

impl DualStream {
    pub fn new(s1: LabeledEventStream, s2: LabeledEventStream) -> Result<Self> {
        s1.geometry().ensure_same(&s2.geometry())?;
        Ok(DualStream { s1, s2 })
    }
}

const JITTER_STREAM: u64 = 0x6a69_7474_6572;

pub fn dual_sample(
    scene: &Scene,
    pix: &PixelModelParams,
    noise: &NoiseParams,
    seed1: u64,
    seed2: u64,
    jitter_sigma_us: f64,
) -> Result<DualStream> {
    if seed1 == seed2 {
        return Err(Error::invalid("dual sampling needs two distinct noise seeds"));
    }
    if !(jitter_sigma_us >= 0.0) || !jitter_sigma_us.is_finite() {
        return Err(Error::invalid("jitter sigma must be >= 0"));
    }
    let signal = render_signal_events(scene, pix)?;
    let one = |seed: u64| -> Result<LabeledEventStream> {
        let noise = sample_ba_noise(&NoiseParams { seed, ..noise.clone() }, scene.geometry, scene.duration)?;
        let signal = if jitter_sigma_us > 0.0 {
            jitter(&signal, seed, jitter_sigma_us)?
        } else {
            signal.clone()
        };
        LabeledEventStream::merge(&signal, &noise)
    };
    Ok(DualStream {
        s1: one(seed1)?,
        s2: one(seed2)?,
    })
}

fn jitter(signal: &LabeledEventStream, seed: u64, sigma: f64) -> Result<LabeledEventStream> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(JITTER_STREAM);
    let normal = Normal::new(0.0, sigma).map_err(|e| Error::invalid(e.to_string()))?;
    let last = signal.duration().saturating_sub(1) as f64;
    let pairs = signal
        .iter()
        .map(|(e, l)| {
            let t = (e.t as f64 + normal.sample(&mut rng)).round().clamp(0.0, last) as u64;
            (Event { t, ..*e }, l)
        })
        .collect::<Vec<(Event, Label)>>();
    LabeledEventStream::from_unsorted(signal.geometry(), signal.duration(), pairs)
}
