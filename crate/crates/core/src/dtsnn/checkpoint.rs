//! Binary checkpoint layout, all integers and floats little-endian:
//!
//! ```text
//! magic "DTSN0001"
//! u32 descriptor length, descriptor JSON (architecture, mode, LIF params)
//! per conv layer, EDB first: u32 in, u32 out, weights f64[out*in*9], bias f64[out]
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::conv::Conv2d;
use super::lif::LifParams;
use super::network::{Network, ThresholdMode, INPUT_CHANNELS};
use crate::error::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"DTSN0001";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct Descriptor {
    input_channels: usize,
    edb: Vec<usize>,
    dtb: Vec<usize>,
    kernel: usize,
    mode: ThresholdMode,
    lif: LifParams,
    alpha: f64,
}

pub fn checkpoint_bytes(net: &Network) -> Vec<u8> {
    let desc = Descriptor {
        input_channels: INPUT_CHANNELS,
        edb: net.edb.iter().map(|c| c.out_channels).collect(),
        dtb: net.dtb.iter().map(|c| c.out_channels).collect(),
        kernel: super::conv::KERNEL,
        mode: net.mode,
        lif: net.lif,
        alpha: net.alpha,
    };
    let json = serde_json::to_vec(&desc).expect("descriptor serializes");
    let mut out = Vec::with_capacity(16 + json.len() + net.param_count() * 8);
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    for c in net.edb.iter().chain(&net.dtb) {
        out.extend_from_slice(&(c.in_channels as u32).to_le_bytes());
        out.extend_from_slice(&(c.out_channels as u32).to_le_bytes());
        for v in c.weight.iter().chain(&c.bias) {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|e| *e <= self.buf.len());
        let end = end.ok_or_else(|| Error::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        Ok(self.take(n * 8)?.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    }
}

pub fn network_from_bytes(buf: &[u8]) -> Result<Network> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(8)? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let len = r.u32()?;
    let desc: Descriptor = serde_json::from_slice(r.take(len)?).map_err(|e| Error::Checkpoint(format!("descriptor: {e}")))?;
    if desc.input_channels != INPUT_CHANNELS || desc.kernel != super::conv::KERNEL {
        return Err(Error::Checkpoint(format!(
            "unsupported input channels {} or kernel {}",
            desc.input_channels, desc.kernel
        )));
    }
    // Validates the branch shapes.
    Network::with_channels(desc.mode, &desc.edb, &desc.dtb, 0).map_err(|e| Error::Checkpoint(e.to_string()))?;
    desc.lif.validate()?;
    let mut layers = |channels: &[usize]| -> Result<Vec<Conv2d>> {
        let mut cin = INPUT_CHANNELS;
        let mut out = Vec::new();
        for &co in channels {
            let (i, o) = (r.u32()?, r.u32()?);
            if (i, o) != (cin, co) {
                return Err(Error::Checkpoint(format!("layer shape {i}->{o}, expected {cin}->{co}")));
            }
            let mut c = Conv2d::new(i, o);
            c.weight = r.f64s(c.weight.len())?;
            c.bias = r.f64s(o)?;
            out.push(c);
            cin = co;
        }
        Ok(out)
    };
    let edb = layers(&desc.edb)?;
    let dtb = layers(&desc.dtb)?;
    if r.pos != buf.len() {
        return Err(Error::Checkpoint(format!("{} trailing bytes", buf.len() - r.pos)));
    }
    Ok(Network {
        edb,
        dtb,
        mode: desc.mode,
        lif: desc.lif,
        alpha: desc.alpha,
    })
}

pub fn save_checkpoint(net: &Network, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, checkpoint_bytes(net)).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<Network> {
    let path = path.as_ref();
    network_from_bytes(&fs::read(path).map_err(|e| Error::io(path, e))?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_corruption() {
        let net = Network::new(ThresholdMode::Fixed(0.5), 11);
        let bytes = checkpoint_bytes(&net);
        assert_eq!(network_from_bytes(&bytes).unwrap(), net);
        let small = Network::with_channels(ThresholdMode::Dynamic, &[4, 1], &[1], 2).unwrap();
        assert_eq!(network_from_bytes(&checkpoint_bytes(&small)).unwrap(), small);
        assert!(network_from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(network_from_bytes(&bad).is_err());
        let mut long = bytes;
        long.push(0);
        assert!(network_from_bytes(&long).is_err());
    }
}
