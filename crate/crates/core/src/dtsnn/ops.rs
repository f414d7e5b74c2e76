use serde::{Deserialize, Serialize};

use super::network::Network;
use super::tensor::Tensor;
use crate::error::Result;

/// Operation counts of one forward pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpCount {
    /// Accumulates triggered by non-zero layer inputs (spikes and event bits).
    pub snn_ops: u64,
    /// Dense multiply-accumulates of the same topology with real-valued
    /// activations.
    pub ann_macs: u64,
    /// `ann_macs / snn_ops`; infinite when nothing fired.
    pub ratio: f64,
}

pub fn op_count(net: &Network, frames: &[Tensor]) -> Result<OpCount> {
    let out = net.forward(frames)?;
    Ok(OpCount {
        snn_ops: out.snn_ops,
        ann_macs: out.ann_macs,
        ratio: if out.snn_ops == 0 {
            f64::INFINITY
        } else {
            out.ann_macs as f64 / out.snn_ops as f64
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dtsnn::network::ThresholdMode;

    #[test]
    fn quiet_input_costs_nothing_sparse() {
        let net = Network::new(ThresholdMode::Dynamic, 3);
        let zero = vec![Tensor::zeros(2, 9, 7); 3];
        let c = op_count(&net, &zero).unwrap();
        assert_eq!(c.snn_ops, 0);
        let busy = vec![Tensor::filled(2, 9, 7, 1.0); 3];
        assert_eq!(op_count(&net, &busy).unwrap().ann_macs, c.ann_macs);
    }
}
