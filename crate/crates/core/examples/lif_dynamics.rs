//! One LIF neuron driven by a constant input, at two thresholds.

use evdn::dtsnn::{lif_step, LifParams, LifState, Tensor, Threshold};

fn main() -> evdn::Result<()> {
    let params = LifParams::default();
    for th in [0.5, 0.9] {
        let mut state = LifState::zeros(1, 1, 1);
        let mut trace = String::new();
        for _ in 0..12 {
            let (next, s) = lif_step(&state, &Tensor::filled(1, 1, 1, 0.3), Threshold::Scalar(th), &params)?;
            trace.push(if s.data[0] == 1.0 { '|' } else { '.' });
            state = next;
        }
        println!("threshold {th}: {trace}");
    }
    Ok(())
}
