//! Dynamic-threshold spiking denoiser: a spiking denoising branch whose
//! output layer fires against per-pixel thresholds produced by a second
//! branch, trained with surrogate gradients.

pub mod checkpoint;
pub mod conv;
pub mod data;
pub mod lif;
pub mod network;
pub mod ops;
pub mod tensor;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use conv::Conv2d;
pub use data::{denoise_stream, event_frames, make_samples, make_threshold_labels, signal_frames, SampleConfig};
pub use lif::{lif_step, surrogate_spike_grad, LifParams, LifState, SpikeFn, Threshold, ThresholdMap, TH_MAX, TH_MIN};
pub use network::{ForwardOptions, ForwardOutput, Network, SpikeCounts, ThresholdMode};
pub use ops::{op_count, OpCount};
pub use tensor::Tensor;
pub use train::{fit, train_step, Adam, Gradients, LossComponents, LossWeights, Sample, TrainConfig};
