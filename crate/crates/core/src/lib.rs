pub mod cli;
pub mod ded;
pub mod dtsnn;
pub mod error;
pub mod event;
pub mod evio;
pub mod filters;
pub mod frame;
pub mod metrics;
pub mod simulator;
pub mod window;

pub use error::{Error, Result};
pub use event::{Event, EventStream, Geometry, Label, LabeledEventStream, Polarity};
pub use frame::{binarize, events_at_pixels, BinaryFrame, TimeWindow};
pub use window::{window_partition, WindowFrames, WindowSequence};
