//! Partition of a stream into contiguous half-open windows anchored at t = 0.

use std::ops::Range;

use crate::error::{Error, Result};
use crate::event::{EventStream, Polarity};
use crate::frame::{binarize, BinaryFrame, TimeWindow};

/// Frames and event index range of one window.
#[derive(Debug, Clone)]
pub struct WindowFrames {
    pub index: usize,
    pub window: TimeWindow,
    pub negative: BinaryFrame,
    pub positive: BinaryFrame,
    /// Indices into the source stream of the events falling in this window.
    pub events: Range<usize>,
}

impl WindowFrames {
    pub fn frame(&self, polarity: Polarity) -> &BinaryFrame {
        match polarity {
            Polarity::Negative => &self.negative,
            Polarity::Positive => &self.positive,
        }
    }
}

#[derive(Debug, Clone)]
pub struct WindowSequence {
    dt: u64,
    windows: Vec<WindowFrames>,
}

impl WindowSequence {
    pub fn dt(&self) -> u64 {
        self.dt
    }

    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    pub fn windows(&self) -> &[WindowFrames] {
        &self.windows
    }

    pub fn get(&self, k: usize) -> Option<&WindowFrames> {
        self.windows.get(k)
    }

    /// Window holding the event at `event_index` of the source stream.
    pub fn window_of_event(&self, event_index: usize) -> Option<usize> {
        let k = self.windows.partition_point(|w| w.events.end <= event_index);
        (k < self.windows.len() && self.windows[k].events.contains(&event_index)).then_some(k)
    }
}

/// Number of windows of length `dt` needed to cover `duration`.
pub fn window_count(duration: u64, dt: u64) -> usize {
    duration.div_ceil(dt) as usize
}

/// Index of the window containing timestamp `t`.
pub fn window_index(t: u64, dt: u64) -> usize {
    (t / dt) as usize
}

pub fn window_bounds(k: usize, dt: u64) -> TimeWindow {
    TimeWindow {
        start: k as u64 * dt,
        end: (k as u64 + 1) * dt,
    }
}

pub fn window_partition(stream: &EventStream, dt: u64) -> Result<WindowSequence> {
    if dt == 0 {
        return Err(Error::invalid("window length must be positive"));
    }
    let n = window_count(stream.duration(), dt);
    let windows = (0..n)
        .map(|k| {
            let window = window_bounds(k, dt);
            WindowFrames {
                index: k,
                window,
                negative: binarize(stream, window, Polarity::Negative),
                positive: binarize(stream, window, Polarity::Positive),
                events: stream.time_range(window.start, window.end),
            }
        })
        .collect();
    Ok(WindowSequence { dt, windows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, Geometry};

    #[test]
    fn window_counts() {
        let g = Geometry::new(4, 4);
        let s = EventStream::empty(g, 25_000);
        let seq = window_partition(&s, 10_000).unwrap();
        assert_eq!(seq.len(), 3);
        assert_eq!(seq.windows()[2].window, TimeWindow { start: 20_000, end: 30_000 });
        assert_eq!(window_partition(&EventStream::empty(g, 0), 10_000).unwrap().len(), 0);
        assert!(window_partition(&s, 0).is_err());
    }

    #[test]
    fn boundary_event_goes_to_next_window() {
        let g = Geometry::new(4, 4);
        let s = EventStream::new(g, 25_000, vec![Event::new(10_000, 0, 0, Polarity::Positive)]).unwrap();
        let seq = window_partition(&s, 10_000).unwrap();
        assert_eq!(seq.window_of_event(0), Some(1));
        assert!(seq.windows()[0].events.is_empty());
        assert!(seq.windows()[1].positive.get(0, 0));
    }
}
