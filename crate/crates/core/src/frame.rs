//! Binary occupancy frames: one bit per pixel for one polarity and one
//! half-open time window.

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Geometry, Polarity};

/// Half-open time interval `[start, end)` in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TimeWindow {
    pub start: u64,
    pub end: u64,
}

impl TimeWindow {
    pub fn new(start: u64, end: u64) -> Result<Self> {
        if start >= end {
            return Err(Error::invalid(format!("empty time window [{start}, {end})")));
        }
        Ok(TimeWindow { start, end })
    }

    pub fn contains(&self, t: u64) -> bool {
        self.start <= t && t < self.end
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryFrame {
    geometry: Geometry,
    polarity: Polarity,
    window: TimeWindow,
    words: Vec<u64>,
}

impl BinaryFrame {
    pub fn zeros(geometry: Geometry, polarity: Polarity, window: TimeWindow) -> Self {
        let words = vec![0; geometry.pixel_count().div_ceil(64)];
        BinaryFrame {
            geometry,
            polarity,
            window,
            words,
        }
    }

    /// Frame with the given pixels set.
    pub fn from_pixels(
        geometry: Geometry,
        polarity: Polarity,
        window: TimeWindow,
        pixels: impl IntoIterator<Item = (u16, u16)>,
    ) -> Self {
        let mut f = Self::zeros(geometry, polarity, window);
        for (x, y) in pixels {
            f.set(x, y);
        }
        f
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn polarity(&self) -> Polarity {
        self.polarity
    }

    pub fn window(&self) -> TimeWindow {
        self.window
    }

    pub fn get(&self, x: u16, y: u16) -> bool {
        self.get_index(self.geometry.index(x, y))
    }

    pub fn get_index(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, x: u16, y: u16) {
        let i = self.geometry.index(x, y);
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|w| *w == 0)
    }

    /// Set pixels as `(x, y)` in row-major order.
    pub fn pixels(&self) -> impl Iterator<Item = (u16, u16)> + '_ {
        let w = self.geometry.width as usize;
        (0..self.geometry.pixel_count())
            .filter(move |i| self.get_index(*i))
            .map(move |i| ((i % w) as u16, (i / w) as u16))
    }

    /// Checks that two frames describe the same pixels, channel and window.
    pub fn ensure_compatible(&self, other: &BinaryFrame) -> Result<()> {
        self.geometry.ensure_same(&other.geometry)?;
        if self.polarity != other.polarity {
            return Err(Error::FrameMismatch(format!(
                "polarity {:?} vs {:?}",
                self.polarity, other.polarity
            )));
        }
        if self.window != other.window {
            return Err(Error::FrameMismatch(format!(
                "window {:?} vs {:?}",
                self.window, other.window
            )));
        }
        Ok(())
    }

    pub(crate) fn words(&self) -> &[u64] {
        &self.words
    }

    pub(crate) fn zip_words(&self, other: &BinaryFrame, op: impl Fn(u64, u64) -> u64) -> BinaryFrame {
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| op(*a, *b))
            .collect();
        BinaryFrame {
            geometry: self.geometry,
            polarity: self.polarity,
            window: self.window,
            words,
        }
    }
}

/// Occupancy of `polarity` events inside `window`.
pub fn binarize(stream: &EventStream, window: TimeWindow, polarity: Polarity) -> BinaryFrame {
    let mut frame = BinaryFrame::zeros(stream.geometry(), polarity, window);
    let range = stream.time_range(window.start, window.end);
    for e in &stream.events()[range] {
        if e.p == polarity {
            frame.set(e.x, e.y);
        }
    }
    frame
}

/// Events of `window`/`polarity` whose pixel is set in `mask`, in stream order.
pub fn events_at_pixels(
    stream: &EventStream,
    window: TimeWindow,
    polarity: Polarity,
    mask: &BinaryFrame,
) -> Result<EventStream> {
    stream.geometry().ensure_same(&mask.geometry())?;
    let range = stream.time_range(window.start, window.end);
    let events: Vec<Event> = stream.events()[range]
        .iter()
        .filter(|e| e.p == polarity && mask.get(e.x, e.y))
        .copied()
        .collect();
    Ok(EventStream::from_parts_unchecked(
        stream.geometry(),
        stream.duration(),
        events,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Polarity::{Negative, Positive};

    fn stream(events: &[(u64, u16, u16, Polarity)]) -> EventStream {
        EventStream::from_unsorted(
            Geometry::new(8, 8),
            1000,
            events.iter().map(|&(t, x, y, p)| Event::new(t, x, y, p)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn multiplicity_collapses() {
        let s = stream(&[(1, 1, 1, Positive), (2, 1, 1, Positive), (3, 2, 3, Positive)]);
        let f = binarize(&s, TimeWindow::new(0, 10).unwrap(), Positive);
        assert_eq!(f.pixels().collect::<Vec<_>>(), vec![(1, 1), (2, 3)]);
    }

    #[test]
    fn empty_window_and_channel_separation() {
        let s = stream(&[(5, 1, 1, Negative)]);
        let w = TimeWindow::new(0, 10).unwrap();
        assert!(binarize(&s, w, Positive).is_empty());
        assert!(binarize(&s, TimeWindow::new(10, 20).unwrap(), Negative).is_empty());
        assert_eq!(binarize(&s, w, Negative).count_ones(), 1);
    }

    #[test]
    fn window_is_half_open() {
        let s = stream(&[(10, 0, 0, Positive)]);
        assert!(binarize(&s, TimeWindow::new(0, 10).unwrap(), Positive).is_empty());
        assert!(binarize(&s, TimeWindow::new(10, 20).unwrap(), Positive).get(0, 0));
        assert!(TimeWindow::new(5, 5).is_err());
    }

    #[test]
    fn events_at_pixels_masks() {
        let s = stream(&[(1, 1, 1, Positive), (2, 1, 1, Positive), (3, 2, 3, Positive), (4, 2, 3, Negative)]);
        let w = TimeWindow::new(0, 10).unwrap();
        let identity = binarize(&s, w, Positive);
        assert_eq!(events_at_pixels(&s, w, Positive, &identity).unwrap().len(), 3);
        let zero = BinaryFrame::zeros(s.geometry(), Positive, w);
        assert!(events_at_pixels(&s, w, Positive, &zero).unwrap().is_empty());
        let one = BinaryFrame::from_pixels(s.geometry(), Positive, w, [(1, 1)]);
        let got = events_at_pixels(&s, w, Positive, &one).unwrap();
        assert_eq!(got.events().iter().map(|e| e.t).collect::<Vec<_>>(), vec![1, 2]);
        let other = BinaryFrame::zeros(Geometry::new(4, 4), Positive, w);
        assert!(events_at_pixels(&s, w, Positive, &other).is_err());
    }
}
