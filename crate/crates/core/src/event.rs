//! The event record and the streams built from it.
//!
//! Every stream keeps its events in a canonical order: ascending timestamp,
//! then row, then column, then polarity (negative before positive). All
//! pipelines in this crate rely on that order being fixed.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign of the brightness change an event encodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub const BOTH: [Polarity; 2] = [Polarity::Negative, Polarity::Positive];

    pub fn from_bit(bit: u8) -> Option<Self> {
        match bit {
            0 => Some(Polarity::Negative),
            1 => Some(Polarity::Positive),
            _ => None,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Polarity::Negative => 0,
            Polarity::Positive => 1,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Polarity::Negative => Polarity::Positive,
            Polarity::Positive => Polarity::Negative,
        }
    }

    /// Channel index used by frame tensors (0 = negative, 1 = positive).
    pub fn channel(self) -> usize {
        self.bit() as usize
    }
}

/// One timestamped polarity change at a pixel. `t` is in microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    pub t: u64,
    pub x: u16,
    pub y: u16,
    pub p: Polarity,
}

impl Event {
    pub fn new(t: u64, x: u16, y: u16, p: Polarity) -> Self {
        Event { t, x, y, p }
    }

    fn key(&self) -> (u64, u16, u16, Polarity) {
        (self.t, self.y, self.x, self.p)
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key().cmp(&other.key())
    }
}

/// Sensor size in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Geometry {
    pub width: u16,
    pub height: u16,
}

impl Geometry {
    pub fn new(width: u16, height: u16) -> Self {
        Geometry { width, height }
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    pub fn contains(&self, x: u16, y: u16) -> bool {
        x < self.width && y < self.height
    }

    /// Row-major pixel index.
    pub fn index(&self, x: u16, y: u16) -> usize {
        y as usize * self.width as usize + x as usize
    }

    pub(crate) fn ensure_same(&self, other: &Geometry) -> Result<()> {
        if self != other {
            return Err(Error::GeometryMismatch {
                left: (self.width, self.height),
                right: (other.width, other.height),
            });
        }
        Ok(())
    }
}

/// A time-ordered, bounds-checked sequence of events.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EventStream {
    geometry: Geometry,
    duration: u64,
    events: Vec<Event>,
}

impl EventStream {
    /// Builds a stream from events that are already in canonical order.
    pub fn new(geometry: Geometry, duration: u64, events: Vec<Event>) -> Result<Self> {
        validate(&geometry, duration, &events)?;
        Ok(EventStream {
            geometry,
            duration,
            events,
        })
    }

    /// Builds a stream after sorting `events` into canonical order.
    pub fn from_unsorted(geometry: Geometry, duration: u64, mut events: Vec<Event>) -> Result<Self> {
        events.sort();
        Self::new(geometry, duration, events)
    }

    pub fn empty(geometry: Geometry, duration: u64) -> Self {
        EventStream {
            geometry,
            duration,
            events: Vec::new(),
        }
    }

    pub(crate) fn from_parts_unchecked(geometry: Geometry, duration: u64, events: Vec<Event>) -> Self {
        debug_assert!(validate(&geometry, duration, &events).is_ok());
        EventStream {
            geometry,
            duration,
            events,
        }
    }

    pub fn geometry(&self) -> Geometry {
        self.geometry
    }

    pub fn duration(&self) -> u64 {
        self.duration
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn into_events(self) -> Vec<Event> {
        self.events
    }

    /// Index range of events with `t0 <= t < t1`.
    pub fn time_range(&self, t0: u64, t1: u64) -> std::ops::Range<usize> {
        let lo = self.events.partition_point(|e| e.t < t0);
        let hi = self.events.partition_point(|e| e.t < t1);
        lo..hi.max(lo)
    }

    /// Same stream with every polarity flipped, re-sorted into canonical order.
    pub fn flip_polarity(&self) -> EventStream {
        let mut events: Vec<Event> = self.events.iter().map(|e| Event { p: e.p.flipped(), ..*e }).collect();
        events.sort();
        EventStream::from_parts_unchecked(self.geometry, self.duration, events)
    }
}

fn validate(geometry: &Geometry, duration: u64, events: &[Event]) -> Result<()> {
    for (i, e) in events.iter().enumerate() {
        if !geometry.contains(e.x, e.y) || e.t >= duration {
            return Err(Error::OutOfBounds {
                index: i,
                t: e.t,
                x: e.x,
                y: e.y,
                width: geometry.width,
                height: geometry.height,
                duration,
            });
        }
        if i > 0 && events[i - 1] > *e {
            return Err(Error::NonMonotone {
                index: i,
                prev: events[i - 1].t,
                next: e.t,
            });
        }
    }
    Ok(())
}

/// Ground-truth class of an event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Label {
    Noise,
    Signal,
    Unlabeled,
}

impl Label {
    pub fn code(self) -> u8 {
        match self {
            Label::Noise => 0,
            Label::Signal => 1,
            Label::Unlabeled => 255,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(Label::Noise),
            1 => Some(Label::Signal),
            255 => Some(Label::Unlabeled),
            _ => None,
        }
    }

    pub fn from_keep(keep: bool) -> Self {
        if keep {
            Label::Signal
        } else {
            Label::Noise
        }
    }
}

/// A stream plus one label per event.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledEventStream {
    stream: EventStream,
    labels: Vec<Label>,
}

impl LabeledEventStream {
    pub fn new(stream: EventStream, labels: Vec<Label>) -> Result<Self> {
        if labels.len() != stream.len() {
            return Err(Error::LabelCount {
                labels: labels.len(),
                events: stream.len(),
            });
        }
        Ok(LabeledEventStream { stream, labels })
    }

    pub fn unlabeled(stream: EventStream) -> Self {
        let labels = vec![Label::Unlabeled; stream.len()];
        LabeledEventStream { stream, labels }
    }

    pub fn uniform(stream: EventStream, label: Label) -> Self {
        let labels = vec![label; stream.len()];
        LabeledEventStream { stream, labels }
    }

    /// Sorts (event, label) pairs into canonical order. Equal events keep
    /// their relative input order.
    pub fn from_unsorted(geometry: Geometry, duration: u64, mut pairs: Vec<(Event, Label)>) -> Result<Self> {
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let (events, labels): (Vec<_>, Vec<_>) = pairs.into_iter().unzip();
        let stream = EventStream::new(geometry, duration, events)?;
        Ok(LabeledEventStream { stream, labels })
    }

    /// Merges two labeled streams of the same geometry. On equal events the
    /// left stream's entries come first.
    pub fn merge(a: &LabeledEventStream, b: &LabeledEventStream) -> Result<Self> {
        a.geometry().ensure_same(&b.geometry())?;
        let duration = a.stream.duration.max(b.stream.duration);
        let mut events = Vec::with_capacity(a.len() + b.len());
        let mut labels = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        let (ea, eb) = (a.stream.events(), b.stream.events());
        while i < ea.len() || j < eb.len() {
            let take_a = j >= eb.len() || (i < ea.len() && ea[i] <= eb[j]);
            if take_a {
                events.push(ea[i]);
                labels.push(a.labels[i]);
                i += 1;
            } else {
                events.push(eb[j]);
                labels.push(b.labels[j]);
                j += 1;
            }
        }
        Ok(LabeledEventStream {
            stream: EventStream::from_parts_unchecked(a.geometry(), duration, events),
            labels,
        })
    }

    pub fn stream(&self) -> &EventStream {
        &self.stream
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn events(&self) -> &[Event] {
        self.stream.events()
    }

    pub fn geometry(&self) -> Geometry {
        self.stream.geometry()
    }

    pub fn duration(&self) -> u64 {
        self.stream.duration()
    }

    pub fn len(&self) -> usize {
        self.stream.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stream.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Event, Label)> + '_ {
        self.stream.events().iter().zip(self.labels.iter().copied())
    }

    pub fn into_parts(self) -> (EventStream, Vec<Label>) {
        (self.stream, self.labels)
    }

    /// Events carrying `label`, as a plain stream.
    pub fn select(&self, label: Label) -> EventStream {
        let events = self
            .iter()
            .filter(|(_, l)| *l == label)
            .map(|(e, _)| *e)
            .collect();
        EventStream::from_parts_unchecked(self.geometry(), self.duration(), events)
    }

    pub fn count(&self, label: Label) -> usize {
        self.labels.iter().filter(|l| **l == label).count()
    }
}
