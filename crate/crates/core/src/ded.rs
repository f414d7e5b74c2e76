//! Ground-truth extraction from two co-registered samplings.
//!
//! Stage one keeps, per window and polarity, only the pixels that fired in
//! both streams (the bitwise AND of the two occupancy frames). Stage two
//! rejects retained events whose spatiotemporal neighbourhood is too sparse
//! or too spread out in time: for each event the retained events inside a
//! Chebyshev radius over `n` consecutive windows are collected, and the event
//! survives iff their count reaches `min_count` and the mean gap between
//! consecutive timestamps is at most `tau_corr_us`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Event, EventStream, Label, LabeledEventStream, Polarity};
use crate::frame::{binarize, BinaryFrame};
use crate::simulator::DualStream;
use crate::window::{window_bounds, window_count};

/// How the `n` context windows are placed around an event's own window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ContextMode {
    Centered,
    Trailing,
}

/// Which stream's events make up the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GtSource {
    Stream1,
    Stream2,
    /// Events of both streams, exact duplicates collapsed.
    Union,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DedParams {
    pub dt_us: u64,
    pub n_windows: usize,
    pub radius: u16,
    pub min_count: usize,
    pub tau_corr_us: u64,
    pub context: ContextMode,
    pub source: GtSource,
}

impl Default for DedParams {
    fn default() -> Self {
        DedParams {
            dt_us: 10_000,
            n_windows: 3,
            radius: 2,
            min_count: 3,
            tau_corr_us: 10_000,
            context: ContextMode::Centered,
            source: GtSource::Stream1,
        }
    }
}

impl DedParams {
    pub fn validate(&self) -> Result<()> {
        if self.dt_us == 0 {
            return Err(Error::invalid("dt must be positive"));
        }
        if self.n_windows == 0 {
            return Err(Error::invalid("n_windows must be >= 1"));
        }
        if self.min_count == 0 {
            return Err(Error::invalid("min_count must be >= 1"));
        }
        if self.tau_corr_us == 0 {
            return Err(Error::invalid("tau_corr must be positive"));
        }
        Ok(())
    }

    /// Inclusive window range used as context for window `k` of `total`.
    pub fn context_range(&self, k: usize, total: usize) -> (usize, usize) {
        let last = total.saturating_sub(1);
        match self.context {
            ContextMode::Centered => {
                let lo = k.saturating_sub((self.n_windows - 1) / 2);
                (lo, (k + self.n_windows / 2).min(last))
            }
            ContextMode::Trailing => (k.saturating_sub(self.n_windows - 1), k.min(last)),
        }
    }
}

/// Which stages of the pipeline run. Both on is the full method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stages {
    pub spatial: bool,
    pub correlation: bool,
}

impl Stages {
    pub const FULL: Stages = Stages {
        spatial: true,
        correlation: true,
    };
    pub const SPATIAL_ONLY: Stages = Stages {
        spatial: true,
        correlation: false,
    };
    pub const CORRELATION_ONLY: Stages = Stages {
        spatial: false,
        correlation: true,
    };
}

/// Pixels set in both frames.
pub fn spatial_similarity(f1: &BinaryFrame, f2: &BinaryFrame) -> Result<BinaryFrame> {
    f1.ensure_compatible(f2)?;
    Ok(f1.zip_words(f2, |a, b| a & b))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationStat {
    pub count: usize,
    /// Mean absolute gap between consecutive sorted timestamps; +inf below two events.
    pub mean_gap: f64,
}

/// Count and mean consecutive gap of time-sorted timestamps.
pub fn correlation_stat(sorted_ts: &[u64]) -> CorrelationStat {
    let count = sorted_ts.len();
    let mean_gap = if count < 2 {
        f64::INFINITY
    } else {
        let total: u64 = sorted_ts.windows(2).map(|w| w[1].abs_diff(w[0])).sum();
        total as f64 / (count - 1) as f64
    };
    CorrelationStat { count, mean_gap }
}

#[derive(Clone)]
struct CellGrid {
    count: Vec<u32>,
    min: Vec<u64>,
    max: Vec<u64>,
    touched: Vec<usize>,
}

impl CellGrid {
    fn new(pixels: usize) -> Self {
        CellGrid {
            count: vec![0; pixels],
            min: vec![u64::MAX; pixels],
            max: vec![0; pixels],
            touched: Vec::new(),
        }
    }

    fn add(&mut self, i: usize, t: u64) {
        if self.count[i] == 0 {
            self.touched.push(i);
        }
        self.count[i] += 1;
        self.min[i] = self.min[i].min(t);
        self.max[i] = self.max[i].max(t);
    }

    fn clear(&mut self) {
        for &i in &self.touched {
            self.count[i] = 0;
            self.min[i] = u64::MAX;
            self.max[i] = 0;
        }
        self.touched.clear();
    }
}

/// Survival mask of the second stage over `events`.
///
/// Events of a time-sorted sequence have a contiguous range per window, so
/// only the grids of the current context are kept. For sorted timestamps the
/// sum of consecutive gaps telescopes to `max - min`, which is what each
/// grid cell stores.
pub fn correlation_mask(stream: &EventStream, params: &DedParams) -> Result<Vec<bool>> {
    params.validate()?;
    let g = stream.geometry();
    let events = stream.events();
    let total = window_count(stream.duration(), params.dt_us);
    let mut keep = vec![false; events.len()];
    for polarity in Polarity::BOTH {
        let idx: Vec<usize> = (0..events.len()).filter(|&i| events[i].p == polarity).collect();
        // Start offset in `idx` of every window, plus a sentinel.
        let mut starts = vec![0usize; total + 1];
        for k in 0..=total {
            let t0 = k as u64 * params.dt_us;
            starts[k] = idx.partition_point(|&i| events[i].t < t0);
        }
        let mut ring: VecDeque<(usize, CellGrid)> = VecDeque::new();
        let mut pool: Vec<CellGrid> = Vec::new();
        for k in 0..total {
            if starts[k] == starts[k + 1] {
                continue;
            }
            let (lo, hi) = params.context_range(k, total);
            while ring.front().is_some_and(|(w, _)| *w < lo) {
                let (_, mut grid) = ring.pop_front().unwrap();
                grid.clear();
                pool.push(grid);
            }
            let mut next = ring.back().map_or(lo, |(w, _)| w + 1).max(lo);
            while next <= hi {
                let mut grid = pool.pop().unwrap_or_else(|| CellGrid::new(g.pixel_count()));
                for &i in &idx[starts[next]..starts[next + 1]] {
                    let e = events[i];
                    grid.add(g.index(e.x, e.y), e.t);
                }
                ring.push_back((next, grid));
                next += 1;
            }
            for &i in &idx[starts[k]..starts[k + 1]] {
                let e = events[i];
                let (x0, x1) = (e.x.saturating_sub(params.radius), e.x.saturating_add(params.radius).min(g.width - 1));
                let (y0, y1) = (e.y.saturating_sub(params.radius), e.y.saturating_add(params.radius).min(g.height - 1));
                let (mut n, mut tmin, mut tmax) = (0u64, u64::MAX, 0u64);
                for (_, grid) in &ring {
                    for y in y0..=y1 {
                        let row = g.index(0, y);
                        for x in x0..=x1 {
                            let c = row + x as usize;
                            if grid.count[c] > 0 {
                                n += grid.count[c] as u64;
                                tmin = tmin.min(grid.min[c]);
                                tmax = tmax.max(grid.max[c]);
                            }
                        }
                    }
                }
                keep[i] = n >= params.min_count as u64
                    && n >= 2
                    && tmax - tmin <= params.tau_corr_us.saturating_mul(n - 1);
            }
        }
    }
    Ok(keep)
}

/// Second stage as a stream filter.
pub fn correlation_filter(x_star_events: &EventStream, params: &DedParams) -> Result<EventStream> {
    let keep = correlation_mask(x_star_events, params)?;
    let events = x_star_events
        .events()
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(e, _)| *e)
        .collect();
    Ok(EventStream::from_parts_unchecked(
        x_star_events.geometry(),
        x_star_events.duration(),
        events,
    ))
}

/// Mask over `base` of events whose pixel is set in the AND of both streams'
/// frames for the event's window and polarity.
pub fn spatial_mask(base: &EventStream, s1: &EventStream, s2: &EventStream, dt_us: u64) -> Result<Vec<bool>> {
    if dt_us == 0 {
        return Err(Error::invalid("dt must be positive"));
    }
    s1.geometry().ensure_same(&s2.geometry())?;
    base.geometry().ensure_same(&s1.geometry())?;
    let duration = base.duration().max(s1.duration()).max(s2.duration());
    let events = base.events();
    let mut keep = vec![false; events.len()];
    for k in 0..window_count(duration, dt_us) {
        let w = window_bounds(k, dt_us);
        let range = base.time_range(w.start, w.end);
        if range.is_empty() {
            continue;
        }
        for p in Polarity::BOTH {
            let x_star = spatial_similarity(&binarize(s1, w, p), &binarize(s2, w, p))?;
            if x_star.is_empty() {
                continue;
            }
            for i in range.clone() {
                let e = events[i];
                if e.p == p && x_star.get(e.x, e.y) {
                    keep[i] = true;
                }
            }
        }
    }
    Ok(keep)
}

fn base_stream(dual: &DualStream, source: GtSource) -> EventStream {
    match source {
        GtSource::Stream1 => dual.s1.stream().clone(),
        GtSource::Stream2 => dual.s2.stream().clone(),
        GtSource::Union => {
            let mut events: Vec<Event> = dual.s1.events().iter().chain(dual.s2.events()).copied().collect();
            events.sort();
            events.dedup();
            let duration = dual.s1.duration().max(dual.s2.duration());
            EventStream::from_parts_unchecked(dual.s1.geometry(), duration, events)
        }
    }
}

/// Full method: labels every event of the chosen base stream signal or noise.
pub fn ded_pipeline(dual: &DualStream, params: &DedParams) -> Result<LabeledEventStream> {
    ded_with_stages(dual, params, Stages::FULL)
}

/// Pipeline with either stage switched off, for ablations.
pub fn ded_with_stages(dual: &DualStream, params: &DedParams, stages: Stages) -> Result<LabeledEventStream> {
    params.validate()?;
    dual.s1.geometry().ensure_same(&dual.s2.geometry())?;
    let base = base_stream(dual, params.source);
    let mut keep = if stages.spatial {
        spatial_mask(&base, dual.s1.stream(), dual.s2.stream(), params.dt_us)?
    } else {
        vec![true; base.len()]
    };
    if stages.correlation {
        let retained: Vec<usize> = (0..base.len()).filter(|&i| keep[i]).collect();
        let sub = EventStream::from_parts_unchecked(
            base.geometry(),
            base.duration(),
            retained.iter().map(|&i| base.events()[i]).collect(),
        );
        let survive = correlation_mask(&sub, params)?;
        for (&i, s) in retained.iter().zip(survive) {
            keep[i] = s;
        }
    }
    let labels = keep.into_iter().map(Label::from_keep).collect();
    LabeledEventStream::new(base, labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::Geometry;
    use crate::frame::TimeWindow;

    fn frame(px: &[(u16, u16)]) -> BinaryFrame {
        BinaryFrame::from_pixels(
            Geometry::new(8, 8),
            Polarity::Positive,
            TimeWindow::new(0, 10).unwrap(),
            px.iter().copied(),
        )
    }

    #[test]
    fn intersection_cases() {
        let f = frame(&[(1, 1), (2, 2)]);
        assert_eq!(spatial_similarity(&f, &f).unwrap(), f);
        assert!(spatial_similarity(&f, &frame(&[(5, 5)])).unwrap().is_empty());
        let got = spatial_similarity(&f, &frame(&[(2, 2), (3, 3)])).unwrap();
        assert_eq!(got.pixels().collect::<Vec<_>>(), vec![(2, 2)]);
        let other = BinaryFrame::zeros(Geometry::new(8, 8), Polarity::Negative, TimeWindow::new(0, 10).unwrap());
        assert!(spatial_similarity(&f, &other).is_err());
    }

    #[test]
    fn stat_arithmetic() {
        assert_eq!(correlation_stat(&[0, 10, 20]), CorrelationStat { count: 3, mean_gap: 10.0 });
        let single = correlation_stat(&[5]);
        assert_eq!(single.count, 1);
        assert!(single.mean_gap.is_infinite());
        assert!((correlation_stat(&[0, 1, 2, 100]).mean_gap - 100.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn isolated_events_are_removed() {
        let g = Geometry::new(32, 32);
        let p = Polarity::Positive;
        let s = EventStream::from_unsorted(
            g,
            100_000,
            vec![Event::new(5_000, 3, 3, p), Event::new(40_000, 20, 20, p), Event::new(40_010, 20, 20, p)],
        )
        .unwrap();
        assert!(correlation_filter(&s, &DedParams::default()).unwrap().is_empty());
    }

    #[test]
    fn context_ranges_clamp() {
        let p = DedParams::default();
        assert_eq!(p.context_range(0, 10), (0, 1));
        assert_eq!(p.context_range(5, 10), (4, 6));
        assert_eq!(p.context_range(9, 10), (8, 9));
        let t = DedParams {
            context: ContextMode::Trailing,
            ..p
        };
        assert_eq!(t.context_range(1, 10), (0, 1));
        assert_eq!(t.context_range(5, 10), (3, 5));
    }

    #[test]
    fn invalid_params() {
        let s = EventStream::empty(Geometry::new(4, 4), 100);
        for bad in [
            DedParams { dt_us: 0, ..Default::default() },
            DedParams { n_windows: 0, ..Default::default() },
            DedParams { min_count: 0, ..Default::default() },
            DedParams { tau_corr_us: 0, ..Default::default() },
        ] {
            assert!(correlation_filter(&s, &bad).is_err());
        }
    }
}
