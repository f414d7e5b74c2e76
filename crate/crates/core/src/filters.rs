//! Classical single-stream baselines. These are representative versions of
//! the density, row/column-memory and time-surface filter families, not
//! ports of any particular published implementation.
//!
//! Every filter labels events (kept = signal) and never alters them. Each is
//! a single causal scan in stream order.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{EventStream, Label, LabeledEventStream};

/// Keep an event when at least `support` earlier events (either polarity)
/// fell within `radius` pixels (Chebyshev) during the trailing `window_us`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityParams {
    pub radius: u16,
    pub window_us: u64,
    pub support: usize,
}

impl Default for DensityParams {
    fn default() -> Self {
        DensityParams {
            radius: 1,
            window_us: 10_000,
            support: 2,
        }
    }
}

/// Keep an event when its row or column memory holds an event at an
/// adjacent (or the same) position within the trailing `window_us`. Each row
/// and column remembers its last `depth` events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RowColParams {
    pub depth: usize,
    pub window_us: u64,
}

impl Default for RowColParams {
    fn default() -> Self {
        RowColParams {
            depth: 2,
            window_us: 5_000,
        }
    }
}

/// Keep an event when the mean decayed time surface of its polarity over
/// the `radius` neighbourhood (own pixel included) reaches `theta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSurfaceParams {
    pub tau_us: f64,
    pub radius: u16,
    pub theta: f64,
}

impl Default for TimeSurfaceParams {
    fn default() -> Self {
        TimeSurfaceParams {
            tau_us: 10_000.0,
            radius: 1,
            theta: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Filter {
    Density(DensityParams),
    RowCol(RowColParams),
    TimeSurface(TimeSurfaceParams),
}

impl Filter {
    pub fn name(&self) -> &'static str {
        match self {
            Filter::Density(_) => "density",
            Filter::RowCol(_) => "rowcol",
            Filter::TimeSurface(_) => "timesurface",
        }
    }

    pub fn apply(&self, stream: &EventStream) -> Result<LabeledEventStream> {
        match self {
            Filter::Density(p) => density_filter(stream, p),
            Filter::RowCol(p) => rowcol_filter(stream, p),
            Filter::TimeSurface(p) => timesurface_filter(stream, p),
        }
    }

    /// One filter of each family at default parameters.
    pub fn defaults() -> [Filter; 3] {
        [
            Filter::Density(DensityParams::default()),
            Filter::RowCol(RowColParams::default()),
            Filter::TimeSurface(TimeSurfaceParams::default()),
        ]
    }
}

fn labeled(stream: &EventStream, keep: Vec<bool>) -> Result<LabeledEventStream> {
    LabeledEventStream::new(stream.clone(), keep.into_iter().map(Label::from_keep).collect())
}

fn span(c: u16, r: u16, len: u16) -> std::ops::RangeInclusive<u16> {
    c.saturating_sub(r)..=c.saturating_add(r).min(len - 1)
}

pub fn density_filter(stream: &EventStream, params: &DensityParams) -> Result<LabeledEventStream> {
    if params.window_us == 0 || params.support == 0 {
        return Err(Error::invalid("density filter needs window > 0 and support >= 1"));
    }
    let g = stream.geometry();
    let mut history: Vec<Vec<u64>> = vec![Vec::new(); g.pixel_count()];
    let mut keep = Vec::with_capacity(stream.len());
    for e in stream.events() {
        let since = e.t.saturating_sub(params.window_us);
        let mut support = 0usize;
        'scan: for y in span(e.y, params.radius, g.height) {
            for x in span(e.x, params.radius, g.width) {
                let h = &history[g.index(x, y)];
                support += h.len() - h.partition_point(|&t| t < since);
                if support >= params.support {
                    break 'scan;
                }
            }
        }
        keep.push(support >= params.support);
        history[g.index(e.x, e.y)].push(e.t);
    }
    labeled(stream, keep)
}

pub fn rowcol_filter(stream: &EventStream, params: &RowColParams) -> Result<LabeledEventStream> {
    if params.window_us == 0 || params.depth == 0 {
        return Err(Error::invalid("row/column filter needs window > 0 and depth >= 1"));
    }
    let g = stream.geometry();
    // Row memories hold (t, x); column memories hold (t, y).
    let mut rows: Vec<VecDeque<(u64, u16)>> = vec![VecDeque::with_capacity(params.depth); g.height as usize];
    let mut cols: Vec<VecDeque<(u64, u16)>> = vec![VecDeque::with_capacity(params.depth); g.width as usize];
    let mut keep = Vec::with_capacity(stream.len());
    for e in stream.events() {
        let recent = |mem: &VecDeque<(u64, u16)>, pos: u16| {
            mem.iter()
                .any(|&(t, q)| e.t - t <= params.window_us && q.abs_diff(pos) <= 1)
        };
        keep.push(recent(&rows[e.y as usize], e.x) || recent(&cols[e.x as usize], e.y));
        for (mem, pos) in [(&mut rows[e.y as usize], e.x), (&mut cols[e.x as usize], e.y)] {
            if mem.len() == params.depth {
                mem.pop_front();
            }
            mem.push_back((e.t, pos));
        }
    }
    labeled(stream, keep)
}

pub fn timesurface_filter(stream: &EventStream, params: &TimeSurfaceParams) -> Result<LabeledEventStream> {
    if !(params.tau_us > 0.0) || !(params.theta > 0.0 && params.theta < 1.0) {
        return Err(Error::invalid("time-surface filter needs tau > 0 and theta in (0, 1)"));
    }
    let g = stream.geometry();
    let mut last: [Vec<Option<u64>>; 2] = [vec![None; g.pixel_count()], vec![None; g.pixel_count()]];
    let mut keep = Vec::with_capacity(stream.len());
    for e in stream.events() {
        let surface = &last[e.p.channel()];
        let (mut sum, mut n) = (0.0, 0usize);
        for y in span(e.y, params.radius, g.height) {
            for x in span(e.x, params.radius, g.width) {
                if let Some(t) = surface[g.index(x, y)] {
                    sum += (-((e.t - t) as f64) / params.tau_us).exp();
                }
                n += 1;
            }
        }
        keep.push(sum / n as f64 >= params.theta);
        last[e.p.channel()][g.index(e.x, e.y)] = Some(e.t);
    }
    labeled(stream, keep)
}
