//! Brute-force reference implementations and stream generators shared by the
//! integration tests. Each reference evaluates its rule literally, with no
//! indexing structures, so it is slow but easy to check by eye.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet};

use evdn::ded::{ContextMode, DedParams, GtSource};
use evdn::filters::{DensityParams, RowColParams, TimeSurfaceParams};
use evdn::simulator::DualStream;
use evdn::{Event, EventStream, Geometry, Label, LabeledEventStream, Polarity};
use rand::Rng;

pub fn polarity(rng: &mut impl Rng) -> Polarity {
    if rng.random_bool(0.5) {
        Polarity::Positive
    } else {
        Polarity::Negative
    }
}

/// `n` events uniform over the sensor and `[0, duration)`.
pub fn uniform_stream(rng: &mut impl Rng, g: Geometry, duration: u64, n: usize) -> EventStream {
    let events = (0..n)
        .map(|_| {
            Event::new(
                rng.random_range(0..duration),
                rng.random_range(0..g.width),
                rng.random_range(0..g.height),
                polarity(rng),
            )
        })
        .collect();
    EventStream::from_unsorted(g, duration, events).unwrap()
}

/// Uniform background plus compact spatiotemporal clusters, so that rules
/// based on local support see both outcomes.
pub fn clustered_stream(rng: &mut impl Rng, g: Geometry, duration: u64, clusters: usize, per_cluster: usize, background: usize) -> EventStream {
    let mut events = uniform_stream(rng, g, duration, background).into_events();
    for _ in 0..clusters {
        let (cx, cy) = (rng.random_range(0..g.width), rng.random_range(0..g.height));
        let t0 = rng.random_range(0..duration);
        let spread_t = rng.random_range(1..=duration / 4 + 1);
        let spread_xy = rng.random_range(0..=3u16);
        for _ in 0..per_cluster {
            let jitter = |c: u16, len: u16, rng: &mut dyn rand::RngCore| {
                let d = rng.random_range(0..=2 * spread_xy as i32) - spread_xy as i32;
                (c as i32 + d).clamp(0, len as i32 - 1) as u16
            };
            let x = jitter(cx, g.width, rng);
            let y = jitter(cy, g.height, rng);
            let t = (t0 + rng.random_range(0..spread_t)).min(duration - 1);
            events.push(Event::new(t, x, y, polarity(rng)));
        }
    }
    EventStream::from_unsorted(g, duration, events).unwrap()
}

fn chebyshev(a: &Event, b: &Event) -> u16 {
    a.x.abs_diff(b.x).max(a.y.abs_diff(b.y))
}

/// Literal second-stage rule over `events` (the first-stage survivors):
/// materialise every window's event list, gather each event's same-polarity
/// neighbours over its context windows, sort their timestamps and average
/// the consecutive gaps.
pub fn brute_correlation(events: &[Event], duration: u64, p: &DedParams) -> Vec<bool> {
    let total = duration.div_ceil(p.dt_us) as i64;
    let mut windows: Vec<Vec<Event>> = vec![Vec::new(); total as usize];
    for e in events {
        windows[(e.t / p.dt_us) as usize].push(*e);
    }
    let n = p.n_windows as i64;
    events
        .iter()
        .map(|e| {
            let k = (e.t / p.dt_us) as i64;
            let (lo, hi) = match p.context {
                ContextMode::Centered => ((k - (n - 1) / 2).max(0), (k + n / 2).min(total - 1)),
                ContextMode::Trailing => ((k - (n - 1)).max(0), k.min(total - 1)),
            };
            let mut ts: Vec<u64> = (lo..=hi)
                .flat_map(|w| &windows[w as usize])
                .filter(|o| o.p == e.p && chebyshev(e, o) <= p.radius)
                .map(|o| o.t)
                .collect();
            ts.sort_unstable();
            let count = ts.len();
            let mean_gap = if count < 2 {
                f64::INFINITY
            } else {
                ts.windows(2).map(|w| (w[1] - w[0]) as f64).sum::<f64>() / (count - 1) as f64
            };
            count >= p.min_count && mean_gap <= p.tau_corr_us as f64
        })
        .collect()
}

/// Pixel set of one window and polarity.
fn occupancy(s: &EventStream, k: u64, dt: u64, p: Polarity) -> HashSet<(u16, u16)> {
    s.events()
        .iter()
        .filter(|e| e.p == p && e.t / dt == k)
        .map(|e| (e.x, e.y))
        .collect()
}

/// Both stages on stream 1, with each window's frames materialised as sets.
pub fn brute_ded(dual: &DualStream, p: &DedParams) -> Vec<Label> {
    assert_eq!(p.source, GtSource::Stream1);
    let (s1, s2) = (dual.s1.stream(), dual.s2.stream());
    let mut x_star: HashMap<(u64, Polarity), HashSet<(u16, u16)>> = HashMap::new();
    let windows = s1.duration().max(s2.duration()).div_ceil(p.dt_us);
    for k in 0..windows {
        for pol in Polarity::BOTH {
            let a = occupancy(s1, k, p.dt_us, pol);
            let b = occupancy(s2, k, p.dt_us, pol);
            x_star.insert((k, pol), a.intersection(&b).copied().collect());
        }
    }
    let first: Vec<usize> = (0..s1.len())
        .filter(|&i| {
            let e = s1.events()[i];
            x_star[&(e.t / p.dt_us, e.p)].contains(&(e.x, e.y))
        })
        .collect();
    let sub: Vec<Event> = first.iter().map(|&i| s1.events()[i]).collect();
    let survive = brute_correlation(&sub, s1.duration(), p);
    let mut labels = vec![Label::Noise; s1.len()];
    for (&i, keep) in first.iter().zip(survive) {
        if keep {
            labels[i] = Label::Signal;
        }
    }
    labels
}

/// Earlier events of either polarity inside the radius and trailing window.
pub fn brute_density(s: &EventStream, p: &DensityParams) -> Vec<bool> {
    let ev = s.events();
    (0..ev.len())
        .map(|i| {
            let e = ev[i];
            let support = ev[..i]
                .iter()
                .filter(|o| chebyshev(&e, o) <= p.radius && e.t - o.t <= p.window_us)
                .count();
            support >= p.support
        })
        .collect()
}

/// Scans back for the last `depth` earlier events sharing the row (or the
/// column) and checks them for a recent neighbour.
pub fn brute_rowcol(s: &EventStream, p: &RowColParams) -> Vec<bool> {
    let ev = s.events();
    (0..ev.len())
        .map(|i| {
            let e = ev[i];
            let mut row = ev[..i].iter().rev().filter(|o| o.y == e.y).take(p.depth);
            let mut col = ev[..i].iter().rev().filter(|o| o.x == e.x).take(p.depth);
            row.any(|o| e.t - o.t <= p.window_us && o.x.abs_diff(e.x) <= 1)
                || col.any(|o| e.t - o.t <= p.window_us && o.y.abs_diff(e.y) <= 1)
        })
        .collect()
}

/// Recomputes each pixel's latest same-polarity timestamp from scratch for
/// every event.
pub fn brute_timesurface(s: &EventStream, p: &TimeSurfaceParams) -> Vec<bool> {
    let ev = s.events();
    let g = s.geometry();
    (0..ev.len())
        .map(|i| {
            let e = ev[i];
            let r = p.radius as i32;
            let (mut sum, mut n) = (0.0, 0usize);
            for dy in -r..=r {
                for dx in -r..=r {
                    let (x, y) = (e.x as i32 + dx, e.y as i32 + dy);
                    if x < 0 || y < 0 || x >= g.width as i32 || y >= g.height as i32 {
                        continue;
                    }
                    n += 1;
                    let last = ev[..i].iter().rev().find(|o| o.p == e.p && o.x as i32 == x && o.y as i32 == y);
                    if let Some(o) = last {
                        sum += (-((e.t - o.t) as f64) / p.tau_us).exp();
                    }
                }
            }
            sum / n as f64 >= p.theta
        })
        .collect()
}

/// `(tp, tn, gp, gn)` by looking every predicted event up in a table of
/// ground-truth labels keyed by the event itself.
pub fn brute_confusion(pred: &LabeledEventStream, gt: &LabeledEventStream) -> (usize, usize, usize, usize) {
    let mut truth: HashMap<Event, Vec<Label>> = HashMap::new();
    for (e, l) in gt.iter() {
        truth.entry(*e).or_default().push(l);
    }
    let mut predicted: HashMap<Event, Vec<Label>> = HashMap::new();
    for (e, l) in pred.iter() {
        predicted.entry(*e).or_default().push(l);
    }
    let (mut tp, mut tn, mut gp, mut gn) = (0, 0, 0, 0);
    for (e, gls) in &truth {
        let pls = &predicted[e];
        assert_eq!(pls.len(), gls.len());
        for (gl, pl) in gls.iter().zip(pls) {
            match gl {
                Label::Signal => {
                    gp += 1;
                    tp += (*pl == Label::Signal) as usize;
                }
                Label::Noise => {
                    gn += 1;
                    tn += (*pl != Label::Signal) as usize;
                }
                Label::Unlabeled => {}
            }
        }
    }
    (tp, tn, gp, gn)
}

pub fn keep_mask(s: &LabeledEventStream) -> Vec<bool> {
    s.labels().iter().map(|l| *l == Label::Signal).collect()
}
