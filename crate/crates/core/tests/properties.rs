//! Randomised invariants.

use std::collections::HashSet;

use evdn::ded::{ded_pipeline, spatial_similarity, DedParams};
use evdn::dtsnn::{lif_step, LifParams, LifState, Network, Tensor, Threshold, ThresholdMode};
use evdn::evio::{read_binary, read_text, write_binary, write_text, ReadOptions};
use evdn::metrics::{denoise_accuracy, overlap_rate};
use evdn::simulator::{dual_sample, render_signal_events, DualStream, MovingBar, NoiseParams, PixelModelParams, Scene, SceneKind};
use evdn::window::{window_bounds, window_count};
use evdn::{binarize, events_at_pixels, window_partition, BinaryFrame, Event, EventStream, Geometry, Label, LabeledEventStream, Polarity, TimeWindow};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const G: Geometry = Geometry { width: 12, height: 9 };
const DURATION: u64 = 40_000;

fn arb_event() -> impl Strategy<Value = Event> {
    (0..DURATION, 0..G.width, 0..G.height, any::<bool>()).prop_map(|(t, x, y, p)| {
        Event::new(t, x, y, if p { Polarity::Positive } else { Polarity::Negative })
    })
}

fn arb_label() -> impl Strategy<Value = Label> {
    prop_oneof![Just(Label::Signal), Just(Label::Noise), Just(Label::Unlabeled)]
}

fn arb_labeled(max: usize) -> impl Strategy<Value = LabeledEventStream> {
    prop::collection::vec((arb_event(), arb_label()), 0..max).prop_map(|pairs| LabeledEventStream::from_unsorted(G, DURATION, pairs).unwrap())
}

fn arb_stream(max: usize) -> impl Strategy<Value = EventStream> {
    prop::collection::vec(arb_event(), 0..max).prop_map(|ev| EventStream::from_unsorted(G, DURATION, ev).unwrap())
}

fn arb_window() -> impl Strategy<Value = TimeWindow> {
    (0..DURATION, 1..DURATION).prop_map(|(a, len)| TimeWindow::new(a, a + len).unwrap())
}

fn shuffled<T: Clone>(items: &[T], seed: u64) -> Vec<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = items.to_vec();
    for i in (1..v.len()).rev() {
        v.swap(i, rng.random_range(0..=i));
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn io_round_trips(s in arb_labeled(300)) {
        let mut text = Vec::new();
        write_text(&s, &mut text).unwrap();
        prop_assert_eq!(&read_text(std::str::from_utf8(&text).unwrap(), "t".as_ref(), ReadOptions::default()).unwrap(), &s);
        let mut bin = Vec::new();
        write_binary(&s, &mut bin).unwrap();
        prop_assert_eq!(&read_binary(&bin, "b".as_ref(), ReadOptions::default()).unwrap(), &s);
    }

    #[test]
    fn binarize_ignores_order_and_duplicates(s in arb_stream(200), w in arb_window(), seed: u64) {
        let mut doubled = shuffled(s.events(), seed);
        doubled.extend_from_slice(&s.events()[..s.len() / 2]);
        let other = EventStream::from_unsorted(G, DURATION, doubled).unwrap();
        for p in Polarity::BOTH {
            prop_assert_eq!(binarize(&s, w, p), binarize(&other, w, p));
        }
    }

    #[test]
    fn pixels_recover_window_events(s in arb_stream(200), w in arb_window()) {
        for p in Polarity::BOTH {
            let got = events_at_pixels(&s, w, p, &binarize(&s, w, p)).unwrap();
            let want: Vec<Event> = s.events().iter().filter(|e| e.p == p && w.contains(e.t)).copied().collect();
            prop_assert_eq!(got.events(), &want[..]);
        }
    }

    #[test]
    fn windows_partition_events(s in arb_stream(300), dt in 1..10_000u64) {
        let seq = window_partition(&s, dt).unwrap();
        prop_assert_eq!(seq.len(), window_count(DURATION, dt));
        let mut next = 0;
        for (k, w) in seq.windows().iter().enumerate() {
            prop_assert_eq!(w.window, window_bounds(k, dt));
            prop_assert_eq!(w.events.start, next);
            next = w.events.end;
            prop_assert!(s.events()[w.events.clone()].iter().all(|e| w.window.contains(e.t)));
        }
        prop_assert_eq!(next, s.len());
    }

    #[test]
    fn overlap_is_symmetric(a in prop::collection::vec((0..G.width, 0..G.height), 0..60), b in prop::collection::vec((0..G.width, 0..G.height), 0..60)) {
        let w = TimeWindow::new(0, 1).unwrap();
        let fa = BinaryFrame::from_pixels(G, Polarity::Positive, w, a.iter().copied());
        let fb = BinaryFrame::from_pixels(G, Polarity::Positive, w, b.iter().copied());
        prop_assert_eq!(overlap_rate(&fa, &fb).unwrap(), overlap_rate(&fb, &fa).unwrap());
        let both = spatial_similarity(&fa, &fb).unwrap();
        let want: HashSet<_> = a.iter().copied().collect::<HashSet<_>>().intersection(&b.iter().copied().collect()).copied().collect();
        prop_assert_eq!(both.pixels().collect::<HashSet<_>>(), want);
    }

    #[test]
    fn accuracy_ignores_storage_order(s in arb_labeled(300), labels in prop::collection::vec(arb_label(), 300), seed: u64) {
        let pred = LabeledEventStream::new(s.stream().clone(), labels[..s.len()].to_vec()).unwrap();
        let pairs: Vec<(Event, Label)> = pred.iter().map(|(e, l)| (*e, l)).collect();
        let gt_pairs: Vec<(Event, Label)> = s.iter().map(|(e, l)| (*e, l)).collect();
        // Identical events must stay aligned, so shuffle pred and GT together.
        let order = shuffled(&(0..s.len()).collect::<Vec<_>>(), seed);
        let pred2 = LabeledEventStream::from_unsorted(G, DURATION, order.iter().map(|&i| pairs[i]).collect()).unwrap();
        let gt2 = LabeledEventStream::from_unsorted(G, DURATION, order.iter().map(|&i| gt_pairs[i]).collect()).unwrap();
        let a = denoise_accuracy(&pred, &s).unwrap();
        let b = denoise_accuracy(&pred2, &gt2).unwrap();
        prop_assert_eq!(a.tp, b.tp);
        prop_assert_eq!(a.tn, b.tn);
        prop_assert_eq!(a.da, b.da);
        prop_assert!((0.0..=1.0).contains(&a.da));
    }

    #[test]
    fn ded_respects_polarity_and_subsets(a in arb_stream(250), b in arb_stream(250), shared in arb_stream(150), seed: u64) {
        let join = |x: &EventStream| {
            let mut pairs: Vec<(Event, Label)> = shuffled(x.events(), seed).into_iter().map(|e| (e, Label::Noise)).collect();
            pairs.extend(shared.events().iter().map(|e| (*e, Label::Signal)));
            LabeledEventStream::from_unsorted(G, DURATION, pairs).unwrap()
        };
        let dual = DualStream::new(join(&a), join(&b)).unwrap();
        let p = DedParams { dt_us: 5_000, min_count: 2, ..DedParams::default() };
        let out = ded_pipeline(&dual, &p).unwrap();
        prop_assert_eq!(out.stream(), dual.s1.stream());

        let flip = |s: &LabeledEventStream| {
            LabeledEventStream::from_unsorted(G, DURATION, s.iter().map(|(e, l)| (Event { p: e.p.flipped(), ..*e }, l)).collect()).unwrap()
        };
        let flipped = ded_pipeline(&DualStream::new(flip(&dual.s1), flip(&dual.s2)).unwrap(), &p).unwrap();
        prop_assert_eq!(flipped, flip(&out));

        // Stage one never keeps an event whose pixel is silent in stream 2.
        for (e, l) in out.iter() {
            if l == Label::Signal {
                let w = window_bounds((e.t / p.dt_us) as usize, p.dt_us);
                prop_assert!(binarize(dual.s2.stream(), w, e.p).get(e.x, e.y));
            }
        }
    }

    #[test]
    fn lif_step_follows_update_rule(v in -2.0..2.0f64, u in -2.0..2.0f64, th in 0.1..1.0f64, tau in 1.0..8.0f64, v_reset in -0.5..0.5f64) {
        let params = LifParams { tau, v_reset, v_th: 0.5 };
        let state = LifState { v: Tensor::filled(1, 1, 1, v) };
        let (next, s) = lif_step(&state, &Tensor::filled(1, 1, 1, u), Threshold::Scalar(th), &params).unwrap();
        let h = v + u;
        let spike = if h - th >= 0.0 { 1.0 } else { 0.0 };
        prop_assert_eq!(s.data[0], spike);
        prop_assert_eq!(next.v.data[0], v_reset * spike + (h / tau) * (1.0 - spike));
    }

    #[test]
    fn raised_thresholds_never_add_spikes(seed in 0..1_000u64, delta in 0.0..0.5f64, density in 0.05..0.5f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let frames: Vec<Tensor> = (0..3)
            .map(|_| Tensor::from_vec(2, 8, 8, (0..128).map(|_| rng.random_bool(density) as u8 as f64).collect()).unwrap())
            .collect();
        let out = Network::new(ThresholdMode::Dynamic, seed).forward(&frames).unwrap();
        for ((h, map), spikes) in out.potentials.iter().zip(&out.threshold_maps).zip(&out.outputs) {
            let raised = map.raised(delta);
            for i in 0..64 {
                let before = h.data[i] >= map.values()[i];
                prop_assert_eq!(before, spikes.data[i] == 1.0);
                prop_assert!(before || h.data[i] < raised.values()[i]);
            }
        }
    }
}

fn signal_count(scene: &Scene, c: f64) -> usize {
    render_signal_events(scene, &PixelModelParams { contrast_threshold: c, ..Default::default() }).unwrap().len()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    // Raising C removes events whenever every pixel's log intensity moves
    // monotonically over the recording.
    #[test]
    fn higher_contrast_threshold_fewer_events_on_ramps(c in 0.02..0.6f64, extra in 0.0..0.4f64, base in -2.0..2.0f64, slope in -4.0..4.0f64) {
        let scene = Scene::new(SceneKind::Ramp { base, slope }, Geometry::new(3, 2), 500_000).unwrap();
        prop_assert!(signal_count(&scene, c + extra) <= signal_count(&scene, c));
    }

    #[test]
    fn higher_contrast_threshold_fewer_events_on_single_edges(c in 0.05..0.6f64, extra in 0.0..0.4f64, velocity in 20.0..200.0f64, fg in 1.5..6.0f64) {
        let bar = MovingBar { width: 12.0, velocity, foreground: fg, ..MovingBar::default() };
        // Shorter than one edge transit, so no pixel sees both edges.
        let duration = (0.9 * bar.width / velocity * 1e6) as u64;
        let scene = Scene::new(SceneKind::MovingBar(bar), Geometry::new(24, 20), duration).unwrap();
        prop_assert!(signal_count(&scene, c + extra) <= signal_count(&scene, c));
    }
}

/// A pixel that falls by several steps and is only part-way back when the
/// recording ends fires `2n + floor(d_end / C)` times, which can grow with C.
#[test]
fn truncated_excursion_count_can_grow_with_threshold() {
    let bar = MovingBar { velocity: 157.80550540078545, foreground: 5.7154689527583855, ..MovingBar::default() };
    let scene = Scene::new(SceneKind::MovingBar(bar), Geometry::new(24, 20), 200_000).unwrap();
    assert!(signal_count(&scene, 0.514) > signal_count(&scene, 0.457));
}

/// Per window and pixel, whether each stream fired is independent of the
/// other: a 2×2 chi-square statistic stays under the 0.1 % critical value.
#[test]
fn dual_noise_is_independent() {
    let g = Geometry::new(64, 64);
    let scene = Scene::new(SceneKind::Constant { log_intensity: 1.0 }, g, 1_000_000).unwrap();
    let dual = dual_sample(&scene, &PixelModelParams::default(), &NoiseParams::uniform(20.0, 0), 7, 8, 0.0).unwrap();
    let dt = 10_000;
    let mut table = [[0f64; 2]; 2];
    for k in 0..window_count(1_000_000, dt) {
        let w = window_bounds(k, dt);
        for p in Polarity::BOTH {
            let (a, b) = (binarize(dual.s1.stream(), w, p), binarize(dual.s2.stream(), w, p));
            for i in 0..g.pixel_count() {
                table[a.get_index(i) as usize][b.get_index(i) as usize] += 1.0;
            }
        }
    }
    let n: f64 = table.iter().flatten().sum();
    let rows = [table[0][0] + table[0][1], table[1][0] + table[1][1]];
    let cols = [table[0][0] + table[1][0], table[0][1] + table[1][1]];
    let mut chi2 = 0.0;
    for i in 0..2 {
        for j in 0..2 {
            let expected = rows[i] * cols[j] / n;
            chi2 += (table[i][j] - expected).powi(2) / expected;
        }
    }
    assert!(table[1][1] > 100.0);
    assert!(chi2 < 10.83, "chi-square {chi2}, table {table:?}");
}
