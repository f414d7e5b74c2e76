//! Self-contained SVG charts and binary PPM event frames.

use std::fmt::Write;

use crate::event::{Label, LabeledEventStream, Polarity};
use crate::metrics::DenoiseReport;
use crate::window::{window_count, window_index};

const W: f64 = 640.0;
const H: f64 = 360.0;
const MARGIN: f64 = 48.0;
const COLORS: [&str; 6] = ["#4e79a7", "#f28e2b", "#59a14f", "#e15759", "#76b7b2", "#b07aa1"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn header(out: &mut String, title: &str) {
    let _ = write!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{W}\" height=\"{H}\" font-family=\"sans-serif\" font-size=\"12\">\n\
         <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n\
         <text x=\"{}\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">{}</text>\n",
        W / 2.0,
        escape(title)
    );
}

fn axes(out: &mut String, y_max: f64) {
    let (x0, y0, y1) = (MARGIN, H - MARGIN, MARGIN);
    let _ = writeln!(out, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{}\" y2=\"{y0}\" stroke=\"black\"/>", W - MARGIN / 2.0);
    let _ = writeln!(out, "<line x1=\"{x0}\" y1=\"{y0}\" x2=\"{x0}\" y2=\"{y1}\" stroke=\"black\"/>");
    for k in 0..=4 {
        let v = y_max * k as f64 / 4.0;
        let y = y0 - (y0 - y1) * k as f64 / 4.0;
        let _ = writeln!(out, "<text x=\"{}\" y=\"{}\" text-anchor=\"end\">{}</text>", x0 - 4.0, y + 4.0, fmt_tick(v));
    }
}

fn fmt_tick(v: f64) -> String {
    if v == 0.0 || (0.01..1000.0).contains(&v.abs()) {
        format!("{v:.2}")
    } else {
        format!("{v:.1e}")
    }
}

/// Grouped bars of SR, NR and DA per report.
pub fn metrics_svg(reports: &[DenoiseReport]) -> String {
    let mut out = String::new();
    header(&mut out, "Denoising accuracy");
    axes(&mut out, 1.0);
    let metrics = ["SR", "NR", "DA"];
    let plot_w = W - 1.5 * MARGIN;
    let group = plot_w / reports.len().max(1) as f64;
    let bar = group / (metrics.len() as f64 + 1.0);
    let span = H - 2.0 * MARGIN;
    for (g, r) in reports.iter().enumerate() {
        let values = [r.sr, r.nr, Some(r.da)];
        for (m, v) in values.iter().enumerate() {
            let Some(v) = v else { continue };
            let x = MARGIN + g as f64 * group + bar * (m as f64 + 0.5);
            let h = span * v.clamp(0.0, 1.0);
            let _ = writeln!(
                out,
                "<rect x=\"{x:.1}\" y=\"{:.1}\" width=\"{:.1}\" height=\"{h:.1}\" fill=\"{}\"><title>{} {}: {v:.4}</title></rect>",
                H - MARGIN - h,
                bar * 0.9,
                COLORS[m],
                escape(&r.method),
                metrics[m]
            );
        }
        let _ = writeln!(
            out,
            "<text x=\"{:.1}\" y=\"{}\" text-anchor=\"middle\">{}</text>",
            MARGIN + (g as f64 + 0.5) * group,
            H - MARGIN + 16.0,
            escape(&r.method)
        );
    }
    for (m, name) in metrics.iter().enumerate() {
        let x = W - MARGIN * 2.5 + m as f64 * 36.0;
        let _ = writeln!(out, "<rect x=\"{x}\" y=\"30\" width=\"10\" height=\"10\" fill=\"{}\"/>", COLORS[m]);
        let _ = writeln!(out, "<text x=\"{}\" y=\"39\">{name}</text>", x + 13.0);
    }
    out.push_str("</svg>\n");
    out
}

/// Total-loss column of a `train` loss log. Errors carry `(location, message)`.
pub fn parse_loss_csv(text: &str) -> Result<Vec<f64>, (String, String)> {
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| ("line 1".to_string(), "empty loss log".to_string()))?;
    let col = head
        .split(',')
        .position(|c| c.trim() == "total")
        .ok_or_else(|| ("line 1".to_string(), "no 'total' column".to_string()))?;
    lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(n, l)| {
            l.split(',')
                .nth(col)
                .and_then(|v| v.trim().parse().ok())
                .ok_or_else(|| (format!("line {}", n + 1), "bad total value".to_string()))
        })
        .collect()
}

/// One polyline per named series, sharing axes.
pub fn loss_svg(series: &[(String, Vec<f64>)]) -> String {
    let mut out = String::new();
    header(&mut out, "Training loss");
    let y_max = series.iter().flat_map(|(_, v)| v).fold(0.0f64, |a, b| a.max(*b)).max(f64::MIN_POSITIVE);
    let n_max = series.iter().map(|(_, v)| v.len()).max().unwrap_or(0).max(2);
    axes(&mut out, y_max);
    let (plot_w, span) = (W - 1.5 * MARGIN, H - 2.0 * MARGIN);
    for (k, (name, v)) in series.iter().enumerate() {
        let pts: Vec<String> = v
            .iter()
            .enumerate()
            .map(|(i, y)| {
                let px = MARGIN + plot_w * i as f64 / (n_max - 1) as f64;
                let py = H - MARGIN - span * (y / y_max).clamp(0.0, 1.0);
                format!("{px:.1},{py:.1}")
            })
            .collect();
        let color = COLORS[k % COLORS.len()];
        let _ = writeln!(out, "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"1.5\" points=\"{}\"/>", pts.join(" "));
        let y = 34.0 + 14.0 * k as f64;
        let _ = writeln!(out, "<text x=\"{}\" y=\"{y}\" fill=\"{color}\" text-anchor=\"end\">{}</text>", W - MARGIN / 2.0, escape(name));
    }
    out.push_str("</svg>\n");
    out
}

/// Binary PPM per window for the first `count` windows. Black background;
/// positive events red, negative blue, events labeled noise grey.
pub fn event_frames_ppm(stream: &LabeledEventStream, dt: u64, count: usize) -> Vec<Vec<u8>> {
    let g = stream.geometry();
    let (w, h) = (g.width as usize, g.height as usize);
    let n = window_count(stream.duration(), dt).min(count);
    let mut frames = vec![vec![0u8; w * h * 3]; n];
    for (e, l) in stream.iter() {
        let k = window_index(e.t, dt);
        if k >= n {
            break;
        }
        let rgb = match (l, e.p) {
            (Label::Noise, _) => [110, 110, 110],
            (_, Polarity::Positive) => [255, 64, 64],
            (_, Polarity::Negative) => [64, 128, 255],
        };
        let i = (e.y as usize * w + e.x as usize) * 3;
        frames[k][i..i + 3].copy_from_slice(&rgb);
    }
    frames
        .into_iter()
        .map(|px| {
            let mut img = format!("P6\n{w} {h}\n255\n").into_bytes();
            img.extend_from_slice(&px);
            img
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn loss_csv_total_column() {
        assert_eq!(parse_loss_csv("step,total,l1\n0,0.5,0.1\n1,0.25,0.1\n").unwrap(), vec![0.5, 0.25]);
        assert_eq!(parse_loss_csv("step,total\n0,x\n").unwrap_err().0, "line 2");
    }
}
