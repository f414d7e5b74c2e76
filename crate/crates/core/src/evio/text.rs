use std::io::{self, Write};
use std::path::Path;

use super::{assemble, ReadOptions};
use crate::error::{Error, Result};
use crate::event::{Event, Geometry, Label, LabeledEventStream, Polarity};

const MAGIC: &str = "evdn-text";
const VERSION: &str = "v1";

pub fn write_text<W: Write>(stream: &LabeledEventStream, w: &mut W) -> io::Result<()> {
    let g = stream.geometry();
    writeln!(
        w,
        "# {MAGIC} {VERSION} width={} height={} duration_us={}",
        g.width,
        g.height,
        stream.duration()
    )?;
    for (e, label) in stream.iter() {
        match label {
            Label::Unlabeled => writeln!(w, "{},{},{},{}", e.t, e.x, e.y, e.p.bit())?,
            l => writeln!(w, "{},{},{},{},{}", e.t, e.x, e.y, e.p.bit(), l.code())?,
        }
    }
    Ok(())
}

pub fn read_text(src: &str, path: &Path, opts: ReadOptions) -> Result<LabeledEventStream> {
    let err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        location: format!("line {line}"),
        message,
    };
    let mut lines = src.lines().enumerate();
    let (_, header) = lines.next().ok_or_else(|| err(1, "missing header".into()))?;
    let (geometry, duration) = parse_header(header).map_err(|m| err(1, m))?;

    let mut pairs = Vec::new();
    for (i, line) in lines {
        let n = i + 1;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| {
            fields
                .next()
                .map(str::trim)
                .ok_or_else(|| err(n, format!("missing field '{name}'")))
        };
        let t: u64 = parse_num(next("t")?, "t").map_err(|m| err(n, m))?;
        let x: u16 = parse_num(next("x")?, "x").map_err(|m| err(n, m))?;
        let y: u16 = parse_num(next("y")?, "y").map_err(|m| err(n, m))?;
        let p = match next("p")? {
            "0" => Polarity::Negative,
            "1" => Polarity::Positive,
            other => return Err(err(n, format!("polarity must be 0 or 1, got '{other}'"))),
        };
        let label = match fields.next().map(str::trim) {
            None => Label::Unlabeled,
            Some("0") => Label::Noise,
            Some("1") => Label::Signal,
            Some(other) => return Err(err(n, format!("label must be 0 or 1, got '{other}'"))),
        };
        if fields.next().is_some() {
            return Err(err(n, "too many fields".into()));
        }
        if !geometry.contains(x, y) || t >= duration {
            return Err(err(
                n,
                format!(
                    "event ({x},{y}) t={t} outside {}x{} / duration {duration}",
                    geometry.width, geometry.height
                ),
            ));
        }
        pairs.push((Event::new(t, x, y, p), label));
    }
    assemble(path, geometry, duration, pairs, opts)
}

fn parse_num<T: std::str::FromStr>(s: &str, name: &str) -> std::result::Result<T, String> {
    s.parse().map_err(|_| format!("invalid {name} '{s}'"))
}

fn parse_header(line: &str) -> std::result::Result<(Geometry, u64), String> {
    let mut tokens = line.split_whitespace();
    if tokens.next() != Some("#") || tokens.next() != Some(MAGIC) {
        return Err(format!("expected '# {MAGIC} {VERSION} ...' header"));
    }
    match tokens.next() {
        Some(VERSION) => {}
        other => return Err(format!("unsupported version {other:?}")),
    }
    let (mut width, mut height, mut duration) = (None, None, None);
    for tok in tokens {
        let (k, v) = tok.split_once('=').ok_or_else(|| format!("bad header token '{tok}'"))?;
        match k {
            "width" => width = Some(parse_num::<u16>(v, "width")?),
            "height" => height = Some(parse_num::<u16>(v, "height")?),
            "duration_us" => duration = Some(parse_num::<u64>(v, "duration_us")?),
            _ => return Err(format!("unknown header key '{k}'")),
        }
    }
    match (width, height, duration) {
        (Some(w), Some(h), Some(d)) => Ok((Geometry::new(w, h), d)),
        _ => Err("header needs width, height and duration_us".into()),
    }
}
