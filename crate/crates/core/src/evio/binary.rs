use std::io::{self, Write};
use std::path::Path;

use super::{assemble, ReadOptions};
use crate::error::{Error, Result};
use crate::event::{Event, Geometry, Label, LabeledEventStream, Polarity};

pub const BINARY_MAGIC: &[u8; 8] = b"EVDN0001";
pub const HEADER_LEN: usize = 8 + 2 + 2 + 8 + 8;
pub const RECORD_LEN: usize = 16;

pub fn write_binary<W: Write>(stream: &LabeledEventStream, w: &mut W) -> io::Result<()> {
    let g = stream.geometry();
    w.write_all(BINARY_MAGIC)?;
    w.write_all(&g.width.to_le_bytes())?;
    w.write_all(&g.height.to_le_bytes())?;
    w.write_all(&stream.duration().to_le_bytes())?;
    w.write_all(&(stream.len() as u64).to_le_bytes())?;
    let mut rec = [0u8; RECORD_LEN];
    for (e, label) in stream.iter() {
        rec[0..8].copy_from_slice(&e.t.to_le_bytes());
        rec[8..10].copy_from_slice(&e.x.to_le_bytes());
        rec[10..12].copy_from_slice(&e.y.to_le_bytes());
        rec[12] = e.p.bit();
        rec[13] = label.code();
        w.write_all(&rec)?;
    }
    Ok(())
}

pub fn read_binary(buf: &[u8], path: &Path, opts: ReadOptions) -> Result<LabeledEventStream> {
    let err = |location: String, message: String| Error::Parse {
        path: path.to_path_buf(),
        location,
        message,
    };
    if buf.len() < HEADER_LEN || &buf[..8] != BINARY_MAGIC {
        return Err(err("header".into(), "missing EVDN0001 magic".into()));
    }
    let u16_at = |o: usize| u16::from_le_bytes([buf[o], buf[o + 1]]);
    let u64_at = |o: usize| u64::from_le_bytes(buf[o..o + 8].try_into().unwrap());
    let geometry = Geometry::new(u16_at(8), u16_at(10));
    let duration = u64_at(12);
    let count = u64_at(20) as usize;
    let body = &buf[HEADER_LEN..];
    if body.len() != count.saturating_mul(RECORD_LEN) {
        return Err(err(
            "header".into(),
            format!("declares {count} records but body holds {} bytes", body.len()),
        ));
    }
    let mut pairs = Vec::with_capacity(count);
    for (i, rec) in body.chunks_exact(RECORD_LEN).enumerate() {
        let loc = || format!("record {}", i + 1);
        let t = u64::from_le_bytes(rec[0..8].try_into().unwrap());
        let x = u16::from_le_bytes([rec[8], rec[9]]);
        let y = u16::from_le_bytes([rec[10], rec[11]]);
        let p = Polarity::from_bit(rec[12]).ok_or_else(|| err(loc(), format!("bad polarity {}", rec[12])))?;
        let label = Label::from_code(rec[13]).ok_or_else(|| err(loc(), format!("bad label {}", rec[13])))?;
        if rec[14] != 0 || rec[15] != 0 {
            return Err(err(loc(), "non-zero padding".into()));
        }
        if !geometry.contains(x, y) || t >= duration {
            return Err(err(loc(), format!("event ({x},{y}) t={t} out of bounds")));
        }
        pairs.push((Event::new(t, x, y, p), label));
    }
    assemble(path, geometry, duration, pairs, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::EventStream;

    #[test]
    fn layout_is_pinned() {
        let g = Geometry::new(3, 2);
        let s = EventStream::new(g, 0x0102_0000, vec![Event::new(0x0a0b, 2, 1, Polarity::Positive)]).unwrap();
        let s = LabeledEventStream::uniform(s, Label::Signal);
        let mut out = Vec::new();
        write_binary(&s, &mut out).unwrap();
        let mut expect = b"EVDN0001".to_vec();
        expect.extend([3, 0, 2, 0]);
        expect.extend([0, 0, 2, 1, 0, 0, 0, 0]);
        expect.extend([1, 0, 0, 0, 0, 0, 0, 0]);
        expect.extend([0x0b, 0x0a, 0, 0, 0, 0, 0, 0, 2, 0, 1, 0, 1, 1, 0, 0]);
        assert_eq!(out, expect);
        assert_eq!(read_binary(&out, Path::new("m"), ReadOptions::default()).unwrap(), s);
    }

    #[test]
    fn truncated_body_is_rejected() {
        let s = LabeledEventStream::unlabeled(
            EventStream::new(Geometry::new(2, 2), 10, vec![Event::new(1, 0, 0, Polarity::Negative)]).unwrap(),
        );
        let mut out = Vec::new();
        write_binary(&s, &mut out).unwrap();
        out.pop();
        assert!(read_binary(&out, Path::new("m"), ReadOptions::default()).is_err());
        assert!(read_binary(b"NOTMAGIC", Path::new("m"), ReadOptions::default()).is_err());
    }
}
