//! Reading and writing event streams and paired-dataset manifests.
//!
//! Two stream formats are supported:
//!
//! * **text**: a header line `# evdn-text v1 width=<W> height=<H> duration_us=<D>`
//!   followed by one CSV record `t_us,x,y,p[,label]` per event, with `p` and
//!   the optional `label` in `{0,1}`. A missing label means unlabeled.
//! * **binary**: magic `EVDN0001`, a little-endian header
//!   (`width u16, height u16, duration u64, count u64`) and 16-byte records
//!   `t u64, x u16, y u16, p u8, label u8, 0u16` where label is 0 (noise),
//!   1 (signal) or 255 (unlabeled).

mod binary;
mod manifest;
mod text;

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

pub use binary::{read_binary, write_binary, BINARY_MAGIC, HEADER_LEN, RECORD_LEN};
pub use manifest::{iterate_pairs, load_manifest, DatasetManifest, SequenceEntry, Split, MANIFEST_VERSION};
pub use text::{read_text, write_text};

use crate::error::{Error, Result};
use crate::event::{Event, Geometry, Label, LabeledEventStream};

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Binary,
}

impl Format {
    /// `.txt`, `.csv` and `.evt` are text; anything else is binary.
    pub fn from_path(path: &Path) -> Format {
        match path.extension().and_then(|e| e.to_str()) {
            Some("txt") | Some("csv") | Some("evt") => Format::Text,
            _ => Format::Binary,
        }
    }
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "text" => Ok(Format::Text),
            "binary" => Ok(Format::Binary),
            other => Err(Error::invalid(format!("unknown format '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Sort out-of-order records instead of rejecting them.
    pub sort: bool,
}

pub fn read_events(path: impl AsRef<Path>, format: Format) -> Result<LabeledEventStream> {
    read_events_with(path, format, ReadOptions::default())
}

pub fn read_events_with(path: impl AsRef<Path>, format: Format, opts: ReadOptions) -> Result<LabeledEventStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    match format {
        Format::Text => {
            let mut buf = String::new();
            reader.read_to_string(&mut buf).map_err(|e| Error::io(path, e))?;
            read_text(&buf, path, opts)
        }
        Format::Binary => {
            let mut buf = Vec::new();
            reader.read_to_end(&mut buf).map_err(|e| Error::io(path, e))?;
            read_binary(&buf, path, opts)
        }
    }
}

pub fn write_events(stream: &LabeledEventStream, path: impl AsRef<Path>, format: Format) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    let res = match format {
        Format::Text => write_text(stream, &mut w),
        Format::Binary => write_binary(stream, &mut w),
    };
    res.and_then(|_| w.flush()).map_err(|e| Error::io(path, e))
}

/// Shared tail of both readers: checks bounds and order, optionally sorting.
pub(crate) fn assemble(
    path: &Path,
    geometry: Geometry,
    duration: u64,
    pairs: Vec<(Event, Label)>,
    opts: ReadOptions,
) -> Result<LabeledEventStream> {
    let sorted = pairs.windows(2).all(|w| w[0].0 <= w[1].0);
    if !sorted && !opts.sort {
        let i = pairs.windows(2).position(|w| w[0].0 > w[1].0).unwrap() + 1;
        return Err(Error::Parse {
            path: path.to_path_buf(),
            location: format!("record {}", i + 1),
            message: format!(
                "timestamps not monotone ({} after {}); pass the sort option to reorder",
                pairs[i].0.t,
                pairs[i - 1].0.t
            ),
        });
    }
    LabeledEventStream::from_unsorted(geometry, duration, pairs)
}
