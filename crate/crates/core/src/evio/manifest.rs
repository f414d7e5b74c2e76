use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{read_events, Format};
use crate::error::{Error, Result};
use crate::event::{EventStream, Geometry, LabeledEventStream};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

/// One recorded sequence. Paths are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub name: String,
    /// One raw stream, or two co-registered samplings.
    pub raw: Vec<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gt: Option<PathBuf>,
    pub split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub geometry: Geometry,
    pub dt_us: u64,
    pub sequences: Vec<SequenceEntry>,
    #[serde(skip)]
    pub root: PathBuf,
}

impl DatasetManifest {
    pub fn new(geometry: Geometry, dt_us: u64) -> Self {
        DatasetManifest {
            version: MANIFEST_VERSION,
            geometry,
            dt_us,
            sequences: Vec::new(),
            root: PathBuf::new(),
        }
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.root.join(p)
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let json = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
    }

    fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Manifest {
                entry: "<root>".into(),
                message: format!("unsupported version {}", self.version),
            });
        }
        if self.dt_us == 0 {
            return Err(Error::Manifest {
                entry: "<root>".into(),
                message: "dt_us must be positive".into(),
            });
        }
        for s in &self.sequences {
            let fail = |message: String| Error::Manifest {
                entry: s.name.clone(),
                message,
            };
            if s.raw.is_empty() || s.raw.len() > 2 {
                return Err(fail(format!("expected 1 or 2 raw streams, found {}", s.raw.len())));
            }
            let gt = s.gt.as_ref().ok_or_else(|| fail("missing gt path".into()))?;
            for p in s.raw.iter().chain(std::iter::once(gt)) {
                if !self.resolve(p).is_file() {
                    return Err(fail(format!("file not found: {}", p.display())));
                }
            }
        }
        Ok(())
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut m: DatasetManifest = serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        location: format!("line {}", e.line()),
        message: e.to_string(),
    })?;
    m.root = path.parent().map(Path::to_path_buf).unwrap_or_default();
    m.validate()?;
    Ok(m)
}

/// Loads each entry's first raw stream together with its ground truth.
pub fn iterate_pairs(
    manifest: &DatasetManifest,
) -> impl Iterator<Item = Result<(EventStream, LabeledEventStream)>> + '_ {
    manifest.sequences.iter().map(move |s| {
        let wrap = |e: Error| Error::Manifest {
            entry: s.name.clone(),
            message: e.to_string(),
        };
        let gt_path = s.gt.as_ref().ok_or_else(|| Error::Manifest {
            entry: s.name.clone(),
            message: "missing gt path".into(),
        })?;
        let raw_path = manifest.resolve(&s.raw[0]);
        let gt_path = manifest.resolve(gt_path);
        let raw = read_events(&raw_path, Format::from_path(&raw_path)).map_err(wrap)?;
        let gt = read_events(&gt_path, Format::from_path(&gt_path)).map_err(wrap)?;
        for g in [raw.geometry(), gt.geometry()] {
            if g != manifest.geometry {
                return Err(Error::Manifest {
                    entry: s.name.clone(),
                    message: format!("geometry {}x{} differs from manifest", g.width, g.height),
                });
            }
        }
        Ok((raw.into_parts().0, gt))
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::event::{Event, Label, Polarity};
    use crate::evio::write_events;

    fn write_stream(dir: &Path, name: &str) {
        let s = EventStream::new(Geometry::new(8, 8), 100, vec![Event::new(3, 1, 1, Polarity::Positive)]).unwrap();
        write_events(&LabeledEventStream::uniform(s, Label::Signal), dir.join(name), Format::Binary).unwrap();
    }

    fn entry(name: &str, raw: &str, gt: Option<&str>) -> SequenceEntry {
        SequenceEntry {
            name: name.into(),
            raw: vec![raw.into()],
            gt: gt.map(Into::into),
            split: Split::Train,
        }
    }

    #[test]
    fn two_entries_yield_two_pairs() {
        let dir = tempfile::tempdir().unwrap();
        for f in ["a.evd", "a_gt.evd", "b.evd", "b_gt.evd"] {
            write_stream(dir.path(), f);
        }
        let mut m = DatasetManifest::new(Geometry::new(8, 8), 10_000);
        m.sequences.push(entry("a", "a.evd", Some("a_gt.evd")));
        m.sequences.push(entry("b", "b.evd", Some("b_gt.evd")));
        m.save(dir.path().join("manifest.json")).unwrap();
        let loaded = load_manifest(dir.path().join("manifest.json")).unwrap();
        let pairs: Vec<_> = iterate_pairs(&loaded).collect::<Result<_>>().unwrap();
        assert_eq!(pairs.len(), 2);
        assert_eq!(pairs[1].1.labels(), &[Label::Signal]);
    }

    #[test]
    fn missing_gt_names_entry() {
        let dir = tempfile::tempdir().unwrap();
        write_stream(dir.path(), "a.evd");
        let mut m = DatasetManifest::new(Geometry::new(8, 8), 10_000);
        m.sequences.push(entry("seq-without-gt", "a.evd", None));
        m.save(dir.path().join("m.json")).unwrap();
        let err = load_manifest(dir.path().join("m.json")).unwrap_err().to_string();
        assert!(err.contains("seq-without-gt"), "{err}");

        m.sequences[0].gt = Some("nope.evd".into());
        m.save(dir.path().join("m.json")).unwrap();
        let err = load_manifest(dir.path().join("m.json")).unwrap_err().to_string();
        assert!(err.contains("seq-without-gt") && err.contains("nope.evd"), "{err}");
    }

    #[test]
    fn empty_manifest() {
        let dir = tempfile::tempdir().unwrap();
        DatasetManifest::new(Geometry::new(8, 8), 10_000)
            .save(dir.path().join("m.json"))
            .unwrap();
        let m = load_manifest(dir.path().join("m.json")).unwrap();
        assert_eq!(iterate_pairs(&m).count(), 0);
    }
}
