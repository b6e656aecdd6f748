//! Preprocessed dataset files.
//!
//! Binary body:
//!
//! | offset | size | field |
//! |---|---|---|
//! | 0 | 4 | magic `FDSC` |
//! | 4 | 2 | version (u16 LE, currently 1) |
//! | 6 | 4 | `d` features per row (u32 LE) |
//! | 10 | 8 | `n` rows (u64 LE) |
//! | 18 | n·(8d+1) | per row: `d` f64 LE, then one label byte (0 Natural, 1 Attack) |
//!
//! Training rows come first, followed by test rows. A text manifest at
//! `<file>.manifest` holds `key=value` lines: `n`, `d`, `n_train`, `n_test`,
//! `sources`, `source.<id>`, `train_rows_by_source`, `test_rows_by_source`,
//! `basis_sha256` and the preprocessing settings. Within each split, rows are
//! grouped by ascending source id, so the per-source counts recover each
//! row's source.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::fsio::{read_file, read_string, write_atomic};
use crate::nn::{Label, Sample};

pub const DATASET_MAGIC: &[u8; 4] = b"FDSC";
pub const DATASET_VERSION: u16 = 1;
const BODY_HEADER: usize = 18;

/// A train/test split of preprocessed samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub dim: usize,
    pub train: Vec<Sample>,
    pub test: Vec<Sample>,
    /// Source file names, indexed by `source - 1`.
    pub sources: Vec<String>,
    /// Extra manifest entries (preprocessing settings, basis hash).
    pub info: BTreeMap<String, String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest");
    PathBuf::from(s)
}

pub fn encode_body(dim: usize, samples: &[&Sample]) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(BODY_HEADER + samples.len() * (8 * dim + 1));
    out.extend_from_slice(DATASET_MAGIC);
    out.extend_from_slice(&DATASET_VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(samples.len() as u64).to_le_bytes());
    for s in samples {
        if s.features.len() != dim {
            return Err(Error::Shape {
                context: "dataset row",
                expected: dim,
                actual: s.features.len(),
            });
        }
        for v in &s.features {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.push(s.label.index() as u8);
    }
    Ok(out)
}

/// Parses the binary body into `(d, rows)`; every row has source 0.
pub fn decode_body(bytes: &[u8]) -> Result<(usize, Vec<Sample>)> {
    if bytes.len() < BODY_HEADER || &bytes[..4] != DATASET_MAGIC {
        return Err(Error::Data("not an FDSC dataset file".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != DATASET_VERSION {
        return Err(Error::Data(format!("unsupported dataset version {version}")));
    }
    let dim = u32::from_le_bytes(bytes[6..10].try_into().unwrap()) as usize;
    let n = u64::from_le_bytes(bytes[10..18].try_into().unwrap()) as usize;
    let row = 8 * dim + 1;
    let expected = n
        .checked_mul(row)
        .and_then(|b| b.checked_add(BODY_HEADER))
        .ok_or_else(|| Error::Data("dataset header sizes overflow".into()))?;
    if bytes.len() != expected {
        return Err(Error::Data(format!(
            "dataset body is {} bytes, header implies {expected}",
            bytes.len()
        )));
    }
    let mut samples = Vec::with_capacity(n);
    for r in bytes[BODY_HEADER..].chunks_exact(row) {
        let features = r[..8 * dim]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        let label = Label::from_index(r[8 * dim] as usize)
            .ok_or_else(|| Error::Data(format!("invalid label byte {}", r[8 * dim])))?;
        samples.push(Sample::new(features, label));
    }
    Ok((dim, samples))
}

fn source_counts(samples: &[Sample]) -> String {
    let mut counts: Vec<(u32, usize)> = Vec::new();
    for s in samples {
        match counts.last_mut() {
            Some((src, c)) if *src == s.source => *c += 1,
            _ => counts.push((s.source, 1)),
        }
    }
    counts
        .iter()
        .map(|(s, c)| format!("{s}:{c}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn assign_sources(samples: &mut [Sample], spec: &str) -> Result<()> {
    let mut i = 0;
    for part in spec.split(',').filter(|p| !p.is_empty()) {
        let (src, count) = part
            .split_once(':')
            .ok_or_else(|| Error::Data(format!("bad source count entry '{part}'")))?;
        let src: u32 = src.parse().map_err(|_| Error::Data(format!("bad source id '{src}'")))?;
        let count: usize = count
            .parse()
            .map_err(|_| Error::Data(format!("bad source count '{count}'")))?;
        if i + count > samples.len() {
            return Err(Error::Data("source counts exceed row count".into()));
        }
        samples[i..i + count].iter_mut().for_each(|s| s.source = src);
        i += count;
    }
    if i != samples.len() {
        return Err(Error::Data("source counts do not cover every row".into()));
    }
    Ok(())
}

pub fn encode_manifest(ds: &Dataset) -> String {
    let mut m = String::new();
    let _ = writeln!(m, "format=FDSC");
    let _ = writeln!(m, "version={DATASET_VERSION}");
    let _ = writeln!(m, "n={}", ds.len());
    let _ = writeln!(m, "d={}", ds.dim);
    let _ = writeln!(m, "n_train={}", ds.train.len());
    let _ = writeln!(m, "n_test={}", ds.test.len());
    let _ = writeln!(m, "sources={}", ds.sources.len());
    for (i, s) in ds.sources.iter().enumerate() {
        let _ = writeln!(m, "source.{}={s}", i + 1);
    }
    let _ = writeln!(m, "train_rows_by_source={}", source_counts(&ds.train));
    let _ = writeln!(m, "test_rows_by_source={}", source_counts(&ds.test));
    for (k, v) in &ds.info {
        let _ = writeln!(m, "{k}={v}");
    }
    m
}

/// Parses `key=value` lines, ignoring blank lines and `#` comments.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Data(format!("line {}: expected key=value", i + 1)))?;
        out.insert(k.trim().to_string(), v.trim().to_string());
    }
    Ok(out)
}

pub fn write_dataset(path: impl AsRef<Path>, ds: &Dataset) -> Result<()> {
    let path = path.as_ref();
    let rows: Vec<&Sample> = ds.train.iter().chain(&ds.test).collect();
    write_atomic(path, &encode_body(ds.dim, &rows)?)?;
    write_atomic(manifest_path(path), encode_manifest(ds).as_bytes())
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let (dim, mut rows) = decode_body(&read_file(path)?)?;
    let mut kv = parse_key_values(&read_string(manifest_path(path))?)?;
    let get = |kv: &BTreeMap<String, String>, key: &str| -> Result<String> {
        kv.get(key)
            .cloned()
            .ok_or_else(|| Error::Data(format!("dataset manifest lacks '{key}'")))
    };
    let n_train: usize = get(&kv, "n_train")?
        .parse()
        .map_err(|_| Error::Data("bad n_train in manifest".into()))?;
    if n_train > rows.len() {
        return Err(Error::Data("manifest n_train exceeds row count".into()));
    }
    let n_sources: usize = get(&kv, "sources")?
        .parse()
        .map_err(|_| Error::Data("bad sources count in manifest".into()))?;
    let mut sources = Vec::with_capacity(n_sources);
    for i in 1..=n_sources {
        sources.push(get(&kv, &format!("source.{i}"))?);
    }
    let mut test = rows.split_off(n_train);
    assign_sources(&mut rows, &get(&kv, "train_rows_by_source")?)?;
    assign_sources(&mut test, &get(&kv, "test_rows_by_source")?)?;
    for key in ["format", "version", "n", "d", "n_train", "n_test", "sources", "train_rows_by_source", "test_rows_by_source"] {
        kv.remove(key);
    }
    kv.retain(|k, _| !k.starts_with("source."));
    Ok(Dataset {
        dim,
        train: rows,
        test,
        sources,
        info: kv,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(f: Vec<f64>, label: Label, source: u32) -> Sample {
        Sample {
            features: f,
            label,
            source,
        }
    }

    #[test]
    fn body_layout() {
        let s = sample(vec![1.0], Label::Attack, 0);
        let bytes = encode_body(1, &[&s]).unwrap();
        assert_eq!(&bytes[..4], b"FDSC");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &[1, 0, 0, 0]);
        assert_eq!(&bytes[10..18], &[1, 0, 0, 0, 0, 0, 0, 0]);
        assert_eq!(&bytes[18..26], &1.0f64.to_le_bytes());
        assert_eq!(bytes[26], 1);
        assert_eq!(bytes.len(), 27);
    }

    #[test]
    fn round_trip_with_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.fdsc");
        let ds = Dataset {
            dim: 2,
            train: vec![
                sample(vec![0.1, 0.2], Label::Natural, 1),
                sample(vec![0.3, 0.4], Label::Attack, 1),
                sample(vec![0.5, 0.6], Label::Natural, 2),
            ],
            test: vec![sample(vec![0.7, 0.8], Label::Attack, 2)],
            sources: vec!["a.csv".into(), "b.csv".into()],
            info: BTreeMap::from([("pca_p".to_string(), "2".to_string())]),
        };
        write_dataset(&path, &ds).unwrap();
        assert_eq!(read_dataset(&path).unwrap(), ds);
        let manifest = std::fs::read_to_string(manifest_path(&path)).unwrap();
        assert!(manifest.contains("n=4\n"));
        assert!(manifest.contains("train_rows_by_source=1:2,2:1\n"));
    }

    #[test]
    fn rejects_truncated_body() {
        let s = sample(vec![1.0, 2.0], Label::Natural, 0);
        let bytes = encode_body(2, &[&s]).unwrap();
        assert!(decode_body(&bytes[..bytes.len() - 1]).is_err());
        assert!(decode_body(b"XXXX").is_err());
    }
}
