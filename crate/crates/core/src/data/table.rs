use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};
use crate::nn::Label;

/// Where the label lives in a CSV file.
#[derive(Clone, Debug, PartialEq)]
pub enum MarkerColumn {
    Name(String),
    Index(usize),
    Last,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvOptions {
    pub marker: MarkerColumn,
    pub natural_markers: Vec<String>,
    pub attack_markers: Vec<String>,
    /// Cell contents treated as missing (compared after trimming).
    pub missing_tokens: Vec<String>,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self {
            marker: MarkerColumn::Name("marker".into()),
            natural_markers: vec!["Natural".into()],
            attack_markers: vec!["Attack".into()],
            missing_tokens: ["", "NaN", "nan", "NA", "inf", "-inf", "Inf", "-Inf", "Infinity", "-Infinity"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
        }
    }
}

/// Feature matrix with a missing-cell mask and one label per row.
///
/// Missing cells hold `NaN` in `rows`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub missing: Vec<Vec<bool>>,
    pub labels: Vec<Label>,
    /// Source file index per row (1-based across the files given to the loader).
    pub sources: Vec<u32>,
}

impl RawTable {
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn missing_count(&self) -> usize {
        self.missing.iter().flatten().filter(|&&m| m).count()
    }

    /// Appends another table with identical columns.
    pub fn append(&mut self, other: RawTable) -> Result<()> {
        if other.columns != self.columns {
            return Err(Error::Data("tables have different column sets".into()));
        }
        self.rows.extend(other.rows);
        self.missing.extend(other.missing);
        self.labels.extend(other.labels);
        self.sources.extend(other.sources);
        Ok(())
    }

    /// Rows selected by index, in the given order.
    pub fn select(&self, idx: &[usize]) -> RawTable {
        RawTable {
            columns: self.columns.clone(),
            rows: idx.iter().map(|&i| self.rows[i].clone()).collect(),
            missing: idx.iter().map(|&i| self.missing[i].clone()).collect(),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            sources: idx.iter().map(|&i| self.sources[i]).collect(),
        }
    }
}

/// Parses one CSV file with a header row.
pub fn load_csv(path: impl AsRef<Path>, source: u32, opts: &CsvOptions) -> Result<RawTable> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_csv(file, path, source, opts)
}

pub(crate) fn read_csv<R: std::io::Read>(
    reader: R,
    path: &Path,
    source: u32,
    opts: &CsvOptions,
) -> Result<RawTable> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let header: Vec<String> = rdr
        .headers()
        .map_err(|e| Error::MalformedRow {
            path: path.to_path_buf(),
            row: 0,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if header.len() < 2 {
        return Err(Error::MalformedRow {
            path: path.to_path_buf(),
            row: 0,
            message: "header needs at least one feature and a marker column".into(),
        });
    }
    let marker_idx = match &opts.marker {
        MarkerColumn::Name(name) => header.iter().position(|h| h == name).ok_or_else(|| Error::MalformedRow {
            path: path.to_path_buf(),
            row: 0,
            message: format!("marker column '{name}' not found"),
        })?,
        MarkerColumn::Index(i) if *i < header.len() => *i,
        MarkerColumn::Index(i) => {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                row: 0,
                message: format!("marker column index {i} out of range"),
            })
        }
        MarkerColumn::Last => header.len() - 1,
    };
    let columns: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|(i, _)| *i != marker_idx)
        .map(|(_, h)| h.clone())
        .collect();

    let mut table = RawTable {
        columns,
        rows: Vec::new(),
        missing: Vec::new(),
        labels: Vec::new(),
        sources: Vec::new(),
    };
    let mut unknown = BTreeSet::new();
    for (r, record) in rdr.records().enumerate() {
        // data rows are numbered from 1, the header is row 0
        let row_no = r + 1;
        let record = record.map_err(|e| Error::MalformedRow {
            path: path.to_path_buf(),
            row: row_no,
            message: e.to_string(),
        })?;
        if record.len() != header.len() {
            return Err(Error::MalformedRow {
                path: path.to_path_buf(),
                row: row_no,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        let mut values = Vec::with_capacity(header.len() - 1);
        let mut mask = Vec::with_capacity(header.len() - 1);
        let mut label = None;
        for (c, cell) in record.iter().enumerate() {
            let cell = cell.trim();
            if c == marker_idx {
                if opts.natural_markers.iter().any(|m| m == cell) {
                    label = Some(Label::Natural);
                } else if opts.attack_markers.iter().any(|m| m == cell) {
                    label = Some(Label::Attack);
                } else {
                    unknown.insert(cell.to_string());
                }
                continue;
            }
            if opts.missing_tokens.iter().any(|t| t == cell) {
                values.push(f64::NAN);
                mask.push(true);
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::MalformedRow {
                path: path.to_path_buf(),
                row: row_no,
                message: format!("column '{}': cannot parse '{cell}' as a number", header[c]),
            })?;
            if v.is_finite() {
                values.push(v);
                mask.push(false);
            } else {
                values.push(f64::NAN);
                mask.push(true);
            }
        }
        if let Some(label) = label {
            table.rows.push(values);
            table.missing.push(mask);
            table.labels.push(label);
            table.sources.push(source);
        }
    }
    if !unknown.is_empty() {
        return Err(Error::UnknownMarker {
            path: path.to_path_buf(),
            values: unknown.into_iter().collect(),
        });
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RawTable> {
        read_csv(text.as_bytes(), Path::new("fixture.csv"), 1, &CsvOptions::default())
    }

    #[test]
    fn clean_fixture() {
        let t = parse("a,b,marker\n1,2,Natural\n3,4,Attack\n5,6,Natural\n").unwrap();
        assert_eq!(t.n_rows(), 3);
        assert_eq!(t.columns, vec!["a", "b"]);
        assert_eq!(t.missing_count(), 0);
        assert_eq!(t.labels, vec![Label::Natural, Label::Attack, Label::Natural]);
        assert_eq!(t.rows[1], vec![3.0, 4.0]);
    }

    #[test]
    fn empty_cell_is_masked() {
        let t = parse("a,b,marker\n1,,Natural\n3,4,Attack\n").unwrap();
        assert_eq!(t.missing, vec![vec![false, true], vec![false, false]]);
        assert!(t.rows[0][1].is_nan());
        let t = parse("a,b,marker\ninf,1,Natural\n").unwrap();
        assert!(t.missing[0][0]);
    }

    #[test]
    fn malformed_row_reports_row_number() {
        match parse("a,b,marker\n1,2,Natural\n1,x,Natural\n") {
            Err(Error::MalformedRow { row, .. }) => assert_eq!(row, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("a,b,marker\n1,2,Natural\n1,Natural\n"),
            Err(Error::MalformedRow { row: 2, .. })
        ));
    }

    #[test]
    fn unknown_markers_are_listed() {
        match parse("a,marker\n1,Natural\n2,Fault\n3,Other\n") {
            Err(Error::UnknownMarker { values, .. }) => assert_eq!(values, vec!["Fault", "Other"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn marker_by_index() {
        let opts = CsvOptions {
            marker: MarkerColumn::Index(0),
            natural_markers: vec!["0".into()],
            attack_markers: vec!["1".into()],
            ..CsvOptions::default()
        };
        let t = read_csv("y,a\n1,0.5\n0,0.25\n".as_bytes(), Path::new("f"), 1, &opts).unwrap();
        assert_eq!(t.labels, vec![Label::Attack, Label::Natural]);
        assert_eq!(t.rows, vec![vec![0.5], vec![0.25]]);
    }
}
