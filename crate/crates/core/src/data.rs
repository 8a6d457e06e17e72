//! LIBSVM-format datasets.
//!
//! Each non-empty line is `<label> <idx>:<val> ...` with 1-based, strictly
//! increasing feature indices. Indices are stored 0-based. A trailing
//! `# comment` is ignored. Files ending in `.gz` are decompressed on read.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use flate2::read::MultiGzDecoder;

use crate::error::{invalid, Error, Result};
use crate::linalg::SparseVec;

/// Immutable design matrix with one label per row.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    rows: Vec<SparseVec>,
    labels: Vec<f64>,
    n_features: usize,
}

impl Dataset {
    pub fn new(rows: Vec<SparseVec>, labels: Vec<f64>, n_features: usize) -> Result<Self> {
        if rows.is_empty() {
            return Err(invalid("dataset must contain at least one row"));
        }
        if rows.len() != labels.len() {
            return Err(invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let needed = rows.iter().map(SparseVec::min_dim).max().unwrap_or(0);
        if n_features < needed {
            return Err(invalid(format!(
                "n_features {n_features} is below the largest feature index + 1 ({needed})"
            )));
        }
        Ok(Self {
            rows,
            labels,
            n_features,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.rows.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn rows(&self) -> &[SparseVec] {
        &self.rows
    }

    pub fn row(&self, j: usize) -> &SparseVec {
        &self.rows[j]
    }

    pub fn labels(&self) -> &[f64] {
        &self.labels
    }

    pub fn label(&self, j: usize) -> f64 {
        self.labels[j]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(SparseVec::nnz).sum()
    }

    /// Widens the feature space, e.g. to align train and test files.
    pub fn with_n_features(mut self, n_features: usize) -> Result<Self> {
        if n_features < self.n_features {
            return Err(invalid(format!(
                "cannot shrink feature dimension from {} to {n_features}",
                self.n_features
            )));
        }
        self.n_features = n_features;
        Ok(self)
    }

    /// Serializes back to LIBSVM text. Reparsing the output yields `self`
    /// whenever `n_features` equals the largest index + 1.
    pub fn to_libsvm(&self) -> String {
        let mut out = String::new();
        for (row, label) in self.rows.iter().zip(&self.labels) {
            write!(out, "{label}").unwrap();
            for (i, v) in row.iter() {
                write!(out, " {}:{v}", i + 1).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

pub fn parse_libsvm_str(text: &str) -> Result<Dataset> {
    parse_libsvm(text.as_bytes())
}

/// Parses LIBSVM text. `{0,1}` label sets are remapped to `{-1,+1}`.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    let mut n_features = 0usize;

    for (lineno, line) in reader.lines().enumerate() {
        let line_no = lineno + 1;
        let line = line?;
        let content = match line.find('#') {
            Some(p) => &line[..p],
            None => &line[..],
        };
        let mut tokens = content.split_ascii_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label: f64 = label_tok.parse().map_err(|_| Error::Parse {
            line: line_no,
            message: format!("malformed label {label_tok:?}"),
        })?;
        if !label.is_finite() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("non-finite label {label_tok:?}"),
            });
        }

        let mut indices = Vec::new();
        let mut values = Vec::new();
        for tok in tokens {
            let (idx, val) = parse_feature(tok).map_err(|message| Error::Parse {
                line: line_no,
                message,
            })?;
            if let Some(&prev) = indices.last() {
                if idx <= prev {
                    return Err(Error::Parse {
                        line: line_no,
                        message: format!("feature index {} does not increase", idx + 1),
                    });
                }
            }
            indices.push(idx);
            values.push(val);
        }
        if let Some(&last) = indices.last() {
            n_features = n_features.max(last + 1);
        }
        rows.push(SparseVec::new(indices, values)?);
        labels.push(label);
    }

    if rows.is_empty() {
        return Err(invalid("no data rows"));
    }
    normalize_binary_labels(&mut labels);
    Dataset::new(rows, labels, n_features)
}

fn parse_feature(tok: &str) -> std::result::Result<(usize, f64), String> {
    let (idx, val) = tok
        .split_once(':')
        .ok_or_else(|| format!("malformed feature token {tok:?}"))?;
    let idx: u64 = idx
        .parse()
        .map_err(|_| format!("malformed feature index in {tok:?}"))?;
    if idx == 0 {
        return Err(format!("feature index must be >= 1 in {tok:?}"));
    }
    let val: f64 = val
        .parse()
        .map_err(|_| format!("malformed feature value in {tok:?}"))?;
    if !val.is_finite() {
        return Err(format!("non-finite feature value in {tok:?}"));
    }
    let idx =
        usize::try_from(idx - 1).map_err(|_| format!("feature index too large in {tok:?}"))?;
    Ok((idx, val))
}

fn normalize_binary_labels(labels: &mut [f64]) {
    let binary01 = labels.iter().all(|&y| y == 0.0 || y == 1.0);
    if binary01 && labels.contains(&0.0) {
        for y in labels.iter_mut() {
            *y = if *y == 0.0 { -1.0 } else { 1.0 };
        }
    }
}

/// Reads a LIBSVM file, transparently gunzipping `.gz` paths.
pub fn load_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path)?;
    let reader: Box<dyn Read> = if path.extension().is_some_and(|e| e == "gz") {
        Box::new(MultiGzDecoder::new(file))
    } else {
        Box::new(file)
    };
    parse_libsvm(BufReader::with_capacity(1 << 16, reader))
}
