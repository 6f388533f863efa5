//! LIBSVM text format: `label index:value index:value ...` with 1-based
//! feature indices, one sample per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::Array1;
use spdfp_core::{Dataset, SparseMatrix};

use crate::error::{CliError, Result};

/// Parses LIBSVM text. Blank lines and `#` comments are skipped. The feature
/// dimension is the largest index seen unless `n_features` is given.
pub fn parse_libsvm<R: BufRead>(
    reader: R,
    source_name: &str,
    n_features: Option<usize>,
) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut triplets = Vec::new();
    let mut max_index = 0;

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let line = line.map_err(|e| CliError::Parse {
            source_name: source_name.to_string(),
            line: line_no,
            message: e.to_string(),
        })?;
        let err = |message: String| CliError::Parse {
            source_name: source_name.to_string(),
            line: line_no,
            message,
        };
        let content = line.split('#').next().unwrap_or("");
        // U+2212 shows up in copy-pasted data
        let content = content.replace('\u{2212}', "-");
        let mut tokens = content.split_whitespace();
        let Some(label_tok) = tokens.next() else {
            continue;
        };
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(format!("bad label `{label_tok}`")))?;
        if !label.is_finite() {
            return Err(err(format!("non-finite label `{label_tok}`")));
        }
        let row = labels.len();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| err(format!("expected index:value, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| err(format!("bad feature index `{idx}`")))?;
            if idx == 0 {
                return Err(err("feature indices are 1-based, got 0".into()));
            }
            if idx <= last {
                return Err(err(format!("feature indices must increase, {idx} after {last}")));
            }
            last = idx;
            let val: f64 = val
                .parse()
                .map_err(|_| err(format!("bad feature value `{val}`")))?;
            if !val.is_finite() {
                return Err(err(format!("non-finite value at feature {idx}")));
            }
            if let Some(d) = n_features {
                if idx > d {
                    return Err(err(format!("feature index {idx} exceeds dimension {d}")));
                }
            }
            max_index = max_index.max(idx);
            triplets.push((row, idx - 1, val));
        }
        labels.push(label);
    }

    if labels.is_empty() {
        return Err(CliError::EmptyInput(format!("{source_name}: no samples")));
    }
    let d = n_features.unwrap_or(max_index);
    let samples = SparseMatrix::from_triplets(labels.len(), d, triplets)?;
    Ok(Dataset::new(samples, Array1::from(labels))?)
}

pub fn load_libsvm(path: impl AsRef<Path>, n_features: Option<usize>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_libsvm(BufReader::new(file), &path.display().to_string(), n_features)
}

/// Writes values with the shortest representation that parses back to the
/// same `f64`.
pub fn write_libsvm<W: Write>(dataset: &Dataset, mut out: W) -> std::io::Result<()> {
    let a = dataset.samples();
    for (r, label) in dataset.labels().iter().enumerate() {
        write!(out, "{label}")?;
        let (cols, vals) = a.row(r);
        for (c, v) in cols.iter().zip(vals) {
            write!(out, " {}:{v}", c + 1)?;
        }
        writeln!(out)?;
    }
    out.flush()
}

pub fn save_libsvm(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_libsvm(dataset, BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}
