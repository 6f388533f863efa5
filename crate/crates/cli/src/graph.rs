//! Feature graphs for graph-guided penalties, built by thresholding
//! empirical correlations or loaded from a coordinate-list file.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use spdfp_core::{Dataset, SparseMatrix};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct GraphBuild {
    /// One row `e_i - e_j` per connected feature pair `i < j`.
    pub matrix: SparseMatrix,
    /// Constant features, left out of every pair.
    pub skipped_features: Vec<usize>,
}

/// Connects features `i < j` whose empirical correlation satisfies
/// `|corr(i, j)| > threshold`.
pub fn build_graph_matrix(dataset: &Dataset, threshold: f64) -> Result<GraphBuild> {
    if !(0.0..1.0).contains(&threshold) {
        return Err(CliError::config(
            "graph.threshold",
            format!("must lie in [0, 1), got {threshold}"),
        ));
    }
    let a = dataset.samples().to_dense();
    let n = a.nrows() as f64;
    let d = a.ncols();

    let means = a.sum_axis(ndarray::Axis(0)) / n;
    let centered = &a - &means;
    let cov = centered.t().dot(&centered) / n;
    let scale: Vec<f64> = (0..d).map(|i| cov[[i, i]].sqrt()).collect();
    let skipped_features: Vec<usize> = (0..d).filter(|&i| !(scale[i] > 0.0)).collect();

    let mut triplets = Vec::new();
    let mut row = 0;
    for i in 0..d {
        if !(scale[i] > 0.0) {
            continue;
        }
        for j in i + 1..d {
            if !(scale[j] > 0.0) {
                continue;
            }
            let corr = cov[[i, j]] / (scale[i] * scale[j]);
            if corr.abs() > threshold {
                triplets.push((row, i, 1.0));
                triplets.push((row, j, -1.0));
                row += 1;
            }
        }
    }
    Ok(GraphBuild {
        matrix: SparseMatrix::from_triplets(row, d, triplets)?,
        skipped_features,
    })
}

/// Reads `row col value` lines with 0-based indices. A `# shape ROWS COLS`
/// line fixes the dimensions; otherwise they are inferred from the largest
/// indices, with `n_cols` overriding the column count.
pub fn parse_coordinate<R: BufRead>(
    reader: R,
    source_name: &str,
    n_cols: Option<usize>,
) -> Result<SparseMatrix> {
    let mut shape: Option<(usize, usize)> = None;
    let mut triplets = Vec::new();
    let (mut max_r, mut max_c) = (0, 0);

    for (line_no, line) in reader.lines().enumerate() {
        let line_no = line_no + 1;
        let err = |message: String| CliError::Parse {
            source_name: source_name.to_string(),
            line: line_no,
            message,
        };
        let line = line.map_err(|e| err(e.to_string()))?;
        let trimmed = line.trim();
        if let Some(comment) = trimmed.strip_prefix('#') {
            let mut words = comment.split_whitespace();
            if words.next() == Some("shape") {
                let dims: Vec<usize> = words
                    .map(|w| w.parse().map_err(|_| err(format!("bad shape entry `{w}`"))))
                    .collect::<Result<_>>()?;
                let [r, c] = dims[..] else {
                    return Err(err("shape needs two entries".into()));
                };
                shape = Some((r, c));
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        let fields: Vec<&str> = trimmed.split_whitespace().collect();
        let [r, c, v] = fields[..] else {
            return Err(err(format!("expected `row col value`, got `{trimmed}`")));
        };
        let r: usize = r.parse().map_err(|_| err(format!("bad row index `{r}`")))?;
        let c: usize = c.parse().map_err(|_| err(format!("bad column index `{c}`")))?;
        let v: f64 = v.parse().map_err(|_| err(format!("bad value `{v}`")))?;
        max_r = max_r.max(r + 1);
        max_c = max_c.max(c + 1);
        triplets.push((r, c, v));
    }

    let (rows, cols) = match shape {
        Some((r, c)) => (r, c),
        None => (max_r, n_cols.unwrap_or(max_c)),
    };
    if let Some(d) = n_cols {
        if cols != d {
            return Err(CliError::Parse {
                source_name: source_name.to_string(),
                line: 0,
                message: format!("matrix has {cols} columns, expected {d}"),
            });
        }
    }
    Ok(SparseMatrix::from_triplets(rows, cols, triplets)?)
}

pub fn load_coordinate(path: impl AsRef<Path>, n_cols: Option<usize>) -> Result<SparseMatrix> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CliError::io(path, e))?;
    parse_coordinate(BufReader::new(file), &path.display().to_string(), n_cols)
}

pub fn write_coordinate<W: Write>(m: &SparseMatrix, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# shape {} {}", m.n_rows(), m.n_cols())?;
    for (r, c, v) in m.triplets() {
        writeln!(out, "{r} {c} {v}")?;
    }
    out.flush()
}

pub fn save_coordinate(m: &SparseMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    write_coordinate(m, BufWriter::new(file)).map_err(|e| CliError::io(path, e))
}
