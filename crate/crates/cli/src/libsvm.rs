//! LIBSVM sparse text format.
//!
//! One row per line: `<label> <index>:<value> ...` with 1-based, strictly
//! increasing indices. Labels `+1`/`1` map to class 1 and `-1`/`0` to class
//! 0. Blank lines are skipped. The dense width is the largest index seen.

use std::io::{BufRead, Write};

use robust_qbc_core::{Dataset, Matrix, Provenance};

use crate::error::{CliError, Result};

pub fn parse_libsvm<R: BufRead>(reader: R, name: &str) -> Result<Dataset> {
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut labels = Vec::new();
    let mut width = 0;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| CliError::parse(lineno, format!("unreadable line: {e}")))?;
        let mut tokens = line.split_whitespace();
        let Some(label_tok) = tokens.next() else { continue };
        labels.push(parse_label(label_tok).map_err(|m| CliError::parse(lineno, m))?);
        let mut entries = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| CliError::parse(lineno, format!("expected <index>:<value>, got `{tok}`")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| CliError::parse(lineno, format!("bad feature index `{idx}` in `{tok}`")))?;
            if idx == 0 {
                return Err(CliError::parse(lineno, format!("feature indices are 1-based, got `{tok}`")));
            }
            if idx <= last {
                return Err(CliError::parse(lineno, format!("index {idx} does not increase on {last}")));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| CliError::parse(lineno, format!("bad feature value `{val}` in `{tok}`")))?;
            if !val.is_finite() {
                return Err(CliError::parse(lineno, format!("non-finite feature value in `{tok}`")));
            }
            last = idx;
            entries.push((idx, val));
        }
        width = width.max(last);
        rows.push(entries);
    }
    if rows.is_empty() {
        return Err(CliError::parse(1, "file contains no data rows"));
    }
    let mut features = Matrix::zeros(rows.len(), width);
    for (i, entries) in rows.iter().enumerate() {
        for &(j, v) in entries {
            features.set(i, j - 1, v);
        }
    }
    Ok(Dataset::new(features, labels, name, Provenance::Raw)?)
}

fn parse_label(tok: &str) -> std::result::Result<u8, String> {
    let v: f64 = tok.parse().map_err(|_| format!("bad label `{tok}`"))?;
    if v == 1.0 {
        Ok(1)
    } else if v == -1.0 || v == 0.0 {
        Ok(0)
    } else {
        Err(format!("label `{tok}` is not one of +1, 1, -1, 0"))
    }
}

/// Writes labels as `+1`/`-1` and only the nonzero features, except that the
/// last column is written on the first row when it is zero everywhere, so
/// the width survives a round trip. Values use the shortest exact decimal.
pub fn write_libsvm<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    let d = data.dim();
    let last_col_empty = d > 0 && data.features.iter_rows().all(|r| r[d - 1] == 0.0);
    for (i, (row, &label)) in data.features.iter_rows().zip(&data.labels).enumerate() {
        out.write_all(if label == 1 { b"+1" } else { b"-1" })?;
        for (j, &v) in row.iter().enumerate() {
            if v != 0.0 || (i == 0 && j == d - 1 && last_col_empty) {
                write!(out, " {}:{}", j + 1, v)?;
            }
        }
        out.write_all(b"\n")?;
    }
    Ok(())
}
