//! Reduced-dataset cache: `<data_dir>/<name>.pca<k>.csv`.
//!
//! Header `label,f1,...,fk`, then one row per point with the 0/1 label and
//! the features in `{:.16e}` (17 significant digits, exact for `f64`).

use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use robust_qbc_core::{Dataset, Matrix, Provenance};

use crate::error::{CliError, Result};

pub fn cache_path(data_dir: &Path, name: &str, k: usize) -> PathBuf {
    data_dir.join(format!("{name}.pca{k}.csv"))
}

pub fn write_reduced<W: Write>(data: &Dataset, mut out: W) -> std::io::Result<()> {
    let header: Vec<String> = (1..=data.dim()).map(|j| format!("f{j}")).collect();
    writeln!(out, "label,{}", header.join(","))?;
    for (row, &label) in data.features.iter_rows().zip(&data.labels) {
        write!(out, "{label}")?;
        for v in row {
            write!(out, ",{v:.16e}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

pub fn read_reduced<R: BufRead>(reader: R, name: &str) -> Result<Dataset> {
    let mut lines = reader.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Err(CliError::parse(1, "empty reduced-data file"));
    };
    let header = header.map_err(|e| CliError::parse(1, e.to_string()))?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    if cols.first() != Some(&"label") || cols.iter().skip(1).enumerate().any(|(j, c)| *c != format!("f{}", j + 1)) {
        return Err(CliError::parse(1, format!("expected header `label,f1,...`, got `{header}`")));
    }
    let k = cols.len() - 1;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| CliError::parse(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != k + 1 {
            return Err(CliError::parse(lineno, format!("expected {} fields, got {}", k + 1, fields.len())));
        }
        labels.push(match fields[0] {
            "0" => 0,
            "1" => 1,
            other => return Err(CliError::parse(lineno, format!("label `{other}` is not 0 or 1"))),
        });
        for f in &fields[1..] {
            let v: f64 = f.parse().map_err(|_| CliError::parse(lineno, format!("bad value `{f}`")))?;
            values.push(v);
        }
    }
    if labels.is_empty() {
        return Err(CliError::parse(2, "reduced-data file has no rows"));
    }
    let features = Matrix::from_vec(labels.len(), k, values)?;
    let mut d = Dataset::new(features, labels, name, Provenance::PcaReduced)?;
    d.meta.d_original = k;
    Ok(d)
}
