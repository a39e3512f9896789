//! `trajectories.csv`: one row per (dataset, method, repetition, iteration).

use std::io::{BufRead, Write};

use robust_qbc_core::{SamplingMethod, Trajectory};

use crate::error::{CliError, Result};

pub const VERSION_LINE: &str = "# robust-qbc trajectories v1";
pub const COLUMNS: [&str; 7] =
    ["dataset", "method", "repetition", "iteration", "test_error", "queried_index", "if_at_outlier"];

#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRow {
    pub dataset: String,
    pub method: SamplingMethod,
    pub repetition: u64,
    pub iteration: usize,
    pub test_error: f64,
    pub queried_index: usize,
    /// NaN where undefined (random sampling).
    pub if_at_outlier: f64,
}

pub fn rows_from<'a>(dataset: &str, repetition: u64, t: &'a Trajectory) -> impl Iterator<Item = TrajectoryRow> + 'a {
    let dataset = dataset.to_string();
    t.records.iter().map(move |r| TrajectoryRow {
        dataset: dataset.clone(),
        method: t.method,
        repetition,
        iteration: r.iteration,
        test_error: r.test_error,
        queried_index: r.queried_pool_index,
        if_at_outlier: r.if_at_outlier,
    })
}

/// Reals are written in the shortest form that parses back to the same bits.
pub fn write_trajectories<W: Write>(rows: &[TrajectoryRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "{VERSION_LINE}")?;
    writeln!(out, "{}", COLUMNS.join(","))?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.dataset, r.method, r.repetition, r.iteration, r.test_error, r.queried_index, r.if_at_outlier
        )?;
    }
    Ok(())
}

pub fn read_trajectories<R: BufRead>(reader: R) -> Result<Vec<TrajectoryRow>> {
    let mut lines = reader.lines();
    let mut next = |n: usize| -> Result<Option<String>> {
        lines.next().transpose().map_err(|e| CliError::parse(n, e.to_string()))
    };
    match next(1)? {
        Some(l) if l.trim() == VERSION_LINE => {}
        other => {
            return Err(CliError::Schema(format!(
                "first line must be `{VERSION_LINE}`, got `{}`",
                other.unwrap_or_default()
            )))
        }
    }
    let header = next(2)?.ok_or_else(|| CliError::Schema("missing column header".into()))?;
    let cols: Vec<&str> = header.trim().split(',').collect();
    let mut pos = [0usize; 7];
    for (k, want) in COLUMNS.iter().enumerate() {
        pos[k] = cols
            .iter()
            .position(|c| c == want)
            .ok_or_else(|| CliError::Schema(format!("missing column `{want}`")))?;
    }
    if let Some(extra) = cols.iter().find(|c| !COLUMNS.contains(c)) {
        return Err(CliError::Schema(format!("unexpected column `{extra}`")));
    }
    let mut rows = Vec::new();
    let mut lineno = 2;
    while let Some(line) = next(lineno + 1)? {
        lineno += 1;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != cols.len() {
            return Err(CliError::parse(lineno, format!("expected {} fields, got {}", cols.len(), f.len())));
        }
        let field = |k: usize| f[pos[k]];
        let num = |k: usize| -> Result<f64> {
            field(k).parse().map_err(|_| CliError::Schema(format!("line {lineno}: column `{}` has `{}`", COLUMNS[k], field(k))))
        };
        let int = |k: usize| -> Result<u64> {
            field(k).parse().map_err(|_| CliError::Schema(format!("line {lineno}: column `{}` has `{}`", COLUMNS[k], field(k))))
        };
        rows.push(TrajectoryRow {
            dataset: field(0).to_string(),
            method: field(1)
                .parse()
                .map_err(|_| CliError::Schema(format!("line {lineno}: column `method` has `{}`", field(1))))?,
            repetition: int(2)?,
            iteration: int(3)? as usize,
            test_error: num(4)?,
            queried_index: int(5)? as usize,
            if_at_outlier: num(6)?,
        });
    }
    Ok(rows)
}
