use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use robust_qbc_core::data::{generate_artificial, pca_fit, split_protocol, standardize};
use robust_qbc_core::rng::{stream, Purpose};
use robust_qbc_core::{active, Dataset, ExperimentConfig, Provenance, SamplingMethod, SplitResult};

use crate::config::RunManifest;
use crate::error::{CliError, Result};
use crate::libsvm::{parse_libsvm, write_libsvm};
use crate::pca_cache::{cache_path, read_reduced, write_reduced};
use crate::trajectories::{read_trajectories, rows_from, write_trajectories, TrajectoryRow};

pub const TRAJECTORIES_FILE: &str = "trajectories.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const PLOT_DATA_FILE: &str = "plot_data.csv";
pub const PARTIAL_MARKER: &str = "PARTIAL";

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| CliError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| CliError::io(path, e))
}

/// `dir/name.libsvm` → `dir/name.test.libsvm`.
pub fn sibling_test_path(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("data");
    let ext = path.extension().and_then(|s| s.to_str()).unwrap_or("libsvm");
    path.with_file_name(format!("{stem}.test.{ext}"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SynthOptions {
    pub pool_per_class: usize,
    pub test_per_class: usize,
    pub init_per_class: usize,
    pub seed: u64,
}

impl Default for SynthOptions {
    fn default() -> Self {
        Self { pool_per_class: 1000, test_per_class: 50_000, init_per_class: 50, seed: 0 }
    }
}

/// Writes the two-Gaussian problem: `init + pool` rows per class to `out` and
/// `test` rows per class to the sibling `.test` file. Returns both paths.
pub fn cmd_synth(opts: &SynthOptions, out: &Path) -> Result<(PathBuf, PathBuf)> {
    let train = generate_artificial(
        opts.pool_per_class + opts.init_per_class,
        &mut stream(opts.seed, 0, 0, Purpose::Synthetic),
    )?;
    let test = generate_artificial(opts.test_per_class, &mut stream(opts.seed, 0, 1, Purpose::Synthetic))?;
    let test_path = sibling_test_path(out);
    for (data, path) in [(&train, out), (&test, test_path.as_path())] {
        let mut w = create(path)?;
        write_libsvm(data, &mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))?;
    }
    Ok((out.to_path_buf(), test_path))
}

fn read_any(path: &Path, name: &str) -> Result<Dataset> {
    let reader = open(path)?;
    let is_csv = path.extension().is_some_and(|e| e == "csv");
    let parsed = if is_csv { read_reduced(reader, name) } else { parse_libsvm(reader, name) };
    parsed.map_err(|e| e.in_file(path.display().to_string()))
}

fn dataset_name(manifest: &RunManifest, path: &Path) -> String {
    if !manifest.dataset.is_empty() {
        return manifest.dataset.clone();
    }
    path.file_stem().and_then(|s| s.to_str()).unwrap_or("data").to_string()
}

/// Loads the training data and the optional separate test data, reducing
/// both to `pca_dims` components when they are wider.
///
/// The reduction standardizes and fits on the union of the two files; the
/// result is cached next to the input as `<name>.pca<k>.csv` (and
/// `<name>.test.pca<k>.csv`) and reused on later runs.
pub fn load_data(manifest: &RunManifest) -> Result<(Dataset, Option<Dataset>)> {
    let path = manifest.data.as_deref().ok_or_else(|| CliError::Usage("no dataset path".into()))?;
    let name = dataset_name(manifest, path);
    let train = read_any(path, &name)?;
    let test = manifest.test_data.as_deref().map(|p| read_any(p, &name)).transpose()?;
    if let Some(t) = &test {
        if t.dim() != train.dim() {
            return Err(CliError::Schema(format!(
                "test data has {} features but training data has {}",
                t.dim(),
                train.dim()
            )));
        }
    }
    let k = manifest.pca_dims;
    if k == 0 || train.dim() <= k {
        return Ok((train, test));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let train_cache = cache_path(dir, &name, k);
    let test_cache = cache_path(dir, &format!("{name}.test"), k);
    if train_cache.exists() && (test.is_none() || test_cache.exists()) {
        let tr = read_any(&train_cache, &name)?;
        let te = if test.is_some() { Some(read_any(&test_cache, &name)?) } else { None };
        return Ok((with_original_dim(tr, train.dim()), te.map(|t| with_original_dim(t, train.dim()))));
    }

    let mut all = train.features.clone();
    if let Some(t) = &test {
        for r in t.features.iter_rows() {
            all.push_row(r)?;
        }
    }
    let mut labels = train.labels.clone();
    labels.extend(test.iter().flat_map(|t| t.labels.iter().copied()));
    let union = standardize(&Dataset::new(all, labels, name.clone(), Provenance::Raw)?);
    let fit = pca_fit(&union.features, k)?;
    let reduced = fit.transform(&union.features)?;
    let n_train = train.len();
    let split_rows = |lo: usize, hi: usize| -> Result<Dataset> {
        let idx: Vec<usize> = (lo..hi).collect();
        let mut d = Dataset::new(reduced.select_rows(&idx), union.labels[lo..hi].to_vec(), name.clone(), Provenance::PcaReduced)?;
        d.meta.d_original = train.dim();
        Ok(d)
    };
    let tr = split_rows(0, n_train)?;
    let te = if test.is_some() { Some(split_rows(n_train, union.len())?) } else { None };
    let mut caches = vec![(&tr, train_cache)];
    if let Some(t) = &te {
        caches.push((t, test_cache));
    }
    for (d, p) in caches {
        let written = create(&p).and_then(|mut w| write_reduced(d, &mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&p, e)));
        if let Err(e) = written {
            eprintln!("warning: could not write cache {}: {e}", p.display());
        }
    }
    Ok((tr, te))
}

fn with_original_dim(mut d: Dataset, d_original: usize) -> Dataset {
    d.meta.d_original = d_original;
    d
}

/// All trajectories of a manifest, ordered by repetition then by the
/// manifest's method order. Repetitions and methods run on a rayon pool of
/// `threads` workers; the output does not depend on the thread count.
pub fn execute(manifest: &RunManifest, threads: Option<usize>) -> Result<Vec<TrajectoryRow>> {
    manifest.validate()?;
    let (train, test_file) = load_data(manifest)?;
    let name = dataset_name(manifest, manifest.data.as_deref().unwrap_or(Path::new("data")));
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| CliError::Usage(format!("cannot start worker threads: {e}")))?;
    let base = &manifest.experiment;

    pool.install(|| {
        let splits: Vec<SplitResult> = (0..manifest.n_repetitions)
            .into_par_iter()
            .map(|r| split_protocol(&train, base.init_per_class, &mut stream(base.seed, r, 0, Purpose::Split)))
            .collect::<std::result::Result<_, _>>()?;
        for (r, s) in splits.iter().enumerate() {
            let test = test_file.as_ref().unwrap_or(&s.test);
            if test.is_empty() {
                return Err(CliError::Usage(format!(
                    "repetition {r}: the split leaves no test rows; supply `test_data`"
                )));
            }
        }
        let jobs: Vec<(u64, SamplingMethod)> = (0..manifest.n_repetitions)
            .flat_map(|r| manifest.methods.iter().map(move |&m| (r, m)))
            .collect();
        let results: Vec<Result<Vec<TrajectoryRow>>> = jobs
            .par_iter()
            .map(|&(r, method)| {
                let split = &splits[r as usize];
                let test = test_file.as_ref().unwrap_or(&split.test);
                let cfg = ExperimentConfig { method, repetition: r, ..base.clone() };
                let t = active::run_active_learning(&cfg, &split.initial, split.pool.clone(), test)
                    .map_err(CliError::Core)?;
                if t.truncated {
                    eprintln!("warning: {name} {method} repetition {r}: pool exhausted after {} queries", t.records.len());
                }
                Ok(rows_from(&name, r, &t).collect())
            })
            .collect();
        let mut rows = Vec::new();
        for (res, (r, method)) in results.into_iter().zip(&jobs) {
            match res {
                Ok(v) => rows.extend(v),
                Err(e) => {
                    eprintln!("error: {method} repetition {r} failed");
                    return Err(e);
                }
            }
        }
        Ok(rows)
    })
}

/// Runs the manifest and writes `<out>/trajectories.csv`. On failure a
/// `PARTIAL` marker holding the error is written instead.
pub fn cmd_run(manifest: &RunManifest, out_dir: &Path, threads: Option<usize>) -> Result<PathBuf> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    let marker = out_dir.join(PARTIAL_MARKER);
    let target = out_dir.join(TRAJECTORIES_FILE);
    match execute(manifest, threads) {
        Ok(rows) => {
            let mut w = create(&target)?;
            write_trajectories(&rows, &mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&target, e))?;
            if marker.exists() {
                std::fs::remove_file(&marker).map_err(|e| CliError::io(&marker, e))?;
            }
            Ok(target)
        }
        Err(e) => {
            let _ = std::fs::write(&marker, format!("run aborted: {e}\n"));
            Err(e)
        }
    }
}

/// Population mean and standard deviation of the finite values, with their
/// count. NaN entries (undefined diagnostics) are skipped.
pub fn mean_std(values: &[f64]) -> (f64, f64, usize) {
    let v: Vec<f64> = values.iter().copied().filter(|x| !x.is_nan()).collect();
    if v.is_empty() {
        return (f64::NAN, f64::NAN, 0);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt(), v.len())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: SamplingMethod,
    pub iteration: usize,
    pub n_repetitions: usize,
    pub test_error_mean: f64,
    pub test_error_std: f64,
    pub if_mean: f64,
    pub if_std: f64,
    pub if_count: usize,
}

/// (dataset, method, iteration) positions → (test errors, influence values).
type Groups = BTreeMap<(usize, usize, usize), (Vec<f64>, Vec<f64>)>;

/// Groups rows by (dataset, method, iteration). Datasets and methods keep
/// their order of first appearance; iterations ascend.
pub fn summarize(rows: &[TrajectoryRow]) -> Vec<SummaryRow> {
    let mut datasets: Vec<&str> = Vec::new();
    let mut methods: Vec<SamplingMethod> = Vec::new();
    let mut groups = Groups::new();
    for r in rows {
        let d = datasets.iter().position(|&x| x == r.dataset).unwrap_or_else(|| {
            datasets.push(&r.dataset);
            datasets.len() - 1
        });
        let m = methods.iter().position(|&x| x == r.method).unwrap_or_else(|| {
            methods.push(r.method);
            methods.len() - 1
        });
        let g = groups.entry((d, m, r.iteration)).or_default();
        g.0.push(r.test_error);
        g.1.push(r.if_at_outlier);
    }
    groups
        .into_iter()
        .map(|((d, m, iteration), (err, inf))| {
            let (test_error_mean, test_error_std, _) = mean_std(&err);
            let (if_mean, if_std, if_count) = mean_std(&inf);
            SummaryRow {
                dataset: datasets[d].to_string(),
                method: methods[m],
                iteration,
                n_repetitions: err.len(),
                test_error_mean,
                test_error_std,
                if_mean,
                if_std,
                if_count,
            }
        })
        .collect()
}

pub fn write_summary<W: Write>(summary: &[SummaryRow], mut out: W) -> std::io::Result<()> {
    writeln!(out, "# robust-qbc summary v1; std is the population standard deviation (divisor = number of repetitions); if_at_outlier statistics skip NaN entries")?;
    writeln!(out, "dataset,method,iteration,n_repetitions,test_error_mean,test_error_std,if_at_outlier_mean,if_at_outlier_std,if_at_outlier_n")?;
    for s in summary {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            s.dataset, s.method, s.iteration, s.n_repetitions, s.test_error_mean, s.test_error_std, s.if_mean, s.if_std, s.if_count
        )?;
    }
    Ok(())
}

/// Wide table for plotting: one row per (dataset, iteration), and for each
/// method the mean with a one-std band for the error and the influence.
pub fn write_plot_data<W: Write>(summary: &[SummaryRow], mut out: W) -> std::io::Result<()> {
    let mut methods: Vec<SamplingMethod> = Vec::new();
    for s in summary {
        if !methods.contains(&s.method) {
            methods.push(s.method);
        }
    }
    writeln!(out, "# robust-qbc plot-data v1; bands are mean -/+ population std")?;
    let mut header = vec!["dataset".to_string(), "iteration".to_string()];
    for m in &methods {
        for c in ["error_mean", "error_lo", "error_hi", "if_mean", "if_lo", "if_hi"] {
            header.push(format!("{m}_{c}"));
        }
    }
    writeln!(out, "{}", header.join(","))?;
    let mut keys: Vec<(&str, usize)> = Vec::new();
    for s in summary {
        if !keys.contains(&(s.dataset.as_str(), s.iteration)) {
            keys.push((&s.dataset, s.iteration));
        }
    }
    keys.sort_by_key(|&(d, it)| (summary.iter().position(|s| s.dataset == d), it));
    for (d, it) in keys {
        let mut line = format!("{d},{it}");
        for m in &methods {
            match summary.iter().find(|s| s.dataset == d && s.iteration == it && s.method == *m) {
                Some(s) => line.push_str(&format!(
                    ",{},{},{},{},{},{}",
                    s.test_error_mean,
                    s.test_error_mean - s.test_error_std,
                    s.test_error_mean + s.test_error_std,
                    s.if_mean,
                    s.if_mean - s.if_std,
                    s.if_mean + s.if_std
                )),
                None => line.push_str(",,,,,,"),
            }
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Reads a trajectories file and writes `summary.csv` and `plot_data.csv`
/// into `out_dir`.
pub fn cmd_report(input: &Path, out_dir: &Path) -> Result<(PathBuf, PathBuf)> {
    let rows = read_trajectories(open(input)?).map_err(|e| e.in_file(input.display().to_string()))?;
    let summary = summarize(&rows);
    let sp = out_dir.join(SUMMARY_FILE);
    let pp = out_dir.join(PLOT_DATA_FILE);
    let mut w = create(&sp)?;
    write_summary(&summary, &mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&sp, e))?;
    let mut w = create(&pp)?;
    write_plot_data(&summary, &mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&pp, e))?;
    Ok((sp, pp))
}
