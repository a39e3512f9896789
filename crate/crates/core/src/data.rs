//! Datasets, preprocessing and the train/pool/test protocol.

use alloc::string::String;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::active::LabeledPool;
use crate::error::{fail, Error, Result};
use crate::linalg::{symmetric_eigen, Matrix};

/// Where a dataset's features came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Raw,
    Standardized,
    PcaReduced,
    Synthetic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatasetMeta {
    pub name: String,
    pub source: Provenance,
    /// Feature count before any reduction.
    pub d_original: usize,
}

/// Dense binary-labelled data. Features exclude the intercept column.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<u8>,
    pub meta: DatasetMeta,
}

impl Dataset {
    pub fn new(features: Matrix, labels: Vec<u8>, name: impl Into<String>, source: Provenance) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::DimensionMismatch { expected: features.rows(), got: labels.len() });
        }
        if labels.is_empty() {
            fail!(Data, "dataset has no rows");
        }
        if let Some(i) = labels.iter().position(|&l| l > 1) {
            fail!(Data, "label {} at row {i} is not binary", labels[i]);
        }
        if !features.all_finite() {
            fail!(Data, "dataset has non-finite feature values");
        }
        let d_original = features.cols();
        Ok(Self { features, labels, meta: DatasetMeta { name: name.into(), source, d_original } })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Labels as real responses for fitting.
    pub fn responses(&self) -> Vec<f64> {
        self.labels.iter().map(|&l| f64::from(l)).collect()
    }

    pub fn class_counts(&self) -> [usize; 2] {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        [self.labels.len() - ones, ones]
    }

    /// Subset of rows in the given order; metadata is kept.
    pub fn select(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.select_rows(idx),
            labels: idx.iter().map(|&i| self.labels[i]).collect(),
            meta: self.meta.clone(),
        }
    }
}

/// Column means and standard deviations (divisor `n`).
pub fn column_moments(x: &Matrix) -> (Vec<f64>, Vec<f64>) {
    let n = x.rows() as f64;
    let d = x.cols();
    let mut mean = alloc::vec![0.0; d];
    for r in x.iter_rows() {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = alloc::vec![0.0; d];
    for r in x.iter_rows() {
        for j in 0..d {
            let c = r[j] - mean[j];
            var[j] += c * c;
        }
    }
    (mean, var.iter().map(|v| (v / n).sqrt()).collect())
}

/// Zero mean, unit variance per column. Constant columns are centred only.
pub fn standardize(data: &Dataset) -> Dataset {
    let (mean, sd) = column_moments(&data.features);
    let mut x = data.features.clone();
    for i in 0..x.rows() {
        let r = x.row_mut(i);
        for j in 0..r.len() {
            r[j] = (r[j] - mean[j]) / sd[j].max(1e-12);
        }
    }
    Dataset {
        features: x,
        labels: data.labels.clone(),
        meta: DatasetMeta { source: Provenance::Standardized, ..data.meta.clone() },
    }
}

/// Fitted principal directions.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaFit {
    pub mean: Vec<f64>,
    /// `d×k`, one unit direction per column.
    pub components: Matrix,
    /// All `d` covariance eigenvalues, non-increasing.
    pub eigenvalues: Vec<f64>,
    /// Share of total variance captured by each of the `k` components.
    pub explained_variance_ratio: Vec<f64>,
    pub rank: usize,
}

impl PcaFit {
    pub fn transform(&self, x: &Matrix) -> Result<Matrix> {
        let d = self.mean.len();
        if x.cols() != d {
            return Err(Error::DimensionMismatch { expected: d, got: x.cols() });
        }
        let k = self.components.cols();
        let mut out = Matrix::zeros(x.rows(), k);
        let mut centred = alloc::vec![0.0; d];
        for (i, r) in x.iter_rows().enumerate() {
            for j in 0..d {
                centred[j] = r[j] - self.mean[j];
            }
            let o = out.row_mut(i);
            for (c, oc) in o.iter_mut().enumerate() {
                *oc = (0..d).map(|j| centred[j] * self.components.get(j, c)).sum();
            }
        }
        Ok(out)
    }
}

/// Relative eigenvalue threshold below which a direction counts as null.
const RANK_TOLERANCE: f64 = 1e-12;

/// Top-`k` principal directions of the sample covariance (divisor `n − 1`).
///
/// Each direction is signed so that its largest-magnitude coordinate is
/// positive (the first such coordinate on ties).
pub fn pca_fit(x: &Matrix, k: usize) -> Result<PcaFit> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        fail!(Data, "PCA needs at least 2 rows, got {n}");
    }
    if k == 0 || k > d {
        fail!(Parameter, "PCA target dimension must lie in 1..={d}, got {k}");
    }
    let (mean, _) = column_moments(x);
    let mut cov = alloc::vec![0.0; d * d];
    let mut c = alloc::vec![0.0; d];
    for r in x.iter_rows() {
        for j in 0..d {
            c[j] = r[j] - mean[j];
        }
        for a in 0..d {
            for b in a..d {
                cov[a * d + b] += c[a] * c[b];
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = cov[a * d + b] / (n as f64 - 1.0);
            cov[a * d + b] = v;
            cov[b * d + a] = v;
        }
    }
    let (eigenvalues, vectors) = symmetric_eigen(&cov, d)?;
    let top = eigenvalues.first().copied().unwrap_or(0.0).max(0.0);
    let rank = eigenvalues.iter().filter(|&&l| l > RANK_TOLERANCE * top && l > 0.0).count();
    if k > rank {
        fail!(Data, "PCA to {k} dimensions requested but the data has rank {rank}");
    }
    let mut components = Matrix::zeros(d, k);
    for col in 0..k {
        let mut lead = 0;
        for j in 1..d {
            if vectors.get(j, col).abs() > vectors.get(lead, col).abs() {
                lead = j;
            }
        }
        let sign = if vectors.get(lead, col) < 0.0 { -1.0 } else { 1.0 };
        for j in 0..d {
            components.set(j, col, sign * vectors.get(j, col));
        }
    }
    let total: f64 = eigenvalues.iter().map(|l| l.max(0.0)).sum();
    let explained_variance_ratio = eigenvalues[..k].iter().map(|l| l.max(0.0) / total).collect();
    Ok(PcaFit { mean, components, eigenvalues, explained_variance_ratio, rank })
}

/// Projects `data` onto its top-`k` principal directions.
pub fn pca_reduce(data: &Dataset, k: usize) -> Result<Dataset> {
    let fit = pca_fit(&data.features, k)?;
    let features = fit.transform(&data.features)?;
    Ok(Dataset {
        features,
        labels: data.labels.clone(),
        meta: DatasetMeta { source: Provenance::PcaReduced, ..data.meta.clone() },
    })
}

/// Mean of class 0 in the artificial problem; class 1 has the negated mean.
pub const ARTIFICIAL_MEAN: [f64; 3] = [1.0, 1.0, 1.0];

/// Two unit-covariance Gaussian classes in 3-D: `n_per_class` rows with label
/// 0 around `(1,1,1)`, then `n_per_class` rows with label 1 around
/// `−(1,1,1)`.
pub fn generate_artificial<R: Rng + ?Sized>(n_per_class: usize, rng: &mut R) -> Result<Dataset> {
    if n_per_class == 0 {
        fail!(Parameter, "need at least one point per class");
    }
    let mut data = Vec::with_capacity(6 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (label, sign) in [(0u8, 1.0), (1u8, -1.0)] {
        for _ in 0..n_per_class {
            for m in ARTIFICIAL_MEAN {
                let z: f64 = rng.sample(StandardNormal);
                data.push(sign * m + z);
            }
            labels.push(label);
        }
    }
    let features = Matrix::from_vec(2 * n_per_class, 3, data)?;
    Dataset::new(features, labels, "artificial", Provenance::Synthetic)
}

/// Initial / pool / test partition of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitResult {
    pub initial: Dataset,
    pub pool: LabeledPool,
    pub test: Dataset,
    /// Pool size per class.
    pub m: usize,
    /// Source row of every initial, pool and test row, in order.
    pub initial_rows: Vec<usize>,
    pub pool_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
}

/// Draws `init_per_class` rows per class for the initial labelled set, then
/// `m` rows per class for the pool, where `m` is the smaller class's
/// remainder; everything else is the test set. Row lists are sorted.
pub fn split_protocol<R: Rng + ?Sized>(data: &Dataset, init_per_class: usize, rng: &mut R) -> Result<SplitResult> {
    let mut by_class: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in data.labels.iter().enumerate() {
        by_class[usize::from(l)].push(i);
    }
    for (class, rows) in by_class.iter().enumerate() {
        if rows.len() <= init_per_class {
            fail!(
                Data,
                "class {class} has {} rows; the split needs more than {init_per_class}",
                rows.len()
            );
        }
    }
    let m = by_class.iter().map(|r| r.len() - init_per_class).min().unwrap_or(0);
    let mut initial_rows = Vec::new();
    let mut pool_rows = Vec::new();
    let mut test_rows = Vec::new();
    for rows in by_class.iter_mut() {
        rows.shuffle(rng);
        initial_rows.extend_from_slice(&rows[..init_per_class]);
        pool_rows.extend_from_slice(&rows[init_per_class..init_per_class + m]);
        test_rows.extend_from_slice(&rows[init_per_class + m..]);
    }
    initial_rows.sort_unstable();
    pool_rows.sort_unstable();
    test_rows.sort_unstable();
    let pool_data = data.select(&pool_rows);
    let test = Dataset {
        features: if test_rows.is_empty() { Matrix::zeros(0, data.dim()) } else { data.features.select_rows(&test_rows) },
        labels: test_rows.iter().map(|&i| data.labels[i]).collect(),
        meta: data.meta.clone(),
    };
    Ok(SplitResult {
        initial: data.select(&initial_rows),
        pool: LabeledPool::new(pool_data.features, pool_data.labels)?,
        test,
        m,
        initial_rows,
        pool_rows,
        test_rows,
    })
}
