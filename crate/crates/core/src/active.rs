//! The pool-based query-by-committee loop.
//!
//! Each iteration rebuilds the committee from the current labelled set,
//! queries one pool point, reveals its label, refits the predictive model
//! on all labelled data and records the test error together with the
//! acquisition influence at the pool point the predictive model is most
//! extreme on.

use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::acquisition::{select_query_masked, AcquisitionMethod, Committee};
use crate::data::Dataset;
use crate::error::{fail, Error, Result};
use crate::family::{fit_mle, FamilyKind, FitOptions, GlmFamily, GlmModel};
use crate::influence::{if_acquisition, pool_outlier_xi_masked};
use crate::linalg::{dot, Matrix};
use crate::mixture::Weights;
use crate::rng::{stream, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SamplingMethod {
    Kl,
    Beta,
    Gamma,
    Random,
}

impl SamplingMethod {
    pub const ALL: [SamplingMethod; 4] =
        [SamplingMethod::Kl, SamplingMethod::Beta, SamplingMethod::Gamma, SamplingMethod::Random];

    pub fn name(self) -> &'static str {
        match self {
            SamplingMethod::Kl => "KL",
            SamplingMethod::Beta => "Beta",
            SamplingMethod::Gamma => "Gamma",
            SamplingMethod::Random => "Random",
        }
    }
}

impl fmt::Display for SamplingMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SamplingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "kl" => Ok(SamplingMethod::Kl),
            "beta" => Ok(SamplingMethod::Beta),
            "gamma" => Ok(SamplingMethod::Gamma),
            "random" => Ok(SamplingMethod::Random),
            other => Err(Error::Config(alloc::format!(
                "unknown method `{other}` (expected KL, Beta, Gamma or Random)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub method: SamplingMethod,
    pub committee_size: usize,
    pub n_iterations: usize,
    pub init_per_class: usize,
    pub seed: u64,
    /// Index of this run among repeated runs sharing `seed`.
    pub repetition: u64,
    pub family: GlmFamily,
    pub beta: f64,
    pub gamma: f64,
    pub fit: FitOptions,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            method: SamplingMethod::Kl,
            committee_size: 10,
            n_iterations: 100,
            init_per_class: 50,
            seed: 0,
            repetition: 0,
            family: GlmFamily::BERNOULLI,
            beta: 1.0,
            gamma: 1.0,
            fit: FitOptions::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.committee_size < 2 {
            fail!(Config, "committee_size must be at least 2, got {}", self.committee_size);
        }
        if self.n_iterations < 1 {
            fail!(Config, "n_iterations must be at least 1");
        }
        if let Some(m) = self.acquisition_method() {
            m.validate(&self.family).map_err(|e| Error::Config(alloc::format!("{e}")))?;
        }
        Ok(())
    }

    /// Disagreement measure behind the method; `None` for random sampling.
    pub fn acquisition_method(&self) -> Option<AcquisitionMethod> {
        match self.method {
            SamplingMethod::Kl => Some(AcquisitionMethod::Kl),
            SamplingMethod::Beta => Some(AcquisitionMethod::Beta { beta: self.beta }),
            SamplingMethod::Gamma => Some(AcquisitionMethod::Gamma { gamma: self.gamma }),
            SamplingMethod::Random => None,
        }
    }
}

/// Candidate points with labels held back until queried.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPool {
    /// Pool features without the intercept column.
    pub features: Matrix,
    hidden_labels: Vec<u8>,
    available: Vec<bool>,
}

impl LabeledPool {
    pub fn new(features: Matrix, hidden_labels: Vec<u8>) -> Result<Self> {
        if features.rows() != hidden_labels.len() {
            return Err(Error::DimensionMismatch { expected: features.rows(), got: hidden_labels.len() });
        }
        let available = alloc::vec![true; hidden_labels.len()];
        Ok(Self { features, hidden_labels, available })
    }

    pub fn len(&self) -> usize {
        self.hidden_labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.hidden_labels.is_empty()
    }

    pub fn available(&self) -> &[bool] {
        &self.available
    }

    pub fn n_available(&self) -> usize {
        self.available.iter().filter(|&&a| a).count()
    }

    /// Returns the label of row `i` and marks the row as used.
    pub fn reveal(&mut self, i: usize) -> Result<u8> {
        match self.available.get(i) {
            Some(true) => {
                self.available[i] = false;
                Ok(self.hidden_labels[i])
            }
            Some(false) => fail!(Parameter, "pool row {i} has already been queried"),
            None => Err(Error::DimensionMismatch { expected: self.len(), got: i }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based.
    pub iteration: usize,
    pub queried_pool_index: usize,
    /// Score of the queried point; NaN for random sampling.
    pub acquisition_score: f64,
    pub test_error: f64,
    /// Influence of the pool outlier on the acquisition score at the queried
    /// point; NaN for random sampling or when no pool point remains.
    pub if_at_outlier: f64,
    pub theta_snapshot_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub method: SamplingMethod,
    pub records: Vec<IterationRecord>,
    /// The pool ran out before `n_iterations`.
    pub truncated: bool,
}

/// Shuffles the labelled rows and fits one model per contiguous fold; fold
/// sizes differ by at most one.
#[allow(clippy::too_many_arguments)]
pub fn build_committee<R: Rng + ?Sized>(
    family: GlmFamily,
    x: &Matrix,
    y: &[f64],
    c: usize,
    w: Weights,
    opts: &FitOptions,
    rng: &mut R,
) -> Result<Committee> {
    let n = x.rows();
    if c > n {
        fail!(Config, "committee of {c} needs at least {c} labelled rows, got {n}");
    }
    if w.len() != c {
        return Err(Error::DimensionMismatch { expected: c, got: w.len() });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut models = Vec::with_capacity(c);
    let mut start = 0;
    for k in 0..c {
        let size = n / c + usize::from(k < n % c);
        let fold = &idx[start..start + size];
        start += size;
        let fy: Vec<f64> = fold.iter().map(|&i| y[i]).collect();
        models.push(fit_mle(family, &x.select_rows(fold), &fy, opts)?);
    }
    Committee::new(models, w)
}

/// Misclassification rate; class 1 when the fitted mean is at least 1/2
/// (for the logistic model: `ξ ≥ 0`).
pub fn evaluate_error(model: &GlmModel, test: &Dataset) -> Result<f64> {
    if test.is_empty() {
        fail!(Data, "test set is empty");
    }
    let with_intercept = model.dim() == test.dim() + 1;
    if !with_intercept && model.dim() != test.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: test.dim() });
    }
    let threshold = match model.family.kind() {
        FamilyKind::Bernoulli => 0.0,
        FamilyKind::Gaussian { .. } => 0.5,
    };
    let d = test.dim();
    let mut wrong = 0usize;
    for (row, &label) in test.features.iter_rows().zip(&test.labels) {
        let mut xi = dot(&model.theta[..d], row);
        if with_intercept {
            xi += model.theta[d];
        }
        if u8::from(xi >= threshold) != label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / test.len() as f64)
}

/// Runs the loop for `config.n_iterations` queries.
///
/// The test set is only read by [`evaluate_error`]. Committee folds and
/// random queries draw from separate streams keyed by
/// `(seed, repetition, iteration)`, so the run is a pure function of its
/// inputs.
pub fn run_active_learning(
    config: &ExperimentConfig,
    initial: &Dataset,
    mut pool: LabeledPool,
    test: &Dataset,
) -> Result<Trajectory> {
    config.validate()?;
    if pool.features.cols() != initial.dim() {
        return Err(Error::DimensionMismatch { expected: initial.dim(), got: pool.features.cols() });
    }
    let family = config.family;
    let method = config.acquisition_method();
    let pool_x = pool.features.with_intercept();
    let mut x = initial.features.with_intercept();
    let mut y = initial.responses();
    let mut records = Vec::with_capacity(config.n_iterations);
    let mut truncated = false;

    for t in 1..=config.n_iterations {
        let n_avail = pool.n_available();
        if n_avail == 0 {
            truncated = true;
            break;
        }
        let it = t as u64;
        let committee = match method {
            Some(_) => Some(build_committee(
                family,
                &x,
                &y,
                config.committee_size,
                Weights::uniform(config.committee_size)?,
                &config.fit,
                &mut stream(config.seed, config.repetition, it, Purpose::Committee),
            )?),
            None => None,
        };
        let (chosen, score) = match (&committee, &method) {
            (Some(c), Some(m)) => {
                let r = select_query_masked(c, &pool_x, pool.available(), m)?;
                (r.chosen_index, r.scores[r.chosen_index])
            }
            _ => {
                let k = stream(config.seed, config.repetition, it, Purpose::RandomQuery).random_range(0..n_avail);
                let i = pool.available().iter().enumerate().filter(|(_, &a)| a).nth(k).map(|(i, _)| i);
                (i.ok_or(Error::PoolExhausted)?, f64::NAN)
            }
        };
        let label = pool.reveal(chosen)?;
        let query = pool_x.row(chosen);
        x.push_row(query)?;
        y.push(f64::from(label));

        let model = fit_mle(family, &x, &y, &config.fit)?;
        let test_error = evaluate_error(&model, test)?;

        let if_at_outlier = match (&committee, &method) {
            (Some(c), Some(m)) => match pool_outlier_xi_masked(&model, &pool_x, pool.available()) {
                Ok((_, xi_out)) => if_acquisition(m, c, query, xi_out)?.value(),
                Err(Error::PoolExhausted) => f64::NAN,
                Err(e) => return Err(e),
            },
            _ => f64::NAN,
        };
        records.push(IterationRecord {
            iteration: t,
            queried_pool_index: chosen,
            acquisition_score: score,
            test_error,
            if_at_outlier,
            theta_snapshot_norm: model.diagnostics.theta_norm,
        });
    }
    Ok(Trajectory { method: config.method, records, truncated })
}
