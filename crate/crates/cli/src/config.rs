//! Run manifests: `key = value` lines, `#` starts a comment.
//!
//! ```text
//! dataset = artificial
//! data = data/artificial.libsvm
//! test_data = data/artificial.test.libsvm
//! methods = KL, Beta, Gamma, Random
//! n_repetitions = 10
//! n_iterations = 100
//! committee_size = 10
//! init_per_class = 50
//! seed = 1
//! beta = 1.0
//! gamma = 1.0
//! ```
//!
//! Unknown keys and repeated keys are errors.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use robust_qbc_core::{ExperimentConfig, FitOptions, GlmFamily, SamplingMethod};

use crate::error::{CliError, Result};

pub const KEYS: &[&str] = &[
    "dataset",
    "data",
    "test_data",
    "methods",
    "n_repetitions",
    "n_iterations",
    "committee_size",
    "init_per_class",
    "seed",
    "family",
    "sigma2",
    "beta",
    "gamma",
    "pca_dims",
    "max_iter",
    "tol",
];

#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub dataset: String,
    pub data: Option<PathBuf>,
    /// Separate test file. When absent the split remainder is the test set.
    pub test_data: Option<PathBuf>,
    pub methods: Vec<SamplingMethod>,
    pub n_repetitions: u64,
    /// Reduce to this many principal components when the data is wider;
    /// 0 disables the reduction.
    pub pca_dims: usize,
    /// Template for every run; `method` and `repetition` are set per job.
    pub experiment: ExperimentConfig,
}

impl Default for RunManifest {
    fn default() -> Self {
        Self {
            dataset: String::new(),
            data: None,
            test_data: None,
            methods: SamplingMethod::ALL.to_vec(),
            n_repetitions: 10,
            pca_dims: 3,
            experiment: ExperimentConfig::default(),
        }
    }
}

fn value<T: std::str::FromStr>(lineno: usize, key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| CliError::parse(lineno, format!("invalid value `{v}` for `{key}`")))
}

impl RunManifest {
    /// Parses manifest text; relative paths are resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self> {
        let mut m = RunManifest::default();
        let mut seen = BTreeSet::new();
        let mut family = "bernoulli".to_string();
        let mut sigma2 = 1.0;
        let mut fit = FitOptions::default();
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, v) = line
                .split_once('=')
                .ok_or_else(|| CliError::parse(lineno, format!("expected `key = value`, got `{line}`")))?;
            let (key, v) = (key.trim(), v.trim());
            if !KEYS.contains(&key) {
                return Err(CliError::parse(lineno, format!("unknown key `{key}` (allowed: {})", KEYS.join(", "))));
            }
            if !seen.insert(key.to_string()) {
                return Err(CliError::parse(lineno, format!("key `{key}` given twice")));
            }
            match key {
                "dataset" => m.dataset = v.to_string(),
                "data" => m.data = Some(base_dir.join(v)),
                "test_data" => m.test_data = Some(base_dir.join(v)),
                "methods" => {
                    m.methods = v
                        .split(',')
                        .map(|s| s.parse::<SamplingMethod>().map_err(|e| CliError::parse(lineno, e.to_string())))
                        .collect::<Result<_>>()?;
                }
                "n_repetitions" => m.n_repetitions = value(lineno, key, v)?,
                "n_iterations" => m.experiment.n_iterations = value(lineno, key, v)?,
                "committee_size" => m.experiment.committee_size = value(lineno, key, v)?,
                "init_per_class" => m.experiment.init_per_class = value(lineno, key, v)?,
                "seed" => m.experiment.seed = value(lineno, key, v)?,
                "family" => family = v.to_ascii_lowercase(),
                "sigma2" => sigma2 = value(lineno, key, v)?,
                "beta" => m.experiment.beta = value(lineno, key, v)?,
                "gamma" => m.experiment.gamma = value(lineno, key, v)?,
                "pca_dims" => m.pca_dims = value(lineno, key, v)?,
                "max_iter" => fit.max_iter = value(lineno, key, v)?,
                "tol" => fit.tol = value(lineno, key, v)?,
                _ => unreachable!("key list and match arms agree"),
            }
        }
        m.experiment.family = match family.as_str() {
            "bernoulli" => GlmFamily::BERNOULLI,
            "gaussian" => GlmFamily::gaussian(sigma2)?,
            other => return Err(CliError::Usage(format!("unknown family `{other}` (bernoulli or gaussian)"))),
        };
        m.experiment.fit = fit;
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base).map_err(|e| e.in_file(path.display().to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.methods.is_empty() {
            return Err(CliError::Usage("methods list is empty".into()));
        }
        if self.n_repetitions == 0 {
            return Err(CliError::Usage("n_repetitions must be at least 1".into()));
        }
        if self.data.is_none() {
            return Err(CliError::Usage("no dataset path (set `data` or pass --data)".into()));
        }
        for &method in &self.methods {
            ExperimentConfig { method, ..self.experiment.clone() }.validate()?;
        }
        Ok(())
    }
}
