//! Canonical-link GLM families and maximum-likelihood fitting.
//!
//! A family is written in canonical form
//!
//! ```text
//! p(y | ξ) = exp( (y ξ − ψ(ξ)) / φ + c(y, φ) )
//! ```
//!
//! with cumulant `ψ`, known dispersion `φ` and base measure term `c`. The
//! linear predictor is `ξ(x) = ⟨θ, x⟩`; callers append the intercept
//! coordinate to `x` before fitting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{fail, Error, Result};
use crate::linalg::{cholesky_solve, dot, norm2, Matrix};

/// Output space of a family.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    RealLine,
    /// `{0, 1}`.
    Binary,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FamilyKind {
    Gaussian { sigma2: f64 },
    Bernoulli,
}

/// A GLM family. The support is derived from the kind, so the two can
/// never disagree.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GlmFamily {
    kind: FamilyKind,
}

impl GlmFamily {
    pub const BERNOULLI: GlmFamily = GlmFamily { kind: FamilyKind::Bernoulli };

    pub fn gaussian(sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            fail!(Parameter, "Gaussian dispersion must be positive and finite, got {sigma2}");
        }
        Ok(Self { kind: FamilyKind::Gaussian { sigma2 } })
    }

    pub fn kind(&self) -> FamilyKind {
        self.kind
    }

    pub fn support(&self) -> Support {
        match self.kind {
            FamilyKind::Gaussian { .. } => Support::RealLine,
            FamilyKind::Bernoulli => Support::Binary,
        }
    }

    /// Dispersion `φ`.
    pub fn dispersion(&self) -> f64 {
        match self.kind {
            FamilyKind::Gaussian { sigma2 } => sigma2,
            FamilyKind::Bernoulli => 1.0,
        }
    }

    /// Cumulant `ψ(ξ)`.
    pub fn cumulant(&self, xi: f64) -> Result<f64> {
        check_xi(xi)?;
        Ok(self.psi(xi))
    }

    /// Mean map `ψ′(ξ)`.
    pub fn cumulant_d1(&self, xi: f64) -> Result<f64> {
        check_xi(xi)?;
        Ok(self.mean(xi))
    }

    /// Variance function `ψ″(ξ)`.
    pub fn cumulant_d2(&self, xi: f64) -> Result<f64> {
        check_xi(xi)?;
        Ok(self.variance(xi))
    }

    /// `log p(y | ξ)`.
    pub fn log_density(&self, y: f64, xi: f64) -> Result<f64> {
        check_xi(xi)?;
        self.check_output(y)?;
        Ok(self.log_density_unchecked(y, xi))
    }

    pub fn density(&self, y: f64, xi: f64) -> Result<f64> {
        self.log_density(y, xi).map(Float::exp)
    }

    /// `c(y, φ)`; zero for Bernoulli.
    pub fn base_measure(&self, y: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian { sigma2 } => -y * y / (2.0 * sigma2) - 0.5 * (2.0 * PI * sigma2).ln(),
            FamilyKind::Bernoulli => 0.0,
        }
    }

    pub fn check_output(&self, y: f64) -> Result<()> {
        match self.kind {
            FamilyKind::Gaussian { .. } if y.is_finite() => Ok(()),
            FamilyKind::Bernoulli if y == 0.0 || y == 1.0 => Ok(()),
            _ => fail!(Domain, "output {y} is outside the support of {:?}", self.kind),
        }
    }

    #[inline]
    pub(crate) fn psi(&self, xi: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian { .. } => 0.5 * xi * xi,
            FamilyKind::Bernoulli => softplus(xi),
        }
    }

    #[inline]
    pub(crate) fn mean(&self, xi: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian { .. } => xi,
            FamilyKind::Bernoulli => sigmoid(xi),
        }
    }

    #[inline]
    pub(crate) fn variance(&self, xi: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian { .. } => 1.0,
            FamilyKind::Bernoulli => {
                let s = sigmoid(xi);
                s * (1.0 - s)
            }
        }
    }

    /// Log density without argument checks. For Bernoulli this is evaluated
    /// as `−softplus(∓ξ)` so it stays accurate deep in the tails.
    #[inline]
    pub(crate) fn log_density_unchecked(&self, y: f64, xi: f64) -> f64 {
        match self.kind {
            FamilyKind::Gaussian { sigma2 } => (y * xi - 0.5 * xi * xi) / sigma2 + self.base_measure(y),
            FamilyKind::Bernoulli => {
                if y == 1.0 {
                    -softplus(-xi)
                } else {
                    -softplus(xi)
                }
            }
        }
    }
}

fn check_xi(xi: f64) -> Result<()> {
    if xi.is_finite() {
        Ok(())
    } else {
        fail!(Domain, "canonical parameter must be finite, got {xi}")
    }
}

/// `log(1 + e^x)` without overflow.
#[inline]
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Newton / least-squares settings.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    pub max_iter: usize,
    /// Gradient ∞-norm tolerance.
    pub tol: f64,
    pub max_halvings: usize,
    /// Ridge penalty `λ/2 ‖θ‖²`; zero by default.
    pub ridge: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { max_iter: 50, tol: 1e-8, max_halvings: 20, ridge: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitDiagnostics {
    pub iterations: usize,
    pub converged: bool,
    pub theta_norm: f64,
}

/// A fitted GLM: family plus coefficient vector (intercept last).
#[derive(Debug, Clone, PartialEq)]
pub struct GlmModel {
    pub family: GlmFamily,
    pub theta: Vec<f64>,
    pub diagnostics: FitDiagnostics,
}

impl GlmModel {
    pub fn new(family: GlmFamily, theta: Vec<f64>) -> Self {
        let theta_norm = norm2(&theta);
        Self { family, theta, diagnostics: FitDiagnostics { iterations: 0, converged: true, theta_norm } }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }

    /// Linear predictor `⟨θ, x⟩`.
    pub fn predictor(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.theta.len() {
            return Err(Error::DimensionMismatch { expected: self.theta.len(), got: x.len() });
        }
        Ok(dot(&self.theta, x))
    }
}

/// Maximum-likelihood fit of `θ`.
///
/// Gaussian: ordinary least squares (plus ridge). Bernoulli: Newton–Raphson
/// with step halving so the penalized log-likelihood never decreases.
/// Separable data does not converge; the fit then stops at `max_iter` with a
/// large but finite `θ` and `converged = false`.
pub fn fit_mle(family: GlmFamily, x: &Matrix, y: &[f64], opts: &FitOptions) -> Result<GlmModel> {
    let n = x.rows();
    if n == 0 {
        fail!(Fit, "cannot fit on an empty design");
    }
    if y.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: y.len() });
    }
    if !(opts.ridge >= 0.0) {
        fail!(Parameter, "ridge penalty must be non-negative, got {}", opts.ridge);
    }
    for &yi in y {
        family.check_output(yi)?;
    }
    if !x.all_finite() {
        fail!(Fit, "design matrix has non-finite entries");
    }
    match family.kind {
        FamilyKind::Gaussian { .. } => fit_least_squares(family, x, y, opts),
        FamilyKind::Bernoulli => fit_newton(family, x, y, opts),
    }
}

fn fit_least_squares(family: GlmFamily, x: &Matrix, y: &[f64], opts: &FitOptions) -> Result<GlmModel> {
    let d = x.cols();
    let mut xtx = vec![0.0; d * d];
    let mut xty = vec![0.0; d];
    for (row, &yi) in x.iter_rows().zip(y) {
        for a in 0..d {
            xty[a] += row[a] * yi;
            for b in 0..d {
                xtx[a * d + b] += row[a] * row[b];
            }
        }
    }
    for a in 0..d {
        xtx[a * d + a] += opts.ridge;
    }
    let theta = cholesky_solve(&xtx, d, &xty).ok_or_else(|| {
        Error::Fit(format!("normal equations are singular ({} rows, {} columns)", x.rows(), d))
    })?;
    let theta_norm = norm2(&theta);
    Ok(GlmModel { family, theta, diagnostics: FitDiagnostics { iterations: 1, converged: true, theta_norm } })
}

fn bernoulli_objective(x: &Matrix, y: &[f64], theta: &[f64], ridge: f64) -> f64 {
    let ll: f64 = x
        .iter_rows()
        .zip(y)
        .map(|(row, &yi)| {
            let xi = dot(theta, row);
            if yi == 1.0 {
                -softplus(-xi)
            } else {
                -softplus(xi)
            }
        })
        .sum();
    ll - 0.5 * ridge * dot(theta, theta)
}

fn fit_newton(family: GlmFamily, x: &Matrix, y: &[f64], opts: &FitOptions) -> Result<GlmModel> {
    let d = x.cols();
    let mut theta = vec![0.0; d];
    let mut objective = bernoulli_objective(x, y, &theta, opts.ridge);
    let mut converged = false;
    let mut iterations = 0;
    let mut grad = vec![0.0; d];
    let mut hess = vec![0.0; d * d];

    for it in 0..=opts.max_iter {
        grad.iter_mut().for_each(|g| *g = 0.0);
        hess.iter_mut().for_each(|h| *h = 0.0);
        for (row, &yi) in x.iter_rows().zip(y) {
            let xi = dot(&theta, row);
            // both tails evaluated directly so neither 1 − μ nor the
            // residual rounds to zero for large |ξ|
            let (mu, nu) = (sigmoid(xi), sigmoid(-xi));
            let v = mu * nu;
            let resid = if yi == 1.0 { nu } else { -mu };
            for a in 0..d {
                grad[a] += resid * row[a];
                for b in 0..=a {
                    hess[a * d + b] += v * row[a] * row[b];
                }
            }
        }
        for a in 0..d {
            grad[a] -= opts.ridge * theta[a];
            hess[a * d + a] += opts.ridge;
            for b in 0..a {
                hess[b * d + a] = hess[a * d + b];
            }
        }
        if it == opts.max_iter {
            break;
        }
        let newton = cholesky_solve(&hess, d, &grad);
        let is_newton = newton.is_some();
        let step = newton.unwrap_or_else(|| grad.iter().map(|g| 0.1 * g).collect());
        let grad_inf = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        let step_inf = step.iter().fold(0.0f64, |m, s| m.max(s.abs()));
        let theta_inf = theta.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        // A vanishing gradient alone is not enough: on separable data the
        // gradient decays geometrically while θ keeps running off.
        let small_step = is_newton && step_inf <= 1e-6 * (1.0 + theta_inf);
        if grad_inf < opts.tol && small_step {
            converged = true;
            break;
        }

        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=opts.max_halvings {
            let cand: Vec<f64> = theta.iter().zip(&step).map(|(th, s)| th + t * s).collect();
            let obj = bernoulli_objective(x, y, &cand, opts.ridge);
            if obj.is_finite() && obj >= objective {
                theta = cand;
                objective = obj;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        iterations = it + 1;
        if !accepted {
            // no step increases the likelihood at working precision
            converged = grad_inf < opts.tol && small_step;
            break;
        }
    }
    if theta.iter().any(|v| !v.is_finite()) {
        fail!(Numeric, "Newton iterations produced a non-finite coefficient");
    }
    let theta_norm = norm2(&theta);
    Ok(GlmModel { family, theta, diagnostics: FitDiagnostics { iterations, converged, theta_norm } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn cumulant_examples() {
        let g = GlmFamily::gaussian(1.0).unwrap();
        assert_eq!(g.cumulant(2.0).unwrap(), 2.0);
        let b = GlmFamily::BERNOULLI;
        assert!((b.cumulant(0.0).unwrap() - core::f64::consts::LN_2).abs() < 1e-15);
        assert!((b.cumulant(1000.0).unwrap() - 1000.0).abs() < 1e-12);
        assert!(b.cumulant(f64::NAN).is_err());
        assert!(b.cumulant(f64::INFINITY).is_err());
    }

    #[test]
    fn derivative_examples() {
        let b = GlmFamily::BERNOULLI;
        assert_eq!(b.cumulant_d1(0.0).unwrap(), 0.5);
        let g = GlmFamily::gaussian(2.0).unwrap();
        for xi in [-3.0, 0.0, 7.5] {
            assert_eq!(g.cumulant_d2(xi).unwrap(), 1.0);
        }
        let numeric = fd(|x| b.psi(x), 0.7, 1e-5);
        let exact = b.cumulant_d1(0.7).unwrap();
        assert!(((numeric - exact) / exact).abs() < 1e-6);
    }

    #[test]
    fn log_density_examples() {
        let b = GlmFamily::BERNOULLI;
        assert!((b.log_density(1.0, 0.0).unwrap() + core::f64::consts::LN_2).abs() < 1e-15);
        let g = GlmFamily::gaussian(1.0).unwrap();
        assert!((g.log_density(0.0, 0.0).unwrap() - (-0.918_938_533_204_672_7)).abs() < 1e-12);
        for xi in [-3.0, 0.0, 3.0] {
            let total = b.density(1.0, xi).unwrap() + b.density(0.0, xi).unwrap();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert!(matches!(b.log_density(0.5, 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn gaussian_density_matches_textbook_form() {
        let g = GlmFamily::gaussian(2.5).unwrap();
        for (y, xi) in [(0.3, -1.0), (4.0, 2.0), (-2.0, 0.5)] {
            let direct = (-(y - xi) * (y - xi) / (2.0 * 2.5)).exp() / (2.0 * PI * 2.5).sqrt();
            assert!((g.density(y, xi).unwrap() - direct).abs() < 1e-14);
        }
    }

    #[test]
    fn ols_exact_line() {
        let x = Matrix::from_rows(&[[1.0, 1.0], [2.0, 1.0], [3.0, 1.0]]).unwrap();
        let m = fit_mle(GlmFamily::gaussian(1.0).unwrap(), &x, &[2.0, 4.0, 6.0], &FitOptions::default()).unwrap();
        assert!((m.theta[0] - 2.0).abs() < 1e-8);
        assert!(m.theta[1].abs() < 1e-8);
    }

    #[test]
    fn singular_gaussian_design_is_fit_error() {
        let x = Matrix::from_rows(&[[1.0, 2.0], [1.0, 2.0]]).unwrap();
        let r = fit_mle(GlmFamily::gaussian(1.0).unwrap(), &x, &[1.0, 1.0], &FitOptions::default());
        assert!(matches!(r, Err(Error::Fit(_))));
    }

    #[test]
    fn empty_design_is_fit_error() {
        let x = Matrix::zeros(0, 2);
        assert!(matches!(fit_mle(GlmFamily::BERNOULLI, &x, &[], &FitOptions::default()), Err(Error::Fit(_))));
    }

    #[test]
    fn separable_bernoulli_does_not_converge_but_stays_finite() {
        let x = Matrix::from_rows(&[[-1.0, 1.0], [1.0, 1.0]]).unwrap();
        let y = [0.0, 1.0];
        let opts = FitOptions::default();
        let m = fit_mle(GlmFamily::BERNOULLI, &x, &y, &opts).unwrap();
        assert!(!m.diagnostics.converged);
        assert_eq!(m.diagnostics.iterations, 50);
        assert!(m.diagnostics.theta_norm > 10.0 && m.diagnostics.theta_norm.is_finite());

        // the likelihood is monotone along the iterate path
        let mut prev = f64::NEG_INFINITY;
        for k in 0..=m.diagnostics.iterations {
            let mk = fit_mle(GlmFamily::BERNOULLI, &x, &y, &FitOptions { max_iter: k, ..opts }).unwrap();
            let ll = bernoulli_objective(&x, &y, &mk.theta, 0.0);
            assert!(ll >= prev);
            prev = ll;
        }
    }

    #[test]
    fn intercept_only_mle_is_logit_of_mean() {
        let x = Matrix::from_rows(&[[1.0]; 8]).unwrap();
        let y = [1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0];
        let m = fit_mle(GlmFamily::BERNOULLI, &x, &y, &FitOptions::default()).unwrap();
        assert!(m.theta[0].abs() < 1e-6);
        assert!(m.diagnostics.converged);

        let y = [1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0];
        let m = fit_mle(GlmFamily::BERNOULLI, &x, &y, &FitOptions::default()).unwrap();
        let p: f64 = 6.0 / 8.0;
        assert!((m.theta[0] - (p / (1.0 - p)).ln()).abs() < 1e-6);
    }

    #[test]
    fn ridge_shrinks_separable_fit() {
        let x = Matrix::from_rows(&[[-1.0, 1.0], [1.0, 1.0]]).unwrap();
        let opts = FitOptions { ridge: 1.0, ..FitOptions::default() };
        let m = fit_mle(GlmFamily::BERNOULLI, &x, &[0.0, 1.0], &opts).unwrap();
        assert!(m.diagnostics.converged);
        assert!(m.diagnostics.theta_norm < 2.0);
    }
}
