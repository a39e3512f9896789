//! Influence functions under ε-contamination of the committee weights.
//!
//! Contamination replaces the weight measure `Σ w_c δ(ξ − ξ_c)` with
//! `(1 − ε) Σ w_c δ(ξ − ξ_c) + ε δ(ξ − ξ_out)`. The influence function of a
//! functional `F` is the one-sided derivative `lim (F(w(ε)) − F(w)) / ε`.
//!
//! The closed forms below are the exact derivatives of the quantities the
//! crate computes, including the ε-dependence of every normalizer:
//!
//! * KL consensus: `p(y; ξ̄) (y − ψ′(ξ̄)) (ξ_out − ξ̄) / φ`, linear in `ξ_out`.
//! * u-mixture (β): `(1/β) B^{1/β − 1} (Δ − β b′)` with `B = s − βb`,
//!   `Δ = p_out^β − s` and `β b′ = Σ B^{1/β−1} Δ / Σ B^{1/β−1}`.
//! * dual γ-mixture: `h(y) − p_γ(y) ∫h` with
//!   `h = (1/γ) (p_γ / S) (p_out^γ − S)` and `S = Σ w_c p_c^γ`.
//! * acquisitions: `D(p_out, q) − a + Σ_c w_c ∂_q D(p_c, q)[q′]` where `q′` is
//!   the consensus influence function above.
//!
//! [`finite_difference_if`] is the independent check for each of them.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::acquisition::{
    beta_consensus, beta_div_log, gamma_consensus, gamma_div_log, score_beta_raw, score_gamma_raw, score_kl_raw,
    AcquisitionMethod, Committee,
};
use crate::divergence::{check_power, kl_glm};
use crate::error::{fail, Error, Result};
use crate::family::{FamilyKind, GlmFamily, GlmModel, Support};
use crate::linalg::{dot, Matrix};
use crate::mixture::{
    beta_bracket_sums, check_support, gamma_log_sum_at, gamma_log_sums, gamma_normalizer,
    solve_beta_normalizer, weighted_mean, Weights,
};
use crate::quadrature::SupportSpec;

/// Default contamination mass for finite differences.
pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Relative agreement demanded between an analytic influence value and
/// its finite-difference check, `|a − fd| / max(1, |a|)`.
pub const AGREEMENT_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ContaminationSpec {
    pub xi_out: f64,
    pub epsilon: f64,
}

impl ContaminationSpec {
    pub fn new(xi_out: f64, epsilon: f64) -> Result<Self> {
        if !xi_out.is_finite() {
            fail!(Domain, "outlying canonical parameter must be finite, got {xi_out}");
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            fail!(Parameter, "contamination mass must lie in (0, 1), got {epsilon}");
        }
        Ok(Self { xi_out, epsilon })
    }
}

fn check_inputs(xis: &[f64], w: &Weights, xi_out: f64) -> Result<()> {
    if xis.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: xis.len() });
    }
    if let Some(x) = xis.iter().chain(core::iter::once(&xi_out)).find(|x| !x.is_finite()) {
        fail!(Domain, "canonical parameter {x} is not finite");
    }
    Ok(())
}

/// Influence of `ξ_out` on the KL consensus density at `y`.
pub fn if_consensus_kl(family: &GlmFamily, xis: &[f64], w: &Weights, xi_out: f64, y: f64) -> Result<f64> {
    check_inputs(xis, w, xi_out)?;
    family.check_output(y)?;
    let xi_bar = weighted_mean(xis, w.as_slice());
    let p = family.log_density_unchecked(y, xi_bar).exp();
    Ok(p * (y - family.mean(xi_bar)) * (xi_out - xi_bar) / family.dispersion())
}

/// Influence of `ξ_out` on the β-divergence u-mixture at each binary node.
fn beta_mixture_if_nodes(family: &GlmFamily, xis: &[f64], w: &[f64], beta: f64, xi_out: f64) -> Result<[f64; 2]> {
    let grid = SupportSpec::Binary.grid()?;
    let s = beta_bracket_sums(family, xis, w, beta, &grid);
    let b = solve_beta_normalizer(&s, &grid.weights, beta)?;
    let mut r = [0.0; 2];
    let mut delta = [0.0; 2];
    for (i, &y) in grid.points.iter().enumerate() {
        let base = s[i] - beta * b;
        if !(base > 0.0) {
            fail!(Numeric, "u-mixture vanishes at y = {y}; its influence function is singular there");
        }
        r[i] = base.powf(1.0 / beta - 1.0);
        delta[i] = (beta * family.log_density_unchecked(y, xi_out)).exp() - s[i];
    }
    let beta_db = (r[0] * delta[0] + r[1] * delta[1]) / (r[0] + r[1]);
    Ok([r[0] * (delta[0] - beta_db) / beta, r[1] * (delta[1] - beta_db) / beta])
}

/// Influence of `ξ_out` on the β-divergence consensus (u-mixture) at `y`.
pub fn if_beta_mixture(family: &GlmFamily, xis: &[f64], w: &Weights, beta: f64, xi_out: f64, y: f64) -> Result<f64> {
    check_power("beta", beta)?;
    check_inputs(xis, w, xi_out)?;
    if family.support() != Support::Binary {
        return Err(Error::UnnormalizableMixture);
    }
    family.check_output(y)?;
    let v = beta_mixture_if_nodes(family, xis, w.as_slice(), beta, xi_out)?;
    Ok(if y == 1.0 { v[1] } else { v[0] })
}

/// Pieces of the dual γ-mixture influence function on a grid.
struct GammaIf {
    /// `∫ h dΛ`
    h_mass: f64,
    z: f64,
}

fn gamma_h(family: &GlmFamily, xis: &[f64], w: &[f64], gamma: f64, xi_out: f64, y: f64, z: f64) -> (f64, f64) {
    let ls = gamma_log_sum_at(family, xis, w, gamma, y);
    let l_out = family.log_density_unchecked(y, xi_out);
    let h = ((ls * (1.0 / gamma - 1.0) + gamma * l_out).exp() - (ls / gamma).exp()) / (gamma * z);
    let p = (ls / gamma).exp() / z;
    (h, p)
}

fn gamma_if_parts(
    family: &GlmFamily,
    xis: &[f64],
    w: &[f64],
    gamma: f64,
    xi_out: f64,
    support: &SupportSpec,
) -> Result<GammaIf> {
    let grid = support.grid()?;
    let log_s = gamma_log_sums(family, xis, w, gamma, &grid);
    let z = gamma_normalizer(&log_s, gamma, &grid)?;
    let mut h_mass = 0.0;
    for (i, &y) in grid.points.iter().enumerate() {
        let l_out = family.log_density_unchecked(y, xi_out);
        let ls = log_s[i];
        if ls == f64::NEG_INFINITY {
            continue;
        }
        let h = ((ls * (1.0 / gamma - 1.0) + gamma * l_out).exp() - (ls / gamma).exp()) / (gamma * z);
        h_mass += grid.weights[i] * h;
    }
    if !h_mass.is_finite() {
        fail!(Numeric, "dual gamma-mixture influence integral is not finite");
    }
    Ok(GammaIf { h_mass, z })
}

/// Influence of `ξ_out` on the dual γ-mixture consensus at `y`.
///
/// The integral term is evaluated on `support`, which must cover both the
/// committee and `ξ_out` (see [`SupportSpec::for_family`]).
pub fn if_gamma_mixture(
    family: &GlmFamily,
    xis: &[f64],
    w: &Weights,
    gamma: f64,
    xi_out: f64,
    y: f64,
    support: &SupportSpec,
) -> Result<f64> {
    check_power("gamma", gamma)?;
    check_inputs(xis, w, xi_out)?;
    check_support(family, support)?;
    family.check_output(y)?;
    let parts = gamma_if_parts(family, xis, w.as_slice(), gamma, xi_out, support)?;
    let (h, p) = gamma_h(family, xis, w.as_slice(), gamma, xi_out, y, parts.z);
    if !(p > 0.0) {
        fail!(Numeric, "dual gamma-mixture vanishes at y = {y}");
    }
    Ok(h - p * parts.h_mass)
}

/// An influence value together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InfluenceValue {
    Analytic(f64),
    /// No closed form is provided for this family/method; the value is the
    /// forward finite difference at [`DEFAULT_EPSILON`].
    FiniteDifference(f64),
}

impl InfluenceValue {
    pub fn value(&self) -> f64 {
        match *self {
            InfluenceValue::Analytic(v) | InfluenceValue::FiniteDifference(v) => v,
        }
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self, InfluenceValue::Analytic(_))
    }
}

/// Closed-form influence of `ξ_out` on an acquisition score for a Bernoulli
/// committee given by its canonical parameters at `x`.
pub fn if_acquisition_analytic(
    method: &AcquisitionMethod,
    family: &GlmFamily,
    xis: &[f64],
    w: &Weights,
    xi_out: f64,
) -> Result<f64> {
    check_inputs(xis, w, xi_out)?;
    method.validate(family)?;
    if family.support() != Support::Binary {
        fail!(Parameter, "closed-form acquisition influence is only provided for Bernoulli committees");
    }
    let w = w.as_slice();
    match *method {
        AcquisitionMethod::Kl => Ok(if_kl_acquisition(family, xis, w, xi_out)),
        AcquisitionMethod::Beta { beta } => if_beta_acquisition(family, xis, w, beta, xi_out),
        AcquisitionMethod::Gamma { gamma } => if_gamma_acquisition(family, xis, w, gamma, xi_out),
    }
}

fn if_kl_acquisition(family: &GlmFamily, xis: &[f64], w: &[f64], xi_out: f64) -> f64 {
    let xi_bar = weighted_mean(xis, w);
    let a0 = score_kl_raw(family, xis, w);
    let mean_bar = family.mean(xi_bar);
    let drift: f64 = xis.iter().zip(w).map(|(&xi, &wc)| wc * (mean_bar - family.mean(xi))).sum();
    kl_glm(family, xi_out, xi_bar) - a0 + drift * (xi_out - xi_bar) / family.dispersion()
}

fn if_beta_acquisition(family: &GlmFamily, xis: &[f64], w: &[f64], beta: f64, xi_out: f64) -> Result<f64> {
    let (table, pu) = beta_consensus(family, xis, w, beta)?;
    let q_dot = beta_mixture_if_nodes(family, xis, w, beta, xi_out)?;
    let grid = &table.grid;
    let a_beta = score_beta_raw(family, xis, w, beta)?;
    let log_out: Vec<f64> = grid.tabulate(|y| family.log_density_unchecked(y, xi_out));
    let d_out = beta_div_log(&log_out, &pu, grid, beta);
    let mut chain = 0.0;
    for i in 0..grid.len() {
        let p_bar: f64 = table.log_p.iter().zip(w).map(|(lp, &wc)| wc * lp[i].exp()).sum();
        let q = pu[i];
        chain += grid.weights[i] * (q.powf(beta) - p_bar * q.powf(beta - 1.0)) * q_dot[i];
    }
    Ok(d_out - a_beta + chain)
}

fn if_gamma_acquisition(family: &GlmFamily, xis: &[f64], w: &[f64], gamma: f64, xi_out: f64) -> Result<f64> {
    let support = SupportSpec::Binary;
    let (table, pg, log_s, z) = gamma_consensus(family, xis, w, gamma, &support)?;
    let grid = &table.grid;
    let parts = gamma_if_parts(family, xis, w, gamma, xi_out, &support)?;
    let q_dot: Vec<f64> = grid
        .points
        .iter()
        .zip(&log_s)
        .zip(&pg)
        .map(|((&y, &ls), &p)| {
            let l_out = family.log_density_unchecked(y, xi_out);
            let h = ((ls * (1.0 / gamma - 1.0) + gamma * l_out).exp() - (ls / gamma).exp()) / (gamma * z);
            h - p * parts.h_mass
        })
        .collect();
    let a_gamma = score_gamma_raw(family, xis, w, gamma, &support)?;
    let log_out: Vec<f64> = grid.tabulate(|y| family.log_density_unchecked(y, xi_out));
    let d_out = gamma_div_log(&log_out, &pg, grid, gamma)?;

    let consensus_moment: f64 = grid.sum(&pg.iter().map(|q| q.powf(gamma + 1.0)).collect::<Vec<_>>());
    let consensus_term = gamma
        * consensus_moment.powf(-1.0 / (gamma + 1.0))
        * grid.sum(&pg.iter().zip(&q_dot).map(|(q, qd)| q.powf(gamma) * qd).collect::<Vec<_>>());
    let mut member_term = 0.0;
    for (lp, &wc) in table.log_p.iter().zip(w) {
        if wc == 0.0 {
            continue;
        }
        let norm = grid.sum(&lp.iter().map(|l| ((gamma + 1.0) * l).exp()).collect::<Vec<_>>()).powf(1.0 / (gamma + 1.0));
        let cross: f64 = (0..grid.len())
            .map(|i| grid.weights[i] * lp[i].exp() * pg[i].powf(gamma - 1.0) * q_dot[i])
            .sum();
        member_term += wc * gamma * cross / norm;
    }
    Ok(d_out - a_gamma - member_term + consensus_term)
}

/// Influence of `ξ_out` on the acquisition score at `x`.
///
/// Bernoulli committees get the closed form. Gaussian committees fall back to
/// the forward finite difference and report it as such.
pub fn if_acquisition(
    method: &AcquisitionMethod,
    committee: &Committee,
    x: &[f64],
    xi_out: f64,
) -> Result<InfluenceValue> {
    let family = committee.family();
    let xis = committee.member_xis(x)?;
    if_acquisition_xis(method, &family, &xis, committee.weights(), xi_out)
}

pub fn if_acquisition_xis(
    method: &AcquisitionMethod,
    family: &GlmFamily,
    xis: &[f64],
    w: &Weights,
    xi_out: f64,
) -> Result<InfluenceValue> {
    match family.kind() {
        FamilyKind::Bernoulli => if_acquisition_analytic(method, family, xis, w, xi_out).map(InfluenceValue::Analytic),
        FamilyKind::Gaussian { .. } => {
            method.validate(family)?;
            let fd = finite_difference_if(
                |xs, ws| acquisition_functional(method, family, xs, ws),
                xis,
                w,
                xi_out,
                DEFAULT_EPSILON,
            )?;
            Ok(InfluenceValue::FiniteDifference(fd))
        }
    }
}

/// Acquisition score as a functional of (canonical parameters, weights),
/// integrating on the default support for the family.
pub fn acquisition_functional(method: &AcquisitionMethod, family: &GlmFamily, xis: &[f64], w: &Weights) -> Result<f64> {
    let ws = w.as_slice();
    match *method {
        AcquisitionMethod::Kl => Ok(score_kl_raw(family, xis, ws)),
        AcquisitionMethod::Beta { beta } => {
            if family.support() != Support::Binary {
                return Err(Error::UnnormalizableMixture);
            }
            score_beta_raw(family, xis, ws, beta)
        }
        AcquisitionMethod::Gamma { gamma } => {
            score_gamma_raw(family, xis, ws, gamma, &SupportSpec::for_family(family, xis))
        }
    }
}

/// Forward-difference influence `(F(w(ε)) − F(w)) / ε` of any functional of a
/// weighted committee of canonical parameters.
///
/// `F` is evaluated on the committee extended by `ξ_out`: with weight 0 for
/// the baseline and ε for the contaminated version, so any support derived
/// from the parameters is the same in both evaluations.
pub fn finite_difference_if<F>(functional: F, xis: &[f64], w: &Weights, xi_out: f64, epsilon: f64) -> Result<f64>
where
    F: Fn(&[f64], &Weights) -> Result<f64>,
{
    check_inputs(xis, w, xi_out)?;
    if !(epsilon > 0.0 && epsilon <= 0.01) {
        fail!(Parameter, "finite-difference contamination must lie in (0, 0.01], got {epsilon}");
    }
    let mut xs = xis.to_vec();
    xs.push(xi_out);
    let base = functional(&xs, &w.signed_contamination(0.0))?;
    let pert = functional(&xs, &w.contaminated(epsilon)?)?;
    let v = (pert - base) / epsilon;
    if !v.is_finite() {
        fail!(Numeric, "finite-difference influence is {v}");
    }
    Ok(v)
}

/// Richardson extrapolation `2 D(ε) − D(2ε)` of the forward difference.
///
/// Both evaluations are genuine contaminations, and the O(ε) bias of the
/// forward difference cancels.
pub fn finite_difference_if_extrapolated<F>(functional: F, xis: &[f64], w: &Weights, xi_out: f64, epsilon: f64) -> Result<f64>
where
    F: Fn(&[f64], &Weights) -> Result<f64>,
{
    let d1 = finite_difference_if(&functional, xis, w, xi_out, epsilon)?;
    let d2 = finite_difference_if(&functional, xis, w, xi_out, 2.0 * epsilon)?;
    Ok(2.0 * d1 - d2)
}

/// Central-difference variant `(F(w(ε)) − F(w(−ε))) / 2ε`; the `−ε` side is a
/// signed weight measure, so `F` must tolerate a slightly negative weight.
pub fn finite_difference_if_central<F>(functional: F, xis: &[f64], w: &Weights, xi_out: f64, epsilon: f64) -> Result<f64>
where
    F: Fn(&[f64], &Weights) -> Result<f64>,
{
    check_inputs(xis, w, xi_out)?;
    if !(epsilon > 0.0 && epsilon <= 0.01) {
        fail!(Parameter, "finite-difference contamination must lie in (0, 0.01], got {epsilon}");
    }
    let mut xs = xis.to_vec();
    xs.push(xi_out);
    let plus = functional(&xs, &w.signed_contamination(epsilon))?;
    let minus = functional(&xs, &w.signed_contamination(-epsilon))?;
    let v = (plus - minus) / (2.0 * epsilon);
    if !v.is_finite() {
        fail!(Numeric, "finite-difference influence is {v}");
    }
    Ok(v)
}

/// Analytic and finite-difference influence side by side.
#[derive(Debug, Clone, PartialEq)]
pub struct InfluenceReport {
    pub method: AcquisitionMethod,
    pub xi_out: f64,
    /// `None` where no closed form is provided (Gaussian committees).
    pub analytic: Option<f64>,
    pub finite_difference: f64,
    pub x: Vec<f64>,
    /// False when the closed form and the finite difference disagree beyond
    /// [`AGREEMENT_TOLERANCE`].
    pub agrees: bool,
}

pub fn influence_report(
    method: &AcquisitionMethod,
    committee: &Committee,
    x: &[f64],
    contamination: &ContaminationSpec,
) -> Result<InfluenceReport> {
    let family = committee.family();
    let xis = committee.member_xis(x)?;
    let w = committee.weights();
    let fd = finite_difference_if(
        |xs, ws| acquisition_functional(method, &family, xs, ws),
        &xis,
        w,
        contamination.xi_out,
        contamination.epsilon,
    )?;
    let analytic = match family.support() {
        Support::Binary => Some(if_acquisition_analytic(method, &family, &xis, w, contamination.xi_out)?),
        Support::RealLine => None,
    };
    let agrees = analytic.is_none_or(|a| (a - fd).abs() / a.abs().max(1.0) < AGREEMENT_TOLERANCE);
    Ok(InfluenceReport { method: *method, xi_out: contamination.xi_out, analytic, finite_difference: fd, x: x.to_vec(), agrees })
}

/// Pool row maximizing `|⟨θ, x⟩|` under `model` (lowest index on ties).
pub fn pool_outlier_xi(model: &GlmModel, pool: &Matrix) -> Result<(usize, f64)> {
    pool_outlier_xi_masked(model, pool, &alloc::vec![true; pool.rows()])
}

pub fn pool_outlier_xi_masked(model: &GlmModel, pool: &Matrix, available: &[bool]) -> Result<(usize, f64)> {
    if pool.cols() != model.dim() {
        return Err(Error::DimensionMismatch { expected: model.dim(), got: pool.cols() });
    }
    if available.len() != pool.rows() {
        return Err(Error::DimensionMismatch { expected: pool.rows(), got: available.len() });
    }
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in pool.iter_rows().enumerate() {
        if !available[i] {
            continue;
        }
        let xi = dot(&model.theta, row);
        if best.is_none_or(|(_, b)| xi.abs() > b.abs()) {
            best = Some((i, xi));
        }
    }
    best.ok_or(Error::PoolExhausted)
}
