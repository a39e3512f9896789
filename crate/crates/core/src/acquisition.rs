//! Committee disagreement scores and pool-based query selection.
//!
//! Every score sums weighted divergences from each member `p(·; ξ_c(x))` to
//! the consensus model built at the same input `x`:
//!
//! ```text
//! a(x) = Σ_c w_c D(p(·; ξ_c(x)), consensus(x))
//! ```

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::divergence::{check_power, kl_glm};
use crate::error::{fail, Error, Result};
use crate::family::{GlmFamily, GlmModel, Support};
use crate::linalg::{dot, Matrix};
use crate::mixture::{
    beta_bracket_sums, beta_mixture_value, check_support, gamma_log_sums, gamma_normalizer, solve_beta_normalizer,
    weighted_mean, Weights,
};
use crate::quadrature::{Grid, SupportSpec};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AcquisitionMethod {
    Kl,
    Beta { beta: f64 },
    Gamma { gamma: f64 },
}

impl AcquisitionMethod {
    pub fn validate(&self, family: &GlmFamily) -> Result<()> {
        match *self {
            AcquisitionMethod::Kl => Ok(()),
            AcquisitionMethod::Beta { beta } => {
                check_power("beta", beta)?;
                if family.support() != Support::Binary {
                    return Err(Error::UnnormalizableMixture);
                }
                Ok(())
            }
            AcquisitionMethod::Gamma { gamma } => check_power("gamma", gamma),
        }
    }
}

/// Fitted members sharing one family and feature dimension, plus weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Committee {
    models: Vec<GlmModel>,
    w: Weights,
}

impl Committee {
    pub fn new(models: Vec<GlmModel>, w: Weights) -> Result<Self> {
        if models.len() < 2 {
            fail!(Parameter, "a committee needs at least two members, got {}", models.len());
        }
        if models.len() != w.len() {
            return Err(Error::DimensionMismatch { expected: models.len(), got: w.len() });
        }
        let family = models[0].family;
        let d = models[0].dim();
        for m in &models[1..] {
            if m.family != family {
                fail!(Parameter, "committee members must share one family");
            }
            if m.dim() != d {
                return Err(Error::DimensionMismatch { expected: d, got: m.dim() });
            }
        }
        Ok(Self { models, w })
    }

    pub fn family(&self) -> GlmFamily {
        self.models[0].family
    }

    pub fn dim(&self) -> usize {
        self.models[0].dim()
    }

    pub fn models(&self) -> &[GlmModel] {
        &self.models
    }

    pub fn weights(&self) -> &Weights {
        &self.w
    }

    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    /// Member canonical parameters `ξ_c(x) = ⟨θ_c, x⟩`.
    pub fn member_xis(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: x.len() });
        }
        Ok(self.models.iter().map(|m| dot(&m.theta, x)).collect())
    }
}

/// Outcome of one pool scan.
#[derive(Debug, Clone, PartialEq)]
pub struct AcquisitionResult {
    pub chosen_index: usize,
    /// One score per pool row; rows excluded by a mask hold NaN.
    pub scores: Vec<f64>,
    pub method: AcquisitionMethod,
}

/// Member log-densities tabulated on a common grid.
pub(crate) struct MemberTable {
    pub grid: Grid,
    /// `log_p[c][i] = log p(y_i; ξ_c)`
    pub log_p: Vec<Vec<f64>>,
}

impl MemberTable {
    pub fn new(family: &GlmFamily, xis: &[f64], support: &SupportSpec) -> Result<Self> {
        let grid = support.grid()?;
        let log_p = xis.iter().map(|&xi| grid.tabulate(|y| family.log_density_unchecked(y, xi))).collect();
        Ok(Self { grid, log_p })
    }
}

fn check_xis(xis: &[f64], w: &Weights) -> Result<()> {
    if xis.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: xis.len() });
    }
    if let Some(x) = xis.iter().find(|x| !x.is_finite()) {
        fail!(Domain, "member canonical parameter {x} is not finite");
    }
    Ok(())
}

/// `a₀ = Σ w_c D₀(p_c, p_ξ̄)` from member canonical parameters.
pub fn score_kl(family: &GlmFamily, xis: &[f64], w: &Weights) -> Result<f64> {
    check_xis(xis, w)?;
    Ok(score_kl_raw(family, xis, w.as_slice()))
}

pub(crate) fn score_kl_raw(family: &GlmFamily, xis: &[f64], w: &[f64]) -> f64 {
    let xi_bar = weighted_mean(xis, w);
    xis.iter().zip(w).map(|(&xi, &wc)| wc * kl_glm(family, xi, xi_bar)).sum()
}

/// `a_β = Σ w_c D_β(p_c, p_u)` from member canonical parameters.
pub fn score_beta(family: &GlmFamily, xis: &[f64], w: &Weights, beta: f64) -> Result<f64> {
    check_xis(xis, w)?;
    AcquisitionMethod::Beta { beta }.validate(family)?;
    score_beta_raw(family, xis, w.as_slice(), beta)
}

/// β-mixture values at the binary nodes together with the member table.
pub(crate) fn beta_consensus(family: &GlmFamily, xis: &[f64], w: &[f64], beta: f64) -> Result<(MemberTable, Vec<f64>)> {
    let table = MemberTable::new(family, xis, &SupportSpec::Binary)?;
    let s = beta_bracket_sums(family, xis, w, beta, &table.grid);
    let b = solve_beta_normalizer(&s, &table.grid.weights, beta)?;
    let pu = s.iter().map(|&si| beta_mixture_value(si, beta, b)).collect();
    Ok((table, pu))
}

/// `D_β(p, q)` with `p` given by its log-values.
pub(crate) fn beta_div_log(log_p: &[f64], q: &[f64], grid: &Grid, beta: f64) -> f64 {
    let mut acc = 0.0;
    for ((&lp, &qi), &g) in log_p.iter().zip(q).zip(&grid.weights) {
        let qb = if qi > 0.0 { qi.powf(beta) } else { 0.0 };
        acc += g * (((beta + 1.0) * lp).exp() / (beta * (1.0 + beta)) - lp.exp() * qb / beta + qb * qi / (beta + 1.0));
    }
    acc
}

pub(crate) fn score_beta_raw(family: &GlmFamily, xis: &[f64], w: &[f64], beta: f64) -> Result<f64> {
    let (table, pu) = beta_consensus(family, xis, w, beta)?;
    Ok(table
        .log_p
        .iter()
        .zip(w)
        .map(|(lp, &wc)| if wc == 0.0 { 0.0 } else { wc * beta_div_log(lp, &pu, &table.grid, beta) })
        .sum())
}

/// Dual γ-mixture tabulated on `support`: `(table, p_γ, log S, z)`.
pub(crate) fn gamma_consensus(
    family: &GlmFamily,
    xis: &[f64],
    w: &[f64],
    gamma: f64,
    support: &SupportSpec,
) -> Result<(MemberTable, Vec<f64>, Vec<f64>, f64)> {
    check_support(family, support)?;
    let table = MemberTable::new(family, xis, support)?;
    let log_s = gamma_log_sums(family, xis, w, gamma, &table.grid);
    let z = gamma_normalizer(&log_s, gamma, &table.grid)?;
    let pg = log_s.iter().map(|&ls| (ls / gamma).exp() / z).collect();
    Ok((table, pg, log_s, z))
}

/// `D*_γ(p, q)` with `p` given by its log-values.
pub(crate) fn gamma_div_log(log_p: &[f64], q: &[f64], grid: &Grid, gamma: f64) -> Result<f64> {
    let mut pp = 0.0;
    let mut pq = 0.0;
    let mut qq = 0.0;
    for ((&lp, &qi), &g) in log_p.iter().zip(q).zip(&grid.weights) {
        let qg = if qi > 0.0 { qi.powf(gamma) } else { 0.0 };
        pp += g * ((gamma + 1.0) * lp).exp();
        pq += g * lp.exp() * qg;
        qq += g * qg * qi;
    }
    if !(pp > 0.0) {
        fail!(Numeric, "member density has no mass on the integration grid");
    }
    Ok(-pq / pp.powf(1.0 / (gamma + 1.0)) + qq.powf(gamma / (gamma + 1.0)))
}

/// `a_γ = Σ w_c D*_γ(p_c, p_γ)` from member canonical parameters.
pub fn score_gamma(family: &GlmFamily, xis: &[f64], w: &Weights, gamma: f64, support: &SupportSpec) -> Result<f64> {
    check_xis(xis, w)?;
    check_power("gamma", gamma)?;
    score_gamma_raw(family, xis, w.as_slice(), gamma, support)
}

pub(crate) fn score_gamma_raw(
    family: &GlmFamily,
    xis: &[f64],
    w: &[f64],
    gamma: f64,
    support: &SupportSpec,
) -> Result<f64> {
    let (table, pg, _, _) = gamma_consensus(family, xis, w, gamma, support)?;
    let mut acc = 0.0;
    for (lp, &wc) in table.log_p.iter().zip(w) {
        if wc != 0.0 {
            acc += wc * gamma_div_log(lp, &pg, &table.grid, gamma)?;
        }
    }
    Ok(acc)
}

/// Score from member canonical parameters, with the default support for
/// the family.
pub fn score(method: &AcquisitionMethod, family: &GlmFamily, xis: &[f64], w: &Weights) -> Result<f64> {
    match *method {
        AcquisitionMethod::Kl => score_kl(family, xis, w),
        AcquisitionMethod::Beta { beta } => score_beta(family, xis, w, beta),
        AcquisitionMethod::Gamma { gamma } => {
            score_gamma(family, xis, w, gamma, &SupportSpec::for_family(family, xis))
        }
    }
}

pub fn acquisition_kl(committee: &Committee, x: &[f64]) -> Result<f64> {
    score_kl(&committee.family(), &committee.member_xis(x)?, committee.weights())
}

pub fn acquisition_beta(committee: &Committee, x: &[f64], beta: f64) -> Result<f64> {
    score_beta(&committee.family(), &committee.member_xis(x)?, committee.weights(), beta)
}

pub fn acquisition_gamma(committee: &Committee, x: &[f64], gamma: f64) -> Result<f64> {
    let xis = committee.member_xis(x)?;
    let family = committee.family();
    score_gamma(&family, &xis, committee.weights(), gamma, &SupportSpec::for_family(&family, &xis))
}

pub fn acquisition(committee: &Committee, x: &[f64], method: &AcquisitionMethod) -> Result<f64> {
    score(method, &committee.family(), &committee.member_xis(x)?, committee.weights())
}

/// Scores every pool row and returns the argmax (lowest index on ties).
pub fn select_query(committee: &Committee, pool: &Matrix, method: &AcquisitionMethod) -> Result<AcquisitionResult> {
    select_query_masked(committee, pool, &vec![true; pool.rows()], method)
}

/// Like [`select_query`], restricted to rows with `available[i] == true`.
pub fn select_query_masked(
    committee: &Committee,
    pool: &Matrix,
    available: &[bool],
    method: &AcquisitionMethod,
) -> Result<AcquisitionResult> {
    if available.len() != pool.rows() {
        return Err(Error::DimensionMismatch { expected: pool.rows(), got: available.len() });
    }
    if pool.cols() != committee.dim() {
        return Err(Error::DimensionMismatch { expected: committee.dim(), got: pool.cols() });
    }
    method.validate(&committee.family())?;
    let mut scores = vec![f64::NAN; pool.rows()];
    let mut best: Option<(usize, f64)> = None;
    for (i, row) in pool.iter_rows().enumerate() {
        if !available[i] {
            continue;
        }
        let s = acquisition(committee, row, method)?;
        if !s.is_finite() {
            fail!(Numeric, "acquisition score at pool row {i} is {s}");
        }
        scores[i] = s;
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    let (chosen_index, _) = best.ok_or(Error::PoolExhausted)?;
    Ok(AcquisitionResult { chosen_index, scores, method: *method })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn committee_from(thetas: &[&[f64]]) -> Committee {
        let models = thetas.iter().map(|t| GlmModel::new(GlmFamily::BERNOULLI, t.to_vec())).collect::<Vec<_>>();
        let c = models.len();
        Committee::new(models, Weights::uniform(c).unwrap()).unwrap()
    }

    #[test]
    fn identical_members_score_zero() {
        let c = committee_from(&[&[0.4, -1.0], &[0.4, -1.0], &[0.4, -1.0]]);
        let x = [2.0, 1.0];
        assert!(acquisition_kl(&c, &x).unwrap().abs() < 1e-15);
        assert!(acquisition_beta(&c, &x, 1.0).unwrap().abs() < 1e-14);
        assert!(acquisition_gamma(&c, &x, 1.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn origin_without_intercept_scores_zero() {
        let c = committee_from(&[&[3.0, -1.0], &[-2.0, 5.0]]);
        assert_eq!(acquisition_kl(&c, &[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn kl_symmetric_pair_is_increasing_in_spread() {
        let fam = GlmFamily::BERNOULLI;
        let w = Weights::uniform(2).unwrap();
        let mut prev = -1.0;
        for s in [0.5, 1.0, 2.0] {
            let a = score_kl(&fam, &[-s, s], &w).unwrap();
            // direct two-term sums against Bernoulli(1/2)
            let p = 1.0 / (1.0 + f64::exp(s));
            let d = |q: f64| q * (q / 0.5).ln() + (1.0 - q) * ((1.0 - q) / 0.5).ln();
            assert!((a - 0.5 * (d(p) + d(1.0 - p))).abs() < 1e-14);
            assert!(a > prev);
            prev = a;
        }
    }

    #[test]
    fn beta_one_two_member_value() {
        let w = Weights::uniform(2).unwrap();
        let a = score_beta(&GlmFamily::BERNOULLI, &[0.0, 3.0f64.ln()], &w, 1.0).unwrap();
        assert!((a - 0.015_625).abs() < 1e-12, "{a}");
    }

    #[test]
    fn beta_rejects_gaussian() {
        let g = GlmFamily::gaussian(1.0).unwrap();
        let w = Weights::uniform(2).unwrap();
        assert_eq!(score_beta(&g, &[0.0, 1.0], &w, 1.0), Err(Error::UnnormalizableMixture));
    }

    #[test]
    fn member_permutation_invariance() {
        let fam = GlmFamily::BERNOULLI;
        let xis = [-1.5, 0.2, 2.7];
        let w = Weights::new(vec![0.2, 0.3, 0.5]).unwrap();
        let xis_p = [2.7, -1.5, 0.2];
        let w_p = Weights::new(vec![0.5, 0.2, 0.3]).unwrap();
        for m in [AcquisitionMethod::Kl, AcquisitionMethod::Beta { beta: 0.7 }, AcquisitionMethod::Gamma { gamma: 1.3 }] {
            let a = score(&m, &fam, &xis, &w).unwrap();
            let b = score(&m, &fam, &xis_p, &w_p).unwrap();
            assert!((a - b).abs() < 1e-13, "{m:?}");
        }
    }

    #[test]
    fn select_query_contracts() {
        let c = committee_from(&[&[1.0, 0.0], &[-1.0, 0.0]]);
        let one = Matrix::from_rows(&[[0.3, 1.0]]).unwrap();
        assert_eq!(select_query(&c, &one, &AcquisitionMethod::Kl).unwrap().chosen_index, 0);
        let dup = Matrix::from_rows(&[[0.1, 1.0], [2.0, 1.0], [2.0, 1.0]]).unwrap();
        assert_eq!(select_query(&c, &dup, &AcquisitionMethod::Kl).unwrap().chosen_index, 1);
        let empty = Matrix::zeros(0, 2);
        assert_eq!(select_query(&c, &empty, &AcquisitionMethod::Kl).unwrap_err(), Error::PoolExhausted);
        let masked = select_query_masked(&c, &dup, &[true, false, true], &AcquisitionMethod::Kl).unwrap();
        assert_eq!(masked.chosen_index, 2);
        assert!(masked.scores[1].is_nan());
    }
}
