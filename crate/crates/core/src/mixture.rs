//! Consensus models of a committee of GLM members `p_c = p(·; ξ_c)`.
//!
//! * KL: `ξ̄ = Σ w_c ξ_c`, the minimizer of `Σ w_c D₀(p_ξ, p_c)`.
//! * β-divergence: the u-mixture `p_u(y) = [Σ w_c p_c(y)^β − βb]^{1/β}` with
//!   `b` fixed by normalization. Only finite supports admit such a `b`.
//! * dual γ-power: `p_γ(y) = (Σ w_c p_c(y)^γ)^{1/γ} / z(w)`, normalizable on
//!   any support.

use alloc::vec;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::divergence::check_power;
use crate::error::{fail, Error, Result};
use crate::family::{GlmFamily, Support};
use crate::quadrature::{Grid, SupportSpec};

/// Committee weights on the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct Weights(Vec<f64>);

impl Weights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            fail!(Parameter, "weights need at least one member");
        }
        if let Some(v) = w.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            fail!(Parameter, "weights must be finite and non-negative, got {v}");
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            fail!(Parameter, "weights must sum to 1 (sum = {s})");
        }
        Ok(Self(w))
    }

    /// `w_c = 1/C`.
    pub fn uniform(c: usize) -> Result<Self> {
        if c == 0 {
            fail!(Parameter, "weights need at least one member");
        }
        Ok(Self(vec![1.0 / c as f64; c]))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `((1 − ε) w, ε)`: the committee with an extra member carrying mass ε.
    pub fn contaminated(&self, epsilon: f64) -> Result<Weights> {
        if !(0.0..1.0).contains(&epsilon) {
            fail!(Parameter, "contamination must lie in [0, 1), got {epsilon}");
        }
        Ok(self.signed_contamination(epsilon))
    }

    /// Like [`Weights::contaminated`] but accepts ε < 0, producing a signed
    /// measure. Only used for central differences.
    pub(crate) fn signed_contamination(&self, epsilon: f64) -> Weights {
        let mut w: Vec<f64> = self.0.iter().map(|v| (1.0 - epsilon) * v).collect();
        w.push(epsilon);
        Weights(w)
    }
}

/// A consensus density over the committee.
#[derive(Debug, Clone, PartialEq)]
pub enum ConsensusModel {
    KlConsensus { xi_bar: f64 },
    BetaMixture { xis: Vec<f64>, w: Weights, beta: f64, b: f64, support: SupportSpec },
    GammaMixture { xis: Vec<f64>, w: Weights, gamma: f64, z: f64, support: SupportSpec },
}

fn check_members(xis: &[f64], w: &Weights) -> Result<()> {
    if xis.len() != w.len() {
        return Err(Error::DimensionMismatch { expected: w.len(), got: xis.len() });
    }
    if let Some(x) = xis.iter().find(|x| !x.is_finite()) {
        fail!(Domain, "member canonical parameter {x} is not finite");
    }
    Ok(())
}

/// `ξ̄ = Σ w_c ξ_c`.
pub fn kl_consensus(xis: &[f64], w: &Weights) -> Result<f64> {
    check_members(xis, w)?;
    Ok(weighted_mean(xis, w.as_slice()))
}

#[inline]
pub(crate) fn weighted_mean(xis: &[f64], w: &[f64]) -> f64 {
    xis.iter().zip(w).map(|(x, w)| w * x).sum()
}

/// β-divergence consensus (u-mixture) of a Bernoulli committee.
///
/// Fails with [`Error::UnnormalizableMixture`] on a real-line family.
pub fn beta_mixture(family: &GlmFamily, xis: &[f64], w: &Weights, beta: f64) -> Result<ConsensusModel> {
    check_power("beta", beta)?;
    check_members(xis, w)?;
    if family.support() != Support::Binary {
        return Err(Error::UnnormalizableMixture);
    }
    let support = SupportSpec::Binary;
    let grid = support.grid()?;
    let s = beta_bracket_sums(family, xis, w.as_slice(), beta, &grid);
    let b = solve_beta_normalizer(&s, &grid.weights, beta)?;
    Ok(ConsensusModel::BetaMixture { xis: xis.to_vec(), w: w.clone(), beta, b, support })
}

/// `s(y) = Σ_c w_c p_c(y)^β` at each node.
pub(crate) fn beta_bracket_sums(family: &GlmFamily, xis: &[f64], w: &[f64], beta: f64, grid: &Grid) -> Vec<f64> {
    grid.points
        .iter()
        .map(|&y| {
            xis.iter()
                .zip(w)
                .map(|(&xi, &wc)| wc * (beta * family.log_density_unchecked(y, xi)).exp())
                .sum()
        })
        .collect()
}

#[inline]
pub(crate) fn beta_mixture_value(s: f64, beta: f64, b: f64) -> f64 {
    let base = s - beta * b;
    if base <= 0.0 {
        0.0
    } else {
        base.powf(1.0 / beta)
    }
}

/// Solves `Σ_y g_y (s_y − βb)^{1/β} = 1` for `b`.
///
/// The left side decreases strictly in `b` on `b ≤ min_y s_y / β`, so the root
/// is bracketed and found by bisection down to adjacent floats.
pub(crate) fn solve_beta_normalizer(s: &[f64], gw: &[f64], beta: f64) -> Result<f64> {
    let mass = |b: f64| -> f64 { s.iter().zip(gw).map(|(&sy, &g)| g * beta_mixture_value(sy, beta, b)).sum() };
    let b_max = s.iter().fold(f64::INFINITY, |m, &v| m.min(v)) / beta;
    if !b_max.is_finite() {
        fail!(Numeric, "beta-mixture bracket sums are not finite");
    }
    let at_max = mass(b_max);
    if at_max > 1.0 {
        fail!(Numeric, "no normalizer: mass {at_max} > 1 already at the nonnegativity bound b = {b_max}");
    }
    if at_max == 1.0 {
        return Ok(b_max);
    }
    let mut width = 10.0;
    let mut lo = b_max - width;
    let mut doublings = 0;
    while mass(lo) < 1.0 {
        width *= 2.0;
        lo = b_max - width;
        doublings += 1;
        if doublings > 200 || !lo.is_finite() {
            fail!(Numeric, "could not bracket the beta-mixture normalizer (b_max = {b_max})");
        }
    }
    let mut hi = b_max;
    for _ in 0..2000 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mass(mid) >= 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (b, err) = {
        let el = (mass(lo) - 1.0).abs();
        let eh = (mass(hi) - 1.0).abs();
        if el <= eh {
            (lo, el)
        } else {
            (hi, eh)
        }
    };
    if err > 1e-10 {
        fail!(Numeric, "beta-mixture normalization residual {err} after bisection (b = {b})");
    }
    Ok(b)
}

/// Dual γ-power consensus. `support` must match the family (use
/// [`SupportSpec::for_family`] for the default window).
pub fn gamma_mixture(
    family: &GlmFamily,
    xis: &[f64],
    w: &Weights,
    gamma: f64,
    support: &SupportSpec,
) -> Result<ConsensusModel> {
    check_power("gamma", gamma)?;
    check_members(xis, w)?;
    check_support(family, support)?;
    let grid = support.grid()?;
    let log_s = gamma_log_sums(family, xis, w.as_slice(), gamma, &grid);
    let z = gamma_normalizer(&log_s, gamma, &grid)?;
    Ok(ConsensusModel::GammaMixture { xis: xis.to_vec(), w: w.clone(), gamma, z, support: *support })
}

pub(crate) fn check_support(family: &GlmFamily, support: &SupportSpec) -> Result<()> {
    match (family.support(), support) {
        (Support::Binary, SupportSpec::Binary) | (Support::RealLine, SupportSpec::RealLineQuadrature { .. }) => Ok(()),
        _ => fail!(Parameter, "support {support:?} does not match family support {:?}", family.support()),
    }
}

/// `log Σ_c w_c p_c(y)^γ` at one output, shifted by the largest term.
/// Weights may be negative as long as the sum stays positive.
#[inline]
pub(crate) fn gamma_log_sum_at(family: &GlmFamily, xis: &[f64], w: &[f64], gamma: f64, y: f64) -> f64 {
    let mut m = f64::NEG_INFINITY;
    for (&xi, &wc) in xis.iter().zip(w) {
        if wc != 0.0 {
            m = m.max(gamma * family.log_density_unchecked(y, xi));
        }
    }
    if m == f64::NEG_INFINITY {
        return m;
    }
    let s: f64 = xis
        .iter()
        .zip(w)
        .filter(|(_, &wc)| wc != 0.0)
        .map(|(&xi, &wc)| wc * (gamma * family.log_density_unchecked(y, xi) - m).exp())
        .sum();
    m + s.ln()
}

pub(crate) fn gamma_log_sums(family: &GlmFamily, xis: &[f64], w: &[f64], gamma: f64, grid: &Grid) -> Vec<f64> {
    grid.points.iter().map(|&y| gamma_log_sum_at(family, xis, w, gamma, y)).collect()
}

/// `z = ∫ S^{1/γ}`.
pub(crate) fn gamma_normalizer(log_s: &[f64], gamma: f64, grid: &Grid) -> Result<f64> {
    let z: f64 = log_s.iter().zip(&grid.weights).map(|(&ls, &g)| g * (ls / gamma).exp()).sum();
    if !(z > 0.0) || !z.is_finite() {
        fail!(Numeric, "dual gamma-mixture normalizer is {z}");
    }
    Ok(z)
}

/// Consensus density at `y`.
pub fn mixture_density(model: &ConsensusModel, family: &GlmFamily, y: f64) -> Result<f64> {
    family.check_output(y)?;
    Ok(match model {
        ConsensusModel::KlConsensus { xi_bar } => family.log_density_unchecked(y, *xi_bar).exp(),
        ConsensusModel::BetaMixture { xis, w, beta, b, .. } => {
            let s: f64 = xis
                .iter()
                .zip(w.as_slice())
                .map(|(&xi, &wc)| wc * (beta * family.log_density_unchecked(y, xi)).exp())
                .sum();
            beta_mixture_value(s, *beta, *b)
        }
        ConsensusModel::GammaMixture { xis, w, gamma, z, .. } => {
            (gamma_log_sum_at(family, xis, w.as_slice(), *gamma, y) / gamma).exp() / z
        }
    })
}

impl ConsensusModel {
    /// Consensus density at every node of `grid`.
    pub fn tabulate(&self, family: &GlmFamily, grid: &Grid) -> Result<Vec<f64>> {
        grid.points.iter().map(|&y| mixture_density(self, family, y)).collect()
    }
}
