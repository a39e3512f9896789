//! KL, β- and dual γ-power divergences, and the Bregman generator catalog.
//!
//! Conventions: the first argument is the "from" density. For the
//! β-divergence
//!
//! ```text
//! D_β(p, q) = 1/(β(1+β)) ∫p^{β+1} − 1/β ∫p q^β + 1/(β+1) ∫q^{β+1}
//! ```
//!
//! and for the dual γ-power divergence
//!
//! ```text
//! D*_γ(p, q) = −∫p q^γ / (∫p^{γ+1})^{1/(γ+1)} + (∫q^{γ+1})^{γ/(γ+1)}
//! ```
//!
//! which is invariant under `p ↦ z p`. The η-type generator (`U(z) = e^z + ηz`)
//! also yields a robust divergence but is not provided here.

use alloc::boxed::Box;
use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{fail, Error, Result};
use crate::family::GlmFamily;
use crate::quadrature::{Grid, SupportSpec};

/// Convex generator `U` of a Bregman (u-) divergence with `u = U′` and
/// `u* = u⁻¹`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BregmanGenerator {
    /// `U = exp`; yields the KL divergence.
    Exponential,
    /// `U(z) = z²/2`; yields half the squared L2 distance.
    Euclidean,
    /// `U(z) = (βz + 1)^{(β+1)/β} / (β+1)`; yields the β-divergence.
    BetaType { beta: f64 },
}

impl BregmanGenerator {
    pub fn beta(beta: f64) -> Result<Self> {
        check_power("beta", beta)?;
        Ok(Self::BetaType { beta })
    }

    /// `U(z)`.
    pub fn potential(&self, z: f64) -> Result<f64> {
        match *self {
            Self::Exponential => Ok(z.exp()),
            Self::Euclidean => Ok(0.5 * z * z),
            Self::BetaType { beta } => {
                let base = beta * z + 1.0;
                if base < 0.0 {
                    fail!(Domain, "beta-type U needs βz + 1 ≥ 0, got {base}");
                }
                Ok(base.powf((beta + 1.0) / beta) / (beta + 1.0))
            }
        }
    }

    /// `u(z) = U′(z)`.
    pub fn u(&self, z: f64) -> Result<f64> {
        match *self {
            Self::Exponential => Ok(z.exp()),
            Self::Euclidean => Ok(z),
            Self::BetaType { beta } => {
                let base = beta * z + 1.0;
                if base < 0.0 {
                    fail!(Domain, "beta-type u needs βz + 1 ≥ 0, got {base}");
                }
                Ok(base.powf(1.0 / beta))
            }
        }
    }

    /// Legendre conjugate `U*(ζ)`.
    pub fn conjugate(&self, zeta: f64) -> Result<f64> {
        match *self {
            Self::Exponential => {
                nonneg(zeta)?;
                Ok(if zeta == 0.0 { 0.0 } else { zeta * (zeta.ln() - 1.0) })
            }
            Self::Euclidean => Ok(0.5 * zeta * zeta),
            Self::BetaType { beta } => {
                nonneg(zeta)?;
                Ok(zeta.powf(beta + 1.0) / (beta * (beta + 1.0)) - zeta / beta)
            }
        }
    }

    /// `u*(ζ) = u⁻¹(ζ)`, the u-representation of a density value.
    pub fn u_star(&self, zeta: f64) -> Result<f64> {
        match *self {
            Self::Exponential => {
                nonneg(zeta)?;
                Ok(zeta.ln())
            }
            Self::Euclidean => Ok(zeta),
            Self::BetaType { beta } => {
                nonneg(zeta)?;
                Ok((zeta.powf(beta) - 1.0) / beta)
            }
        }
    }
}

fn nonneg(v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        fail!(Domain, "value must be finite and non-negative, got {v}")
    }
}

pub(crate) fn check_power(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        fail!(Parameter, "{name} must be positive and finite, got {v}")
    }
}

/// Bregman potential `d_U(f, g) = U*(f) + U(ğ) − f ğ` with `ğ = u*(g)`.
///
/// For the exponential generator `0·log 0 = 0`, so `d_U(0, g) = g`;
/// `f > 0` with `g = 0` is a domain error.
pub fn bregman_potential(generator: &BregmanGenerator, f: f64, g: f64) -> Result<f64> {
    match *generator {
        BregmanGenerator::Exponential => {
            nonneg(f)?;
            nonneg(g)?;
            if f == 0.0 {
                return Ok(g);
            }
            if g == 0.0 {
                fail!(Domain, "exponential potential diverges for f = {f} > 0, g = 0");
            }
            Ok(f * (f.ln() - g.ln()) - f + g)
        }
        BregmanGenerator::Euclidean => Ok(0.5 * (f - g) * (f - g)),
        BregmanGenerator::BetaType { .. } => {
            nonneg(f)?;
            nonneg(g)?;
            let g_breve = generator.u_star(g)?;
            Ok(generator.conjugate(f)? + generator.potential(g_breve)? - f * g_breve)
        }
    }
}

/// A density (or mass function) evaluable on the support.
pub struct DensityFn<'a> {
    eval: Box<dyn Fn(f64) -> f64 + 'a>,
    pub normalized: bool,
}

impl<'a> DensityFn<'a> {
    pub fn new(f: impl Fn(f64) -> f64 + 'a, normalized: bool) -> Self {
        Self { eval: Box::new(f), normalized }
    }

    /// `y ↦ p(y | ξ)` for a GLM family.
    pub fn glm(family: GlmFamily, xi: f64) -> Self {
        Self::new(move |y| family.log_density_unchecked(y, xi).exp(), true)
    }

    /// Bernoulli mass function with success probability `prob`.
    pub fn bernoulli(prob: f64) -> Self {
        Self::new(move |y| if y == 1.0 { prob } else { 1.0 - prob }, true)
    }

    #[inline]
    pub fn eval(&self, y: f64) -> f64 {
        (self.eval)(y)
    }

    fn tabulate(&self, grid: &Grid) -> Result<Vec<f64>> {
        let vals = grid.tabulate(|y| self.eval(y));
        if let Some(v) = vals.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            fail!(Domain, "density value {v} is not a finite non-negative number");
        }
        Ok(vals)
    }
}

impl core::fmt::Debug for DensityFn<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("DensityFn").field("normalized", &self.normalized).finish_non_exhaustive()
    }
}

#[inline]
pub(crate) fn pow0(v: f64, e: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        v.powf(e)
    }
}

/// KL divergence between two members of the same GLM family:
/// `(ψ′(ξ₁)(ξ₁ − ξ₂) − ψ(ξ₁) + ψ(ξ₂)) / φ`.
pub fn kl_closed_form(family: &GlmFamily, xi1: f64, xi2: f64) -> Result<f64> {
    if !xi1.is_finite() || !xi2.is_finite() {
        fail!(Domain, "canonical parameters must be finite, got {xi1}, {xi2}");
    }
    Ok(kl_glm(family, xi1, xi2).max(0.0))
}

#[inline]
pub(crate) fn kl_glm(family: &GlmFamily, xi1: f64, xi2: f64) -> f64 {
    (family.mean(xi1) * (xi1 - xi2) - family.psi(xi1) + family.psi(xi2)) / family.dispersion()
}

/// `∫ p log(p/q)` on the support, with `0 log 0 = 0`.
pub fn kl_divergence(p: &DensityFn, q: &DensityFn, support: &SupportSpec) -> Result<f64> {
    let grid = support.grid()?;
    let pv = p.tabulate(&grid)?;
    let qv = q.tabulate(&grid)?;
    let mut acc = 0.0;
    for ((&a, &b), &w) in pv.iter().zip(&qv).zip(&grid.weights) {
        if a == 0.0 {
            continue;
        }
        if b == 0.0 {
            return Ok(f64::INFINITY);
        }
        acc += w * a * (a / b).ln();
    }
    Ok(acc.max(0.0))
}

/// β-divergence `D_β(p, q)`.
pub fn beta_divergence(p: &DensityFn, q: &DensityFn, beta: f64, support: &SupportSpec) -> Result<f64> {
    check_power("beta", beta)?;
    let grid = support.grid()?;
    let pv = p.tabulate(&grid)?;
    let qv = q.tabulate(&grid)?;
    Ok(beta_divergence_tabulated(&pv, &qv, &grid, beta).max(0.0))
}

/// β-divergence between densities tabulated at `grid`'s nodes.
pub fn beta_divergence_tabulated(p: &[f64], q: &[f64], grid: &Grid, beta: f64) -> f64 {
    let mut pp = 0.0;
    let mut pq = 0.0;
    let mut qq = 0.0;
    for ((&a, &b), &w) in p.iter().zip(q).zip(&grid.weights) {
        pp += w * pow0(a, beta + 1.0);
        pq += w * a * pow0(b, beta);
        qq += w * pow0(b, beta + 1.0);
    }
    pp / (beta * (1.0 + beta)) - pq / beta + qq / (beta + 1.0)
}

/// Dual γ-power divergence `D*_γ(p, q)`.
pub fn dual_gamma_divergence(p: &DensityFn, q: &DensityFn, gamma: f64, support: &SupportSpec) -> Result<f64> {
    check_power("gamma", gamma)?;
    let grid = support.grid()?;
    let pv = p.tabulate(&grid)?;
    let qv = q.tabulate(&grid)?;
    Ok(dual_gamma_divergence_tabulated(&pv, &qv, &grid, gamma)?.max(0.0))
}

pub fn dual_gamma_divergence_tabulated(p: &[f64], q: &[f64], grid: &Grid, gamma: f64) -> Result<f64> {
    let mut pp = 0.0;
    let mut pq = 0.0;
    let mut qq = 0.0;
    for ((&a, &b), &w) in p.iter().zip(q).zip(&grid.weights) {
        pp += w * pow0(a, gamma + 1.0);
        pq += w * a * pow0(b, gamma);
        qq += w * pow0(b, gamma + 1.0);
    }
    if !(pp > 0.0) {
        return Err(Error::Domain(alloc::format!("first argument has zero mass (∫p^(γ+1) = {pp})")));
    }
    Ok(-pq / pp.powf(1.0 / (gamma + 1.0)) + qq.powf(gamma / (gamma + 1.0)))
}

/// `∫ d_U(p, q)`.
pub fn bregman_divergence(
    generator: &BregmanGenerator,
    p: &DensityFn,
    q: &DensityFn,
    support: &SupportSpec,
) -> Result<f64> {
    let grid = support.grid()?;
    let mut acc = 0.0;
    for (&y, &w) in grid.points.iter().zip(&grid.weights) {
        acc += w * bregman_potential(generator, p.eval(y), q.eval(y))?;
    }
    Ok(acc)
}
