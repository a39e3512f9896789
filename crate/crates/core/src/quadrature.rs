//! Summation over `{0, 1}` and fixed-node Gauss–Legendre quadrature on the
//! real line.
//!
//! Every integral in the crate is a weighted sum over a [`Grid`]; densities of
//! one committee are tabulated on the same grid so mixtures, divergences and
//! influence functions reuse the nodes.

use alloc::vec::Vec;
use core::f64::consts::PI;
#[allow(unused_imports)]
use num_traits::Float;

use crate::error::{fail, Result};
use crate::family::{FamilyKind, GlmFamily};

/// Default node count for real-line quadrature.
pub const DEFAULT_NODES: usize = 801;
/// Default half-width of the integration window, in standard deviations.
pub const DEFAULT_HALF_WIDTH_SIGMAS: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SupportSpec {
    /// Counting measure on `{0, 1}`.
    Binary,
    /// Gauss–Legendre rule on `[center − half_width, center + half_width]`.
    RealLineQuadrature { center: f64, half_width: f64, nodes: usize },
}

impl SupportSpec {
    /// Integration support for a family with members at canonical parameters
    /// `xis`: `{0,1}` for Bernoulli; for Gaussian a window covering every
    /// member mean plus 12σ on both sides.
    pub fn for_family(family: &GlmFamily, xis: &[f64]) -> Self {
        match family.kind() {
            FamilyKind::Bernoulli => SupportSpec::Binary,
            FamilyKind::Gaussian { sigma2 } => {
                let (lo, hi) = xis
                    .iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
                let (lo, hi) = if lo.is_finite() { (lo, hi) } else { (0.0, 0.0) };
                SupportSpec::RealLineQuadrature {
                    center: 0.5 * (lo + hi),
                    half_width: 0.5 * (hi - lo) + DEFAULT_HALF_WIDTH_SIGMAS * sigma2.sqrt(),
                    nodes: DEFAULT_NODES,
                }
            }
        }
    }

    /// Same window with twice the nodes.
    pub fn refined(&self) -> Self {
        match *self {
            SupportSpec::Binary => SupportSpec::Binary,
            SupportSpec::RealLineQuadrature { center, half_width, nodes } => {
                SupportSpec::RealLineQuadrature { center, half_width, nodes: 2 * nodes }
            }
        }
    }

    pub fn grid(&self) -> Result<Grid> {
        match *self {
            SupportSpec::Binary => Ok(Grid { points: alloc::vec![0.0, 1.0], weights: alloc::vec![1.0, 1.0] }),
            SupportSpec::RealLineQuadrature { center, half_width, nodes } => {
                if nodes == 0 || !(half_width > 0.0) || !center.is_finite() || !half_width.is_finite() {
                    fail!(
                        Parameter,
                        "quadrature needs nodes > 0 and a finite positive half-width (got {nodes}, {half_width})"
                    );
                }
                let (x, w) = gauss_legendre(nodes);
                let points = x.iter().map(|t| center + half_width * t).collect();
                let weights = w.iter().map(|wi| wi * half_width).collect();
                Ok(Grid { points, weights })
            }
        }
    }
}

/// Integration nodes and weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Grid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// `Σ_i w_i v_i` for values already tabulated at the nodes.
    #[inline]
    pub fn sum(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn tabulate(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points.iter().map(|&y| f(y)).collect()
    }
}

/// Integrates `f` over the support.
pub fn integrate(f: impl Fn(f64) -> f64, support: &SupportSpec) -> Result<f64> {
    let grid = support.grid()?;
    let mut acc = 0.0;
    for (&y, &w) in grid.points.iter().zip(&grid.weights) {
        let v = f(y);
        if !v.is_finite() {
            fail!(Numeric, "integrand is not finite at node y = {y}");
        }
        acc += w * v;
    }
    Ok(acc)
}

/// Gauss–Legendre nodes and weights on `[−1, 1]`, nodes ascending.
///
/// Roots of `P_n` by Newton iteration from the Chebyshev-like initial guess;
/// weights `2 / ((1 − x²) P_n′(x)²)`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = alloc::vec![0.0; n];
    let mut w = alloc::vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    for i in 0..m {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let weight = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = weight;
        w[n - 1 - i] = weight;
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    (x, w)
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * z * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn normal_pdf(y: f64, mean: f64) -> f64 {
        (-(y - mean) * (y - mean) / 2.0).exp() / (2.0 * PI).sqrt()
    }

    #[test]
    fn low_order_rules_are_exact_for_polynomials() {
        for n in 1..12 {
            let (x, w) = gauss_legendre(n);
            for deg in 0..(2 * n) {
                let q: f64 = x.iter().zip(&w).map(|(xi, wi)| wi * xi.powi(deg as i32)).sum();
                let exact = if deg % 2 == 1 { 0.0 } else { 2.0 / (deg as f64 + 1.0) };
                assert!((q - exact).abs() < 1e-13, "n={n} deg={deg}: {q} vs {exact}");
            }
        }
    }

    #[test]
    fn binary_sums_pmf() {
        let s = integrate(|y| if y == 1.0 { 0.25 } else { 0.75 }, &SupportSpec::Binary).unwrap();
        assert_eq!(s, 1.0);
    }

    #[test]
    fn standard_normal_normalizes() {
        let spec = SupportSpec::RealLineQuadrature { center: 0.0, half_width: 10.0, nodes: 401 };
        let s = integrate(|y| normal_pdf(y, 0.0), &spec).unwrap();
        assert!((s - 1.0).abs() < 1e-10, "{s}");
    }

    #[test]
    fn gaussian_mean() {
        let spec = SupportSpec::RealLineQuadrature { center: 3.0, half_width: 12.0, nodes: DEFAULT_NODES };
        let m = integrate(|y| y * normal_pdf(y, 3.0), &spec).unwrap();
        assert!((m - 3.0).abs() < 1e-8);
    }

    #[test]
    fn defaults_normalize_shifted_normal() {
        let fam = GlmFamily::gaussian(1.0).unwrap();
        let spec = SupportSpec::for_family(&fam, &[-4.0, 7.0]);
        for mean in [-4.0, 0.0, 7.0] {
            let s = integrate(|y| normal_pdf(y, mean), &spec).unwrap();
            assert!((s - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn non_finite_integrand_rejected() {
        assert!(integrate(|_| f64::NAN, &SupportSpec::Binary).is_err());
    }
}
