//! Independent oracles: direct sums, composite Simpson integration and
//! brute-force grids written here without the crate's own helpers.

use std::f64::consts::PI;

use rand::Rng;

use robust_qbc_core::acquisition::{
    acquisition_beta, acquisition_gamma, acquisition_kl, score_gamma, select_query,
};
use robust_qbc_core::divergence::{
    beta_divergence, dual_gamma_divergence, kl_closed_form, kl_divergence,
};
use robust_qbc_core::family::fit_mle;
use robust_qbc_core::mixture::{beta_mixture, gamma_mixture, kl_consensus, mixture_density};
use robust_qbc_core::rng::{stream, Purpose};
use robust_qbc_core::{
    AcquisitionMethod, Committee, ConsensusModel, DensityFn, FitOptions, GlmFamily, GlmModel, Matrix,
    SupportSpec, Weights,
};

const B: GlmFamily = GlmFamily::BERNOULLI;

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn bern(xi: f64) -> [f64; 2] {
    [1.0 - sig(xi), sig(xi)]
}

fn normal(y: f64, m: f64, s2: f64) -> f64 {
    (-(y - m) * (y - m) / (2.0 * s2)).exp() / (2.0 * PI * s2).sqrt()
}

/// Composite Simpson on [a, b] with n (even) panels.
fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

fn d_beta(p: [f64; 2], q: [f64; 2], b: f64) -> f64 {
    (0..2)
        .map(|i| p[i].powf(b + 1.0) / (b * (b + 1.0)) - p[i] * q[i].powf(b) / b + q[i].powf(b + 1.0) / (b + 1.0))
        .sum()
}

fn d_gamma(p: [f64; 2], q: [f64; 2], g: f64) -> f64 {
    let pp: f64 = p.iter().map(|v| v.powf(g + 1.0)).sum();
    let pq: f64 = (0..2).map(|i| p[i] * q[i].powf(g)).sum();
    let qq: f64 = q.iter().map(|v| v.powf(g + 1.0)).sum();
    -pq / pp.powf(1.0 / (g + 1.0)) + qq.powf(g / (g + 1.0))
}

fn d_kl(p: [f64; 2], q: [f64; 2]) -> f64 {
    (0..2).filter(|&i| p[i] > 0.0).map(|i| p[i] * (p[i] / q[i]).ln()).sum()
}

#[test]
fn cumulant_values_and_derivatives() {
    let g = GlmFamily::gaussian(1.0).unwrap();
    assert_eq!(g.cumulant(2.0).unwrap(), 2.0);
    assert!((B.cumulant(0.0).unwrap() - 2f64.ln()).abs() < 1e-15);
    assert!((B.cumulant(1000.0).unwrap() - 1000.0).abs() < 1e-12);
    assert!(B.cumulant(f64::NAN).is_err());
    assert_eq!(B.cumulant_d1(0.0).unwrap(), 0.5);
    assert_eq!(g.cumulant_d2(-7.3).unwrap(), 1.0);
    let h = 1e-5;
    let fd = (B.cumulant(0.7 + h).unwrap() - B.cumulant(0.7 - h).unwrap()) / (2.0 * h);
    let d1 = B.cumulant_d1(0.7).unwrap();
    assert!(((fd - d1) / d1).abs() < 1e-6);
}

#[test]
fn log_density_examples() {
    let g = GlmFamily::gaussian(1.0).unwrap();
    assert!((B.log_density(1.0, 0.0).unwrap() + 2f64.ln()).abs() < 1e-15);
    assert!((g.log_density(0.0, 0.0).unwrap() + 0.5 * (2.0 * PI).ln()).abs() < 1e-12);
    assert!(B.log_density(0.5, 0.0).is_err());
    for xi in [-3.0, 0.0, 3.0] {
        let s = B.density(1.0, xi).unwrap() + B.density(0.0, xi).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
    }
    // Gaussian with σ² = 2.5 against the textbook density
    let g = GlmFamily::gaussian(2.5).unwrap();
    for (y, xi) in [(0.3, -1.0), (4.0, 2.0)] {
        assert!((g.density(y, xi).unwrap() - normal(y, xi, 2.5)).abs() < 1e-14);
    }
}

#[test]
fn fit_examples() {
    let x = Matrix::from_rows(&[[1.0, 1.0], [2.0, 1.0], [3.0, 1.0]]).unwrap();
    let m = fit_mle(GlmFamily::gaussian(1.0).unwrap(), &x, &[2.0, 4.0, 6.0], &FitOptions::default()).unwrap();
    assert!((m.theta[0] - 2.0).abs() < 1e-8 && m.theta[1].abs() < 1e-8);

    let x = Matrix::from_rows(&[[1.0]; 10]).unwrap();
    let y = [1.0, 1.0, 1.0, 0.0, 1.0, 0.0, 1.0, 1.0, 0.0, 1.0];
    let m = fit_mle(B, &x, &y, &FitOptions::default()).unwrap();
    let mean = 0.7f64;
    assert!((m.theta[0] - (mean / (1.0 - mean)).ln()).abs() < 1e-6);
    assert!(m.diagnostics.converged);
}

#[test]
fn kl_examples_against_direct_sums_and_quadrature() {
    let v = kl_closed_form(&B, 0.0, 3f64.ln()).unwrap();
    let direct = 0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln();
    assert!((v - direct).abs() < 1e-14);
    assert!((v - 0.143841).abs() < 1e-6);
    assert_eq!(kl_closed_form(&B, 3.0, 3.0).unwrap(), 0.0);

    let g = GlmFamily::gaussian(1.0).unwrap();
    let v = kl_closed_form(&g, 0.0, 1.0).unwrap();
    let quad = simpson(|y| normal(y, 0.0, 1.0) * (normal(y, 0.0, 1.0) / normal(y, 1.0, 1.0)).ln(), -14.0, 15.0, 4000);
    assert!((v - 0.5).abs() < 1e-14);
    assert!((v - quad).abs() < 1e-9);

    // generic path agrees with the closed form
    let p = DensityFn::glm(g, 0.0);
    let q = DensityFn::glm(g, 1.0);
    let spec = SupportSpec::for_family(&g, &[0.0, 1.0]);
    assert!((kl_divergence(&p, &q, &spec).unwrap() - 0.5).abs() < 1e-9);
}

#[test]
fn beta_divergence_examples() {
    let p = DensityFn::bernoulli(0.5);
    let q = DensityFn::bernoulli(0.75);
    let v = beta_divergence(&p, &q, 1.0, &SupportSpec::Binary).unwrap();
    assert!((v - 0.0625).abs() < 1e-14);
    for b in [0.3, 1.0, 2.5] {
        assert!(beta_divergence(&p, &p, b, &SupportSpec::Binary).unwrap().abs() < 1e-12);
    }
    assert!(beta_divergence(&p, &q, 0.0, &SupportSpec::Binary).is_err());

    let g = GlmFamily::gaussian(1.0).unwrap();
    let spec = SupportSpec::for_family(&g, &[0.0, 1.0]);
    let v = beta_divergence(&DensityFn::glm(g, 0.0), &DensityFn::glm(g, 1.0), 1.0, &spec).unwrap();
    let closed = (1.0 - (-0.25f64).exp()) / (2.0 * PI.sqrt());
    assert!((v - closed).abs() < 1e-6);
}

#[test]
fn dual_gamma_examples() {
    let p = DensityFn::bernoulli(0.5);
    let q = DensityFn::bernoulli(0.75);
    let v = dual_gamma_divergence(&p, &q, 1.0, &SupportSpec::Binary).unwrap();
    assert!((v - d_gamma([0.5, 0.5], [0.25, 0.75], 1.0)).abs() < 1e-14);
    assert!((v - 0.083462).abs() < 1e-6);
    let r = DensityFn::bernoulli(0.3);
    assert!(dual_gamma_divergence(&r, &r, 1.0, &SupportSpec::Binary).unwrap().abs() < 1e-12);
    let p4 = DensityFn::bernoulli(0.4);
    let p4x2 = DensityFn::new(|y| 2.0 * if y == 1.0 { 0.4 } else { 0.6 }, false);
    let q7 = DensityFn::bernoulli(0.7);
    let a = dual_gamma_divergence(&p4, &q7, 1.0, &SupportSpec::Binary).unwrap();
    let b = dual_gamma_divergence(&p4x2, &q7, 1.0, &SupportSpec::Binary).unwrap();
    assert!((a - b).abs() < 1e-12);
    let zero = DensityFn::new(|_| 0.0, false);
    assert!(dual_gamma_divergence(&zero, &q7, 1.0, &SupportSpec::Binary).is_err());
}

#[test]
fn consensus_examples() {
    assert_eq!(kl_consensus(&[0.0, 2.0], &Weights::uniform(2).unwrap()).unwrap(), 1.0);
    let w = Weights::new(vec![0.2, 0.3, 0.5]).unwrap();
    assert!((kl_consensus(&[1.0, 2.0, 3.0], &w).unwrap() - 2.3).abs() < 1e-15);

    let w = Weights::uniform(2).unwrap();
    let m = gamma_mixture(&B, &[0.0, 3f64.ln()], &w, 2.0, &SupportSpec::Binary).unwrap();
    let u0 = (0.5 * 0.25f64 + 0.5 * 0.0625).sqrt();
    let u1 = (0.5 * 0.25f64 + 0.5 * 0.5625).sqrt();
    assert!((u0 - 0.395285).abs() < 1e-6 && (u1 - 0.637377).abs() < 1e-6);
    match &m {
        ConsensusModel::GammaMixture { z, .. } => assert!((z - (u0 + u1)).abs() < 1e-12 && (z - 1.032662).abs() < 1e-6),
        other => panic!("{other:?}"),
    }
    assert!((mixture_density(&m, &B, 1.0).unwrap() - u1 / (u0 + u1)).abs() < 1e-12);

    // β = 1: b = 0 and the arithmetic mean
    let m = beta_mixture(&B, &[-1.0, 2.5], &w, 1.0).unwrap();
    let ConsensusModel::BetaMixture { b, .. } = m else { panic!() };
    assert!(b.abs() < 1e-10);
    let mean1 = 0.5 * (sig(-1.0) + sig(2.5));
    assert!((mixture_density(&m, &B, 1.0).unwrap() - mean1).abs() < 1e-12);

    let g = GlmFamily::gaussian(1.0).unwrap();
    assert!(beta_mixture(&g, &[0.0, 1.0], &w, 1.0).is_err());
}

/// Seeded random committees for the grid oracles.
fn committees(n: usize) -> Vec<(Vec<f64>, Vec<f64>)> {
    let mut rng = stream(17, 0, 0, Purpose::Fixture);
    (0..n)
        .map(|k| {
            let c = [2, 3, 5][k % 3];
            let xis: Vec<f64> = (0..c).map(|_| rng.random_range(-4.0..4.0)).collect();
            let raw: Vec<f64> = (0..c).map(|_| rng.random_range(0.05..1.05)).collect();
            let tot: f64 = raw.iter().sum();
            let mut w: Vec<f64> = raw.iter().map(|r| r / tot).collect();
            let fix = 1.0 - w.iter().sum::<f64>();
            w[0] += fix;
            (xis, w)
        })
        .collect()
}

#[test]
fn mixtures_minimize_their_objectives_on_a_grid() {
    for (xis, w) in committees(9) {
        let wt = Weights::new(w.clone()).unwrap();
        let members: Vec<[f64; 2]> = xis.iter().map(|&x| bern(x)).collect();
        for power in [0.5, 1.0, 2.0] {
            let pu = {
                let m = beta_mixture(&B, &xis, &wt, power).unwrap();
                [mixture_density(&m, &B, 0.0).unwrap(), mixture_density(&m, &B, 1.0).unwrap()]
            };
            let pg = {
                let m = gamma_mixture(&B, &xis, &wt, power, &SupportSpec::Binary).unwrap();
                [mixture_density(&m, &B, 0.0).unwrap(), mixture_density(&m, &B, 1.0).unwrap()]
            };
            assert!((pu[0] + pu[1] - 1.0).abs() < 1e-10 && (pg[0] + pg[1] - 1.0).abs() < 1e-10);
            // candidate in the first argument
            let a_beta = |q: [f64; 2]| members.iter().zip(&w).map(|(p, wc)| wc * d_beta(q, *p, power)).sum::<f64>();
            let a_gamma = |q: [f64; 2]| members.iter().zip(&w).map(|(p, wc)| wc * d_gamma(q, *p, power)).sum::<f64>();
            let (ab, ag) = (a_beta(pu), a_gamma(pg));
            for k in 0..=10_000 {
                let pi = k as f64 * 1e-4;
                let q = [1.0 - pi, pi];
                assert!(a_beta(q) - ab >= -1e-9, "beta={power} pi={pi}");
                assert!(a_gamma(q) - ag >= -1e-9, "gamma={power} pi={pi}");
            }
        }
        // KL consensus against a canonical-parameter grid
        let xb = kl_consensus(&xis, &wt).unwrap();
        let obj = |xi: f64| members.iter().zip(&w).map(|(p, wc)| wc * d_kl(bern(xi), *p)).sum::<f64>();
        let best = (0..=80_000).map(|k| -4.0 + k as f64 * 1e-4).min_by(|a, b| obj(*a).total_cmp(&obj(*b))).unwrap();
        assert!((best - xb).abs() <= 1e-4, "{best} vs {xb}");
    }
}

#[test]
fn gaussian_gamma_mixture_beats_gaussian_candidates() {
    let g = GlmFamily::gaussian(1.0).unwrap();
    let xis = [-1.5, 0.5, 2.0];
    let w = Weights::new(vec![0.3, 0.3, 0.4]).unwrap();
    for gamma in [0.5, 1.0, 2.0] {
        let spec = SupportSpec::for_family(&g, &[-6.0, 6.0]);
        let m = gamma_mixture(&g, &xis, &w, gamma, &spec).unwrap();
        let total = simpson(|y| mixture_density(&m, &g, y).unwrap(), -20.0, 20.0, 4000);
        assert!((total - 1.0).abs() < 1e-8, "γ={gamma}: {total}");
        let obj = |q: &dyn Fn(f64) -> f64| -> f64 {
            xis.iter()
                .zip(w.as_slice())
                .map(|(&xi, wc)| {
                    // D*(q, p_c)
                    let qq = simpson(|y| q(y).powf(gamma + 1.0), -20.0, 20.0, 2000);
                    let qp = simpson(|y| q(y) * normal(y, xi, 1.0).powf(gamma), -20.0, 20.0, 2000);
                    let pp = simpson(|y| normal(y, xi, 1.0).powf(gamma + 1.0), -20.0, 20.0, 2000);
                    wc * (-qp / qq.powf(1.0 / (gamma + 1.0)) + pp.powf(gamma / (gamma + 1.0)))
                })
                .sum()
        };
        let at_mix = obj(&|y| mixture_density(&m, &g, y).unwrap());
        for k in 0..=120 {
            let mean = -6.0 + 0.1 * k as f64;
            assert!(obj(&|y| normal(y, mean, 1.0)) - at_mix >= -1e-9, "γ={gamma} mean={mean}");
        }
    }
}

fn committee_at(xis: &[(f64, f64)]) -> Committee {
    // one feature plus intercept: ξ_c(x) = a_c x + b_c
    let models = xis.iter().map(|&(a, b)| GlmModel::new(B, vec![a, b])).collect();
    Committee::new(models, Weights::uniform(xis.len()).unwrap()).unwrap()
}

#[test]
fn acquisition_examples() {
    let c = committee_at(&[(0.0, 0.0), (3f64.ln(), 0.0)]);
    let x = [1.0, 0.0];
    let p1 = [0.5, 0.5];
    let p2 = [0.25, 0.75];
    let mean = [0.375, 0.625];
    let beta1 = 0.5 * d_beta(p1, mean, 1.0) + 0.5 * d_beta(p2, mean, 1.0);
    assert!((acquisition_beta(&c, &x, 1.0).unwrap() - beta1).abs() < 1e-14);
    assert!((beta1 - 0.015625).abs() < 1e-14);
    let gamma1 = 0.5 * d_gamma(p1, mean, 1.0) + 0.5 * d_gamma(p2, mean, 1.0);
    assert!((acquisition_gamma(&c, &x, 1.0).unwrap() - gamma1).abs() < 1e-14);
    assert!((gamma1 - 0.0195594).abs() < 1e-6);

    // origin: every member predicts ξ = 0
    for m in [AcquisitionMethod::Kl, AcquisitionMethod::Beta { beta: 2.0 }, AcquisitionMethod::Gamma { gamma: 0.5 }] {
        assert!(robust_qbc_core::acquisition::acquisition(&c, &[0.0, 0.0], &m).unwrap().abs() < 1e-15);
    }

    // a₀ increasing in the spread s against the two-term oracle
    let mut prev = -1.0;
    for s in [0.5, 1.0, 2.0] {
        let c = committee_at(&[(-s, 0.0), (s, 0.0)]);
        let a = acquisition_kl(&c, &[1.0, 1.0]).unwrap();
        let oracle = 0.5 * d_kl(bern(-s), bern(0.0)) + 0.5 * d_kl(bern(s), bern(0.0));
        assert!((a - oracle).abs() < 1e-12);
        assert!(a > prev);
        prev = a;
    }
}

#[test]
fn gaussian_gamma_acquisition_is_grid_stable() {
    let g = GlmFamily::gaussian(1.0).unwrap();
    let w = Weights::uniform(2).unwrap();
    let spec = SupportSpec::for_family(&g, &[-1.0, 1.0]);
    let a = score_gamma(&g, &[-1.0, 1.0], &w, 1.0, &spec).unwrap();
    let b = score_gamma(&g, &[-1.0, 1.0], &w, 1.0, &spec.refined()).unwrap();
    assert!(a > 0.0 && a.is_finite());
    assert!((a - b).abs() < 1e-8);
}

#[test]
fn engineered_pool_point_wins_for_every_method() {
    // members agree (ξ = 0) everywhere except on the second feature
    let models = vec![GlmModel::new(B, vec![0.0, 10.0, 0.0]), GlmModel::new(B, vec![0.0, -10.0, 0.0])];
    let c = Committee::new(models, Weights::uniform(2).unwrap()).unwrap();
    let mut rows = vec![[1.0, 0.0, 1.0]; 12];
    // member probabilities (0.1, 0.9) at row 7
    rows[7] = [1.0, (9f64).ln() / 10.0, 1.0];
    let pool = Matrix::from_rows(&rows).unwrap();
    for m in [AcquisitionMethod::Kl, AcquisitionMethod::Beta { beta: 1.0 }, AcquisitionMethod::Gamma { gamma: 1.0 }] {
        let r = select_query(&c, &pool, &m).unwrap();
        assert_eq!(r.chosen_index, 7, "{m:?}");
        assert!((sig((9f64).ln()) - 0.9).abs() < 1e-12);
    }
    // duplicates of the maximum: lowest index wins
    rows[3] = rows[7];
    let pool = Matrix::from_rows(&rows).unwrap();
    assert_eq!(select_query(&c, &pool, &AcquisitionMethod::Kl).unwrap().chosen_index, 3);
    let single = Matrix::from_rows(&[[0.5, 0.5, 1.0]]).unwrap();
    assert_eq!(select_query(&c, &single, &AcquisitionMethod::Kl).unwrap().chosen_index, 0);
}

#[test]
fn consensus_density_of_identical_members() {
    let w = Weights::uniform(3).unwrap();
    let g = GlmFamily::gaussian(1.0).unwrap();
    let spec = SupportSpec::for_family(&g, &[1.2]);
    let m = gamma_mixture(&g, &[1.2; 3], &w, 2.0, &spec).unwrap();
    for y in [-1.0, 1.2, 3.0] {
        assert!((mixture_density(&m, &g, y).unwrap() - normal(y, 1.2, 1.0)).abs() < 1e-10);
    }
    let m = ConsensusModel::KlConsensus { xi_bar: 0.0 };
    assert_eq!(mixture_density(&m, &B, 1.0).unwrap(), 0.5);
}
