//! Property tests for the structural invariants of each layer.

use nalgebra::DMatrix;
use nonlocal_fredholm::coefficients::{
    cauchy_schwarz_constant, f_from_dominators, p_of_delta, CoefficientConfig, CoefficientSet, MatrixPreset,
    ScalarField,
};
use nonlocal_fredholm::domain::Domain;
use nonlocal_fredholm::fractional::{frac_gradient_spectral, ftc_reconstruct};
use nonlocal_fredholm::fredholm::{assemble, solve, spectrum, AssembledSystem, SolveStatus};
use nonlocal_fredholm::grid::{forward, GridFunction, PeriodicBox};
use nonlocal_fredholm::measure::{Density, MeasureSpec};
use nonlocal_fredholm::probes::{poincare_probe, Bump};
use nonlocal_fredholm::special::{fourier_symbol_integral, gamma, grad_constant, riesz_constant};
use nonlocal_fredholm::variational::{h0_inner, FormContext};
use proptest::prelude::*;
use rustfft::num_complex::Complex64;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

fn interval() -> Domain {
    Domain::Interval { lo: -1.0, hi: 1.0 }
}

fn drift_context(a1: f64, slope: f64, b1: f64, a0: f64, points: usize) -> FormContext {
    let cfg = CoefficientConfig {
        matrix: MatrixPreset::Identity,
        a_vector: vec![ScalarField { constant: a1, gradient: vec![slope], s_slope: 0.0 }],
        b_vector: vec![ScalarField::constant(b1)],
        a_scalar: ScalarField::constant(a0),
    };
    let cs = CoefficientSet::from_config(&cfg, 1).unwrap();
    let mu = MeasureSpec::new(vec![(0.4, 0.5), (0.8, 0.5)], None).unwrap();
    FormContext::new(mu, cs, interval(), PeriodicBox::new(1, 8.0, points).unwrap()).unwrap()
}

fn drift_system(a1: f64, slope: f64, b1: f64, a0: f64) -> AssembledSystem {
    assemble(&drift_context(a1, slope, b1, a0, 256), 0.0).unwrap()
}

proptest! {
    #[test]
    fn gamma_recurrence(x in 0.05f64..30.0) {
        let lhs = gamma(x + 1.0).unwrap();
        prop_assert!(rel(lhs, x * gamma(x).unwrap()) < 1e-12);
    }

    #[test]
    fn constant_cross_relation(s in 0.01f64..0.99, n in 1usize..=3) {
        let v = grad_constant(s, n).unwrap() * riesz_constant(1.0 - s, n).unwrap();
        prop_assert!((v - (n as f64 + s - 1.0)).abs() < 1e-10);
    }

    #[test]
    fn symbol_integral_is_odd_and_homogeneous(
        s in 0.05f64..0.95,
        x in -3.0f64..3.0,
        y in 0.1f64..3.0,
        lambda in 0.2f64..5.0,
    ) {
        let xi = [x, y];
        let v = fourier_symbol_integral(&xi, s, 1).unwrap();
        let scaled = fourier_symbol_integral(&[lambda * x, lambda * y], s, 1).unwrap();
        prop_assert!(rel(scaled, lambda.powf(s) * v) < 1e-12);
        let flipped = fourier_symbol_integral(&[x, -y], s, 1).unwrap();
        prop_assert!((flipped + v).abs() <= 1e-14 * v.abs());
    }

    #[test]
    fn measure_integration_is_linear(
        atoms in prop::collection::vec((0.05f64..=1.0, 0.01f64..2.0), 1..5),
        lo in 0.1f64..0.5,
        width in 0.05f64..0.5,
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let density = Density::Constant { value: 0.7, support: [lo, lo + width], nodes: 16 };
        let mu = MeasureSpec::new(atoms, Some(density)).unwrap();
        let f = |s: f64| (3.0 * s).sin();
        let g = |s: f64| s * s - 0.2;
        let combined = mu.integrate(|s| a * f(s) + b * g(s));
        let split = a * mu.integrate(f) + b * mu.integrate(g);
        prop_assert!((combined - split).abs() < 1e-12 * (1.0 + combined.abs()));
    }

    #[test]
    fn density_quadrature_exact_for_polynomials(
        lo in 0.05f64..0.5,
        width in 0.05f64..0.5,
        degree in 0i32..32,
    ) {
        let hi = lo + width;
        let density = Density::Constant { value: 1.0, support: [lo, hi], nodes: 16 };
        let mu = MeasureSpec::new(vec![], Some(density)).unwrap();
        let got = mu.integrate(|s| s.powi(degree));
        let exact = (hi.powi(degree + 1) - lo.powi(degree + 1)) / (degree + 1) as f64;
        prop_assert!(rel(got, exact) < 1e-12);
    }

    #[test]
    fn parseval_and_multiplier_composition(values in prop::collection::vec(-1.0f64..1.0, 64)) {
        let bx = PeriodicBox::new(1, 4.0, 64).unwrap();
        let u = GridFunction::from_values(bx, values).unwrap();
        let sp = forward(&u);
        let spectral: f64 = sp.coefficients().iter().map(|c| c.norm_sqr()).sum();
        let grid: f64 = u.values().iter().map(|v| v * v).sum();
        prop_assert!(rel(spectral, 64.0 * grid) < 1e-10);

        let m1 = |xi: &[f64]| Complex64::new((-xi[0] * xi[0]).exp(), 0.0);
        let m2 = |xi: &[f64]| Complex64::new(1.0 + xi[0] * xi[0], 0.0);
        let twice = sp.apply_symbol(m1).apply_symbol(m2).inverse_real().unwrap();
        let once = sp.apply_symbol(move |xi: &[f64]| m1(xi) * m2(xi)).inverse_real().unwrap();
        let diff = twice.sub(&once).unwrap().max_abs();
        prop_assert!(diff < 1e-10 * (1.0 + once.max_abs()));
    }

    #[test]
    fn ftc_roundtrip_any_order(s in 0.1f64..0.9, c in -0.3f64..0.3, r in 0.4f64..0.7) {
        let bx = PeriodicBox::new(1, 8.0, 1024).unwrap();
        let u = Bump::new(vec![c], r).sample(&bx);
        let back = ftc_reconstruct(&frac_gradient_spectral(&u, s).unwrap(), s).unwrap();
        prop_assert!(back.sub(&u).unwrap().max_abs() < 1e-5);
    }

    #[test]
    fn probe_ratio_is_scale_invariant(lambda in 0.01f64..100.0, s in 0.2f64..0.9, p in 1.0f64..4.0) {
        let bx = PeriodicBox::new(1, 8.0, 256).unwrap();
        let mask = interval().mask(&bx);
        let u = Bump::new(vec![0.1], 0.6).sample(&bx);
        let base = poincare_probe(&u, &mask, s, p).unwrap();
        let scaled = poincare_probe(&u.scaled(lambda), &mask, s, p).unwrap();
        prop_assert!(rel(scaled.ratio, base.ratio) < 1e-12);
    }

    #[test]
    fn critical_exponent_in_open_interval(delta in 1e-6f64..1e6) {
        let p = p_of_delta(delta);
        prop_assert!(p > 1.0 && p < 2.0);
    }

    #[test]
    fn weight_symmetric_in_drift_dominators(
        diag in (0.1f64..3.0, 0.1f64..3.0),
        off in -0.5f64..0.5,
        abar in (0.0f64..2.0, 0.0f64..2.0),
        bbar in (0.0f64..2.0, 0.0f64..2.0),
        a in -2.0f64..2.0,
    ) {
        let m = DMatrix::from_row_slice(2, 2, &[diag.0, off, off, diag.1]);
        let x = [abar.0, abar.1];
        let y = [bbar.0, bbar.1];
        prop_assert_eq!(f_from_dominators(&m, &x, &y, a), f_from_dominators(&m, &y, &x, a));
    }

    #[test]
    fn cauchy_schwarz_bound_dominates_samples(
        d1 in 0.2f64..3.0,
        d2 in 0.2f64..3.0,
        skew in -2.0f64..2.0,
        seed in any::<u64>(),
    ) {
        let a = DMatrix::from_row_slice(2, 2, &[d1, skew, -skew, d2]);
        let r = cauchy_schwarz_constant(&[a], seed, 10_000).unwrap();
        prop_assert!(r.bound >= 1.0);
        prop_assert!(r.optimal <= r.bound * (1.0 + 1e-12));
        prop_assert!(r.empirical <= r.optimal * (1.0 + 1e-9));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn h0_inner_is_symmetric_and_positive(c1 in -0.3f64..0.3, c2 in -0.3f64..0.3, r in 0.3f64..0.6) {
        let ctx = drift_context(0.3, 0.5, -0.3, 1.0, 256);
        let bx = *ctx.grid();
        let u = Bump::new(vec![c1], r).sample(&bx);
        let v = Bump::new(vec![c2], r).sample(&bx).scaled(-0.7);
        let uv = h0_inner(&u, &v, &ctx, None).unwrap();
        let vu = h0_inner(&v, &u, &ctx, None).unwrap();
        prop_assert!((uv - vu).abs() <= 1e-12 * uv.abs().max(1e-300));
        prop_assert!(h0_inner(&u, &u, &ctx, None).unwrap() > 0.0);
    }

    #[test]
    fn fredholm_invariants_on_seeded_drift(
        a1 in 0.2f64..0.5,
        slope in 0.3f64..0.7,
        b1 in -0.5f64..-0.2,
        a0 in 0.5f64..1.5,
        shift in -10.0f64..2.0,
    ) {
        let sys = drift_system(a1, slope, b1, a0);
        prop_assert!((&sys.k_star - sys.k.transpose()).amax() <= 1e-10 * sys.k.amax());
        prop_assert!((&sys.m_f - sys.m_f.transpose()).amax() == 0.0);
        prop_assert!(sys.m_f.diagonal().iter().all(|v| *v >= 0.0));

        let sp = spectrum(&sys, None).unwrap();
        for &(sigma, mult) in &sp.sigmas {
            prop_assert!(sigma < sp.sigma0);
            let n = sys.nullity(sigma);
            let nt = {
                let a = sys.operator(sigma).transpose();
                let sv = a.singular_values();
                sv.iter().filter(|v| **v <= sys.rank_tol * sys.k_norm()).count()
            };
            prop_assert_eq!(n, nt);
            prop_assert_eq!(n, mult);
        }

        let sigma = sp.sigma0 + shift;
        let t: Vec<f64> = (0..sys.len()).map(|l| ((l * 7 + 3) as f64).sin()).collect();
        let report = solve(&sys, sigma, &t).unwrap();
        let resonant = sys.nullity(sigma) > 0;
        let tol = sys.compatibility_tol * t.iter().map(|v| v * v).sum::<f64>().sqrt();
        prop_assert_eq!(report.status == SolveStatus::Unique, !resonant);
        match report.status {
            SolveStatus::Unique => prop_assert!(report.kernel_basis.is_empty()),
            SolveStatus::InfiniteCompatible => prop_assert!(report.compatibility_defects.iter().all(|d| d.abs() <= tol)),
            SolveStatus::Incompatible => prop_assert!(report.compatibility_defects.iter().any(|d| d.abs() > tol)),
        }
    }
}
