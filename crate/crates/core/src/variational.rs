//! Inner products, the bilinear form `(Lu, v)`, its adjoint and the
//! continuity and coercivity certificates.
//!
//! All `x`-integrals are plain grid sums times the cell volume over the whole
//! periodic box; `s`-integrals use the nodes of the measure.

use crate::coefficients::{
    cauchy_schwarz_constant, f_field, CauchySchwarzReport, CoefficientSet, Lattice, LATTICE_SEED,
};
use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::fractional::{frac_divergence, frac_gradient_from_spectrum, VectorField};
use crate::grid::{deterministic_sum, forward, GridFunction, PeriodicBox};
use crate::measure::MeasureSpec;
use rayon::prelude::*;
use serde::Serialize;

/// `D^s u` at one node of the measure.
#[derive(Debug, Clone)]
pub struct OrderGradient {
    pub s: f64,
    pub weight: f64,
    pub grad: VectorField,
}

/// A grid function together with its fractional gradients at every node of
/// `μ`, so that repeated form evaluations reuse the transforms.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub u: GridFunction,
    pub grads: Vec<OrderGradient>,
}

/// Measure, coefficients, domain and the derived weight `f` on one box.
#[derive(Debug, Clone)]
pub struct FormContext {
    mu: MeasureSpec,
    cs: CoefficientSet,
    omega: Domain,
    bx: PeriodicBox,
    f: GridFunction,
    mask: Vec<bool>,
    ka: CauchySchwarzReport,
}

/// Continuity check `|(Lu, v)| ≤ C ‖u‖ ‖v‖` in `H⁰(A, f, Ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ContinuityCertificate {
    pub value: f64,
    pub norm_u: f64,
    pub norm_v: f64,
    pub constant: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Coercivity check `(Lu, u) ≥ ½‖u‖²_{H⁰(A,Ω)} − σ₀ ∫ f u²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityCertificate {
    pub luu: f64,
    pub lower: f64,
    pub margin: f64,
    pub sigma0: f64,
    pub pass: bool,
}

impl FormContext {
    pub fn new(mu: MeasureSpec, cs: CoefficientSet, omega: Domain, bx: PeriodicBox) -> Result<Self> {
        omega.validate()?;
        omega.check_placement(&bx)?;
        if cs.dim() != bx.dim() {
            return Err(Error::Domain("coefficient and box dimensions differ".into()));
        }
        let mask = omega.mask(&bx);
        let f_full = f_field(&cs, &bx)?;
        let f = GridFunction::from_values(
            bx,
            f_full.values().iter().zip(&mask).map(|(v, m)| if *m { *v } else { 0.0 }).collect(),
        )?;
        let lattice = Lattice::new(&mu, &bx);
        let ka = cauchy_schwarz_constant(&lattice.matrices(&cs), LATTICE_SEED, 10_000)?;
        Ok(Self { mu, cs, omega, bx, f, mask, ka })
    }

    pub fn measure(&self) -> &MeasureSpec {
        &self.mu
    }

    pub fn coefficients(&self) -> &CoefficientSet {
        &self.cs
    }

    pub fn domain(&self) -> &Domain {
        &self.omega
    }

    pub fn grid(&self) -> &PeriodicBox {
        &self.bx
    }

    /// The weight `f`, zeroed outside `Ω`.
    pub fn f(&self) -> &GridFunction {
        &self.f
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn cauchy_schwarz(&self) -> &CauchySchwarzReport {
        &self.ka
    }

    pub fn k_a(&self) -> f64 {
        self.ka.bound
    }

    /// `σ₀ = 2 K_A μ((0,1]) + 1`.
    pub fn sigma0(&self) -> f64 {
        2.0 * self.ka.bound * self.mu.total_mass() + 1.0
    }

    /// `√K_A (1 + 2 max(1, √μ((0,1]))) + 1`, which is `3√K_A + 1` for
    /// measures of mass at most one.
    pub fn continuity_constant(&self) -> f64 {
        self.ka.bound.sqrt() * (1.0 + 2.0 * self.mu.total_mass().sqrt().max(1.0)) + 1.0
    }

    /// Same context with the density node count of `μ` replaced.
    pub fn with_density_nodes(&self, nodes: usize) -> Result<Self> {
        Ok(Self { mu: self.mu.with_density_nodes(nodes)?, ..self.clone() })
    }

    /// Errors unless `u` vanishes outside `Ω`.
    pub fn check_support(&self, u: &GridFunction) -> Result<()> {
        if *u.grid() != self.bx {
            return Err(Error::BoxMismatch);
        }
        if let Some(i) = u.values().iter().zip(&self.mask).position(|(v, m)| !*m && *v != 0.0) {
            let d = self.bx.dim();
            return Err(Error::Precondition(format!(
                "function is nonzero outside Ω at x = {:?}",
                &self.bx.point(i)[..d]
            )));
        }
        Ok(())
    }

    /// Fractional gradients of `u` at every node of `μ`.
    pub fn prepare(&self, u: &GridFunction) -> Result<Prepared> {
        self.check_support(u)?;
        let sp = forward(u);
        let grads = self
            .mu
            .nodes()
            .iter()
            .map(|&(s, weight)| Ok(OrderGradient { s, weight, grad: frac_gradient_from_spectrum(&sp, s)? }))
            .collect::<Result<Vec<_>>>()?;
        Ok(Prepared { u: u.clone(), grads })
    }

    fn integrate<F: Fn(usize, &[f64]) -> f64 + Sync>(&self, f: F) -> f64 {
        let d = self.bx.dim();
        let vals: Vec<f64> = (0..self.bx.len())
            .into_par_iter()
            .map(|i| {
                let p = self.bx.point(i);
                f(i, &p[..d])
            })
            .collect();
        deterministic_sum(&vals) * self.bx.cell_volume()
    }

    /// `∫∫ a^{ij}_S D^s_i u D^s_j v dμ dx`.
    pub fn seminorm_inner(&self, u: &Prepared, v: &Prepared) -> f64 {
        let base = self.cs.base();
        let n = self.bx.dim();
        let sym: Vec<f64> = (0..n * n).map(|k| 0.5 * (base[(k / n, k % n)] + base[(k % n, k / n)])).collect();
        u.grads
            .iter()
            .zip(&v.grads)
            .map(|(gu, gv)| {
                gu.weight
                    * self.integrate(|i, x| {
                        let rho = self.cs.profile(gu.s, x);
                        let mut acc = 0.0;
                        for a in 0..n {
                            for b in 0..n {
                                acc += sym[a * n + b]
                                    * gu.grad.component(a).values()[i]
                                    * gv.grad.component(b).values()[i];
                            }
                        }
                        rho * acc
                    })
            })
            .sum()
    }

    /// `⟨u, v⟩_{H⁰(A, g, Ω)}`.
    pub fn h0_inner_prepared(&self, u: &Prepared, v: &Prepared, g: Option<&GridFunction>) -> Result<f64> {
        let mut total = self.seminorm_inner(u, v);
        if let Some(g) = g {
            total += weighted_l2(&u.u, &v.u, g, &self.mask)?;
        }
        Ok(total)
    }

    /// `‖u‖²_{H⁰(A, f, Ω)}`.
    pub fn norm_sq_with_f(&self, u: &Prepared) -> Result<f64> {
        self.h0_inner_prepared(u, u, Some(&self.f))
    }

    fn form(&self, u: &Prepared, v: &Prepared, adjoint: bool) -> f64 {
        let base = self.cs.base();
        let n = self.bx.dim();
        let mut total = 0.0;
        for (gu, gv) in u.grads.iter().zip(&v.grads) {
            let s = gu.s;
            total += gu.weight
                * self.integrate(|i, x| {
                    let rho = self.cs.profile(s, x);
                    let du = |a: usize| gu.grad.component(a).values()[i];
                    let dv = |a: usize| gv.grad.component(a).values()[i];
                    let mut acc = 0.0;
                    for a in 0..n {
                        for b in 0..n {
                            let m = if adjoint { base[(b, a)] } else { base[(a, b)] };
                            acc += rho * m * dv(a) * du(b);
                        }
                    }
                    let (uu, vv) = (u.u.values()[i], v.u.values()[i]);
                    for a in 0..n {
                        let (first, second) = if adjoint {
                            (self.cs.b_vec(a, s, x), self.cs.a_vec(a, s, x))
                        } else {
                            (self.cs.a_vec(a, s, x), self.cs.b_vec(a, s, x))
                        };
                        acc += first * uu * dv(a) + second * vv * du(a);
                    }
                    acc
                });
        }
        total + self.integrate(|i, x| self.cs.a_scalar(x) * u.u.values()[i] * v.u.values()[i])
    }

    /// `(Lu, v)` from prepared gradients.
    pub fn bilinear_l_prepared(&self, u: &Prepared, v: &Prepared) -> f64 {
        self.form(u, v, false)
    }

    /// `(L*u, v)` from prepared gradients.
    pub fn bilinear_l_star_prepared(&self, u: &Prepared, v: &Prepared) -> f64 {
        self.form(u, v, true)
    }

    /// `Lu` (or `L*u`) as a grid function, built from spectral fractional
    /// divergences of the fluxes.
    pub fn strong_form(&self, u: &GridFunction, adjoint: bool) -> Result<GridFunction> {
        let pu = self.prepare(u)?;
        self.strong_form_prepared(&pu, adjoint)
    }

    pub fn strong_form_prepared(&self, pu: &Prepared, adjoint: bool) -> Result<GridFunction> {
        let n = self.bx.dim();
        let d = n;
        let base = self.cs.base();
        let mut out = self.bx_map(|i, x| self.cs.a_scalar(x) * pu.u.values()[i]);
        for g in &pu.grads {
            let s = g.s;
            let flux = (0..n)
                .map(|a| {
                    Ok(self.bx_map(|i, x| {
                        let rho = self.cs.profile(s, x);
                        let mut acc = 0.0;
                        for b in 0..n {
                            let m = if adjoint { base[(b, a)] } else { base[(a, b)] };
                            acc += rho * m * g.grad.component(b).values()[i];
                        }
                        let lower = if adjoint { self.cs.b_vec(a, s, x) } else { self.cs.a_vec(a, s, x) };
                        acc + lower * pu.u.values()[i]
                    }))
                })
                .collect::<Result<Vec<_>>>()?;
            let div = frac_divergence(&VectorField::new(flux)?, s)?;
            let transport = self.bx_map(|i, x| {
                (0..d)
                    .map(|a| {
                        let c = if adjoint { self.cs.a_vec(a, s, x) } else { self.cs.b_vec(a, s, x) };
                        c * g.grad.component(a).values()[i]
                    })
                    .sum::<f64>()
            });
            let w = g.weight;
            out = out.zip_with(&div, |o, dv| o - w * dv)?.zip_with(&transport, |o, t| o + w * t)?;
        }
        Ok(out)
    }

    fn bx_map<F: Fn(usize, &[f64]) -> f64 + Sync>(&self, f: F) -> GridFunction {
        let d = self.bx.dim();
        let vals: Vec<f64> = (0..self.bx.len())
            .into_par_iter()
            .map(|i| {
                let p = self.bx.point(i);
                f(i, &p[..d])
            })
            .collect();
        GridFunction::from_values(self.bx, vals).expect("finite coefficient products")
    }

    pub fn continuity_certificate(&self, u: &Prepared, v: &Prepared) -> Result<ContinuityCertificate> {
        let value = self.bilinear_l_prepared(u, v);
        let norm_u = self.norm_sq_with_f(u)?.sqrt();
        let norm_v = self.norm_sq_with_f(v)?.sqrt();
        let constant = self.continuity_constant();
        let bound = constant * norm_u * norm_v;
        Ok(ContinuityCertificate {
            value,
            norm_u,
            norm_v,
            constant,
            bound,
            pass: value.abs() <= bound * (1.0 + 1e-9) + 1e-300,
        })
    }

    pub fn coercivity_certificate(&self, u: &Prepared) -> Result<CoercivityCertificate> {
        let luu = self.bilinear_l_prepared(u, u);
        let semi = self.seminorm_inner(u, u);
        let fu = weighted_l2(&u.u, &u.u, &self.f, &self.mask)?;
        let sigma0 = self.sigma0();
        let lower = 0.5 * semi - sigma0 * fu;
        let margin = luu - lower;
        let scale = luu.abs() + semi + sigma0 * fu;
        Ok(CoercivityCertificate { luu, lower, margin, sigma0, pass: margin >= -1e-9 * scale })
    }
}

/// `∫_Ω h u v`.
pub fn weighted_l2(u: &GridFunction, v: &GridFunction, h: &GridFunction, mask: &[bool]) -> Result<f64> {
    if u.grid() != v.grid() || u.grid() != h.grid() {
        return Err(Error::BoxMismatch);
    }
    let vals: Vec<f64> = (0..u.grid().len())
        .map(|i| if mask[i] { h.values()[i] * u.values()[i] * v.values()[i] } else { 0.0 })
        .collect();
    Ok(deterministic_sum(&vals) * u.grid().cell_volume())
}

/// `⟨u, v⟩_{H⁰(A, g, Ω)}`.
pub fn h0_inner(u: &GridFunction, v: &GridFunction, ctx: &FormContext, g: Option<&GridFunction>) -> Result<f64> {
    ctx.h0_inner_prepared(&ctx.prepare(u)?, &ctx.prepare(v)?, g)
}

/// `(Lu, v)`.
pub fn bilinear_l(u: &GridFunction, v: &GridFunction, ctx: &FormContext) -> Result<f64> {
    Ok(ctx.bilinear_l_prepared(&ctx.prepare(u)?, &ctx.prepare(v)?))
}

/// `(L*u, v)`; equals `(Lv, u)`.
pub fn bilinear_l_star(u: &GridFunction, v: &GridFunction, ctx: &FormContext) -> Result<f64> {
    Ok(ctx.bilinear_l_star_prepared(&ctx.prepare(u)?, &ctx.prepare(v)?))
}

/// `|∫ (Lu) φ − (Lu, φ)|`, relative to `|(Lu, φ)|` when that is nonzero.
pub fn distributional_consistency(u: &GridFunction, phi: &GridFunction, ctx: &FormContext) -> Result<f64> {
    let pu = ctx.prepare(u)?;
    let pphi = ctx.prepare(phi)?;
    let strong = ctx.strong_form_prepared(&pu, false)?;
    let lhs = strong.dot(phi)?;
    let rhs = ctx.bilinear_l_prepared(&pu, &pphi);
    let defect = (lhs - rhs).abs();
    Ok(if rhs != 0.0 { defect / rhs.abs() } else { defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientConfig, MatrixPreset, ScalarField};
    use std::f64::consts::PI;

    fn ctx_1d(mu: MeasureSpec, cfg: CoefficientConfig) -> FormContext {
        let bx = PeriodicBox::new(1, 8.0, 256).unwrap();
        let cs = CoefficientSet::from_config(&cfg, 1).unwrap();
        FormContext::new(mu, cs, Domain::Interval { lo: -1.0, hi: 1.0 }, bx).unwrap()
    }

    fn plain() -> CoefficientConfig {
        CoefficientConfig {
            matrix: MatrixPreset::Identity,
            a_vector: vec![],
            b_vector: vec![],
            a_scalar: ScalarField::default(),
        }
    }

    fn bump(bx: &PeriodicBox) -> GridFunction {
        GridFunction::from_fn(*bx, |x| {
            let t = x[0] * x[0] / 0.81;
            if t < 1.0 {
                (1.0 - 1.0 / (1.0 - t)).exp() * (1.0 + 0.3 * x[0])
            } else {
                0.0
            }
        })
    }

    #[test]
    fn zero_function_has_zero_norm() {
        let ctx = ctx_1d(MeasureSpec::dirac(0.5, 1.0).unwrap(), plain());
        let z = GridFunction::zeros(*ctx.grid());
        assert_eq!(h0_inner(&z, &z, &ctx, None).unwrap(), 0.0);
    }

    #[test]
    fn dirichlet_integral_of_sine_power() {
        // u = sin⁸(πx) on (−1, 1) is C⁷ across ±1;
        // ∫ |u'|² = 128 π² (C(14,7)/2¹⁴ − C(16,8)/2¹⁶)
        let ctx = ctx_1d(MeasureSpec::dirac(1.0, 1.0).unwrap(), plain());
        let bx = *ctx.grid();
        let u = GridFunction::from_fn(bx, |x| if x[0].abs() < 1.0 { (PI * x[0]).sin().powi(8) } else { 0.0 });
        let v = h0_inner(&u, &u, &ctx, None).unwrap();
        let exact = 128.0 * PI * PI * (3432.0 / 16384.0 - 12870.0 / 65536.0);
        assert!((v - exact).abs() < 1e-8 * exact, "{v} vs {exact}");
    }

    #[test]
    fn support_violation_rejected() {
        let ctx = ctx_1d(MeasureSpec::dirac(0.5, 1.0).unwrap(), plain());
        let u = GridFunction::constant(*ctx.grid(), 1.0);
        assert!(matches!(ctx.prepare(&u), Err(Error::Precondition(_))));
    }

    #[test]
    fn forms_collapse_without_lower_order() {
        let ctx = ctx_1d(MeasureSpec::dirac(0.6, 1.0).unwrap(), plain());
        let u = bump(ctx.grid());
        let l = bilinear_l(&u, &u, &ctx).unwrap();
        let h = h0_inner(&u, &u, &ctx, None).unwrap();
        assert!((l - h).abs() <= 1e-12 * h);
        assert_eq!(ctx.sigma0(), 3.0);
    }

    #[test]
    fn strong_form_consistency_with_drift() {
        let mut cfg = plain();
        cfg.a_vector = vec![ScalarField { constant: 0.5, gradient: vec![1.0], s_slope: 0.0 }];
        cfg.b_vector = vec![ScalarField::constant(1.0)];
        cfg.a_scalar = ScalarField::constant(1.0);
        let ctx = ctx_1d(MeasureSpec::dirac(0.4, 1.0).unwrap(), cfg);
        let u = bump(ctx.grid());
        let phi = u.map(|v| v * v);
        assert!(distributional_consistency(&u, &phi, &ctx).unwrap() < 1e-10);
        let lstar = bilinear_l_star(&u, &phi, &ctx).unwrap();
        let l = bilinear_l(&phi, &u, &ctx).unwrap();
        assert!((lstar - l).abs() < 1e-10 * l.abs());
    }
}
