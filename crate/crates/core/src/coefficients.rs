//! Coefficient fields of the operator, the weight `f` and structural checks.
//!
//! The matrix field is `A(s, x) = ρ(s, x)·M₀` with a scalar profile
//! `ρ(s, x) = (offset + amplitude·|x|^exponent)(1 + s_slope·s)`. Lower-order
//! fields are affine in `x` with the same kind of linear `s`-modulation.

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::grid::{GridFunction, PeriodicBox};
use crate::measure::MeasureSpec;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub type Matrix = DMatrix<f64>;

/// Seed of the published structural-check lattice.
pub const LATTICE_SEED: u64 = 0x5eed_a11c;
/// Random directions per lattice point.
pub const LATTICE_DIRECTIONS: usize = 32;
/// Number of `s` samples in the lattice.
pub const LATTICE_ORDERS: usize = 8;
/// Cap on lattice `x` points.
pub const LATTICE_POINTS: usize = 4096;

/// Matrix field presets accepted in configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum MatrixPreset {
    Identity,
    /// A fixed (possibly nonsymmetric) matrix.
    Constant {
        matrix: Vec<Vec<f64>>,
    },
    /// `(offset + amplitude·|x|^exponent)(1 + s_slope·s)·I`.
    DiagonalPowerLaw {
        offset: f64,
        amplitude: f64,
        exponent: f64,
        #[serde(default)]
        s_slope: f64,
    },
    /// `I + ε·J` with `J` the rotation generator in the first two axes.
    RotationPerturbed {
        epsilon: f64,
    },
}

/// Affine scalar field `(constant + gradient·x)(1 + s_slope·s)`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScalarField {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub gradient: Vec<f64>,
    #[serde(default)]
    pub s_slope: f64,
}

impl ScalarField {
    pub fn constant(c: f64) -> Self {
        Self { constant: c, ..Default::default() }
    }

    fn spatial(&self, x: &[f64]) -> f64 {
        self.constant + self.gradient.iter().zip(x).map(|(g, y)| g * y).sum::<f64>()
    }

    pub fn value(&self, s: f64, x: &[f64]) -> f64 {
        self.spatial(x) * (1.0 + self.s_slope * s)
    }

    /// `sup_{s ∈ (0,1]} |value(s, x)|`.
    pub fn dominator(&self, x: &[f64]) -> f64 {
        self.spatial(x).abs() * 1f64.max((1.0 + self.s_slope).abs())
    }

    pub fn is_zero(&self) -> bool {
        self.constant == 0.0 && self.gradient.iter().all(|g| *g == 0.0)
    }
}

/// Coefficient block of a problem config.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub matrix: MatrixPreset,
    /// `a^i(s, x)`; empty means zero.
    #[serde(default)]
    pub a_vector: Vec<ScalarField>,
    /// `b^i(s, x)`; empty means zero.
    #[serde(default)]
    pub b_vector: Vec<ScalarField>,
    /// `a(x)`; its `s_slope` must be zero.
    #[serde(default)]
    pub a_scalar: ScalarField,
}

/// Evaluable coefficient data in dimension `n`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientSet {
    n: usize,
    base: Matrix,
    offset: f64,
    amplitude: f64,
    exponent: f64,
    s_slope: f64,
    a_vector: Vec<ScalarField>,
    b_vector: Vec<ScalarField>,
    a_scalar: ScalarField,
    base_inverse_abs: Matrix,
    base_sym_min: f64,
    base_sym_max: f64,
}

fn symmetric_part(a: &Matrix) -> Matrix {
    (a + a.transpose()) * 0.5
}

fn sym_eigen_range(a: &Matrix) -> (f64, f64, DVector<f64>) {
    let eig = SymmetricEigen::new(symmetric_part(a));
    let (mut imin, mut imax) = (0, 0);
    for i in 0..eig.eigenvalues.len() {
        if eig.eigenvalues[i] < eig.eigenvalues[imin] {
            imin = i;
        }
        if eig.eigenvalues[i] > eig.eigenvalues[imax] {
            imax = i;
        }
    }
    (eig.eigenvalues[imin], eig.eigenvalues[imax], eig.eigenvectors.column(imin).into_owned())
}

impl CoefficientSet {
    pub fn from_config(cfg: &CoefficientConfig, n: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(Error::Domain(format!("dimension {n} outside 1..=3")));
        }
        let (base, offset, amplitude, exponent, s_slope) = match &cfg.matrix {
            MatrixPreset::Identity => (Matrix::identity(n, n), 1.0, 0.0, 0.0, 0.0),
            MatrixPreset::Constant { matrix } => {
                if matrix.len() != n || matrix.iter().any(|r| r.len() != n) {
                    return Err(Error::Domain(format!("constant matrix must be {n}×{n}")));
                }
                (Matrix::from_fn(n, n, |i, j| matrix[i][j]), 1.0, 0.0, 0.0, 0.0)
            }
            MatrixPreset::DiagonalPowerLaw { offset, amplitude, exponent, s_slope } => {
                (Matrix::identity(n, n), *offset, *amplitude, *exponent, *s_slope)
            }
            MatrixPreset::RotationPerturbed { epsilon } => {
                if n < 2 {
                    return Err(Error::Domain("rotation perturbation needs n ≥ 2".into()));
                }
                let mut m = Matrix::identity(n, n);
                m[(0, 1)] = *epsilon;
                m[(1, 0)] = -*epsilon;
                (m, 1.0, 0.0, 0.0, 0.0)
            }
        };
        if !(offset >= 0.0 && amplitude >= 0.0 && offset + amplitude > 0.0 && exponent >= 0.0) {
            return Err(Error::Domain("matrix profile needs offset, amplitude, exponent ≥ 0, not both zero".into()));
        }
        if !(s_slope > -1.0) {
            return Err(Error::Domain(format!("s_slope {s_slope} must exceed -1")));
        }
        let pad = |v: &Vec<ScalarField>, name: &str| -> Result<Vec<ScalarField>> {
            match v.len() {
                0 => Ok(vec![ScalarField::default(); n]),
                m if m == n => Ok(v.clone()),
                m => Err(Error::Domain(format!("{name} has {m} components, expected {n}"))),
            }
        };
        let a_vector = pad(&cfg.a_vector, "a_vector")?;
        let b_vector = pad(&cfg.b_vector, "b_vector")?;
        for f in a_vector.iter().chain(&b_vector).chain(std::iter::once(&cfg.a_scalar)) {
            if f.gradient.len() > n {
                return Err(Error::Domain(format!("field gradient longer than n = {n}")));
            }
        }
        if cfg.a_scalar.s_slope != 0.0 {
            return Err(Error::Domain("a_scalar does not depend on s".into()));
        }
        let (lo, hi, witness) = sym_eigen_range(&base);
        if lo <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!("base matrix, direction {:?}", witness.as_slice())));
        }
        let inv =
            base.clone().try_inverse().ok_or_else(|| Error::NotPositiveDefinite("base matrix is singular".into()))?;
        Ok(Self {
            n,
            base_inverse_abs: inv.abs(),
            base,
            offset,
            amplitude,
            exponent,
            s_slope,
            a_vector,
            b_vector,
            a_scalar: cfg.a_scalar.clone(),
            base_sym_min: lo,
            base_sym_max: hi,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// `M₀`.
    pub fn base(&self) -> &Matrix {
        &self.base
    }

    fn spatial_profile(&self, x: &[f64]) -> f64 {
        if self.amplitude == 0.0 {
            return self.offset;
        }
        let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        self.offset + self.amplitude * r.powf(self.exponent)
    }

    /// `ρ(s, x)`.
    pub fn profile(&self, s: f64, x: &[f64]) -> f64 {
        self.spatial_profile(x) * (1.0 + self.s_slope * s)
    }

    /// `A(s, x)`.
    pub fn matrix(&self, s: f64, x: &[f64]) -> Matrix {
        &self.base * self.profile(s, x)
    }

    /// Whether `A(s, x)` is symmetric for all `(s, x)`.
    pub fn is_symmetric(&self) -> bool {
        self.base == self.base.transpose()
    }

    fn s_factor_min(&self) -> f64 {
        1f64.min(1.0 + self.s_slope)
    }

    fn s_factor_max(&self) -> f64 {
        1f64.max(1.0 + self.s_slope)
    }

    /// Lower ellipticity envelope `λ(x)`.
    pub fn lambda(&self, x: &[f64]) -> f64 {
        self.spatial_profile(x) * self.s_factor_min() * self.base_sym_min
    }

    /// Upper ellipticity envelope `Λ(x)`.
    pub fn big_lambda(&self, x: &[f64]) -> f64 {
        self.spatial_profile(x) * self.s_factor_max() * self.base_sym_max
    }

    pub fn a_vec(&self, i: usize, s: f64, x: &[f64]) -> f64 {
        self.a_vector[i].value(s, x)
    }

    pub fn b_vec(&self, i: usize, s: f64, x: &[f64]) -> f64 {
        self.b_vector[i].value(s, x)
    }

    pub fn a_scalar(&self, x: &[f64]) -> f64 {
        self.a_scalar.value(0.0, x)
    }

    pub fn has_lower_order(&self) -> bool {
        self.a_vector.iter().chain(&self.b_vector).any(|f| !f.is_zero()) || !self.a_scalar.is_zero()
    }

    /// Whether `a^i ≡ b^i` for every `i`.
    pub fn drift_symmetric(&self) -> bool {
        self.a_vector == self.b_vector
    }

    /// `ā^i(x)`.
    pub fn a_dominator(&self, x: &[f64]) -> Vec<f64> {
        self.a_vector.iter().map(|f| f.dominator(x)).collect()
    }

    /// `b̄^i(x)`.
    pub fn b_dominator(&self, x: &[f64]) -> Vec<f64> {
        self.b_vector.iter().map(|f| f.dominator(x)).collect()
    }

    /// Entrywise dominator `B̄(x)` of `A(s, x)^{-1}` over `s ∈ (0, 1]`.
    pub fn inverse_dominator(&self, x: &[f64]) -> Matrix {
        &self.base_inverse_abs / (self.spatial_profile(x) * self.s_factor_min())
    }

    /// `f(x) = b̄^{ij}(ā^i ā^j + b̄^i b̄^j) + |a(x)|`.
    pub fn f_value(&self, x: &[f64]) -> f64 {
        let abar = self.a_dominator(x);
        let bbar = self.b_dominator(x);
        let a = self.a_scalar(x);
        if abar.iter().chain(&bbar).all(|v| *v == 0.0) {
            return a.abs();
        }
        f_from_dominators(&self.inverse_dominator(x), &abar, &bbar, a)
    }
}

/// `B̄^{ij}(ā^i ā^j + b̄^i b̄^j) + |a|`.
pub fn f_from_dominators(bbar: &Matrix, abar: &[f64], bvec: &[f64], a: f64) -> f64 {
    let n = abar.len();
    let mut q = 0.0;
    for i in 0..n {
        for j in 0..n {
            q += bbar[(i, j)] * (abar[i] * abar[j] + bvec[i] * bvec[j]);
        }
    }
    q + a.abs()
}

/// The weight `f` on the grid.
pub fn f_field(cs: &CoefficientSet, bx: &PeriodicBox) -> Result<GridFunction> {
    if cs.dim() != bx.dim() {
        return Err(Error::Domain("coefficient and box dimensions differ".into()));
    }
    let d = bx.dim();
    let vals: Vec<f64> = (0..bx.len()).map(|i| cs.f_value(&bx.point(i)[..d])).collect();
    if let Some(i) = vals.iter().position(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::Hypothesis(format!("weight f is {} at x = {:?}", vals[i], &bx.point(i)[..d])));
    }
    GridFunction::from_values(*bx, vals)
}

/// `K_A` bound together with the optimal value and a random-sample lower
/// estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CauchySchwarzReport {
    /// Returned constant: 1 when every sample is symmetric, else
    /// `max (‖A‖₂ / λ_min(A_S))²`.
    pub bound: f64,
    /// `max ‖A_S^{-1/2} A A_S^{-1/2}‖₂²`, the smallest admissible constant.
    pub optimal: f64,
    /// `max |ξᵀAψ|² / ((ξᵀAξ)(ψᵀAψ))` over random pairs.
    pub empirical: f64,
    pub symmetric: bool,
}

/// Cauchy–Schwarz constant of a family of positive definite matrices.
pub fn cauchy_schwarz_constant(matrices: &[Matrix], seed: u64, pairs: usize) -> Result<CauchySchwarzReport> {
    if matrices.is_empty() {
        return Err(Error::Domain("no matrices to sample".into()));
    }
    let symmetric = matrices.iter().all(|a| *a == a.transpose());
    let mut bound = 1.0f64;
    let mut optimal = 1.0f64;
    for (k, a) in matrices.iter().enumerate() {
        let (lo, _, witness) = sym_eigen_range(a);
        if lo <= 0.0 {
            return Err(Error::NotPositiveDefinite(format!("sample {k}, direction {:?}", witness.as_slice())));
        }
        if symmetric {
            continue;
        }
        let norm = a.clone().svd(false, false).singular_values.max();
        bound = bound.max((norm / lo).powi(2));
        let eig = SymmetricEigen::new(symmetric_part(a));
        let half_inv = &eig.eigenvectors
            * Matrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l.sqrt()))
            * eig.eigenvectors.transpose();
        let c = &half_inv * a * &half_inv;
        optimal = optimal.max(c.svd(false, false).singular_values.max().powi(2));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut empirical = 0.0f64;
    for p in 0..pairs {
        let a = &matrices[p % matrices.len()];
        let n = a.nrows();
        let xi = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let psi = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let cross = xi.dot(&(a * &psi));
        let den = xi.dot(&(a * &xi)) * psi.dot(&(a * &psi));
        if den > 0.0 {
            empirical = empirical.max(cross * cross / den);
        }
    }
    Ok(CauchySchwarzReport { bound: if symmetric { 1.0 } else { bound }, optimal, empirical, symmetric })
}

/// Checks `|ξ·ψ|² ≤ K_A (ξᵀA_Sξ)(ψᵀBψ)` for `B = A^{-1}`.
pub fn dual_pairing_check(a: &Matrix, b: &Matrix, k_a: f64, xi: &[f64], psi: &[f64]) -> Result<bool> {
    let n = a.nrows();
    let residual = (a * b - Matrix::identity(n, n)).norm();
    if residual > 1e-10 {
        return Err(Error::Precondition(format!("‖AB − I‖ = {residual:.3e} exceeds 1e-10")));
    }
    let xi = DVector::from_column_slice(xi);
    let psi = DVector::from_column_slice(psi);
    let lhs = xi.dot(&psi).powi(2);
    let rhs = k_a * xi.dot(&(symmetric_part(a) * &xi)) * psi.dot(&(b * &psi));
    Ok(lhs <= rhs * (1.0 + 1e-12) + 1e-300)
}

/// `(s, x)` sample points of the structural checks.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice {
    pub orders: Vec<f64>,
    pub points: Vec<Vec<f64>>,
}

impl Lattice {
    /// Eight orders spread over the support of `μ` and grid points at a
    /// stride keeping at most [`LATTICE_POINTS`] of them.
    pub fn new(mu: &MeasureSpec, bx: &PeriodicBox) -> Self {
        let (lo, hi) = (mu.support_min(), mu.support_max());
        let mut orders: Vec<f64> =
            (0..LATTICE_ORDERS).map(|k| lo + (hi - lo) * k as f64 / (LATTICE_ORDERS - 1) as f64).collect();
        orders.dedup();
        let stride = bx.len().div_ceil(LATTICE_POINTS).max(1);
        let d = bx.dim();
        let points = (0..bx.len()).step_by(stride).map(|i| bx.point(i)[..d].to_vec()).collect();
        Self { orders, points }
    }

    pub fn matrices(&self, cs: &CoefficientSet) -> Vec<Matrix> {
        let mut out = Vec::with_capacity(self.orders.len() * self.points.len());
        for &s in &self.orders {
            for x in &self.points {
                out.push(cs.matrix(s, x));
            }
        }
        out
    }
}

/// Verifies ellipticity envelopes and coefficient dominators on the lattice
/// with [`LATTICE_DIRECTIONS`] seeded directions per point.
pub fn check_structure(cs: &CoefficientSet, lattice: &Lattice, seed: u64) -> Result<()> {
    let n = cs.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dirs: Vec<DVector<f64>> =
        (0..LATTICE_DIRECTIONS).map(|_| DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))).collect();
    let tol = 1e-12;
    for &s in &lattice.orders {
        for x in &lattice.points {
            let a = cs.matrix(s, x);
            let (lo, _, w) = sym_eigen_range(&a);
            if lo <= 0.0 {
                return Err(Error::NotPositiveDefinite(format!("s = {s}, x = {x:?}, ξ = {:?}", w.as_slice())));
            }
            let (l, big) = (cs.lambda(x), cs.big_lambda(x));
            for xi in &dirs {
                let q = xi.dot(&(&a * xi));
                let r2 = xi.norm_squared();
                if q < l * r2 * (1.0 - tol) || q > big * r2 * (1.0 + tol) {
                    return Err(Error::Hypothesis(format!(
                        "ellipticity envelope fails at s = {s}, x = {x:?}, ξ = {:?}",
                        xi.as_slice()
                    )));
                }
            }
            let abar = cs.a_dominator(x);
            let bbar = cs.b_dominator(x);
            for i in 0..n {
                if cs.a_vec(i, s, x).abs() > abar[i] * (1.0 + tol) || cs.b_vec(i, s, x).abs() > bbar[i] * (1.0 + tol) {
                    return Err(Error::Hypothesis(format!(
                        "lower-order dominator fails at s = {s}, x = {x:?}, i = {i}"
                    )));
                }
            }
            let inv = a.try_inverse().ok_or_else(|| Error::NotPositiveDefinite(format!("singular at x = {x:?}")))?;
            let dom = cs.inverse_dominator(x);
            for (v, d) in inv.iter().zip(dom.iter()) {
                if v.abs() > d * (1.0 + 1e-10) {
                    return Err(Error::Hypothesis(format!("inverse dominator fails at s = {s}, x = {x:?}")));
                }
            }
        }
    }
    Ok(())
}

/// `p(δ) = (1+δ)/(1+δ/2)`.
pub fn p_of_delta(delta: f64) -> f64 {
    (1.0 + delta) / (1.0 + delta / 2.0)
}

/// Integrability verdict from midpoint refinement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegrabilityReport {
    pub value: f64,
    pub finite: bool,
}

/// `∫_{B_R} g` in polar coordinates about the origin on midpoint radial
/// lattices of 64, 128, 256 and 512 cells. The integral is declared finite
/// when the successive refinements contract (ratio ≤ 0.9) or have already
/// converged to 1e-9 relative; a non-integrable point singularity at the
/// origin makes the increments stall or grow.
pub fn integrable_on_ball<G: Fn(&[f64]) -> f64>(g: G, n: usize, radius: f64) -> IntegrabilityReport {
    use crate::quadrature::GaussLegendre;
    use std::f64::consts::PI;
    let dirs: Vec<(Vec<f64>, f64)> = match n {
        1 => vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)],
        2 => GaussLegendre::new(64).mapped(0.0, 2.0 * PI).map(|(t, w)| (vec![t.cos(), t.sin()], w)).collect(),
        _ => {
            let th = GaussLegendre::new(64);
            let ph = GaussLegendre::new(32);
            let mut v = Vec::new();
            for (p, wp) in ph.mapped(0.0, PI) {
                for (t, wt) in th.mapped(0.0, 2.0 * PI) {
                    v.push((vec![p.sin() * t.cos(), p.sin() * t.sin(), p.cos()], wp * wt * p.sin()));
                }
            }
            v
        }
    };
    let mut values = Vec::new();
    for level in 0..4 {
        let m = 64usize << level;
        let h = radius / m as f64;
        let mut total = 0.0;
        for k in 0..m {
            let r = (k as f64 + 0.5) * h;
            let mut ang = 0.0;
            for (w_dir, w) in &dirs {
                let x: Vec<f64> = w_dir.iter().map(|c| c * r).collect();
                ang += w * g(&x);
            }
            total += h * r.powi(n as i32 - 1) * ang;
        }
        values.push(total);
    }
    let last = values[3];
    if !values.iter().all(|v| v.is_finite()) {
        return IntegrabilityReport { value: last, finite: false };
    }
    let d: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    let converged = d[2] <= 1e-9 * last.abs().max(1e-300);
    let contracting = d[1] <= 0.9 * d[0] && d[2] <= 0.9 * d[1];
    IntegrabilityReport { value: last, finite: converged || contracting }
}

/// User-supplied structural parameters `δ, R, C, p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisParams {
    pub delta: f64,
    pub radius: f64,
    pub growth_constant: f64,
    pub growth_exponent: f64,
    /// Skip the `λ^{-1} ∈ L^{1+δ}` check when `μ({1}) > 0`.
    #[serde(default)]
    pub relax_delta_at_one: bool,
}

impl Default for HypothesisParams {
    fn default() -> Self {
        Self { delta: 1.0, radius: 1.0, growth_constant: 1.0, growth_exponent: 0.0, relax_delta_at_one: false }
    }
}

/// Outcome of the structural hypothesis checks.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EllipticityReport {
    pub k_a: f64,
    pub k_a_optimal: f64,
    pub k_a_empirical: f64,
    pub delta: f64,
    pub p_delta: f64,
    pub growth_ok: bool,
    pub local_integrability_ok: bool,
    pub big_lambda_l1: f64,
    pub lambda_inverse_norm: f64,
    pub failures: Vec<String>,
}

impl EllipticityReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }
}

/// Evaluates every structural hypothesis and records failures without
/// erroring; see [`hypothesis_check`] for the strict form.
pub fn hypothesis_report(
    cs: &CoefficientSet,
    mu: &MeasureSpec,
    omega: &Domain,
    bx: &PeriodicBox,
    params: &HypothesisParams,
) -> Result<EllipticityReport> {
    let n = cs.dim();
    if !(params.delta > 0.0 && params.radius > 0.0 && params.growth_constant > 0.0) {
        return Err(Error::Domain("δ, R and C must be positive".into()));
    }
    let lattice = Lattice::new(mu, bx);
    check_structure(cs, &lattice, LATTICE_SEED)?;
    let ka = cauchy_schwarz_constant(&lattice.matrices(cs), LATTICE_SEED, 10_000)?;
    let mut failures = Vec::new();

    if params.growth_exponent >= n as f64 {
        failures.push(format!("growth exponent p = {} must be below n = {n}", params.growth_exponent));
    }
    let l1 = integrable_on_ball(|x| cs.big_lambda(x), n, params.radius);
    if !l1.finite {
        failures.push(format!("Λ is not integrable on B_{}", params.radius));
    }
    let mut growth_ok = true;
    for k in 0..=12 {
        let r = params.radius * 2f64.powf(k as f64 * 0.5);
        for d in 0..16 {
            let t = 2.0 * std::f64::consts::PI * d as f64 / 16.0;
            let mut x = vec![0.0; n];
            x[0] = r * t.cos();
            if n > 1 {
                x[1] = r * t.sin();
            } else if d % 2 == 1 {
                x[0] = -r;
            }
            if cs.big_lambda(&x) > params.growth_constant * r.powf(params.growth_exponent) * (1.0 + 1e-12) {
                growth_ok = false;
            }
        }
    }
    if !growth_ok {
        failures.push(format!(
            "Λ(x) ≤ {}·|x|^{} fails outside B_{}",
            params.growth_constant, params.growth_exponent, params.radius
        ));
    }
    let skip = params.relax_delta_at_one && mu.mass_at_one() > 0.0;
    let q = 1.0 + params.delta;
    let inv = integrable_on_ball(|x| cs.lambda(x).powf(-q), n, omega.max_norm());
    let local_ok = skip || inv.finite;
    if !local_ok {
        failures.push(format!("λ^(-1) is not in L^{q} near Ω"));
    }
    Ok(EllipticityReport {
        k_a: ka.bound,
        k_a_optimal: ka.optimal,
        k_a_empirical: ka.empirical,
        delta: params.delta,
        p_delta: p_of_delta(params.delta),
        growth_ok: growth_ok && params.growth_exponent < n as f64,
        local_integrability_ok: local_ok && l1.finite,
        big_lambda_l1: l1.value,
        lambda_inverse_norm: inv.value.powf(1.0 / q),
        failures,
    })
}

/// Like [`hypothesis_report`] but any failure becomes [`Error::Hypothesis`].
pub fn hypothesis_check(
    cs: &CoefficientSet,
    mu: &MeasureSpec,
    omega: &Domain,
    bx: &PeriodicBox,
    params: &HypothesisParams,
) -> Result<EllipticityReport> {
    let r = hypothesis_report(cs, mu, omega, bx, params)?;
    if r.passed() {
        Ok(r)
    } else {
        Err(Error::Hypothesis(r.failures.join("; ")))
    }
}

/// Exponent arithmetic of the `L^q` sufficient condition for compact
/// boundedness.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CompactBoundednessReport {
    pub pass: bool,
    /// Threshold on `δ` (n ≥ 2) or on `δ(2S₀−1) − 2(1−S₀)` (n = 1, threshold 0).
    pub delta_threshold: f64,
    pub q_threshold: f64,
}

pub fn compact_boundedness_sufficient(
    f_lq_norm: f64,
    f_inv_l1_norm: f64,
    delta: f64,
    s0_max: f64,
    n: usize,
    q: f64,
) -> Result<CompactBoundednessReport> {
    if !(f_lq_norm.is_finite() && f_inv_l1_norm.is_finite()) {
        return Err(Error::Precondition("f norms must be finite".into()));
    }
    let nf = n as f64;
    if n >= 2 {
        let dt = (nf - 2.0 * s0_max) / (2.0 * s0_max);
        let den = 2.0 * s0_max * (1.0 + delta) - nf;
        let qt = if den > 0.0 { nf * (1.0 + delta) / den } else { f64::INFINITY };
        Ok(CompactBoundednessReport { pass: delta > dt && q > qt, delta_threshold: dt, q_threshold: qt })
    } else {
        let lhs = delta * (2.0 * s0_max - 1.0) - 2.0 * (1.0 - s0_max);
        Ok(CompactBoundednessReport { pass: lhs > 0.0 && q > 1.0, delta_threshold: lhs, q_threshold: 1.0 })
    }
}

/// `∫_Ω f log(1 + f)` on the grid.
pub fn llogl_integral(f: &GridFunction, mask: &[bool]) -> f64 {
    let vals: Vec<f64> = f.values().iter().zip(mask).map(|(v, m)| if *m { v * v.ln_1p() } else { 0.0 }).collect();
    crate::grid::deterministic_sum(&vals) * f.grid().cell_volume()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn identity_cfg() -> CoefficientConfig {
        CoefficientConfig {
            matrix: MatrixPreset::Identity,
            a_vector: vec![],
            b_vector: vec![],
            a_scalar: ScalarField::default(),
        }
    }

    #[test]
    fn identity_constant_is_one() {
        let r = cauchy_schwarz_constant(&[Matrix::identity(2, 2)], 1, 100).unwrap();
        assert_eq!(r.bound, 1.0);
        let r = cauchy_schwarz_constant(&[Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 2.0])], 1, 100).unwrap();
        assert_eq!(r.bound, 1.0);
    }

    #[test]
    fn nonsymmetric_bound_dominates_samples() {
        let a = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 2.0]);
        let r = cauchy_schwarz_constant(&[a], 42, 10_000).unwrap();
        assert!(r.bound >= r.optimal && r.optimal >= r.empirical);
        assert!(r.empirical > 1.0);
    }

    #[test]
    fn not_positive_definite_rejected() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(matches!(cauchy_schwarz_constant(&[a], 1, 10), Err(Error::NotPositiveDefinite(_))));
    }

    #[test]
    fn dual_pairing_identity_is_cauchy_schwarz() {
        let a = Matrix::identity(2, 2);
        assert!(dual_pairing_check(&a, &a, 1.0, &[1.0, 2.0], &[3.0, -1.0]).unwrap());
        assert!(dual_pairing_check(&a, &a, 1.0, &[1.0, 0.0], &[0.0, 1.0]).unwrap());
        let bad = Matrix::identity(2, 2) * 2.0;
        assert!(dual_pairing_check(&a, &bad, 1.0, &[1.0, 0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn f_hand_value() {
        let f = f_from_dominators(&Matrix::identity(2, 2), &[1.0, 0.0], &[0.0, 2.0], 0.0);
        assert_eq!(f, 5.0);
    }

    #[test]
    fn f_vanishes_without_lower_order() {
        let cs = CoefficientSet::from_config(&identity_cfg(), 1).unwrap();
        let bx = PeriodicBox::new(1, 4.0, 16).unwrap();
        assert_eq!(f_field(&cs, &bx).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn p_delta_values() {
        assert!((p_of_delta(2.0) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn integrability_power_laws() {
        assert!(integrable_on_ball(|x: &[f64]| x[0].abs().powf(-0.2), 1, 1.0).finite);
        assert!(!integrable_on_ball(|x: &[f64]| 1.0 / x[0].abs(), 1, 1.0).finite);
        assert!(integrable_on_ball(|_: &[f64]| 1.0, 2, 1.0).finite);
    }

    #[test]
    fn compact_boundedness_arithmetic() {
        let r = compact_boundedness_sufficient(1.0, 1.0, 1.0, 1.0, 2, 3.0).unwrap();
        assert!(r.pass && r.delta_threshold == 0.0 && (r.q_threshold - 2.0).abs() < 1e-15);
        let r = compact_boundedness_sufficient(1.0, 1.0, 5.0, 0.5, 1, 3.0).unwrap();
        assert!(!r.pass);
        let r = compact_boundedness_sufficient(1.0, 1.0, 0.7, 0.9, 3, 100.0).unwrap();
        assert!(r.pass);
        assert!((r.delta_threshold - 2.0 / 3.0).abs() < 1e-12);
        assert!((r.q_threshold - 85.0).abs() < 1e-9);
    }

    #[test]
    fn config_parses_presets() {
        let cfg: CoefficientConfig = serde_json::from_str(
            r#"{"matrix": {"preset": "rotation_perturbed", "epsilon": 0.2},
                "a_vector": [{"constant": 1.0}, {}], "a_scalar": {"constant": 1.0}}"#,
        )
        .unwrap();
        let cs = CoefficientSet::from_config(&cfg, 2).unwrap();
        assert!(!cs.is_symmetric());
        assert!(CoefficientSet::from_config(&cfg, 1).is_err());
    }
}
