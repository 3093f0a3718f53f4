//! Galerkin assembly of `L_σ(f) = L + σ I(f)`, the resonance set `Σ` and the
//! solvability trichotomy.
//!
//! The trial space is spanned by nodal indicator functions at grid points
//! inside `Ω`. Column `k` of the stiffness matrix is `h^n (Lφ_k)(x_l)`, one
//! matrix-free operator application per column.

use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::variational::FormContext;
use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

/// Largest admissible basis.
pub const SIZE_CAP: usize = 4096;
/// Default: `K + σM` is singular when `s_min ≤ RANK_TOL·‖K‖₂`.
pub const RANK_TOL: f64 = 1e-8;
/// Default relative tolerance of the compatibility test `⟨T, u*⟩ = 0`.
pub const COMPATIBILITY_TOL: f64 = 1e-8;

/// Stiffness, adjoint stiffness and weighted mass matrices on a nodal basis.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub k: DMatrix<f64>,
    pub k_star: DMatrix<f64>,
    pub m_f: DMatrix<f64>,
    /// Grid indices of the basis nodes.
    pub basis: Vec<usize>,
    pub sigma0: f64,
    /// `‖K*ᵀ − K‖_F / ‖K‖_F`.
    pub adjoint_defect: f64,
    /// Singularity threshold relative to `‖K‖₂`, default [`RANK_TOL`].
    pub rank_tol: f64,
    /// Compatibility threshold relative to `‖T‖`, default [`COMPATIBILITY_TOL`].
    pub compatibility_tol: f64,
    k_norm: f64,
}

fn spectral_norm(a: &DMatrix<f64>) -> f64 {
    a.clone().svd(false, false).singular_values.max()
}

/// Assembles `K`, `K*` and `M_f` on the grid nodes inside `Ω` lying at least
/// `margin_cells` cells from `∂Ω`.
pub fn assemble(ctx: &FormContext, margin_cells: f64) -> Result<AssembledSystem> {
    let bx = *ctx.grid();
    let basis = ctx.domain().interior_indices(&bx, margin_cells * bx.spacing());
    let m = basis.len();
    if m == 0 {
        return Err(Error::Precondition("no grid nodes inside Ω".into()));
    }
    if m > SIZE_CAP {
        return Err(Error::SizeCap(m, SIZE_CAP));
    }
    let vol = bx.cell_volume();
    let columns: Vec<(Vec<f64>, Vec<f64>)> = basis
        .par_iter()
        .map(|&node| {
            let mut vals = vec![0.0; bx.len()];
            vals[node] = 1.0;
            let phi = GridFunction::from_values(bx, vals)?;
            let pphi = ctx.prepare(&phi)?;
            let l = ctx.strong_form_prepared(&pphi, false)?;
            let ls = ctx.strong_form_prepared(&pphi, true)?;
            Ok((
                basis.iter().map(|&i| vol * l.values()[i]).collect(),
                basis.iter().map(|&i| vol * ls.values()[i]).collect(),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    let k = DMatrix::from_fn(m, m, |l, c| columns[c].0[l]);
    let k_star = DMatrix::from_fn(m, m, |l, c| columns[c].1[l]);
    let m_f = DMatrix::from_diagonal(&DVector::from_iterator(m, basis.iter().map(|&i| vol * ctx.f().values()[i])));
    let k_fro = k.norm();
    let adjoint_defect = if k_fro > 0.0 { (k_star.transpose() - &k).norm() / k_fro } else { 0.0 };
    if adjoint_defect > 1e-10 {
        return Err(Error::Solver(format!("discrete adjointness defect {adjoint_defect:.3e} exceeds 1e-10")));
    }
    let k_norm = spectral_norm(&k);
    Ok(AssembledSystem {
        k,
        k_star,
        m_f,
        basis,
        sigma0: ctx.sigma0(),
        adjoint_defect,
        rank_tol: RANK_TOL,
        compatibility_tol: COMPATIBILITY_TOL,
        k_norm,
    })
}

impl AssembledSystem {
    pub fn len(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// `‖K‖₂`.
    pub fn k_norm(&self) -> f64 {
        self.k_norm
    }

    /// `K + σ M_f`.
    pub fn operator(&self, sigma: f64) -> DMatrix<f64> {
        &self.k + &self.m_f * sigma
    }

    pub fn with_tolerances(mut self, rank_tol: f64, compatibility_tol: f64) -> Result<Self> {
        if !(rank_tol > 0.0 && rank_tol < 1.0 && compatibility_tol > 0.0 && compatibility_tol < 1.0) {
            return Err(Error::Domain("tolerances must lie in (0, 1)".into()));
        }
        self.rank_tol = rank_tol;
        self.compatibility_tol = compatibility_tol;
        Ok(self)
    }

    fn rank_threshold(&self) -> f64 {
        self.rank_tol * self.k_norm
    }

    /// Numerical nullity of `K + σM_f` at the rank tolerance.
    pub fn nullity(&self, sigma: f64) -> usize {
        null_basis(&self.operator(sigma), self.rank_threshold()).len()
    }
}

/// Resonance values below `σ₀` with multiplicities.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    /// `(σ, multiplicity)` in increasing order.
    pub sigmas: Vec<(f64, usize)>,
    pub sigma0: f64,
    pub tolerance: f64,
    /// Generalised eigenvalues dropped for having a nonzero imaginary part.
    pub complex_discarded: usize,
}

impl SpectrumReport {
    /// Whether `σ` lies within `tol` (relative to `max(1, |σ|)`) of `Σ`.
    pub fn contains(&self, sigma: f64, tol: f64) -> bool {
        self.sigmas.iter().any(|(v, _)| (v - sigma).abs() <= tol * v.abs().max(1.0))
    }
}

/// `Σ = {−λ : Kv = λ M_f v, λ real}` restricted to `σ < σ₀`; the `count`
/// largest values are kept (all when `count` is `None`).
///
/// Directions in the null space of `M_f` are eliminated by a Schur
/// complement first; their eigenvalues are infinite and never reported.
pub fn spectrum(sys: &AssembledSystem, count: Option<usize>) -> Result<SpectrumReport> {
    let tolerance = sys.rank_tol;
    let m = sys.len();
    let mmax = sys.m_f.amax();
    if mmax == 0.0 {
        return Ok(SpectrumReport { sigmas: vec![], sigma0: sys.sigma0, tolerance, complex_discarded: 0 });
    }
    let eig = SymmetricEigen::new(sys.m_f.clone());
    let q = &eig.eigenvectors;
    let kq = q.transpose() * &sys.k * q;
    let pos: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] > 1e-12 * mmax).collect();
    let zero: Vec<usize> = (0..m).filter(|&i| eig.eigenvalues[i] <= 1e-12 * mmax).collect();
    let sub = |rows: &[usize], cols: &[usize]| DMatrix::from_fn(rows.len(), cols.len(), |i, j| kq[(rows[i], cols[j])]);
    let mut schur = sub(&pos, &pos);
    if !zero.is_empty() {
        let kzz = sub(&zero, &zero);
        let kzp = sub(&zero, &pos);
        let kpz = sub(&pos, &zero);
        let lu = kzz.lu();
        let sol = lu
            .solve(&kzp)
            .ok_or_else(|| Error::Solver("stiffness block on the null space of M_f is singular".into()))?;
        schur -= kpz * sol;
    }
    let scale: Vec<f64> = pos.iter().map(|&i| 1.0 / eig.eigenvalues[i].sqrt()).collect();
    let c = DMatrix::from_fn(pos.len(), pos.len(), |i, j| scale[i] * schur[(i, j)] * scale[j]);
    let decomposition =
        Schur::try_new(c, 1e-14, 100_000).ok_or_else(|| Error::Solver("Schur iteration did not converge".into()))?;
    let lambdas = decomposition.complex_eigenvalues();
    let mut values = Vec::new();
    let mut complex_discarded = 0;
    for l in lambdas.iter() {
        if l.im.abs() <= 1e-8 * l.re.abs().max(1.0) {
            values.push(-l.re);
        } else {
            complex_discarded += 1;
        }
    }
    values.retain(|s| *s < sys.sigma0);
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut merged: Vec<f64> = Vec::new();
    for v in values {
        match merged.last() {
            Some(&last) if (v - last).abs() <= 1e-8 * v.abs().max(1.0) => {}
            _ => merged.push(v),
        }
    }
    if let Some(c) = count {
        let start = merged.len().saturating_sub(c);
        merged.drain(..start);
    }
    let sigmas = merged.into_iter().map(|s| (s, sys.nullity(s).max(1))).collect();
    Ok(SpectrumReport { sigmas, sigma0: sys.sigma0, tolerance, complex_discarded })
}

/// Columns spanning the right singular subspace with singular values at or
/// below `threshold`, as unit vectors.
fn null_basis(a: &DMatrix<f64>, threshold: f64) -> Vec<DVector<f64>> {
    let svd = a.clone().svd(false, true);
    let vt = svd.v_t.expect("requested V");
    (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] <= threshold)
        .map(|i| vt.row(i).transpose())
        .collect()
}

/// Outcome class of a solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Unique,
    InfiniteCompatible,
    Incompatible,
}

/// Result of `L_σ(f) u = T` on the discrete space.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveReport {
    pub status: SolveStatus,
    pub sigma: f64,
    pub solution: Option<Vec<f64>>,
    pub kernel_basis: Vec<Vec<f64>>,
    pub adjoint_kernel_basis: Vec<Vec<f64>>,
    /// `⟨T, u*⟩` for each unit adjoint-kernel vector.
    pub compatibility_defects: Vec<f64>,
    /// `‖(K + σM)u − T‖ / ‖T‖` (absolute when `T = 0`).
    pub residual: f64,
    pub min_singular_value: f64,
    pub rank_threshold: f64,
}

fn relative_residual(a: &DMatrix<f64>, x: &DVector<f64>, t: &DVector<f64>) -> f64 {
    let r = (a * x - t).norm();
    let tn = t.norm();
    if tn > 0.0 {
        r / tn
    } else {
        r
    }
}

fn direct_solve(a: &DMatrix<f64>, t: &DVector<f64>) -> Result<DVector<f64>> {
    a.clone().lu().solve(t).ok_or_else(|| Error::Solver("LU factorisation failed".into()))
}

/// Solves `(K + σM_f) u = T` following the trichotomy: unique solution off
/// `Σ`; on `Σ` either the minimal-norm solution plus the kernel (when `T`
/// annihilates the adjoint kernel) or an incompatibility certificate.
pub fn solve(sys: &AssembledSystem, sigma: f64, t: &[f64]) -> Result<SolveReport> {
    if t.len() != sys.len() {
        return Err(Error::Domain(format!("right-hand side has {} entries, basis has {}", t.len(), sys.len())));
    }
    if t.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("right-hand side is not finite".into()));
    }
    let a = sys.operator(sigma);
    let tv = DVector::from_column_slice(t);
    let svd = a.clone().svd(true, true);
    let sv = &svd.singular_values;
    let s_min = sv.min();
    let thr = sys.rank_threshold();
    if s_min > thr {
        let x = direct_solve(&a, &tv)?;
        return Ok(SolveReport {
            status: SolveStatus::Unique,
            sigma,
            residual: relative_residual(&a, &x, &tv),
            solution: Some(x.as_slice().to_vec()),
            kernel_basis: vec![],
            adjoint_kernel_basis: vec![],
            compatibility_defects: vec![],
            min_singular_value: s_min,
            rank_threshold: thr,
        });
    }
    let u = svd.u.as_ref().expect("requested U");
    let vt = svd.v_t.as_ref().expect("requested V");
    let null: Vec<usize> = (0..sv.len()).filter(|&i| sv[i] <= thr).collect();
    let kernel: Vec<Vec<f64>> = null.iter().map(|&i| vt.row(i).iter().copied().collect()).collect();
    let adjoint: Vec<Vec<f64>> = null.iter().map(|&i| u.column(i).iter().copied().collect()).collect();
    let defects: Vec<f64> = adjoint.iter().map(|w| w.iter().zip(t).map(|(a, b)| a * b).sum()).collect();
    let tn = tv.norm();
    let compatible = defects.iter().all(|d| d.abs() <= sys.compatibility_tol * tn.max(f64::MIN_POSITIVE));
    let (status, solution, residual) = if compatible {
        let mut x = DVector::zeros(sys.len());
        for i in 0..sv.len() {
            if sv[i] > thr {
                let coef = u.column(i).dot(&tv) / sv[i];
                x += vt.row(i).transpose() * coef;
            }
        }
        let r = relative_residual(&a, &x, &tv);
        (SolveStatus::InfiniteCompatible, Some(x.as_slice().to_vec()), r)
    } else {
        (SolveStatus::Incompatible, None, f64::NAN)
    };
    Ok(SolveReport {
        status,
        sigma,
        solution,
        kernel_basis: kernel,
        adjoint_kernel_basis: adjoint,
        compatibility_defects: defects,
        residual,
        min_singular_value: s_min,
        rank_threshold: thr,
    })
}

/// Nullities of `K + σM_f` and its transpose, from independent SVDs, and
/// the largest principal angle between the two null spaces.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelCheck {
    pub d: usize,
    pub d_star: usize,
    /// Largest principal angle in radians (0 when either kernel is trivial).
    pub max_angle: f64,
}

pub fn kernel_dimension_check(sys: &AssembledSystem, sigma: f64) -> KernelCheck {
    let a = sys.operator(sigma);
    let thr = sys.rank_threshold();
    let n1 = null_basis(&a, thr);
    let n2 = null_basis(&a.transpose(), thr);
    let max_angle = if n1.is_empty() || n2.is_empty() {
        0.0
    } else {
        let b1 = DMatrix::from_columns(&n1);
        let b2 = DMatrix::from_columns(&n2);
        let cosines = (b1.transpose() * b2).svd(false, false).singular_values;
        let k = n1.len().min(n2.len());
        let mut sorted: Vec<f64> = cosines.iter().copied().collect();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        sorted[..k].iter().map(|c| c.clamp(-1.0, 1.0).acos()).fold(0.0, f64::max)
    };
    KernelCheck { d: n1.len(), d_star: n2.len(), max_angle }
}

/// Direct solve for `σ ≥ σ₀`, where coercivity makes `K + σM_f` invertible.
pub fn lax_milgram_solve(sys: &AssembledSystem, sigma: f64, t: &[f64]) -> Result<Vec<f64>> {
    if sigma < sys.sigma0 {
        return Err(Error::Precondition(format!("σ = {sigma} below σ₀ = {}", sys.sigma0)));
    }
    if t.len() != sys.len() {
        return Err(Error::Domain("right-hand side length mismatch".into()));
    }
    let a = sys.operator(sigma);
    let tv = DVector::from_column_slice(t);
    let x = direct_solve(&a, &tv)?;
    let r = (&a * &x - &tv).norm();
    if r > 1e-10 * tv.norm() {
        return Err(Error::Solver(format!("residual {r:.3e} above 1e-10·‖T‖")));
    }
    Ok(x.as_slice().to_vec())
}

/// `w − Σ ⟨w, u*⟩ u*` for an orthonormal family `u*`.
pub fn project_out(w: &[f64], family: &[Vec<f64>]) -> Vec<f64> {
    let mut out = w.to_vec();
    for u in family {
        let c: f64 = out.iter().zip(u).map(|(a, b)| a * b).sum();
        out.iter_mut().zip(u).for_each(|(o, b)| *o -= c * b);
    }
    out
}

/// Pairs of consecutive sweep values that bracket an entry of `Σ`.
pub fn sweep_crossings(sigmas: &[f64], spectrum: &SpectrumReport) -> Vec<(f64, f64, f64)> {
    let mut out = Vec::new();
    for w in sigmas.windows(2) {
        let (lo, hi) = if w[0] <= w[1] { (w[0], w[1]) } else { (w[1], w[0]) };
        for (s, _) in &spectrum.sigmas {
            if *s >= lo && *s <= hi {
                out.push((w[0], w[1], *s));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coefficients::{CoefficientConfig, CoefficientSet, MatrixPreset, ScalarField};
    use crate::domain::Domain;
    use crate::grid::PeriodicBox;
    use crate::measure::MeasureSpec;

    fn system(points: usize, a0: f64) -> AssembledSystem {
        let bx = PeriodicBox::new(1, 8.0, points).unwrap();
        let cfg = CoefficientConfig {
            matrix: MatrixPreset::Identity,
            a_vector: vec![],
            b_vector: vec![],
            a_scalar: ScalarField::constant(a0),
        };
        let cs = CoefficientSet::from_config(&cfg, 1).unwrap();
        let ctx =
            FormContext::new(MeasureSpec::dirac(0.5, 1.0).unwrap(), cs, Domain::Interval { lo: -1.0, hi: 1.0 }, bx)
                .unwrap();
        assemble(&ctx, 0.0).unwrap()
    }

    #[test]
    fn zero_weight_gives_empty_spectrum() {
        let sys = system(128, 0.0);
        assert_eq!(sys.m_f.amax(), 0.0);
        assert!(spectrum(&sys, None).unwrap().sigmas.is_empty());
    }

    #[test]
    fn symmetric_positive_data_has_negative_spectrum() {
        let sys = system(128, 1.0);
        assert!((&sys.k - sys.k.transpose()).amax() < 1e-10 * sys.k.amax());
        let sp = spectrum(&sys, None).unwrap();
        assert_eq!(sp.sigmas.len(), sys.len());
        assert!(sp.sigmas.iter().all(|(s, _)| *s < 0.0));
    }

    #[test]
    fn trichotomy_on_symmetric_problem() {
        let sys = system(128, 1.0);
        let sp = spectrum(&sys, Some(1)).unwrap();
        let (sigma, mult) = sp.sigmas[0];
        assert_eq!(mult, 1);
        let kc = kernel_dimension_check(&sys, sigma);
        assert_eq!((kc.d, kc.d_star), (1, 1));
        assert!(kc.max_angle < 1e-6);
        let far = kernel_dimension_check(&sys, sys.sigma0 + 1.0);
        assert_eq!((far.d, far.d_star), (0, 0));

        let w: Vec<f64> = (0..sys.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let r = solve(&sys, sigma, &w).unwrap();
        assert_eq!(r.status, SolveStatus::Incompatible);
        let t = project_out(&w, &r.adjoint_kernel_basis);
        let r2 = solve(&sys, sigma, &t).unwrap();
        assert_eq!(r2.status, SolveStatus::InfiniteCompatible);
        assert!(r2.residual < 1e-8);

        let x = lax_milgram_solve(&sys, sys.sigma0 + 1.0, &w).unwrap();
        let u = solve(&sys, sys.sigma0 + 1.0, &w).unwrap();
        assert_eq!(u.status, SolveStatus::Unique);
        assert_eq!(u.solution.unwrap(), x);
        assert!(lax_milgram_solve(&sys, sys.sigma0 - 1.0, &w).is_err());
        assert_eq!(lax_milgram_solve(&sys, sys.sigma0, &vec![0.0; sys.len()]).unwrap(), vec![0.0; sys.len()]);
    }
}
