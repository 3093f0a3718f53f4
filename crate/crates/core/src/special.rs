//! Gamma function, normalising constants and closed-form integrals.
//!
//! Everything here is pure arithmetic on `f64`; the independent quadrature
//! evaluations of the same integrals live in [`crate::checks`].

use crate::error::{Error, Result};
use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEFFS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

fn gamma_unchecked(x: f64) -> f64 {
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma_unchecked(1.0 - x));
    }
    let x = x - 1.0;
    let mut acc = LANCZOS_COEFFS[0];
    for (i, c) in LANCZOS_COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(x + 0.5) * (-t).exp() * acc
}

/// Euler Gamma function for positive arguments (Lanczos, g = 7, 9 terms).
pub fn gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("gamma needs a positive finite argument, got {x}")));
    }
    Ok(gamma_unchecked(x))
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    let nf = n as f64;
    PI.powf(nf / 2.0) / gamma_unchecked(nf / 2.0 + 1.0)
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::Domain("dimension must be at least 1".into()));
    }
    Ok(())
}

/// Normalising constant `c_{s,n}` of the fractional gradient,
/// `2^s π^{-n/2} Γ((n+s+1)/2) / Γ((1-s)/2)`.
///
/// Defined for `s ∈ [-1, 1]`; at `s = 1` the pole of `Γ((1-s)/2)` gives 0.
pub fn grad_constant(s: f64, n: usize) -> Result<f64> {
    check_dim(n)?;
    if !(-1.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("c_s needs s in [-1, 1], got {s}")));
    }
    if s == 1.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    Ok(2f64.powf(s) * PI.powf(-nf / 2.0) * gamma_unchecked((nf + s + 1.0) / 2.0) / gamma_unchecked((1.0 - s) / 2.0))
}

/// Riesz potential constant `γ_{α,n} = 2^α π^{n/2} Γ(α/2) / Γ((n-α)/2)`.
pub fn riesz_constant(alpha: f64, n: usize) -> Result<f64> {
    check_dim(n)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("Riesz order must lie in (0, 1), got {alpha}")));
    }
    let nf = n as f64;
    Ok(2f64.powf(alpha) * PI.powf(nf / 2.0) * gamma_unchecked(alpha / 2.0) / gamma_unchecked((nf - alpha) / 2.0))
}

fn check_open_unit(s: f64, what: &str) -> Result<()> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("{what} needs s in (0, 1), got {s}")));
    }
    Ok(())
}

/// `∫_0^∞ sin(t) t^{-1-s} dt = Γ((1+s)/2) Γ((1-s)/2) / (2 Γ(1+s))`.
pub fn sinc_moment(s: f64) -> Result<f64> {
    check_open_unit(s, "sinc_moment")?;
    Ok(gamma_unchecked((1.0 + s) / 2.0) * gamma_unchecked((1.0 - s) / 2.0) / (2.0 * gamma_unchecked(1.0 + s)))
}

/// `∫_{∂B_1} |ω_1|^{1+s} dH^{n-1} = 2 π^{(n-1)/2} Γ((s+2)/2) / Γ((n+s+1)/2)`.
///
/// For `n = 1` the sphere is the two points `±1` and the value is 2, which the
/// same formula also returns.
pub fn sphere_moment(s: f64, n: usize) -> Result<f64> {
    check_dim(n)?;
    check_open_unit(s, "sphere_moment")?;
    if n == 1 {
        return Ok(2.0);
    }
    let nf = n as f64;
    Ok(2.0 * PI.powf((nf - 1.0) / 2.0) * gamma_unchecked((s + 2.0) / 2.0) / gamma_unchecked((nf + s + 1.0) / 2.0))
}

/// `∫_{R^n} sin(ξ·t) t_j |t|^{-(n+s+1)} dt
///   = 2^{-s} π^{n/2} |ξ|^{s-1} ξ_j Γ((1-s)/2) / Γ((n+s+1)/2)`.
pub fn fourier_symbol_integral(xi: &[f64], s: f64, j: usize) -> Result<f64> {
    let n = xi.len();
    check_dim(n)?;
    check_open_unit(s, "fourier_symbol_integral")?;
    if j >= n {
        return Err(Error::Domain(format!("axis {j} out of range for n = {n}")));
    }
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 || xi[j] == 0.0 {
        return Ok(0.0);
    }
    let nf = n as f64;
    Ok(2f64.powf(-s) * PI.powf(nf / 2.0) * norm.powf(s - 1.0) * xi[j] * gamma_unchecked((1.0 - s) / 2.0)
        / gamma_unchecked((nf + s + 1.0) / 2.0))
}

/// Largest value of `c_{s,n}/(1-s)` over `s = -1 + k·step` in `[-1, 1)`,
/// returned as `(s, value)`.
pub fn grad_constant_ratio_sup(n: usize, step: f64) -> Result<(f64, f64)> {
    check_dim(n)?;
    let count = (2.0 / step).round() as usize;
    let mut best = (-1.0, f64::NEG_INFINITY);
    for k in 0..count {
        let s = -1.0 + k as f64 * step;
        if s >= 1.0 {
            break;
        }
        let r = grad_constant(s, n)? / (1.0 - s);
        if r > best.1 {
            best = (s, r);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn gamma_anchor_values() {
        assert!(rel(gamma(1.0).unwrap(), 1.0) < 1e-14);
        assert!(rel(gamma(0.5).unwrap(), PI.sqrt()) < 1e-14);
        assert!(rel(gamma(0.25).unwrap(), 3.625_609_908_221_908) < 1e-13);
        assert!(rel(gamma(5.0).unwrap(), 24.0) < 1e-14);
    }

    #[test]
    fn gamma_rejects_nonpositive() {
        assert!(gamma(0.0).is_err());
        assert!(gamma(-1.5).is_err());
        assert!(gamma(f64::NAN).is_err());
    }

    #[test]
    fn recurrence_and_duplication() {
        for x in [0.1, 0.5, 1.3, 7.7] {
            assert!(rel(gamma(x + 1.0).unwrap(), x * gamma(x).unwrap()) < 1e-12);
        }
        for z in [0.25, 0.5, 1.5] {
            let lhs = gamma(z).unwrap() * gamma(z + 0.5).unwrap();
            let rhs = 2f64.powf(1.0 - 2.0 * z) * PI.sqrt() * gamma(2.0 * z).unwrap();
            assert!(rel(lhs, rhs) < 1e-11);
        }
    }

    #[test]
    fn grad_constant_values() {
        assert!((grad_constant(0.5, 1).unwrap() - 0.199_471).abs() < 1e-5);
        assert_eq!(grad_constant(1.0, 3).unwrap(), 0.0);
        assert!(grad_constant(1.2, 1).is_err());
        // s = -1 is the finite endpoint Γ(n/2)/(2 π^{n/2})
        let v = grad_constant(-1.0, 2).unwrap();
        assert!(rel(v, 1.0 / (2.0 * PI)) < 1e-13);
    }

    #[test]
    fn ratio_limit_at_one() {
        for n in 1..=3 {
            let r = grad_constant(0.999, n).unwrap() / 0.001;
            let target = 1.0 / unit_ball_volume(n);
            assert!(rel(r, target) < 0.01, "n={n} r={r} target={target}");
        }
    }

    #[test]
    fn cross_relation_with_riesz_constant() {
        let v = grad_constant(0.3, 2).unwrap() * riesz_constant(0.7, 2).unwrap();
        assert!(rel(v, 1.3) < 1e-12);
        assert!(rel(riesz_constant(0.5, 1).unwrap(), (2.0 * PI).sqrt()) < 1e-13);
    }

    #[test]
    fn sinc_and_sphere_values() {
        assert!(rel(sinc_moment(0.5).unwrap(), (2.0 * PI).sqrt()) < 1e-13);
        assert!(rel(sphere_moment(1e-12, 2).unwrap(), 4.0) < 1e-10);
        assert_eq!(sphere_moment(0.3, 1).unwrap(), 2.0);
        // on S² the moment is 2π ∫_{-1}^{1} |t|^{1+s} dt = 4π/(2+s)
        assert!(rel(sphere_moment(0.4, 3).unwrap(), 4.0 * PI / 2.4) < 1e-13);
        assert!(sinc_moment(1.0).is_err());
    }

    #[test]
    fn fourier_symbol_parity_and_homogeneity() {
        let xi = [1.0, 1.0];
        let v = fourier_symbol_integral(&xi, 0.5, 0).unwrap();
        let v2 = fourier_symbol_integral(&[2.0, 2.0], 0.5, 0).unwrap();
        assert!(rel(v2, 2f64.powf(0.5) * v) < 1e-13);
        let vm = fourier_symbol_integral(&[-1.0, 1.0], 0.5, 0).unwrap();
        assert!((vm + v).abs() < 1e-14);
        assert_eq!(fourier_symbol_integral(&[0.0, 3.0], 0.5, 0).unwrap(), 0.0);
    }

    #[test]
    fn symbol_integral_factors_through_sphere_and_sinc() {
        for n in 1..=3 {
            for s in [0.2, 0.5, 0.8] {
                let mut xi = vec![0.0; n];
                xi[0] = 1.7;
                let closed = fourier_symbol_integral(&xi, s, 0).unwrap();
                let composed = sphere_moment(s, n).unwrap() * sinc_moment(s).unwrap() * 1.7f64.powf(s - 1.0) * 1.7;
                assert!(rel(closed, composed) < 1e-12, "n={n} s={s}");
            }
        }
    }

    #[test]
    fn ratio_sup_is_finite() {
        let (_, v) = grad_constant_ratio_sup(2, 1e-3).unwrap();
        assert!(v.is_finite() && v > 0.0);
    }
}
