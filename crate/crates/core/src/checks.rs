//! Direct quadrature evaluations of the closed-form integrals in
//! [`crate::special`].
//!
//! None of these routines call the Gamma function: they integrate the defining
//! integrals numerically, so agreement with the closed forms is a genuine
//! cross-check.

use crate::error::{Error, Result};
use crate::quadrature::{oscillatory_tail, GaussLegendre};
use std::f64::consts::PI;

const PANEL_NODES: usize = 24;
const GEOMETRIC_LEVELS: usize = 60;

/// `∫_a^b f` for integrands that are bounded but non-smooth at `a`, using
/// panels that halve in width toward `a`.
fn toward_left_end<F: FnMut(f64) -> f64>(a: f64, b: f64, rule: &GaussLegendre, mut f: F) -> f64 {
    let w = b - a;
    let mut total = 0.0;
    for k in 0..GEOMETRIC_LEVELS {
        let hi = a + w * 0.5f64.powi(k as i32);
        let lo = a + w * 0.5f64.powi(k as i32 + 1);
        total += rule.integrate(lo, hi, &mut f);
    }
    total
}

/// Same as [`toward_left_end`] with the singular point at both ends.
fn toward_both_ends<F: FnMut(f64) -> f64>(a: f64, b: f64, rule: &GaussLegendre, mut f: F) -> f64 {
    let mid = 0.5 * (a + b);
    toward_left_end(a, mid, rule, &mut f) + -toward_left_end(b, mid, rule, &mut f)
}

/// `∫_0^∞ sin(t) t^{-1-s} dt` by geometric panels near the origin and
/// accelerated half-period panels on the oscillatory tail.
pub fn sinc_moment_quadrature(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("sinc moment needs s in (0, 1), got {s}")));
    }
    let rule = GaussLegendre::new(PANEL_NODES);
    let f = |t: f64| t.sin() * t.powf(-1.0 - s);
    let mut head = 0.0;
    for k in 0..GEOMETRIC_LEVELS {
        let hi = PI * 0.5f64.powi(k as i32);
        head += rule.integrate(0.5 * hi, hi, f);
    }
    // sin t ≈ t - t³/6 on the remaining sliver [0, ε]
    let eps = PI * 0.5f64.powi(GEOMETRIC_LEVELS as i32);
    head += eps.powf(1.0 - s) / (1.0 - s) - eps.powf(3.0 - s) / (6.0 * (3.0 - s));
    let tail = oscillatory_tail(PI, 60, &rule, f);
    Ok(head + tail)
}

/// `∫_{∂B_1} |ω_1|^{1+s}` by angular quadrature for `n ∈ {2, 3}`.
pub fn sphere_moment_quadrature(s: f64, n: usize) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("sphere moment needs s in (0, 1), got {s}")));
    }
    let rule = GaussLegendre::new(PANEL_NODES);
    let e = 1.0 + s;
    match n {
        // ∫_0^{2π} |cos θ|^{1+s} dθ = 4 ∫_0^{π/2} sin^{1+s} u du
        2 => Ok(4.0 * toward_left_end(0.0, PI / 2.0, &rule, |u| u.sin().powf(e))),
        // ∫_0^π ∫_0^{2π} |sin φ cos θ|^{1+s} sin φ dθ dφ
        3 => {
            let theta = 4.0 * toward_left_end(0.0, PI / 2.0, &rule, |u| u.sin().powf(e));
            let phi = toward_both_ends(0.0, PI, &rule, |p| p.sin().powf(e + 1.0));
            Ok(theta * phi)
        }
        _ => Err(Error::Domain(format!("angular quadrature implemented for n = 2, 3 only, got {n}"))),
    }
}

/// `∫_{R^n} sin(ξ·t) t_j |t|^{-(n+s+1)} dt` in polar coordinates: a radial
/// oscillatory integral along each direction followed by angular quadrature
/// split at the great circle `ξ·ω = 0`.
pub fn fourier_symbol_quadrature(xi: &[f64], s: f64, j: usize) -> Result<f64> {
    let n = xi.len();
    if j >= n {
        return Err(Error::Domain(format!("axis {j} out of range for n = {n}")));
    }
    let norm = xi.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Ok(0.0);
    }
    // radial part along a direction with ξ·ω = a: ∫_0^∞ sin(a r) r^{-1-s} dr
    // = sign(a) |a|^s ∫_0^∞ sin(t) t^{-1-s} dt
    let radial = sinc_moment_quadrature(s)?;
    let rule = GaussLegendre::new(PANEL_NODES);
    match n {
        1 => Ok(2.0 * xi[0].signum() * xi[0].abs().powf(s) * radial),
        2 => {
            let th = xi[1].atan2(xi[0]);
            let integrand = |t: f64| {
                let w = [t.cos(), t.sin()];
                let a = norm * (t - th).cos();
                w[j] * a.signum() * a.abs().powf(s)
            };
            let a0 = th - PI / 2.0;
            let ang = toward_both_ends(a0, a0 + PI, &rule, integrand)
                + toward_both_ends(a0 + PI, a0 + 2.0 * PI, &rule, integrand);
            Ok(ang * radial)
        }
        3 => {
            let e1: Vec<f64> = xi.iter().map(|v| v / norm).collect();
            let (e2, e3) = complete_frame(&e1);
            let theta_rule = GaussLegendre::new(32);
            let mut total = 0.0;
            for (lo, hi) in [(0.0, PI / 2.0), (PI / 2.0, PI)] {
                total += toward_both_ends(lo, hi, &rule, |phi| {
                    let c = phi.cos();
                    let sphi = phi.sin();
                    let a = norm * c;
                    let radial_part = a.signum() * a.abs().powf(s);
                    theta_rule.composite(0.0, 2.0 * PI, 4, |t| {
                        let wj = c * e1[j] + sphi * (t.cos() * e2[j] + t.sin() * e3[j]);
                        wj * radial_part
                    }) * sphi
                });
            }
            Ok(total * radial)
        }
        _ => Err(Error::Domain(format!("angular quadrature implemented for n ≤ 3, got {n}"))),
    }
}

/// Two unit vectors completing `e1` to an orthonormal frame of `R^3`.
pub(crate) fn complete_frame(e1: &[f64]) -> ([f64; 3], [f64; 3]) {
    let pick = if e1[0].abs() < 0.9 { [1.0, 0.0, 0.0] } else { [0.0, 1.0, 0.0] };
    let d = pick[0] * e1[0] + pick[1] * e1[1] + pick[2] * e1[2];
    let mut e2 = [pick[0] - d * e1[0], pick[1] - d * e1[1], pick[2] - d * e1[2]];
    let l = (e2[0] * e2[0] + e2[1] * e2[1] + e2[2] * e2[2]).sqrt();
    for v in e2.iter_mut() {
        *v /= l;
    }
    let e3 = [e1[1] * e2[2] - e1[2] * e2[1], e1[2] * e2[0] - e1[0] * e2[2], e1[0] * e2[1] - e1[1] * e2[0]];
    (e2, e3)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinc_quadrature_at_half() {
        let v = sinc_moment_quadrature(0.5).unwrap();
        assert!((v - (2.0 * PI).sqrt()).abs() < 1e-9, "{v}");
    }

    #[test]
    fn circle_moment_near_zero_order() {
        let v = sphere_moment_quadrature(1e-9, 2).unwrap();
        assert!((v - 4.0).abs() < 1e-7);
    }

    #[test]
    fn sphere_moment_n3_elementary() {
        // ∫_{S^2} |ω_1|^{1+s} = 2π ∫_{-1}^{1} |t|^{1+s} dt = 4π/(2+s)
        let s = 0.5;
        let v = sphere_moment_quadrature(s, 3).unwrap();
        assert!((v - 4.0 * PI / (2.0 + s)).abs() < 1e-10, "{v}");
    }

    #[test]
    fn frame_is_orthonormal() {
        let e1 = [0.6, 0.0, 0.8];
        let (e2, e3) = complete_frame(&e1);
        let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
        assert!(dot(&e1, &e2).abs() < 1e-15);
        assert!(dot(&e1, &e3).abs() < 1e-15);
        assert!(dot(&e2, &e3).abs() < 1e-15);
        assert!((dot(&e3, &e3) - 1.0).abs() < 1e-15);
    }
}
