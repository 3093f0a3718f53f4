//! Gauss–Legendre rules and helpers for one-dimensional integrals.

use std::f64::consts::PI;

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
#[derive(Debug, Clone)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds an `m`-point rule by Newton iteration on `P_m`.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss-Legendre rule needs at least one node");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let half = m.div_ceil(2);
        for i in 0..half {
            let mut x = (PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Nodes and weights mapped to `[a, b]`.
    pub fn mapped(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        self.nodes.iter().zip(&self.weights).map(move |(&x, &w)| (mid + half * x, half * w))
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        self.mapped(a, b).map(|(x, w)| w * f(x)).sum()
    }

    /// Composite rule over `panels` equal sub-intervals of `[a, b]`.
    pub fn composite<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, panels: usize, mut f: F) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                self.integrate(lo, lo + h, &mut f)
            })
            .sum()
    }
}

fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=m {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = m as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Wynn's epsilon algorithm applied to a sequence of partial sums.
///
/// Returns the last even-column estimate, which for alternating series with
/// smoothly varying terms converges much faster than the raw sums.
pub fn wynn_epsilon(partial_sums: &[f64]) -> f64 {
    let n = partial_sums.len();
    if n == 0 {
        return 0.0;
    }
    let mut prev = vec![0.0; n + 1];
    let mut cur: Vec<f64> = partial_sums.to_vec();
    let mut best = *partial_sums.last().unwrap();
    let mut col = 0usize;
    while cur.len() > 1 {
        let mut next = Vec::with_capacity(cur.len() - 1);
        for i in 0..cur.len() - 1 {
            let diff = cur[i + 1] - cur[i];
            let val = if diff == 0.0 { f64::INFINITY } else { prev[i + 1] + 1.0 / diff };
            next.push(val);
        }
        col += 1;
        if col.is_multiple_of(2) {
            if let Some(&v) = next.last() {
                if v.is_finite() {
                    best = v;
                } else {
                    break;
                }
            }
        } else if next.iter().any(|v| !v.is_finite()) {
            break;
        }
        prev = cur;
        cur = next;
    }
    best
}

/// Integral of `f(t)·sin(t)`-type oscillatory functions on `[a, ∞)` from
/// half-period panels `[a + kπ, a + (k+1)π]` and epsilon acceleration of the
/// partial sums.
pub fn oscillatory_tail<F: FnMut(f64) -> f64>(a: f64, panels: usize, rule: &GaussLegendre, mut f: F) -> f64 {
    let mut sums = Vec::with_capacity(panels);
    let mut acc = 0.0;
    for k in 0..panels {
        let lo = a + k as f64 * PI;
        acc += rule.integrate(lo, lo + PI, &mut f);
        sums.push(acc);
    }
    wynn_epsilon(&sums)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two() {
        for m in [1, 2, 5, 16, 33, 64] {
            let gl = GaussLegendre::new(m);
            let total: f64 = gl.weights.iter().sum();
            assert!((total - 2.0).abs() < 1e-13, "m={m} total={total}");
        }
    }

    #[test]
    fn exact_for_polynomials_up_to_degree_2m_minus_1() {
        let gl = GaussLegendre::new(8);
        for d in 0..16 {
            let num = gl.integrate(0.0, 1.0, |x| x.powi(d));
            let exact = 1.0 / (d as f64 + 1.0);
            assert!((num - exact).abs() < 1e-14, "degree {d}");
        }
    }

    #[test]
    fn wynn_accelerates_leibniz_series() {
        let mut sums = Vec::new();
        let mut acc = 0.0;
        for k in 0..30 {
            acc += if k % 2 == 0 { 1.0 } else { -1.0 } / (2.0 * k as f64 + 1.0);
            sums.push(acc);
        }
        assert!((wynn_epsilon(&sums) - PI / 4.0).abs() < 1e-12);
    }

    #[test]
    fn oscillatory_tail_of_sine_over_t() {
        // ∫_0^∞ sin t / t dt = π/2
        let gl = GaussLegendre::new(20);
        let v = oscillatory_tail(0.0, 40, &gl, |t| if t == 0.0 { 1.0 } else { t.sin() / t });
        assert!((v - PI / 2.0).abs() < 1e-11, "{v}");
    }
}
