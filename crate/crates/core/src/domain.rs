//! Bounded open sets `Ω` placed inside the periodic box.

use crate::error::{Error, Result};
use crate::grid::PeriodicBox;
use serde::{Deserialize, Serialize};

/// An interval, axis-aligned box or ball.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "lowercase", deny_unknown_fields)]
pub enum Domain {
    Interval { lo: f64, hi: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
    Ball { center: Vec<f64>, radius: f64 },
}

impl Domain {
    pub fn dim(&self) -> usize {
        match self {
            Domain::Interval { .. } => 1,
            Domain::Box { lo, .. } => lo.len(),
            Domain::Ball { center, .. } => center.len(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            Domain::Interval { lo, hi } => lo < hi,
            Domain::Box { lo, hi } => !lo.is_empty() && lo.len() == hi.len() && lo.iter().zip(hi).all(|(a, b)| a < b),
            Domain::Ball { center, radius } => !center.is_empty() && *radius > 0.0,
        };
        if !ok || self.dim() > 3 {
            return Err(Error::Domain(format!("degenerate domain {self:?}")));
        }
        Ok(())
    }

    /// Strict membership.
    pub fn contains(&self, x: &[f64]) -> bool {
        self.boundary_distance(x) > 0.0
    }

    /// Signed distance to `∂Ω`, positive inside (exact for intervals and balls,
    /// the min over faces for boxes).
    pub fn boundary_distance(&self, x: &[f64]) -> f64 {
        match self {
            Domain::Interval { lo, hi } => (x[0] - lo).min(hi - x[0]),
            Domain::Box { lo, hi } => {
                (0..lo.len()).map(|a| (x[a] - lo[a]).min(hi[a] - x[a])).fold(f64::INFINITY, f64::min)
            }
            Domain::Ball { center, radius } => {
                radius - center.iter().zip(x).map(|(c, y)| (c - y).powi(2)).sum::<f64>().sqrt()
            }
        }
    }

    pub fn diameter(&self) -> f64 {
        match self {
            Domain::Interval { lo, hi } => hi - lo,
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt(),
            Domain::Ball { radius, .. } => 2.0 * radius,
        }
    }

    /// Largest `|x|` over `Ω̄`.
    pub fn max_norm(&self) -> f64 {
        match self {
            Domain::Interval { lo, hi } => lo.abs().max(hi.abs()),
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| a.abs().max(b.abs()).powi(2)).sum::<f64>().sqrt(),
            Domain::Ball { center, radius } => center.iter().map(|c| c * c).sum::<f64>().sqrt() + radius,
        }
    }

    /// Centre of the smallest enclosing ball used for probe families.
    pub fn center(&self) -> Vec<f64> {
        match self {
            Domain::Interval { lo, hi } => vec![0.5 * (lo + hi)],
            Domain::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| 0.5 * (a + b)).collect(),
            Domain::Ball { center, .. } => center.clone(),
        }
    }

    /// Radius of the largest ball about [`Domain::center`] inside `Ω`.
    pub fn inradius(&self) -> f64 {
        self.boundary_distance(&self.center())
    }

    /// Checks `Ω` sits in the box with at least `3·diam(Ω)` of clearance.
    pub fn check_placement(&self, bx: &PeriodicBox) -> Result<()> {
        if self.dim() != bx.dim() {
            return Err(Error::Domain(format!("{}-dimensional domain in a {}-dimensional box", self.dim(), bx.dim())));
        }
        let reach = match self {
            Domain::Interval { lo, hi } => lo.abs().max(hi.abs()),
            Domain::Box { lo, hi } => lo.iter().chain(hi).map(|v| v.abs()).fold(0.0, f64::max),
            Domain::Ball { center, radius } => center.iter().map(|c| c.abs()).fold(0.0, f64::max) + radius,
        };
        let need = reach + 3.0 * self.diameter();
        if bx.half_width() < need {
            return Err(Error::Precondition(format!(
                "box half-width {} below the required {need} (domain reach plus 3·diam)",
                bx.half_width()
            )));
        }
        Ok(())
    }

    /// Grid points strictly inside `Ω` at distance at least `margin` from the
    /// boundary.
    pub fn interior_indices(&self, bx: &PeriodicBox, margin: f64) -> Vec<usize> {
        let d = bx.dim();
        (0..bx.len())
            .filter(|&i| {
                let p = bx.point(i);
                let dist = self.boundary_distance(&p[..d]);
                dist > 0.0 && dist >= margin
            })
            .collect()
    }

    /// Indicator of `Ω` on the grid.
    pub fn mask(&self, bx: &PeriodicBox) -> Vec<bool> {
        let d = bx.dim();
        (0..bx.len()).map(|i| self.contains(&bx.point(i)[..d])).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_interval_has_even_node_count() {
        let bx = PeriodicBox::new(1, 8.0, 512).unwrap();
        let om = Domain::Interval { lo: -1.0, hi: 1.0 };
        assert_eq!(om.interior_indices(&bx, 0.0).len(), 64);
        om.check_placement(&bx).unwrap();
    }

    #[test]
    fn placement_margin_enforced() {
        let bx = PeriodicBox::new(2, 4.0, 32).unwrap();
        let om = Domain::Ball { center: vec![0.0, 0.0], radius: 1.0 };
        assert!(om.check_placement(&bx).is_err());
    }

    #[test]
    fn distances() {
        let om = Domain::Box { lo: vec![-1.0, -2.0], hi: vec![1.0, 2.0] };
        assert_eq!(om.boundary_distance(&[0.0, 0.0]), 1.0);
        assert!(!om.contains(&[1.5, 0.0]));
        assert_eq!(om.inradius(), 1.0);
    }
}
