//! The order-mixing measure `μ` on `(0, 1]`.
//!
//! A measure is a finite list of atoms plus an optional density on
//! `[s₀, S₀]`, integrated by Gauss–Legendre. Everything downstream only sees
//! the flattened list of `(s, weight)` nodes.

use crate::error::{Error, Result};
use crate::quadrature::GaussLegendre;
use serde::{Deserialize, Serialize};

/// Default number of Gauss–Legendre nodes for a density block.
pub const DEFAULT_DENSITY_NODES: usize = 16;

fn default_nodes() -> usize {
    DEFAULT_DENSITY_NODES
}

/// Density part of `μ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Density {
    /// `φ(s) = value` on `support`.
    Constant {
        value: f64,
        support: [f64; 2],
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    /// Piecewise-linear interpolation of `(s, φ(s))` samples; `support` must
    /// lie inside the sampled range.
    Table {
        points: Vec<[f64; 2]>,
        support: [f64; 2],
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
}

impl Density {
    pub fn support(&self) -> [f64; 2] {
        match self {
            Density::Constant { support, .. } | Density::Table { support, .. } => *support,
        }
    }

    pub fn nodes(&self) -> usize {
        match self {
            Density::Constant { nodes, .. } | Density::Table { nodes, .. } => *nodes,
        }
    }

    fn with_nodes(&self, n: usize) -> Density {
        let mut d = self.clone();
        match &mut d {
            Density::Constant { nodes, .. } | Density::Table { nodes, .. } => *nodes = n,
        }
        d
    }

    /// Density value at `s`.
    pub fn value(&self, s: f64) -> f64 {
        match self {
            Density::Constant { value, .. } => *value,
            Density::Table { points, .. } => {
                if s <= points[0][0] {
                    return points[0][1];
                }
                for w in points.windows(2) {
                    let (a, b) = (w[0], w[1]);
                    if s <= b[0] {
                        let t = (s - a[0]) / (b[0] - a[0]);
                        return a[1] + t * (b[1] - a[1]);
                    }
                }
                points[points.len() - 1][1]
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let [lo, hi] = self.support();
        if !(lo > 0.0 && lo < hi && hi <= 1.0) {
            return Err(Error::Domain(format!("density support [{lo}, {hi}] must satisfy 0 < s₀ < S₀ ≤ 1")));
        }
        if self.nodes() == 0 {
            return Err(Error::Domain("density needs at least one quadrature node".into()));
        }
        match self {
            Density::Constant { value, .. } => {
                if !(value.is_finite() && *value >= 0.0) {
                    return Err(Error::Domain(format!("density value {value} must be finite and nonnegative")));
                }
            }
            Density::Table { points, .. } => {
                if points.len() < 2 {
                    return Err(Error::Domain("density table needs at least two points".into()));
                }
                if points.windows(2).any(|w| w[1][0] <= w[0][0]) {
                    return Err(Error::Domain("density table abscissae must increase".into()));
                }
                if points.iter().any(|p| !(p[1].is_finite() && p[1] >= 0.0)) {
                    return Err(Error::Domain("density table values must be finite and nonnegative".into()));
                }
                if points[0][0] > lo || points[points.len() - 1][0] < hi {
                    return Err(Error::Domain("density table does not cover its support".into()));
                }
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMeasure {
    #[serde(default)]
    atoms: Vec<[f64; 2]>,
    #[serde(default)]
    density: Option<Density>,
}

/// Finite measure on `(0, 1]` with support bounded away from zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMeasure")]
pub struct MeasureSpec {
    atoms: Vec<[f64; 2]>,
    density: Option<Density>,
    #[serde(skip)]
    nodes: Vec<(f64, f64)>,
}

impl TryFrom<RawMeasure> for MeasureSpec {
    type Error = Error;

    fn try_from(raw: RawMeasure) -> Result<Self> {
        MeasureSpec::new(raw.atoms.iter().map(|a| (a[0], a[1])).collect(), raw.density)
    }
}

impl MeasureSpec {
    pub fn new(atoms: Vec<(f64, f64)>, density: Option<Density>) -> Result<Self> {
        for &(s, w) in &atoms {
            if !(s > 0.0 && s <= 1.0) {
                return Err(Error::Domain(format!("atom location {s} outside (0, 1]")));
            }
            if !(w > 0.0 && w.is_finite()) {
                return Err(Error::Domain(format!("atom weight {w} must be positive and finite")));
            }
        }
        if let Some(d) = &density {
            d.validate()?;
        }
        let mut nodes: Vec<(f64, f64)> = atoms.clone();
        if let Some(d) = &density {
            let [lo, hi] = d.support();
            let rule = GaussLegendre::new(d.nodes());
            for (s, w) in rule.mapped(lo, hi) {
                let wd = w * d.value(s);
                if wd > 0.0 {
                    nodes.push((s, wd));
                }
            }
        }
        let total: f64 = nodes.iter().map(|n| n.1).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Domain("measure must have finite positive total mass".into()));
        }
        Ok(Self { atoms: atoms.iter().map(|&(s, w)| [s, w]).collect(), density, nodes })
    }

    /// `w·δ(s)`.
    pub fn dirac(s: f64, w: f64) -> Result<Self> {
        Self::new(vec![(s, w)], None)
    }

    /// `Σ_{k=2}^{K} c_k δ(1 − 1/k)`, together with an estimate of the
    /// discarded mass `Σ_{k>K} c_k` (summed until the terms fall below 1e-18
    /// or 10⁶ extra terms, whichever comes first).
    pub fn dirac_series<C: Fn(usize) -> f64>(k_max: usize, c: C) -> Result<(Self, f64)> {
        if k_max < 2 {
            return Err(Error::Domain("series truncation needs K ≥ 2".into()));
        }
        let atoms = (2..=k_max).map(|k| (1.0 - 1.0 / k as f64, c(k))).collect();
        let mut tail = 0.0;
        for k in k_max + 1..k_max + 1_000_001 {
            let t = c(k);
            tail += t;
            if t.abs() < 1e-18 {
                break;
            }
        }
        Ok((Self::new(atoms, None)?, tail))
    }

    pub fn atoms(&self) -> &[[f64; 2]] {
        &self.atoms
    }

    pub fn density(&self) -> Option<&Density> {
        self.density.as_ref()
    }

    /// Flattened `(s, weight)` quadrature nodes: atoms first, then density
    /// nodes in increasing `s`.
    pub fn nodes(&self) -> &[(f64, f64)] {
        &self.nodes
    }

    /// Same measure with the density node count replaced.
    pub fn with_density_nodes(&self, n: usize) -> Result<Self> {
        let atoms = self.atoms.iter().map(|a| (a[0], a[1])).collect();
        Self::new(atoms, self.density.as_ref().map(|d| d.with_nodes(n)))
    }

    /// `∫ F dμ`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.nodes.iter().map(|&(s, w)| w * f(s)).sum()
    }

    /// `μ((0, 1])`.
    pub fn total_mass(&self) -> f64 {
        self.integrate(|_| 1.0)
    }

    /// `μ({1})`; the density never charges a point.
    pub fn mass_at_one(&self) -> f64 {
        self.atoms.iter().filter(|a| a[0] == 1.0).map(|a| a[1]).sum()
    }

    /// Smallest order charged by `μ`.
    pub fn support_min(&self) -> f64 {
        let a = self.atoms.iter().map(|a| a[0]).fold(f64::INFINITY, f64::min);
        let d = self.density.as_ref().map_or(f64::INFINITY, |d| d.support()[0]);
        a.min(d)
    }

    /// Largest order charged by `μ`.
    pub fn support_max(&self) -> f64 {
        let a = self.atoms.iter().map(|a| a[0]).fold(0.0, f64::max);
        let d = self.density.as_ref().map_or(0.0, |d| d.support()[1]);
        a.max(d)
    }
}
