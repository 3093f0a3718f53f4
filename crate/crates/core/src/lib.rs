//! Mixed-order nonlocal elliptic operators built from fractional gradients.
//!
//! The crate is organised bottom-up:
//!
//! * [`special`] – Gamma function, the normalising constants of the
//!   fractional gradient and the Riesz potential, and closed-form integrals.
//! * [`quadrature`] – Gauss–Legendre rules and oscillatory-integral helpers.
//! * [`grid`] – periodic computational box, grid functions, FFT multipliers.
//! * [`fractional`] – fractional gradient (spectral and singular-integral),
//!   Riesz potential, reconstruction from the fractional gradient.
//! * [`measure`] – the order-mixing measure on `(0, 1]`.
//! * [`coefficients`] – coefficient fields, the weight `f`, structural checks.
//! * [`variational`] – inner products, bilinear forms and their certificates.
//! * [`probes`] – numeric probes for the norm inequalities.
//! * [`fredholm`] – Galerkin assembly, resonance set and the solvability
//!   trichotomy.

// `!(x > 0.0)` is the NaN-rejecting form used for argument checks.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod checks;
pub mod coefficients;
pub mod domain;
pub mod error;
pub mod fractional;
pub mod fredholm;
pub mod grid;
pub mod measure;
pub mod probes;
pub mod quadrature;
pub mod special;
pub mod variational;

pub use error::{Error, Result};
