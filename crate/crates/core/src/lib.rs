//! Loschmidt-echo toolkit for the kicked rotator on the torus.
//!
//! The crate is organised bottom-up:
//!
//! * [`maps`] — classical standard-map dynamics, tangent dynamics, Lyapunov
//!   exponents, sticking times and action accumulation.
//! * [`ensembles`] — Monte Carlo ensembles matched to wave packets, action
//!   distributions `P(s)` and diffusion fits.
//! * [`qdyn`] — torus quantization, coherent states, split-operator Floquet
//!   evolution, the Loschmidt echo and its saturation.
//! * [`dephasing`] — semiclassical echo estimators built on `P(s)`.
//! * [`levy`] — Lévy-stable densities, spectrum fits, Levenberg–Marquardt
//!   model fits and critical-point analysis of the Lévy echo model.
//! * [`decayfit`] — decay-law extraction `M ≈ exp(−c₀ σ^ν t^α)`,
//!   characteristic times, time-scale exponents and critical perturbations.
//!
//! Shared numerics live in [`numerics`].

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod decayfit;
pub mod dephasing;
pub mod ensembles;
pub mod error;
pub mod levy;
pub mod maps;
pub mod numerics;
pub mod qdyn;

pub use error::{Error, Result};

/// Full turn, the period of both torus coordinates.
pub const TWO_PI: f64 = 2.0 * std::f64::consts::PI;
