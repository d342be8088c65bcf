//! Prediction-based control `x_{n+1} = (1-β_n) f(x_n) + β_n x_n` of one-dimensional
//! maps with a noisy gain `β_n = α + ℓ ξ_{n+1}`.
//!
//! The crate is split the way an experiment flows:
//!
//! * [`maps`]: the maps under control and their structural constants
//!   (equilibrium, trap interval, one-sided Lipschitz constants).
//! * [`noise`]: bounded symmetric noise laws, reproducible streams and
//!   expected-log functionals.
//! * [`stability`]: gain constants, noise regions, the two-cycle threshold
//!   and envelope certificates of global stability.
//! * [`dynamics`]: seeded simulation and trajectory classification.
//! * [`sweep`]: bifurcation tables and `(α, ℓ)` stability rasters.
//! * [`verify`]: the executable acceptance checks.
//!
//! Deterministic math is generic over [`scalar::Real`] (or the field-only
//! [`scalar::Scalar`] for rational quantities); the aliases below pin the
//! common instantiations.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod maps;
pub mod noise;
pub mod scalar;
pub mod stability;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};

use num_rational::BigRational;

/// Map over `f64`, the default working precision.
pub type Map = maps::MapSpec<f64>;
/// Map over `f32`.
pub type Map32 = maps::MapSpec<f32>;
/// Structural constants of a [`Map`].
pub type Probe = maps::MapProbe<f64>;
/// Piecewise-linear map with `f64` coefficients.
pub type Pwl = maps::PiecewiseLinear<f64>;
/// Piecewise-linear map in exact rational arithmetic.
pub type ExactPwl = maps::PiecewiseLinear<BigRational>;
/// Envelope over `f64`.
pub type Envelope = stability::EnvelopeSpec<f64>;

/// Exact rational number.
pub type Rational = BigRational;
