//! Linearized quantum dynamics of two linearly coupled, lossy nondegenerate
//! down-conversion waveguides under strong classical pumping.
//!
//! [`model`] holds the device parameters and incident beams, [`dynamics`] the
//! analytic propagator and regime classification, [`noise`] the second
//! moments, [`statistics`] the observables built from them. [`oracle`]
//! contains brute-force reference integrators used to check all of the above.

// Negated comparisons are used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dynamics;
pub mod error;
pub mod model;
pub mod noise;
pub mod oracle;
pub mod sampling;
pub mod statistics;

pub use dynamics::{classify_regime, Propagator, Regime};
pub use error::{Error, Result};
pub use model::{derive_params, input_moments, CouplerConfig, DerivedParams, InputField, InputMode, Mode};
pub use noise::{evolve, Evolution, FieldState, NoiseState};
