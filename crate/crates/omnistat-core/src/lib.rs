//! Uniform approximation of convex Lipschitz functions on a dyadic grid,
//! sufficient-statistic representations of loss families, and the
//! calibrated-multiaccuracy training loop that turns a statistic predictor
//! into an omnipredictor.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! file system, the command line or a thread pool lives in the `omnistat`
//! companion crate.
//!
//! Module map:
//!
//! * [`gridfn`]: functions on `{0, .., m-1}`, differences, ReLUs, intervals,
//!   dyadic covers and the discrete Taylor expansion.
//! * [`codes`]: sign matrices whose Gram matrix is close to the identity.
//! * [`cvxbasis`]: the sub-linear basis for discrete convex Lipschitz
//!   functions and its certificates.
//! * [`stats`]: statistics families, uniform approximations, `k_lhat`.
//! * [`losses`]: newsvendor, `l_p`, Chebyshev-compressed `l_p`, GLM and
//!   convex-basis families.
//! * [`calibrate`]: δ-binning, calibration error, recalibration, the
//!   simulation distribution.
//! * [`multiacc`]: weak learners, the MA boosting loop, multiaccuracy.
//! * [`omni`]: `learn_omni`, omniprediction and the theorem-side checks.
#![no_std]
#![warn(missing_debug_implementations)]

extern crate alloc;

pub mod calibrate;
pub mod codes;
pub mod cvxbasis;
pub mod dist;
mod error;
pub mod gridfn;
pub mod losses;
pub mod multiacc;
pub mod omni;
pub mod stats;

pub use error::{Error, Result};
