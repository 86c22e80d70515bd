//! Experiment harness around `omnistat-core`: configuration, synthetic
//! distributions, hypothesis classes, file formats, reports and the
//! acceptance checks.

pub mod acceptance;
pub mod config;
pub mod error;
pub mod experiment;
pub mod families;
pub mod formats;
pub mod hypotheses;
pub mod minimax;
pub mod svg;
pub mod sweep;
pub mod synth;

pub use error::{Error, Result};
pub use omnistat_core as core;
