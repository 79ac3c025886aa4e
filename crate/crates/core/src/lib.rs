//! Downlink simulator for holographic-metasurface receivers under a
//! multi-altitude LEO constellation, together with the closed-form
//! stochastic-geometry quantities it is checked against.
//!
//! The pipeline per trial is: [`geometry::sample_constellation`] →
//! [`channel::realize_channels`] → [`beamforming::optimize_holographic`] →
//! baseband assembly → combiners → [`beamforming::evaluate_sinr`].
//! [`montecarlo`] runs and aggregates trials; [`oracle`] holds the
//! independent reference engines used in tests.

// `!(x > 0.0)` is used on purpose so that NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod beamforming;
pub mod channel;
pub mod config;
pub mod error;
pub mod geometry;
pub mod linalg;
pub mod montecarlo;
pub mod oracle;
pub mod report;
pub mod specfun;

pub use config::ConfigFile;
pub use error::{Error, Result};
pub use geometry::ShellGeometry;
pub use montecarlo::{run_sweep, CombinerKind, CouplingMode, Scenario, Simulator, SweepTable};
pub use report::ResultsCsv;
