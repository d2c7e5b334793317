//! Experiment driver for `helmscat`: JSON configs in, CSV tables, a
//! manifest with checksums, and gnuplot scripts out.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // `!(x > 0)` also rejects NaN

pub mod calibrate;
pub mod config;
pub mod error;
pub mod experiment;
pub mod manifest;
pub mod plots;
pub mod presets;

pub use calibrate::{calibrate_floor, richardson_floor, Calibration};
pub use config::{ExperimentConfig, ExperimentKind};
pub use error::{LabError, LabResult};
pub use experiment::{run_experiment, Row, RunOutcome, SweepResult};
pub use manifest::Manifest;
pub use plots::emit_plots;
