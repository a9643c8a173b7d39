//! Optimal storage and retrieval of single-photon wave packets in an optically
//! thick Lambda-type ensemble.
//!
//! All quantities are dimensionless (see [`params::nondimensionalize_doc`]):
//! time in units of the inverse optical-coherence decay rate, position as a
//! fraction of the medium length, and the medium described by its optical depth
//! `d` and detuning `delta` alone.
//!
//! * [`kernel`]: retrieval-efficiency kernel, optimal spin wave.
//! * [`adiabatic`]: closed-form adiabatic retrieval and control shaping.
//! * [`fast`]: pi-pulse (photon-echo style) retrieval and storage.
//! * [`simulator`]: direct integration of the full equations of motion.
//! * [`optimizer`]: time-reversal iterations.

// `!(x > 0.0)` guards deliberately reject NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod error;
pub mod fast;
pub mod grid;
pub mod kernel;
pub mod mode;
pub mod optimizer;
pub mod params;
pub mod simulator;
pub mod special;

pub use error::{Error, Result};
pub use grid::{SpaceGrid, TimeGrid};
pub use mode::{ControlField, EfficiencyBreakdown, FieldMode, SpinWave, TimeReverse};
pub use params::MediumParams;

pub use num_complex::Complex64;
