//! Spectral boundary-integral simulation of a two-phase Muskat interface
//! moving above a fixed curve where the permeability jumps.

pub mod brkernels;
pub mod cli;
pub mod curves;
pub mod diagnostics;
pub mod error;
pub mod evolution;
pub mod flat_strip;
pub mod spectral;
pub mod vorticity;

pub use brkernels::{AmplitudeField, GeometryOperators, VectorField};
pub use curves::{CurveSnapshot, FluidParams, PeriodicCurve};
pub use diagnostics::DiagnosticsRecord;
pub use error::{MuskatError, Result};
pub use evolution::{ExitReason, RunOutcome, RunSetup, SimState, StepGuards};
pub use spectral::SpectralScalar;
pub use vorticity::VorticityPair;
