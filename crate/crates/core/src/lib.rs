//! Pseudo-spectral solver for the two-component shallow-water system with
//! constant vorticity on the circle, in Eulerian and flow-map form.

pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod eulerian;
pub mod lagrangian;
pub mod model;
pub mod spectral;
pub mod timestepper;

pub use error::{Error, Result};
pub use eulerian::{EulerianState, RhsForm};
pub use lagrangian::LagrangianState;
pub use model::{derive_coefficients, Branch, DerivedCoefficients, InitialCondition, ModelParams};
pub use spectral::{DiffeoMap, Field, SpectralGrid};
pub use timestepper::{FormulationKind, RunOutcome, RunStatus, Simulation, StepControl};
