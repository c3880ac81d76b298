//! Finite-volume simulator and parameter-regime analyzer for zero-flux
//! attraction-repulsion chemotaxis systems with nonlinear diffusion,
//! nonlinear sensitivities/productions and gradient-dependent damping
//! sources.
//!
//! The crate is organised around the pipeline of a single experiment:
//!
//! * [`params`] — model coefficients, the damping-exponent threshold and
//!   the interpolation-exponent machinery used by the boundedness regime
//!   analysis;
//! * [`mesh`] — cell-centered finite-volume geometry on boxes, disks and
//!   balls with zero-flux boundaries;
//! * [`field`] / [`operators`] — cell fields and the discrete spatial
//!   operators (two-point-flux diffusion, upwind chemotactic convection,
//!   least-squares gradients, pointwise sources);
//! * [`sparse`] — CSR operators and preconditioned conjugate-gradient
//!   solvers, including the deflated zero-mean solve for the nonlocal
//!   chemical equations;
//! * [`chemical`] — elliptic, backward-Euler parabolic and nonlocal
//!   zero-mean solves for the chemoattractant and chemorepellent;
//! * [`stepper`] — the IMEX time step and the simulation driver;
//! * [`diagnostics`] — per-step time series and the blow-up detector;
//! * [`config`] / [`presets`] / [`output`] / [`sweep`] — run configuration,
//!   bundled experiment scenarios, writers (CSV, legacy VTK, SVG) and
//!   parameter sweeps.

pub mod chemical;
pub mod config;
pub mod diagnostics;
pub mod error;
pub mod field;
pub mod mesh;
pub mod operators;
pub mod output;
pub mod params;
pub mod presets;
pub mod sparse;
pub mod stepper;
pub mod sweep;

pub use error::{Error, Result};
pub use field::{FaceFlux, Field};
pub use mesh::Mesh;
pub use params::{GnExponents, ModelParams, RegimeReport};
pub use stepper::{RunConfig, RunOutput, State};
