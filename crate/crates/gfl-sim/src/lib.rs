//! Design and simulation toolkit for a grid-following inverter serving a
//! local load with fast, bursty transients (AI-compute-style demand).
//!
//! The crate covers the whole workflow:
//!
//! - [`params`]: hardware and design-rule constants with validated
//!   invariants, and the closed-form fast/slow timescales.
//! - [`plant`]: the four-state nonlinear plant (dq currents, DC link,
//!   filtered power measurement) and the PCC power balance.
//! - [`controller`]: droop reference, inner tracking loop, feedback
//!   linearization, and modulation-index monitoring.
//! - [`load`]: stochastic burst-workload traces through a first-order
//!   hardware filter, with certified amplitude and ramp-rate bounds.
//! - [`design`]: closed-form gain bounds, the sequential gain-selection
//!   procedure, modulation admissibility, and feasibility sweeps over load
//!   ramp rate.
//! - [`sim`]: fixed-step closed-loop integration of the full and reduced
//!   systems, the boundary-layer harness, and slow-manifold comparison.
//! - [`analysis`]: settling fits, modulation maxima, power-sharing means,
//!   and bound audits extracted from traces.
//! - [`validate`]: the end-to-end acceptance checks behind `gfl-sim
//!   validate`.
//! - [`config`] / [`cli`]: strict JSON configuration and the command-line
//!   entry points.
//!
//! The runnable examples under `examples/` walk through each capability;
//! `src/main.rs` is a thin subcommand wrapper over [`cli`].

pub mod analysis;
pub mod cli;
pub mod config;
pub mod controller;
pub mod design;
pub mod error;
pub mod load;
pub mod params;
pub mod plant;
pub mod presets;
pub mod sim;
pub mod validate;

pub use analysis::{MetricsReport, PowerSharing, TauFit, ViolationReport};
pub use config::{FeasibilityGrid, RunConfig};
pub use controller::{ClampConfig, ControlOutput, SaturationMode};
pub use design::{
    AdmissibilityReport, DesignMargins, DesignResult, FeasibilityCurve, GainBounds, SteadyState,
};
pub use error::{Error, Result};
pub use load::{BoundCertificate, LoadModel, LoadTrace};
pub use params::{
    ControlGains, DesignConstraints, SystemParams, TimescaleReport, ValidatedParams,
};
pub use plant::{PlantInputs, PlantState, PowerBalance};
pub use sim::{
    DcMode, InitialState, LoadSpec, ManifoldReport, Scenario, SimStatus, SimTrace,
};
