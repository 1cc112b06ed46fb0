//! Guidance, navigation and control around small bodies with in-flight
//! gravity-field identification.
//!
//! The crate simulates one or many spacecraft station-keeping on circular
//! orbits around an asteroid whose spherical-harmonics gravity field is
//! unknown a priori. Each spacecraft runs two unscented Kalman filters
//! (orbit and attitude) that jointly estimate the navigation state and the
//! low-degree gravity coefficients, and a pair of receding-horizon LTV-MPC
//! controllers whose internal model is refreshed from the identified
//! coefficients. A constellation layer fuses the per-spacecraft gravity
//! estimates by inverse-variance weighting.
//!
//! Module map:
//! - [`elements`]: orbital-element and attitude-parameter algebra (MEE,
//!   classical elements, MRPs, frames).
//! - [`gravity`]: spherical-harmonics field, solar perturbations,
//!   gravity-gradient torque.
//! - [`ode`]: embedded Runge-Kutta 4(5) integrator with fixed, reproducible
//!   settings.
//! - [`dynamics`]: truth propagation with actuator transients and the filter
//!   process flows.
//! - [`sensors`]: camera/LIDAR landmark measurements, star tracker and gyro
//!   simulation, and the matching noiseless measurement functions.
//! - [`ukf`]: generic unscented Kalman filter with innovation-driven process
//!   noise estimation.
//! - [`navfilters`]: orbit and attitude extended-state filters.
//! - [`guidance`]: closed-orbit reference generation and the stationary
//!   attitude reference.
//! - [`mpc`]: linearization, state-transition-matrix condensing and the
//!   receding-horizon controllers.
//! - [`qp`]: dense box-constrained quadratic programming with KKT
//!   certification.
//! - [`constellation`]: multi-spacecraft scheduling and gravity fusion.
//! - [`harness`]: scenario files, metrics, persistence and batch runs.

pub mod constellation;
pub mod dynamics;
pub mod elements;
pub mod error;
pub mod gravity;
pub mod guidance;
pub mod harness;
pub mod mpc;
pub mod navfilters;
pub mod ode;
pub mod qp;
pub mod sensors;
pub mod ukf;

pub use error::{Error, Result};

pub use constellation::{compare_modes, run_constellation, run_single, RunOutput, ScheduleAudit};
pub use harness::{MetricsReport, Scenario};
pub use navfilters::{AttitudeFilter, OrbitFilter};


pub use dynamics::{SpacecraftConfig, TruthState};
pub use elements::{ClassicalElements, Mee, Mrp, SphericalCoords};
pub use gravity::{AsteroidModel, GravityModel, MassDistribution, SolarModel};


pub use qp::{solve_box_qp, QpProblem, QpSolution};
pub use sensors::{CameraModel, Landmark, SensorSuite};
pub use ukf::{GaussianState, UkfNoise, UkfParams};
