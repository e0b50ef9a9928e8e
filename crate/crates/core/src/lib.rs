//! Nonlinear PI and Nussbaum-gain control of first-order plants with
//! sector-bounded nonlinearity, behind a fast parasitic first-order filter
//! ẏ = M(x − y).
//!
//! The crate covers
//!
//! - gain functions κ(z) with exact or numerical integrals and a finite-horizon
//!   Nussbaum property scan ([`gains`]);
//! - the plant family and sector checks ([`plant`]);
//! - the Nussbaum-gain and nonlinear PI controllers ([`control`]);
//! - numeric certificates for the sufficient stability conditions, including
//!   positive definiteness of the matrix behind the Lyapunov-like function S
//!   ([`certify`]);
//! - fixed-step RK4 simulation with step-halving verification and an S(t)
//!   monitor ([`sim`]);
//! - the TOML scenario and sweep formats ([`config`]) and the small text
//!   grammars for gains and nonlinearities ([`expr`]).

// `!(a <= b)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod certify;
pub mod config;
pub mod control;
pub mod expr;
pub mod gains;
pub mod ode;
pub mod plant;
pub mod quadrature;
pub mod sim;

pub use certify::{certify, CertificateReport, CertifyOptions};
pub use config::{parse_scenario, ScenarioFile, SweepFile};
pub use control::ControllerConfig;
pub use gains::{nussbaum_scan, GainSpec, ScanVerdict};
pub use plant::{PlantConfig, PlantKind, SectorNonlinearity};
pub use sim::{detect_outcome, run_scenario, simulate, Outcome, Scenario, Trajectory, Verdict};
