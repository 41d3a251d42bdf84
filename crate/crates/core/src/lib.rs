//! Conveyor-mode electron shuttling in disordered Si/SiGe quantum wells.
//!
//! The crate is organized by subsystem:
//!
//! * [`disorder`] generates correlated valley, potential and tunnel
//!   disorder on point sets and trajectories.
//! * [`transfer`] evolves the four-level channel × valley model of an
//!   inter-channel transfer, paused or while moving.
//! * [`lindblad`] evolves the ten-level five-pocket model of a 2D shuttler
//!   under phonon-induced relaxation and estimates pocket leakage.
//! * [`electrostatics`] builds model gate potentials, solves the 2D
//!   single-particle problem and maps the operating window.
//! * [`harness`] runs reproducible sweeps and writes CSV/JSON output.

pub mod disorder;
pub mod electrostatics;
pub mod error;
pub mod harness;
pub mod transfer;
pub mod linalg;
pub mod lindblad;
pub mod rng;
pub mod units;

pub use error::{Error, Result};
