//! Simulation and analysis of polarization transport in disordered dipolar
//! spin ensembles.
//!
//! The crate is organized around a single pipeline: [`ensemble`] generates
//! disordered spin configurations, [`rates`] converts them into golden-rule
//! transfer-rate networks, [`ctrw`] and [`rateq`] evolve polarization over
//! those networks (stochastically and deterministically), [`hydro`] and
//! [`lattice`] provide the matching continuum and lattice hydrodynamic
//! models, [`cluster`] handles small exact-diagonalization problems
//! (linewidths, DEER, hyperfine leakage), and [`fitkit`] extracts transport
//! coefficients from any of the resulting curves.
//!
//! Units throughout: lengths in nm, times in us, rates in 1/us, and all
//! frequencies (detunings, couplings, drive strengths) in angular units of
//! rad/us, so 1 MHz = 2*pi rad/us.

pub mod cluster;
pub mod constants;
pub mod ctrw;
pub mod curve;
pub mod ensemble;
mod error;
pub mod fitkit;
pub mod hydro;
pub mod lattice;
pub mod quad;
pub mod rateq;
pub mod rates;
pub mod rng;
pub mod special;
pub mod stats;

pub use curve::Curve;
pub use error::{Error, Result};
