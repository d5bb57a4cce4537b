//! Physical constants for the NV / P1 system, in angular units (rad/us).

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Convert a linear frequency in MHz to angular rad/us.
pub const fn mhz(f: f64) -> f64 {
    2.0 * PI * f
}

/// Physical constants of the defect platform.
///
/// All frequencies are stored as angular frequencies in rad/us
/// (1 MHz = 2*pi rad/us). Immutable after construction; alternative values
/// enter only through deserialized configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhysicalConstants {
    /// Dipolar coupling strength, rad/us * nm^3.
    pub j0: f64,
    /// Electron gyromagnetic ratio, rad/us per G.
    pub gamma_e: f64,
    /// 14N nuclear gyromagnetic ratio, rad/us per G.
    pub gamma_n: f64,
    /// Nuclear quadrupole splitting, rad/us.
    pub q_quad: f64,
    /// On-axis hyperfine couplings (P1 axis parallel to B), rad/us.
    pub a_par_1: f64,
    pub a_perp_1: f64,
    /// Off-axis hyperfine couplings (other three crystal axes), rad/us.
    pub a_par_2: f64,
    pub a_perp_2: f64,
    /// NV ground-state zero-field splitting, rad/us.
    pub d_gs: f64,
    /// Number density of carbon sites in diamond, nm^-3 (for ppm conversion).
    pub carbon_density: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            j0: mhz(52.0),
            gamma_e: mhz(2.8),
            gamma_n: mhz(-0.307e-3),
            q_quad: mhz(-4.95),
            a_par_1: mhz(114.0),
            a_perp_1: mhz(81.0),
            a_par_2: mhz(85.0),
            a_perp_2: mhz(99.0),
            d_gs: mhz(2870.0),
            carbon_density: 176.5,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn angular_units() {
        let c = PhysicalConstants::default();
        assert!((c.j0 - 2.0 * PI * 52.0).abs() < 1e-12);
        assert!((c.gamma_e / (2.0 * PI) - 2.8).abs() < 1e-12);
        // 511 G puts the bare P1 splitting at (2*pi) x 1430.8 MHz.
        assert!((c.gamma_e * 511.0 / (2.0 * PI) - 1430.8).abs() < 1e-9);
    }
}
