//! Model gate electrostatics for clavier (1D) and clavette (2D) shuttlers.
//!
//! Gate voltages follow the sinusoidal conveyor drive with a π/2 phase step
//! between neighboring gates. The potential in the well is the gate pattern
//! blurred by a Gaussian screening kernel and scaled by a lever arm, which
//! stands in for a self-consistent Poisson solve. Orbital spectra come from a
//! finite-difference Schrödinger solve and tunnel couplings from the minimum
//! gap of a two-pocket configuration under a lateral field.

mod potential;
mod schrodinger;
mod tunnel;
mod window;

pub use potential::{potential_from_gates, potential_from_pattern, MAX_SPACING, PotentialGrid, Region, DEFAULT_LEVER_ARM, SCREENING_DEPTH};
pub use schrodinger::{solve_2d_schrodinger, SolverOptions, SpectrumResult};
pub use tunnel::{extract_tunnel_coupling, TunnelOptions, TwoLevelFit};
pub use window::{
    double_pocket_region, operating_window, orbital_scan, pocket_region, window_cell, write_scan_csv,
    write_window_csv, ScanPoint, Trajectory, WindowCell, WindowOptions, E_ORB_THRESHOLD_MEV, PITCH_RANGE,
    T_P_THRESHOLD_MEV, V_AMP_RANGE,
};

use crate::error::{invalid, Result};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_PI_2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Dimensionality {
    /// Stripe gates along y, driven by one signal per gate.
    Clavier,
    /// Square pixel gates driven by the sum of an x and a y signal.
    Clavette,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateLayout {
    /// nm
    pub pitch: f64,
    /// Gap between neighboring gates (nm).
    pub gap: f64,
    /// mV
    pub v_amp: f64,
    pub dimensionality: Dimensionality,
    /// rad/ns
    pub omega_x: f64,
    pub omega_y: f64,
    /// Phase of gate 0 at τ = 0. The default π/4 places a pocket halfway
    /// between gates 0 and 1.
    pub phase0: f64,
}

impl Default for GateLayout {
    fn default() -> Self {
        Self {
            pitch: 50.0,
            gap: 5.0,
            v_amp: 100.0,
            dimensionality: Dimensionality::Clavette,
            omega_x: 0.0,
            omega_y: 0.0,
            phase0: std::f64::consts::FRAC_PI_4,
        }
    }
}

/// Gates per unit cell along each axis.
pub const UNIT_CELL: usize = 4;

impl GateLayout {
    pub fn validate(&self) -> Result<()> {
        if !(self.pitch > 0.0 && self.pitch.is_finite()) {
            return Err(invalid("pitch", "must be > 0"));
        }
        if !(self.gap >= 0.0 && self.gap < self.pitch) {
            return Err(invalid("gap", format!("need 0 ≤ W < P, got W = {}", self.gap)));
        }
        if !self.v_amp.is_finite() || !self.omega_x.is_finite() || !self.omega_y.is_finite() {
            return Err(invalid("layout", "non-finite drive parameter"));
        }
        Ok(())
    }

    /// Phase offset of gate index i along one axis. The step is −π/2 so a
    /// positive Ω moves the pocket toward +x (+y).
    pub fn phase_offset(&self, i: i64) -> f64 {
        self.phase0 - FRAC_PI_2 * i as f64
    }

    /// Pocket velocity 2ΩP/π along each axis (nm/ns = m/s).
    pub fn velocity(&self) -> (f64, f64) {
        let f = 2.0 * self.pitch / std::f64::consts::PI;
        (f * self.omega_x, f * self.omega_y)
    }

    /// Heading of the pocket motion measured from the x axis.
    pub fn heading(&self) -> f64 {
        self.omega_y.atan2(self.omega_x)
    }

    /// Where the drive phase puts the pocket nearest the origin cell at τ.
    /// Gate i spans [iP + W/2, (i+1)P − W/2], so the voltage peak sits at
    /// x = P(½ + 2θ/π) for phase θ of gate 0.
    pub fn pocket_center(&self, tau: f64) -> (f64, f64) {
        let p = self.pitch;
        let at = |omega: f64| p * (0.5 + 2.0 * (self.phase0 + omega * tau) / std::f64::consts::PI);
        match self.dimensionality {
            Dimensionality::Clavier => (at(self.omega_x), 0.0),
            Dimensionality::Clavette => (at(self.omega_x), at(self.omega_y)),
        }
    }

    /// Voltage (mV) on gate i (clavier; j ignored) or (i, j) (clavette).
    pub fn voltage(&self, i: i64, j: i64, tau: f64) -> f64 {
        let half = 0.5 * self.v_amp;
        match self.dimensionality {
            Dimensionality::Clavier => half * (self.omega_x * tau + self.phase_offset(i)).cos(),
            Dimensionality::Clavette => {
                half * ((self.omega_x * tau + self.phase_offset(i)).cos()
                    + (self.omega_y * tau + self.phase_offset(j)).cos())
            }
        }
    }
}

/// Voltages on one unit cell: `UNIT_CELL` entries for clavier layouts and
/// `UNIT_CELL²` (row-major in j) for clavette layouts.
pub fn gate_voltages(layout: &GateLayout, tau: f64) -> Result<Vec<f64>> {
    layout.validate()?;
    let n = UNIT_CELL as i64;
    Ok(match layout.dimensionality {
        Dimensionality::Clavier => (0..n).map(|i| layout.voltage(i, 0, tau)).collect(),
        Dimensionality::Clavette => {
            (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).map(|(i, j)| layout.voltage(i, j, tau)).collect()
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn peak_voltage_at_zero_phase() {
        let mut l = GateLayout { phase0: 0.0, ..Default::default() };
        assert_eq!(l.voltage(0, 0, 0.0), 100.0);
        l.dimensionality = Dimensionality::Clavier;
        assert_eq!(l.voltage(0, 0, 0.0), 50.0);
    }

    #[test]
    fn unit_cell_repeats() {
        let l = GateLayout { omega_x: 0.7, omega_y: -0.3, ..Default::default() };
        for k in 0..50 {
            let tau = 0.37 * k as f64;
            for i in -5..5 {
                for j in -5..5 {
                    let a = l.voltage(i, j, tau);
                    assert!((a - l.voltage(i + 4, j, tau)).abs() < 1e-12);
                    assert!((a - l.voltage(i, j + 4, tau)).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn velocity_and_heading() {
        let l = GateLayout { omega_x: 1.0, omega_y: 1.0, ..Default::default() };
        let (vx, vy) = l.velocity();
        assert!((vx - 100.0 / std::f64::consts::PI).abs() < 1e-12);
        assert_eq!(vx, vy);
        assert!((l.heading() - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        let (x0, y0) = l.pocket_center(0.0);
        assert_eq!((x0, y0), (50.0, 50.0));
    }

    #[test]
    fn rejects_bad_gap() {
        let l = GateLayout { gap: 60.0, ..Default::default() };
        assert!(gate_voltages(&l, 0.0).is_err());
    }
}
