//! Five-pocket, two-valley model of a 2D conveyor under phonon-induced
//! relaxation, evolved with a Lindblad master equation.
//!
//! Basis index `2j + s` is valley `s` (0 = z₊, 1 = z₋) in pocket `j`;
//! pocket 0 is the central pocket and 1..4 are its neighbors at ±x, ±y.

mod phonons;
mod rates;
mod shuttle;
mod step;

pub use phonons::{
    form_factor_sq, spectral_density_eps, spectral_density_t, FormFactorKind, PhononParams, SpectralTable,
    QUADRATURE_TOL, TABLE_MAX_UEV, TABLE_MIN_UEV, TABLE_POINTS,
};
pub use rates::{compute_rates, coupling_weights, rate_generator, RateMatrix, Spectrum};
pub use shuttle::{phonon_table_for, run_shuttle, run_shuttle_in, Increment, ShuttleConfig, ShuttleRun, ShuttleTracePoint, StepPolicy};
pub use step::{
    check_density, dense_liouvillian, lindblad_step, DensityChecks, HERMITICITY_TOL,
    POSITIVITY_TOL, TRACE_TOL,
};

use crate::error::{invalid, Result};
use crate::linalg::{c, C64};
use nalgebra::{DMatrix, SMatrix};

pub const POCKETS: usize = 5;
pub const LEVELS: usize = 2 * POCKETS;

pub type Matrix10 = SMatrix<C64, LEVELS, LEVELS>;

/// Pocket offsets from the central pocket in units of the pocket spacing.
pub const POCKET_OFFSETS: [[f64; 2]; POCKETS] = [[0.0, 0.0], [1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]];

/// Instantaneous parameters of the five-pocket Hamiltonian (μeV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FivePocketModel {
    pub eps: [f64; POCKETS],
    /// Hopping from the central pocket to neighbors 1..4.
    pub t_hop: [f64; POCKETS - 1],
    pub delta: [C64; POCKETS],
    /// Distance between neighboring pockets (nm), 4P.
    pub spacing: f64,
}

impl FivePocketModel {
    pub fn validate(&self) -> Result<()> {
        if self.t_hop.iter().any(|t| !(*t >= 0.0) || !t.is_finite()) {
            return Err(invalid("t_hop", "must be finite and ≥ 0"));
        }
        if self.eps.iter().any(|e| !e.is_finite()) || self.delta.iter().any(|d| !d.re.is_finite() || !d.im.is_finite()) {
            return Err(invalid("model", "non-finite value"));
        }
        Ok(())
    }

    /// Pocket centers relative to the central pocket (nm).
    pub fn positions(&self) -> [[f64; 2]; POCKETS] {
        POCKET_OFFSETS.map(|[a, b]| [a * self.spacing, b * self.spacing])
    }
}

/// H = H_os + H_hop + H_val in the site ⊗ valley basis.
pub fn build_hamiltonian(m: &FivePocketModel) -> Matrix10 {
    let mut h = Matrix10::zeros();
    for j in 0..POCKETS {
        for s in 0..2 {
            h[(2 * j + s, 2 * j + s)] = c(m.eps[j], 0.0);
        }
        h[(2 * j, 2 * j + 1)] = m.delta[j];
        h[(2 * j + 1, 2 * j)] = m.delta[j].conj();
    }
    for (k, &t) in m.t_hop.iter().enumerate() {
        let j = k + 1;
        for s in 0..2 {
            h[(s, 2 * j + s)] = c(t, 0.0);
            h[(2 * j + s, s)] = c(t, 0.0);
        }
    }
    h
}

pub(crate) fn to_dynamic(m: &Matrix10) -> DMatrix<C64> {
    DMatrix::from_fn(LEVELS, LEVELS, |i, j| m[(i, j)])
}

/// Ground valley state of a single pocket with coupling Δ, as (z₊, z₋)
/// amplitudes.
pub fn valley_ground(delta: C64) -> [C64; 2] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let phi = if delta.norm() == 0.0 { 0.0 } else { delta.arg() };
    [-C64::from_polar(s, phi), c(s, 0.0)]
}
