//! Four-level channel × valley model of an inter-channel transfer.
//!
//! States are ordered `{|e,L⟩, |g,L⟩, |e,R⟩, |g,R⟩}`; the electron starts in
//! `|g,L⟩` and the fidelity is the final `|g,R⟩` population.

mod evolve;
mod integrator;
mod montecarlo;

pub use evolve::{evolve_transfer, MovingConfig, TransferHamiltonian, TransferOutcome, TransferScenario, TracePoint};
pub use integrator::{evolve_adaptive, rk4_reference, IntegratorOptions, IntegratorStats};
pub use montecarlo::{binomial, draw_seed, monte_carlo_success, run_draw, sample_valley_pair, DrawRecord, McConfig, McScenario, McSummary, CHANNEL_SEPARATION, SWEEP_TOLERANCE};

use crate::disorder::LandscapeBundle;
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, C64};
use crate::units::HBAR;
use nalgebra::{Matrix2, Matrix4};
use serde::{Deserialize, Serialize};

pub type Matrix4c = Matrix4<C64>;

pub const INITIAL_INDEX: usize = 1;
pub const TARGET_INDEX: usize = 3;

/// Instantaneous parameters of the two-channel valley Hamiltonian (μeV).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelValleyParams {
    pub epsilon: f64,
    pub t_c: f64,
    pub delta_l: C64,
    pub delta_r: C64,
}

impl ChannelValleyParams {
    pub fn validate(&self) -> Result<()> {
        let finite = self.epsilon.is_finite()
            && self.t_c.is_finite()
            && self.delta_l.re.is_finite()
            && self.delta_l.im.is_finite()
            && self.delta_r.re.is_finite()
            && self.delta_r.im.is_finite();
        if !finite {
            return Err(invalid("params", "non-finite value"));
        }
        if self.t_c < 0.0 {
            return Err(invalid("t_c", format!("must be ≥ 0, got {}", self.t_c)));
        }
        Ok(())
    }
}

/// The four inter-channel tunneling elements in the valley eigenbasis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TunnelElements {
    pub t_gg: C64,
    pub t_ee: C64,
    pub t_eg: C64,
    pub t_ge: C64,
}

pub fn tunnel_elements(t_c: f64, phi_l: f64, phi_r: f64) -> TunnelElements {
    let d = phi_l - phi_r;
    let h = 0.5 * t_c;
    TunnelElements {
        t_gg: (C64::from_polar(1.0, -d) + 1.0) * h,
        t_ee: (C64::from_polar(1.0, d) + 1.0) * h,
        t_eg: (C64::from_polar(1.0, phi_l) - C64::from_polar(1.0, phi_r)) * h,
        t_ge: (C64::from_polar(1.0, -phi_r) - C64::from_polar(1.0, -phi_l)) * h,
    }
}

/// Valley phase; zero when Δ vanishes.
pub(crate) fn phase(delta: C64) -> f64 {
    if delta.norm() == 0.0 {
        0.0
    } else {
        delta.arg()
    }
}

/// H̃ in the valley-diagonal basis.
pub fn build_tilde_h(p: &ChannelValleyParams) -> Matrix4c {
    let t = tunnel_elements(p.t_c, phase(p.delta_l), phase(p.delta_r));
    let (al, ar) = (p.delta_l.norm(), p.delta_r.norm());
    let e = 0.5 * p.epsilon;
    let z = c(0.0, 0.0);
    Matrix4c::new(
        c(e + al, 0.0), z, t.t_ee, t.t_eg,
        z, c(e - al, 0.0), t.t_ge, t.t_gg,
        t.t_ee.conj(), t.t_ge.conj(), c(-e + ar, 0.0), z,
        t.t_eg.conj(), t.t_gg.conj(), z, c(-e - ar, 0.0),
    )
}

/// Rotation taking the (z₊, z₋) valley basis to (e, g) for valley phase φ.
pub fn valley_rotation(phi: f64) -> Matrix2<C64> {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let w = C64::from_polar(s, phi);
    Matrix2::new(c(s, 0.0), w, -w.conj(), c(s, 0.0))
}

fn block_rotation(phi_l: f64, phi_r: f64) -> Matrix4c {
    let mut u = Matrix4c::zeros();
    u.fixed_view_mut::<2, 2>(0, 0).copy_from(&valley_rotation(phi_l));
    u.fixed_view_mut::<2, 2>(2, 2).copy_from(&valley_rotation(phi_r));
    u
}

/// Smallest finite-difference step accepted by [`gauge_correction`], as a
/// fraction of the landscape grid spacing.
pub const MIN_GAUGE_DX_FRACTION: f64 = 1e-4;

/// Frame correction −iħ U_v dU_v†/dτ for an electron at `x` (nm) moving at
/// `v` (nm/ns) through `landscape`, whose first two lines are the L and R
/// channels. Central differences with half-width `dx`, then Hermitized.
pub fn gauge_correction(landscape: &LandscapeBundle, x: f64, dx: f64, v: f64) -> Result<Matrix4c> {
    if landscape.channels.len() < 2 {
        return Err(invalid("landscape", "need two channels"));
    }
    let min = MIN_GAUGE_DX_FRACTION * landscape.grid.dx;
    if !(dx >= min) {
        return Err(Error::StepTooSmall { dx, min });
    }
    if v == 0.0 {
        return Ok(Matrix4c::zeros());
    }
    let (l, r) = (&landscape.channels[0], &landscape.channels[1]);
    let u_at = |x: f64| -> Result<Matrix4c> { Ok(block_rotation(phase(l.delta(x)?), phase(r.delta(x)?))) };
    let u = u_at(x)?;
    let du_dag = (u_at(x + dx)?.adjoint() - u_at(x - dx)?.adjoint()).unscale(2.0 * dx);
    let a = (u * du_dag).map(|z| z * c(0.0, -HBAR * v));
    Ok((a + a.adjoint()).unscale(2.0))
}

/// Analytic frame correction for one channel block with valley phase φ
/// changing at rate φ̇ (rad/ns).
pub fn gauge_block(phi: f64, phi_dot: f64) -> Matrix2<C64> {
    let w = C64::from_polar(1.0, phi);
    let k = 0.5 * HBAR * phi_dot;
    Matrix2::new(c(-k, 0.0), -w * k, -w.conj() * k, c(k, 0.0))
}

/// Canonical transfer schedule with linear detuning ramp and sinusoidal
/// tunnel pulse, followed by a settle window with both held.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferSchedule {
    pub epsilon0: f64,
    pub t0: f64,
    pub tau_tot: f64,
    #[serde(default = "default_settle")]
    pub settle: f64,
}

fn default_settle() -> f64 {
    5.0
}

/// Time dependence of (ε, t_c) during a transfer.
pub trait Schedule: Sync {
    /// (ε, t_c) in μeV at time τ (ns).
    fn eval(&self, tau: f64) -> Result<(f64, f64)>;
    fn tau_tot(&self) -> f64;
    fn settle(&self) -> f64;
}

impl TransferSchedule {
    pub fn new(epsilon0: f64, t0: f64, tau_tot: f64) -> Result<Self> {
        let s = Self { epsilon0, t0, tau_tot, settle: default_settle() };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau_tot > 0.0 && self.tau_tot.is_finite()) {
            return Err(invalid("tau_tot", format!("must be > 0, got {}", self.tau_tot)));
        }
        if !(self.settle >= 0.0) {
            return Err(invalid("settle", "must be ≥ 0"));
        }
        if !(self.t0 >= 0.0 && self.t0.is_finite() && self.epsilon0.is_finite()) {
            return Err(invalid("t0", "must be finite and ≥ 0"));
        }
        Ok(())
    }

    pub fn end(&self) -> f64 {
        self.tau_tot + self.settle
    }
}

impl Schedule for TransferSchedule {
    fn eval(&self, tau: f64) -> Result<(f64, f64)> {
        schedule_eval(self, tau)
    }
    fn tau_tot(&self) -> f64 {
        self.tau_tot
    }
    fn settle(&self) -> f64 {
        self.settle
    }
}

pub fn schedule_eval(s: &TransferSchedule, tau: f64) -> Result<(f64, f64)> {
    if tau < 0.0 || tau.is_nan() {
        return Err(Error::OutOfDomain { x: tau, lo: 0.0, hi: s.end() });
    }
    if tau >= s.tau_tot {
        return Ok((s.epsilon0, 0.0));
    }
    let u = tau / s.tau_tot;
    Ok((s.epsilon0 * (2.0 * u - 1.0), s.t0 * (std::f64::consts::PI * u).sin()))
}
