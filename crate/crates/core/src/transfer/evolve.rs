use super::integrator::{evolve_adaptive, IntegratorOptions, IntegratorStats};
use super::{build_tilde_h, gauge_correction, ChannelValleyParams, Matrix4c, Schedule, INITIAL_INDEX, TARGET_INDEX};
use crate::disorder::{GateCorrelation, LandscapeBundle};
use crate::error::{invalid, Result};
use crate::linalg::{c, C64};
use nalgebra::Vector4;

/// Longitudinal motion through a disorder landscape during the transfer.
#[derive(Debug, Clone, Copy)]
pub struct MovingConfig<'a> {
    /// Velocity (m/s, equal to nm/ns).
    pub v_x: f64,
    pub pitch: f64,
    pub disorder_mode: GateCorrelation,
    /// Lines 0 and 1 are the L and R channels.
    pub landscape: &'a LandscapeBundle,
    /// Position at τ = 0 (nm).
    pub x_start: f64,
}

impl<'a> MovingConfig<'a> {
    /// Velocity of a conveyor driven at angular frequency `omega` (rad/ns):
    /// v = 2ΩP/π.
    pub fn velocity_from_omega(omega: f64, pitch: f64) -> f64 {
        2.0 * omega * pitch / std::f64::consts::PI
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_x >= 0.0 && self.v_x.is_finite()) {
            return Err(invalid("v_x", format!("must be ≥ 0, got {}", self.v_x)));
        }
        if self.landscape.channels.len() < 2 {
            return Err(invalid("landscape", "need L and R lines"));
        }
        if self.landscape.config.gate_mode != self.disorder_mode {
            return Err(invalid("disorder_mode", "does not match the landscape's gate mode"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub enum TransferScenario<'a> {
    /// Electron at rest with fixed valley couplings.
    Paused { delta_l: C64, delta_r: C64 },
    Moving(MovingConfig<'a>),
}

/// Time-dependent H̃_eff(τ) of one transfer.
pub struct TransferHamiltonian<'a, S: Schedule> {
    pub schedule: &'a S,
    pub scenario: TransferScenario<'a>,
    gauge_dx: f64,
}

impl<'a, S: Schedule> TransferHamiltonian<'a, S> {
    pub fn new(schedule: &'a S, scenario: TransferScenario<'a>) -> Result<Self> {
        let gauge_dx = match &scenario {
            TransferScenario::Moving(m) => {
                m.validate()?;
                m.landscape.grid.dx / 8.0
            }
            TransferScenario::Paused { .. } => 0.0,
        };
        Ok(Self { schedule, scenario, gauge_dx })
    }

    pub fn at(&self, tau: f64) -> Result<Matrix4c> {
        let (epsilon, t_c) = self.schedule.eval(tau)?;
        match &self.scenario {
            TransferScenario::Paused { delta_l, delta_r } => {
                let p = ChannelValleyParams { epsilon, t_c, delta_l: *delta_l, delta_r: *delta_r };
                Ok(build_tilde_h(&p))
            }
            TransferScenario::Moving(m) => {
                let x = m.x_start + m.v_x * tau;
                let (l, r) = (&m.landscape.channels[0], &m.landscape.channels[1]);
                let p = ChannelValleyParams { epsilon, t_c, delta_l: l.delta(x)?, delta_r: r.delta(x)? };
                let mut h = build_tilde_h(&p);
                let (el, er) = (l.eps(x)?, r.eps(x)?);
                for (i, e) in [el, el, er, er].into_iter().enumerate() {
                    h[(i, i)] += c(e, 0.0);
                }
                if m.v_x > 0.0 {
                    h += gauge_correction(m.landscape, x, self.gauge_dx, m.v_x)?;
                }
                Ok(h)
            }
        }
    }

    /// Upper bound on the step so the trajectory samples every landscape node.
    pub fn max_step(&self) -> f64 {
        match &self.scenario {
            TransferScenario::Moving(m) if m.v_x > 0.0 => m.landscape.grid.dx / m.v_x,
            _ => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub tau: f64,
    pub populations: [f64; 4],
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferOutcome {
    pub fidelity: f64,
    pub success: bool,
    pub final_state: Vector4<C64>,
    pub trace: Vec<TracePoint>,
    pub stats: IntegratorStats,
}

/// Runs one transfer from |g,L⟩ through the ramp and the settle window.
/// `threshold` is the largest infidelity counted as a success.
pub fn evolve_transfer<S: Schedule>(
    schedule: &S,
    scenario: TransferScenario<'_>,
    opts: &IntegratorOptions,
    threshold: f64,
    record_trace: bool,
) -> Result<TransferOutcome> {
    let ham = TransferHamiltonian::new(schedule, scenario)?;
    let mut opts = *opts;
    opts.h_max = opts.h_max.min(ham.max_step());
    let mut psi = Vector4::zeros();
    psi[INITIAL_INDEX] = c(1.0, 0.0);
    let mut trace = Vec::new();
    let mut record = |tau: f64, psi: &Vector4<C64>| {
        if record_trace {
            trace.push(TracePoint { tau, populations: std::array::from_fn(|i| psi[i].norm_sqr()) });
        }
    };
    record(0.0, &psi);
    let mut stats = IntegratorStats::default();
    // The tunnel pulse has a kink at τ_tot, so integrate the ramp and the
    // settle window separately.
    let tau_tot = schedule.tau_tot();
    let end = tau_tot + schedule.settle();
    for (a, b) in [(0.0, tau_tot), (tau_tot, end)] {
        if b <= a {
            continue;
        }
        let (next, s) = evolve_adaptive(|t| ham.at(t), psi, a, b, &opts, &mut record)?;
        psi = next;
        stats.accepted += s.accepted;
        stats.rejected += s.rejected;
    }
    let fidelity = psi[TARGET_INDEX].norm_sqr().clamp(0.0, 1.0);
    Ok(TransferOutcome { fidelity, success: 1.0 - fidelity <= threshold, final_state: psi, trace, stats })
}
