use super::evolve::{evolve_transfer, MovingConfig, TransferOutcome, TransferScenario};
use super::integrator::IntegratorOptions;
use super::TransferSchedule;
use crate::disorder::{sample_landscape_bundle, CrossChannel, GateCorrelation, LandscapeConfig};
use crate::error::{invalid, Result};
use crate::linalg::C64;
use crate::rng;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Channel separation (nm) used for moving-mode landscapes.
pub const CHANNEL_SEPARATION: f64 = 100.0;

/// Local error per ns used for Monte Carlo sweeps. The step estimate is
/// dominated by phase error, so populations stay accurate to ~1e-12.
pub const SWEEP_TOLERANCE: f64 = 1e-5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "mode")]
pub enum McScenario {
    Paused,
    Moving {
        /// m/s
        v_x: f64,
        gate_mode: GateCorrelation,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub scenario: McScenario,
    pub sigma_delta: f64,
    pub sigma_eps: f64,
    pub l_dot: f64,
    pub pitch: f64,
    pub success_threshold: f64,
    pub integrator: IntegratorOptions,
}

impl Default for McConfig {
    fn default() -> Self {
        Self {
            scenario: McScenario::Paused,
            sigma_delta: 56.4,
            sigma_eps: 1000.0,
            l_dot: 14.0,
            pitch: 70.0,
            success_threshold: 1e-3,
            integrator: IntegratorOptions { tol_per_ns: SWEEP_TOLERANCE, ..IntegratorOptions::default() },
        }
    }
}

/// Δ_L, Δ_R drawn i.i.d. from a zero-mean circular complex normal with
/// E|Δ|² = σ².
pub fn sample_valley_pair(sigma: f64, seed: u64) -> (C64, C64) {
    let mut r = rng::stream(seed);
    let s = sigma * std::f64::consts::FRAC_1_SQRT_2;
    let mut z = || C64::new(r.sample::<f64, _>(StandardNormal) * s, r.sample::<f64, _>(StandardNormal) * s);
    let l = z();
    (l, z())
}

pub fn draw_seed(master_seed: u64, index: u64) -> u64 {
    rng::indexed_seed(master_seed, "transfer-draw", index)
}

/// Runs draw `index` of a Monte Carlo sweep. Each draw owns its disorder,
/// so draws can be evaluated in any order.
pub fn run_draw(s: &TransferSchedule, cfg: &McConfig, master_seed: u64, index: u64) -> Result<TransferOutcome> {
    s.validate()?;
    let seed = draw_seed(master_seed, index);
    match cfg.scenario {
        McScenario::Paused => {
            let (delta_l, delta_r) = sample_valley_pair(cfg.sigma_delta, seed);
            evolve_transfer(
                s,
                TransferScenario::Paused { delta_l, delta_r },
                &cfg.integrator,
                cfg.success_threshold,
                false,
            )
        }
        McScenario::Moving { v_x, gate_mode } => {
            let length = v_x * s.end();
            let margin = 2.0 * cfg.l_dot.max(cfg.pitch);
            let lc = LandscapeConfig {
                sigma_delta: cfg.sigma_delta,
                sigma_eps: cfg.sigma_eps,
                l_dot: cfg.l_dot,
                pitch: cfg.pitch,
                channels: vec![0.0, CHANNEL_SEPARATION],
                x_min: -margin,
                x_max: length + margin,
                gate_mode,
                cross_channel: CrossChannel::Independent,
                tunnel: None,
                master_seed: seed,
            };
            let bundle = sample_landscape_bundle(&lc)?;
            let mv = MovingConfig { v_x, pitch: cfg.pitch, disorder_mode: gate_mode, landscape: &bundle, x_start: 0.0 };
            evolve_transfer(s, TransferScenario::Moving(mv), &cfg.integrator, cfg.success_threshold, false)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrawRecord {
    pub index: u64,
    pub seed: u64,
    pub fidelity: std::result::Result<f64, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct McSummary {
    pub n: usize,
    pub completed: usize,
    pub successes: usize,
    pub p_suc: f64,
    /// Binomial standard error √(p(1−p)/n).
    pub stderr: f64,
    pub draws: Vec<DrawRecord>,
}

/// Binomial success fraction and its standard error.
pub fn binomial(successes: usize, n: usize) -> (f64, f64) {
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let p = successes as f64 / n as f64;
    (p, (p * (1.0 - p) / n as f64).sqrt())
}

/// Success probability over `n` disorder draws. Failed draws are kept as
/// error records and excluded from the fraction.
pub fn monte_carlo_success(s: &TransferSchedule, n: usize, cfg: &McConfig, master_seed: u64) -> Result<McSummary> {
    if n == 0 {
        return Err(invalid("n", "need at least one draw"));
    }
    s.validate()?;
    let draws: Vec<DrawRecord> = (0..n as u64)
        .into_par_iter()
        .map(|i| DrawRecord {
            index: i,
            seed: draw_seed(master_seed, i),
            fidelity: run_draw(s, cfg, master_seed, i).map(|o| o.fidelity).map_err(|e| e.to_string()),
        })
        .collect();
    let completed = draws.iter().filter(|d| d.fidelity.is_ok()).count();
    let successes = draws
        .iter()
        .filter(|d| matches!(d.fidelity, Ok(f) if 1.0 - f <= cfg.success_threshold))
        .count();
    let (p_suc, stderr) = binomial(successes, completed);
    Ok(McSummary { n, completed, successes, p_suc, stderr, draws })
}
