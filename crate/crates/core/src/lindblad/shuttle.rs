use super::phonons::{PhononParams, SpectralTable};
use super::rates::compute_rates;
use super::step::{check_density, lindblad_step, DensityChecks};
use super::{build_hamiltonian, valley_ground, FivePocketModel, Matrix10, LEVELS, POCKETS, POCKET_OFFSETS};
use crate::disorder::{sample_landscape_bundle, CrossChannel, GateCorrelation, LandscapeBundle, LandscapeConfig, TunnelSpec};
use crate::error::{invalid, Error, Result};
use crate::linalg::{c, C64};
use crate::units::HBAR;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Time-step control for [`run_shuttle`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepPolicy {
    /// Displacement per step as a fraction of min(l_dot, P).
    pub dx_fraction: f64,
    /// Near a level crossing the step is κ·max(√(ħ/|α|), |δ|/|α|) for
    /// detuning δ changing at rate α, so Landau-Zener passages are resolved.
    pub lz_kappa: f64,
}

impl Default for StepPolicy {
    fn default() -> Self {
        Self { dx_fraction: 0.1, lz_kappa: 0.1 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShuttleConfig {
    /// m/s
    pub velocity: f64,
    /// μm
    pub distance_um: f64,
    /// Mean inter-pocket tunnel coupling (μeV).
    pub t0: f64,
    pub sigma_t: Option<f64>,
    pub pitch: f64,
    pub l_dot: f64,
    pub sigma_delta: f64,
    pub sigma_eps: f64,
    pub seed: u64,
    #[serde(default)]
    pub policy: StepPolicy,
    /// Center-position spacing (nm) of the recorded trace.
    pub trace_dx: f64,
    /// Keep per-step leakage increments and resonance flags.
    #[serde(default)]
    pub record_increments: bool,
}

impl Default for ShuttleConfig {
    fn default() -> Self {
        Self {
            velocity: 10.0,
            distance_um: 10.0,
            t0: 1e-6,
            sigma_t: None,
            pitch: 50.0,
            l_dot: 14.0,
            sigma_delta: 56.4,
            sigma_eps: 1000.0,
            seed: 0,
            policy: StepPolicy::default(),
            trace_dx: 10.0,
            record_increments: false,
        }
    }
}

impl ShuttleConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.velocity > 0.0 && self.velocity.is_finite()) {
            return Err(invalid("velocity", "must be > 0"));
        }
        if !(self.t0 >= 0.0 && self.t0.is_finite()) {
            return Err(invalid("t0", "must be ≥ 0"));
        }
        if !(self.distance_um > 0.0) {
            return Err(invalid("distance_um", "must be > 0"));
        }
        if !(self.trace_dx > 0.0) {
            return Err(invalid("trace_dx", "must be > 0"));
        }
        if !(self.policy.dx_fraction > 0.0 && self.policy.lz_kappa > 0.0) {
            return Err(invalid("policy", "step fractions must be > 0"));
        }
        Ok(())
    }

    pub fn pocket_spacing(&self) -> f64 {
        4.0 * self.pitch
    }

    pub fn landscape_config(&self) -> LandscapeConfig {
        let s = self.pocket_spacing();
        let margin = s + 4.0 * self.l_dot.max(self.pitch);
        LandscapeConfig {
            sigma_delta: self.sigma_delta,
            sigma_eps: self.sigma_eps,
            l_dot: self.l_dot,
            pitch: self.pitch,
            // Pocket rows at 0, ±4P and the ±y link midpoints at ±2P.
            channels: vec![-s, -0.5 * s, 0.0, 0.5 * s, s],
            x_min: -margin,
            x_max: self.distance_um * 1e3 + margin,
            gate_mode: GateCorrelation::Correlated,
            cross_channel: CrossChannel::Spatial,
            // t0 = 0 decouples the pockets entirely.
            tunnel: (self.t0 > 0.0).then_some(TunnelSpec {
                t0: self.t0,
                sigma_t: self.sigma_t,
                allow_large_sigma_t: false,
            }),
            master_seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShuttleTracePoint {
    pub x: f64,
    /// Central pocket ground and excited valley, then neighbors 1..4.
    pub populations: [f64; POCKETS + 1],
    pub trace: f64,
    pub min_eig: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Increment {
    pub x: f64,
    pub d_leak: f64,
    pub resonant: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShuttleRun {
    pub config: ShuttleConfig,
    /// Population left in the central pocket, normalized by the trace so
    /// that roundoff drift in Tr ρ does not masquerade as leakage.
    pub fidelity: f64,
    /// Population summed over the four neighbors; equals 1 − F up to the
    /// trace error but stays accurate far below machine epsilon of F.
    pub leakage: f64,
    pub trace: Vec<ShuttleTracePoint>,
    pub steps: usize,
    /// Worst trace error, Hermiticity defect and smallest eigenvalue seen.
    pub worst: DensityChecks,
    pub increments: Vec<Increment>,
}

/// Level data of one pocket at a position: energies of the two valley
/// states and their slopes along x.
struct PocketLevels {
    e: [f64; 2],
    de: [f64; 2],
}

struct Sampler<'a> {
    bundle: &'a LandscapeBundle,
    spacing: f64,
    decoupled: bool,
}

impl Sampler<'_> {
    fn line(&self, oy: f64) -> &crate::disorder::ChannelFields {
        // Rows are −s, −s/2, 0, s/2, s.
        let idx = (2.0 * oy + 2.0).round() as usize;
        &self.bundle.channels[idx]
    }

    fn model(&self, x: f64) -> Result<FivePocketModel> {
        let mut eps = [0.0; POCKETS];
        let mut delta = [c(0.0, 0.0); POCKETS];
        let mut t_hop = [0.0; POCKETS - 1];
        for (j, [ox, oy]) in POCKET_OFFSETS.iter().enumerate() {
            let line = self.line(*oy);
            let xj = x + ox * self.spacing;
            eps[j] = line.eps(xj)?;
            delta[j] = line.delta(xj)?;
            if j > 0 {
                let mid = self.line(0.5 * oy);
                t_hop[j - 1] = match mid.tunnel(x + 0.5 * ox * self.spacing)? {
                    Some(t) => t,
                    None if self.decoupled => 0.0,
                    None => return Err(Error::Invariant("landscape lacks tunnel field".into())),
                };
            }
        }
        Ok(FivePocketModel { eps, t_hop, delta, spacing: self.spacing })
    }

    fn levels(&self, x: f64) -> Result<[PocketLevels; POCKETS]> {
        let mut out: [PocketLevels; POCKETS] = std::array::from_fn(|_| PocketLevels { e: [0.0; 2], de: [0.0; 2] });
        for (j, [ox, oy]) in POCKET_OFFSETS.iter().enumerate() {
            let line = self.line(*oy);
            let xj = x + ox * self.spacing;
            let (e, de) = (line.eps(xj)?, line.eps_slope(xj)?);
            let d = line.delta(xj)?;
            let dd = line.delta_slope(xj)?;
            let a = d.norm();
            let da = if a > 0.0 { (d.conj() * dd).re / a } else { dd.norm() };
            out[j] = PocketLevels { e: [e - a, e + a], de: [de - da, de + da] };
        }
        Ok(out)
    }
}

/// (step dt, resonant flag) at position x.
fn step_size(levels: &[PocketLevels; POCKETS], cfg: &ShuttleConfig, t_max: f64) -> (f64, bool) {
    let v = cfg.velocity;
    let mut dt = cfg.policy.dx_fraction * cfg.l_dot.min(cfg.pitch) / v;
    let mut resonant = false;
    for k in 1..POCKETS {
        for s in 0..2 {
            for r in 0..2 {
                let delta = levels[0].e[s] - levels[k].e[r];
                let alpha = (v * (levels[0].de[s] - levels[k].de[r])).abs().max(1e-300);
                let window = (HBAR / alpha).sqrt();
                dt = dt.min(cfg.policy.lz_kappa * window.max(delta.abs() / alpha));
                if delta.abs() < (2.0 * t_max).max(10.0 * (HBAR * alpha).sqrt()) {
                    resonant = true;
                }
            }
        }
    }
    (dt, resonant)
}

fn populations(rho: &Matrix10, delta1: C64) -> [f64; POCKETS + 1] {
    let g = valley_ground(delta1);
    let mut pg = C64::new(0.0, 0.0);
    for a in 0..2 {
        for b in 0..2 {
            pg += g[a].conj() * rho[(a, b)] * g[b];
        }
    }
    let central = rho[(0, 0)].re + rho[(1, 1)].re;
    let mut out = [0.0; POCKETS + 1];
    out[0] = pg.re;
    out[1] = central - pg.re;
    for j in 1..POCKETS {
        out[j + 1] = rho[(2 * j, 2 * j)].re + rho[(2 * j + 1, 2 * j + 1)].re;
    }
    out
}

/// Shuttles the five-pocket system a distance `distance_um` at constant
/// velocity through a fresh landscape drawn from `seed`, starting in the
/// ground valley state of the central pocket.
pub fn run_shuttle(cfg: &ShuttleConfig, table: &SpectralTable) -> Result<ShuttleRun> {
    cfg.validate()?;
    let tp = table.params();
    if (tp.pitch - cfg.pitch).abs() > 1e-12 || (tp.l_dot - cfg.l_dot).abs() > 1e-12 {
        return Err(invalid("table", "phonon table geometry differs from the shuttle config"));
    }
    let bundle = sample_landscape_bundle(&cfg.landscape_config())?;
    run_shuttle_in(cfg, table, &bundle)
}

/// As [`run_shuttle`] on a given landscape whose five lines sit at
/// y = −4P, −2P, 0, 2P, 4P.
pub fn run_shuttle_in(cfg: &ShuttleConfig, table: &SpectralTable, bundle: &LandscapeBundle) -> Result<ShuttleRun> {
    if bundle.channels.len() != 5 {
        return Err(invalid("landscape", "need five lines"));
    }
    let sampler = Sampler { bundle, spacing: cfg.pocket_spacing(), decoupled: cfg.t0 == 0.0 };
    let length = cfg.distance_um * 1e3;
    let t_max = cfg.t0 * 10.0;

    let m0 = sampler.model(0.0)?;
    let g = valley_ground(m0.delta[0]);
    let mut rho = Matrix10::zeros();
    for a in 0..2 {
        for b in 0..2 {
            rho[(a, b)] = g[a] * g[b].conj();
        }
    }

    let mut trace = Vec::new();
    let mut increments = Vec::new();
    let mut worst = DensityChecks { trace_error: 0.0, hermiticity: 0.0, min_eigenvalue: f64::INFINITY };
    let record = |x: f64, rho: &Matrix10, delta1: C64, worst: &mut DensityChecks| {
        let chk = check_density(rho);
        worst.trace_error = worst.trace_error.max(chk.trace_error);
        worst.hermiticity = worst.hermiticity.max(chk.hermiticity);
        worst.min_eigenvalue = worst.min_eigenvalue.min(chk.min_eigenvalue);
        ShuttleTracePoint { x, populations: populations(rho, delta1), trace: rho.trace().re, min_eig: chk.min_eigenvalue }
    };
    trace.push(record(0.0, &rho, m0.delta[0], &mut worst));

    let neighbor = |rho: &Matrix10| -> f64 { (2..LEVELS).map(|i| rho[(i, i)].re).sum() };
    let mut x = 0.0;
    let mut next_trace = cfg.trace_dx;
    let mut steps = 0usize;
    let mut leak = neighbor(&rho);
    while x < length {
        let (dt_policy, resonant) = step_size(&sampler.levels(x)?, cfg, t_max);
        let dt = dt_policy.min((length - x) / cfg.velocity);
        let dx = cfg.velocity * dt;
        let mid = sampler.model(x + 0.5 * dx)?;
        let h = build_hamiltonian(&mid);
        let (spec, rates) = compute_rates(&h, table)?;
        rho = lindblad_step(&rho, &spec, &rates, dt)?;
        x = if length - x <= dx { length } else { x + dx };
        steps += 1;
        let now = neighbor(&rho);
        if cfg.record_increments {
            increments.push(Increment { x, d_leak: now - leak, resonant });
        }
        leak = now;
        if x >= next_trace || x >= length {
            let d1 = sampler.line(0.0).delta(x)?;
            let p = record(x, &rho, d1, &mut worst);
            trace.push(p);
            while next_trace <= x {
                next_trace += cfg.trace_dx;
            }
            if !worst.ok() {
                return Err(Error::Invariant(format!("density checks failed at x = {x}: {worst:?}")));
            }
        }
    }
    let central = rho[(0, 0)].re + rho[(1, 1)].re;
    let central = central / (central + leak);
    Ok(ShuttleRun {
        config: cfg.clone(),
        fidelity: central.clamp(0.0, 1.0),
        leakage: leak,
        trace,
        steps,
        worst,
        increments,
    })
}

impl ShuttleRun {
    /// `x_nm,pop_d1_g,pop_d1_e,pop_d2,pop_d3,pop_d4,pop_d5,trace,min_eig`
    pub fn write_trace_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_nm", "pop_d1_g", "pop_d1_e", "pop_d2", "pop_d3", "pop_d4", "pop_d5", "trace", "min_eig"])?;
        for p in &self.trace {
            let mut row = vec![format!("{}", p.x)];
            row.extend(p.populations.iter().map(|v| format!("{v:e}")));
            row.push(format!("{:e}", p.trace));
            row.push(format!("{:e}", p.min_eig));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fraction of the positive per-step leakage increments that fall on
    /// steps flagged as near a level crossing.
    pub fn resonant_fraction(&self) -> Option<f64> {
        let total: f64 = self.increments.iter().map(|i| i.d_leak.max(0.0)).sum();
        if total == 0.0 {
            return None;
        }
        let res: f64 = self.increments.iter().filter(|i| i.resonant).map(|i| i.d_leak.max(0.0)).sum();
        Some(res / total)
    }
}

/// Phonon table matching a shuttle configuration.
pub fn phonon_table_for(cfg: &ShuttleConfig) -> Result<SpectralTable> {
    SpectralTable::new(PhononParams { l_dot: cfg.l_dot, pitch: cfg.pitch, ..PhononParams::default() })
}
