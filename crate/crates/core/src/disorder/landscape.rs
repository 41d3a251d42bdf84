use super::fields::log_variance;
use super::{sample_line_family, sample_regular_line_pair, KernelSpec, LineField, RegularGrid};
use crate::error::{invalid, Result};
use crate::linalg::C64;
use crate::rng;
use serde::{Deserialize, Serialize};
use std::io::Write;

/// Whether gate-related potential disorder is shared between channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum GateCorrelation {
    #[default]
    Correlated,
    Uncorrelated,
}

/// How fields on different lines relate to each other.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum CrossChannel {
    /// Every line gets independent Δ and alloy fields; the gate field
    /// follows [`GateCorrelation`].
    #[default]
    Independent,
    /// All lines belong to one planar landscape and are sampled jointly
    /// with the full 2D Gaussian covariance.
    Spatial,
}

/// Log-normal tunnel-coupling disorder parameters (μeV).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TunnelSpec {
    pub t0: f64,
    /// Defaults to t0/10.
    pub sigma_t: Option<f64>,
    #[serde(default)]
    pub allow_large_sigma_t: bool,
}

/// Everything needed to generate a disorder bundle along one or more
/// horizontal lines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandscapeConfig {
    /// Valley-coupling scale σ_Δ (μeV); also the alloy potential std.
    pub sigma_delta: f64,
    /// Gate-related potential std σ_ε (μeV).
    pub sigma_eps: f64,
    /// Dot radius (nm); correlation length of Δ and alloy disorder.
    pub l_dot: f64,
    /// Gate pitch (nm); correlation length of gate and tunnel disorder.
    pub pitch: f64,
    /// y coordinate (nm) of each line.
    pub channels: Vec<f64>,
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default)]
    pub gate_mode: GateCorrelation,
    #[serde(default)]
    pub cross_channel: CrossChannel,
    #[serde(default)]
    pub tunnel: Option<TunnelSpec>,
    pub master_seed: u64,
}

impl LandscapeConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &'static str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be > 0, got {v}")))
            }
        };
        let nonneg = |name: &'static str, v: f64| {
            if v >= 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(name, format!("must be ≥ 0, got {v}")))
            }
        };
        nonneg("sigma_delta", self.sigma_delta)?;
        nonneg("sigma_eps", self.sigma_eps)?;
        pos("l_dot", self.l_dot)?;
        pos("pitch", self.pitch)?;
        if self.channels.is_empty() {
            return Err(invalid("channels", "at least one line is required"));
        }
        if !(self.x_max > self.x_min) {
            return Err(invalid("x_max", "must exceed x_min"));
        }
        if let Some(t) = &self.tunnel {
            if !(1e-6..=1.0).contains(&t.t0) {
                return Err(invalid("t0", format!("{} μeV outside [1 peV, 1 μeV]", t.t0)));
            }
            let s = t.sigma_t.unwrap_or(t.t0 / 10.0);
            nonneg("sigma_t", s)?;
            if s > t.t0 && !t.allow_large_sigma_t {
                return Err(invalid("sigma_t", "σ_t > t0 requires allow_large_sigma_t"));
            }
        }
        Ok(())
    }

    /// Grid spacing used for line sampling: min(l_dot, pitch)/5.
    pub fn spacing(&self) -> f64 {
        self.l_dot.min(self.pitch) / 5.0
    }
}

/// Fields sampled along one line.
#[derive(Debug, Clone)]
pub struct ChannelFields {
    pub y: f64,
    pub delta_re: LineField,
    pub delta_im: LineField,
    pub alloy: LineField,
    pub gate: LineField,
    /// ln t_p.
    pub log_tunnel: Option<LineField>,
}

impl ChannelFields {
    pub fn delta(&self, x: f64) -> Result<C64> {
        Ok(C64::new(self.delta_re.at(x)?, self.delta_im.at(x)?))
    }

    pub fn delta_slope(&self, x: f64) -> Result<C64> {
        Ok(C64::new(self.delta_re.slope(x)?, self.delta_im.slope(x)?))
    }

    /// Total potential offset δε_alloy + δε_gate.
    pub fn eps(&self, x: f64) -> Result<f64> {
        Ok(self.alloy.at(x)? + self.gate.at(x)?)
    }

    pub fn eps_slope(&self, x: f64) -> Result<f64> {
        Ok(self.alloy.slope(x)? + self.gate.slope(x)?)
    }

    pub fn tunnel(&self, x: f64) -> Result<Option<f64>> {
        self.log_tunnel.as_ref().map(|f| f.at(x).map(f64::exp)).transpose()
    }
}

/// A complete disorder realization.
#[derive(Debug, Clone)]
pub struct LandscapeBundle {
    pub config: LandscapeConfig,
    pub grid: RegularGrid,
    pub channels: Vec<ChannelFields>,
}

/// Samples all fields of a landscape with independent sub-seeds derived
/// from `config.master_seed`.
pub fn sample_landscape_bundle(config: &LandscapeConfig) -> Result<LandscapeBundle> {
    config.validate()?;
    let grid = RegularGrid::covering(config.x_min, config.x_max, config.spacing())?;
    let (n, dx) = (grid.n, grid.dx);
    let m = config.channels.len();
    let seed = config.master_seed;
    let sd = config.sigma_delta;
    let half = KernelSpec::new(0.5 * sd * sd, config.l_dot)?;
    let alloy_k = KernelSpec::new(sd * sd, config.l_dot)?;
    let gate_k = KernelSpec::new(config.sigma_eps.powi(2), config.pitch)?;
    let tunnel = config.tunnel.map(|t| {
        let s2 = log_variance(t.t0, t.sigma_t.unwrap_or(t.t0 / 10.0));
        (t.t0, s2)
    });

    let (re, im, alloy, gate, log_t): (Vec<_>, Vec<_>, Vec<_>, Vec<_>, Option<Vec<_>>) =
        match config.cross_channel {
            CrossChannel::Spatial => {
                let ys = &config.channels;
                let re = sample_line_family(n, dx, ys, &half, rng::sub_seed(seed, "delta-re"))?;
                let im = sample_line_family(n, dx, ys, &half, rng::sub_seed(seed, "delta-im"))?;
                let alloy = sample_line_family(n, dx, ys, &alloy_k, rng::sub_seed(seed, "alloy"))?;
                let gate = sample_line_family(n, dx, ys, &gate_k, rng::sub_seed(seed, "gate"))?;
                let log_t = match tunnel {
                    Some((t0, s2)) => {
                        let k = KernelSpec::new(s2, config.pitch)?;
                        let g = sample_line_family(n, dx, ys, &k, rng::sub_seed(seed, "tunnel"))?;
                        Some(shift_log(g, t0, s2))
                    }
                    None => None,
                };
                (re, im, alloy, gate, log_t)
            }
            CrossChannel::Independent => {
                let mut re = Vec::with_capacity(m);
                let mut im = Vec::with_capacity(m);
                let mut alloy = Vec::with_capacity(m);
                let mut gate = Vec::with_capacity(m);
                let mut log_t = tunnel.map(|_| Vec::with_capacity(m));
                let shared_gate = sample_regular_line_pair(n, dx, &gate_k, rng::sub_seed(seed, "gate"))?.0;
                for c in 0..m {
                    let (a, b) = sample_regular_line_pair(
                        n,
                        dx,
                        &half,
                        rng::sub_seed(seed, &format!("delta/{c}")),
                    )?;
                    re.push(a);
                    im.push(b);
                    alloy.push(
                        sample_regular_line_pair(n, dx, &alloy_k, rng::sub_seed(seed, &format!("alloy/{c}")))?.0,
                    );
                    gate.push(match config.gate_mode {
                        GateCorrelation::Correlated => shared_gate.clone(),
                        GateCorrelation::Uncorrelated => {
                            sample_regular_line_pair(n, dx, &gate_k, rng::sub_seed(seed, &format!("gate/{c}")))?.0
                        }
                    });
                    if let (Some(out), Some((t0, s2))) = (log_t.as_mut(), tunnel) {
                        let k = KernelSpec::new(s2, config.pitch)?;
                        let g = sample_regular_line_pair(n, dx, &k, rng::sub_seed(seed, &format!("tunnel/{c}")))?.0;
                        out.push(shift_log(vec![g], t0, s2).pop().expect("one line"));
                    }
                }
                (re, im, alloy, gate, log_t)
            }
        };

    let mut channels = Vec::with_capacity(m);
    for c in 0..m {
        channels.push(ChannelFields {
            y: config.channels[c],
            delta_re: LineField::new(grid, re[c].clone())?,
            delta_im: LineField::new(grid, im[c].clone())?,
            alloy: LineField::new(grid, alloy[c].clone())?,
            gate: LineField::new(grid, gate[c].clone())?,
            log_tunnel: match &log_t {
                Some(v) => Some(LineField::new(grid, v[c].clone())?),
                None => None,
            },
        });
    }
    Ok(LandscapeBundle { config: config.clone(), grid, channels })
}

fn shift_log(lines: Vec<Vec<f64>>, t0: f64, s2: f64) -> Vec<Vec<f64>> {
    let offset = t0.ln() - 0.5 * s2;
    lines.into_iter().map(|l| l.into_iter().map(|g| g + offset).collect()).collect()
}

impl LandscapeBundle {
    /// Writes one row per grid node and line:
    /// `x_nm,y_nm,re_delta_ueV,im_delta_ueV,eps_alloy_ueV,eps_gate_ueV,t_p_ueV`.
    /// The tunnel column is empty when no tunnel disorder was requested.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "x_nm",
            "y_nm",
            "re_delta_ueV",
            "im_delta_ueV",
            "eps_alloy_ueV",
            "eps_gate_ueV",
            "t_p_ueV",
        ])?;
        for ch in &self.channels {
            for i in 0..self.grid.n {
                let t = ch
                    .log_tunnel
                    .as_ref()
                    .map(|f| format!("{:e}", f.values()[i].exp()))
                    .unwrap_or_default();
                w.write_record([
                    format!("{}", self.grid.x(i)),
                    format!("{}", ch.y),
                    format!("{}", ch.delta_re.values()[i]),
                    format!("{}", ch.delta_im.values()[i]),
                    format!("{}", ch.alloy.values()[i]),
                    format!("{}", ch.gate.values()[i]),
                    t,
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Dense 2D map of the valley coupling on a square grid.
#[derive(Debug, Clone)]
pub struct ValleyMap {
    pub x0: f64,
    pub y0: f64,
    pub spacing: f64,
    pub nx: usize,
    pub ny: usize,
    /// Row-major in y: index `iy * nx + ix`.
    pub values: Vec<C64>,
}

/// Samples Δ on an `nx × ny` grid with spacing `spacing` (nm).
pub fn sample_valley_map(
    sigma_delta: f64,
    l_dot: f64,
    nx: usize,
    ny: usize,
    spacing: f64,
    seed: u64,
) -> Result<ValleyMap> {
    let k = KernelSpec::new(0.5 * sigma_delta * sigma_delta, l_dot)?;
    let ys: Vec<f64> = (0..ny).map(|j| j as f64 * spacing).collect();
    let re = sample_line_family(nx, spacing, &ys, &k, rng::sub_seed(seed, "map-re"))?;
    let im = sample_line_family(nx, spacing, &ys, &k, rng::sub_seed(seed, "map-im"))?;
    let mut values = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            values.push(C64::new(re[j][i], im[j][i]));
        }
    }
    Ok(ValleyMap { x0: 0.0, y0: 0.0, spacing, nx, ny, values })
}

impl ValleyMap {
    /// `x_nm,y_nm,re_delta_ueV,im_delta_ueV,ev_ueV` per node.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["x_nm", "y_nm", "re_delta_ueV", "im_delta_ueV", "ev_ueV"])?;
        for j in 0..self.ny {
            for i in 0..self.nx {
                let d = self.values[j * self.nx + i];
                w.write_record([
                    format!("{}", self.x0 + i as f64 * self.spacing),
                    format!("{}", self.y0 + j as f64 * self.spacing),
                    format!("{}", d.re),
                    format!("{}", d.im),
                    format!("{}", 2.0 * d.norm()),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}
