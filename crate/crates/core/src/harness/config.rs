use crate::disorder::GateCorrelation;
use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    GenLandscape,
    TransferSweep,
    MovingSweep,
    #[serde(rename = "leakage-2d")]
    Leakage2d,
    #[serde(alias = "electrostatics-window")]
    ElectroWindow,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::GenLandscape => "gen-landscape",
            ExperimentKind::TransferSweep => "transfer-sweep",
            ExperimentKind::MovingSweep => "moving-sweep",
            ExperimentKind::Leakage2d => "leakage-2d",
            ExperimentKind::ElectroWindow => "electro-window",
        }
    }
}

/// Material and device parameters shared by the experiment kinds. Unset
/// values fall back to each module's defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Physics {
    /// μeV
    pub sigma_delta: Option<f64>,
    /// μeV
    pub sigma_eps: Option<f64>,
    /// nm
    pub l_dot: Option<f64>,
    /// nm
    pub pitch: Option<f64>,
    /// Largest infidelity counted as a success.
    pub success_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TransferGrid {
    /// μeV
    pub epsilon0: Vec<f64>,
    /// μeV
    pub t0: Vec<f64>,
    /// ns
    pub tau_tot: Vec<f64>,
    /// m/s; moving sweeps only.
    pub velocity: Vec<f64>,
    pub gate_mode: GateCorrelation,
}

impl Default for TransferGrid {
    fn default() -> Self {
        Self {
            epsilon0: vec![500.0],
            t0: vec![100.0],
            tau_tot: vec![10.0],
            velocity: vec![1.0],
            gate_mode: GateCorrelation::Correlated,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShuttleGrid {
    /// Mean tunnel coupling t0 (μeV), one grid axis.
    pub t0: Vec<f64>,
    /// m/s, the other grid axis.
    pub velocity: Vec<f64>,
    pub distance_um: f64,
}

impl Default for ShuttleGrid {
    fn default() -> Self {
        Self { t0: vec![1e-6], velocity: vec![10.0], distance_um: 10.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ElectroGrid {
    /// nm
    pub pitch: Vec<f64>,
    /// mV
    pub v_amp: Vec<f64>,
    /// nm
    pub gap: f64,
    /// Orbital scans along x, y and the diagonal, `scan_samples` per period.
    pub scan: bool,
    pub scan_pitch: f64,
    pub scan_v_amp: f64,
    pub scan_samples: usize,
}

impl Default for ElectroGrid {
    fn default() -> Self {
        Self {
            pitch: vec![30.0, 35.0, 40.0, 45.0, 50.0],
            v_amp: vec![50.0, 75.0, 100.0, 125.0, 150.0],
            gap: 5.0,
            scan: true,
            scan_pitch: 50.0,
            scan_v_amp: 100.0,
            scan_samples: 16,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LandscapeSection {
    /// nm
    pub length: f64,
    /// y of each line (nm).
    pub channels: Vec<f64>,
    pub gate_mode: GateCorrelation,
    /// Adds log-normal tunnel disorder with this mean (μeV).
    pub tunnel_t0: Option<f64>,
}

impl Default for LandscapeSection {
    fn default() -> Self {
        Self { length: 1000.0, channels: vec![0.0, 100.0], gate_mode: GateCorrelation::Correlated, tunnel_t0: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub seed: u64,
    /// Realizations per grid point.
    #[serde(default = "default_n")]
    pub n: usize,
    /// Output directory.
    #[serde(default)]
    pub out: Option<PathBuf>,
    #[serde(default)]
    pub physics: Physics,
    #[serde(default)]
    pub transfer: TransferGrid,
    #[serde(default)]
    pub shuttle: ShuttleGrid,
    #[serde(default)]
    pub electro: ElectroGrid,
    #[serde(default)]
    pub landscape: LandscapeSection,
}

fn default_n() -> usize {
    100
}

const PRESETS: &[(&str, &str)] = &[
    ("fig2d", include_str!("../../presets/fig2d.toml")),
    ("fig2e", include_str!("../../presets/fig2e.toml")),
    ("fig2h", include_str!("../../presets/fig2h.toml")),
    ("fig2i", include_str!("../../presets/fig2i.toml")),
    ("fig3d", include_str!("../../presets/fig3d.toml")),
    ("fig3e", include_str!("../../presets/fig3e.toml")),
    ("fig3h", include_str!("../../presets/fig3h.toml")),
];

pub fn preset_names() -> impl Iterator<Item = &'static str> {
    PRESETS.iter().map(|(n, _)| *n)
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ExperimentConfig {
    pub fn new(kind: ExperimentKind) -> Self {
        Self {
            kind,
            seed: 0,
            n: default_n(),
            out: None,
            physics: Physics::default(),
            transfer: TransferGrid::default(),
            shuttle: ShuttleGrid::default(),
            electro: ElectroGrid::default(),
            landscape: LandscapeSection::default(),
        }
    }

    /// Parses and validates a TOML document. Syntax errors carry the line
    /// and column from the parser.
    pub fn from_toml(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| bad(format!("{origin}: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text, &path.display().to_string())
    }

    pub fn preset(name: &str) -> Result<Self> {
        let (_, text) = PRESETS
            .iter()
            .find(|(n, _)| *n == name)
            .ok_or_else(|| bad(format!("unknown preset `{name}` (have {})", preset_names().collect::<Vec<_>>().join(", "))))?;
        Self::from_toml(text, name)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(bad(format!("{name} must be > 0, got {v}")))
            }
        };
        let all_positive = |name: &str, vs: &[f64]| {
            if vs.is_empty() {
                return Err(bad(format!("{name} grid is empty")));
            }
            vs.iter().try_for_each(|&v| positive(name, v))
        };
        let p = &self.physics;
        for (name, v) in [("physics.l_dot", p.l_dot), ("physics.pitch", p.pitch)] {
            if let Some(v) = v {
                positive(name, v)?;
            }
        }
        for (name, v) in [("physics.sigma_delta", p.sigma_delta), ("physics.sigma_eps", p.sigma_eps)] {
            if let Some(v) = v {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(bad(format!("{name} must be ≥ 0, got {v}")));
                }
            }
        }
        if let Some(t) = p.success_threshold {
            if !(0.0..1.0).contains(&t) {
                return Err(bad(format!("physics.success_threshold must lie in [0, 1), got {t}")));
            }
        }
        match self.kind {
            ExperimentKind::TransferSweep | ExperimentKind::MovingSweep => {
                let g = &self.transfer;
                all_positive("transfer.epsilon0", &g.epsilon0)?;
                all_positive("transfer.t0", &g.t0)?;
                all_positive("transfer.tau_tot", &g.tau_tot)?;
                if self.kind == ExperimentKind::MovingSweep {
                    all_positive("transfer.velocity", &g.velocity)?;
                }
            }
            ExperimentKind::Leakage2d => {
                all_positive("shuttle.t0", &self.shuttle.t0)?;
                all_positive("shuttle.velocity", &self.shuttle.velocity)?;
                positive("shuttle.distance_um", self.shuttle.distance_um)?;
            }
            ExperimentKind::ElectroWindow => {
                let e = &self.electro;
                all_positive("electro.pitch", &e.pitch)?;
                all_positive("electro.v_amp", &e.v_amp)?;
                if e.scan {
                    positive("electro.scan_pitch", e.scan_pitch)?;
                    positive("electro.scan_v_amp", e.scan_v_amp)?;
                    if e.scan_samples == 0 {
                        return Err(bad("electro.scan_samples must be ≥ 1"));
                    }
                }
            }
            ExperimentKind::GenLandscape => {
                positive("landscape.length", self.landscape.length)?;
                if self.landscape.channels.is_empty() {
                    return Err(bad("landscape.channels is empty"));
                }
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON form, excluding the output path.
    pub fn hash(&self) -> String {
        use sha2::{Digest, Sha256};
        let mut c = self.clone();
        c.out = None;
        let json = serde_json::to_vec(&c).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
