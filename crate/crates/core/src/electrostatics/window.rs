use super::potential::{potential_from_gates, Region, MAX_SPACING};
use super::schrodinger::{solve_2d_schrodinger, SolverOptions};
use super::tunnel::{extract_tunnel_coupling, TunnelOptions};
use super::{Dimensionality, GateLayout};
use crate::error::{invalid, Result};
use crate::units::UEV_PER_MEV;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::Path;

pub const E_ORB_THRESHOLD_MEV: f64 = 1.5;
pub const T_P_THRESHOLD_MEV: f64 = 1e-5;

/// Supported sweep ranges for the window map.
pub const PITCH_RANGE: (f64, f64) = (30.0, 80.0);
pub const V_AMP_RANGE: (f64, f64) = (25.0, 150.0);

/// Square of half-width 2P centered on the pocket at τ. The walls sit on the
/// potential maxima halfway to the next pocket.
pub fn pocket_region(layout: &GateLayout, tau: f64, h: f64) -> Result<Region> {
    let (cx, cy) = layout.pocket_center(tau);
    let half = 2.0 * layout.pitch;
    Region::new(cx - half, cx + half, cy - half, cy + half, h)
}

/// Two pockets neighboring along x at τ = 0, separated by one unit cell.
pub fn double_pocket_region(layout: &GateLayout, h: f64) -> Result<Region> {
    let (cx, cy) = layout.pocket_center(0.0);
    let p = layout.pitch;
    Region::new(cx - 2.0 * p, cx + 6.0 * p, cy - 2.0 * p, cy + 2.0 * p, h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct WindowOptions {
    pub gap: f64,
    /// Target grid spacing (nm).
    pub spacing: f64,
    pub solver: SolverOptions,
    pub tunnel: TunnelOptions,
    /// The field sweep reaches a detuning of this fraction of E_orb.
    pub field_fraction: f64,
    /// Gaps below this fraction of E_orb enter the two-level check.
    pub fit_fraction: f64,
}

impl Default for WindowOptions {
    fn default() -> Self {
        Self {
            gap: GateLayout::default().gap,
            spacing: MAX_SPACING,
            solver: SolverOptions::default(),
            tunnel: TunnelOptions::default(),
            field_fraction: 0.25,
            fit_fraction: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCell {
    #[serde(rename = "P_nm")]
    pub pitch: f64,
    #[serde(rename = "Vamp_mV")]
    pub v_amp: f64,
    #[serde(rename = "E_orb_meV")]
    pub e_orb: f64,
    #[serde(rename = "t_p_meV")]
    pub t_p: f64,
    /// False when t_p sits at the floating-point floor of the gap and is
    /// only an upper bound.
    pub t_p_resolved: bool,
    pub fit_residual: f64,
    pub in_window: bool,
}

fn static_layout(pitch: f64, v_amp: f64, gap: f64) -> GateLayout {
    GateLayout { pitch, gap, v_amp, dimensionality: Dimensionality::Clavette, ..Default::default() }
}

/// E_orb and the neighbor coupling t_p of the static clavette pocket.
pub fn window_cell(pitch: f64, v_amp: f64, opts: &WindowOptions) -> Result<WindowCell> {
    let layout = static_layout(pitch, v_amp, opts.gap);
    let single = potential_from_gates(&layout, 0.0, pocket_region(&layout, 0.0, opts.spacing)?)?;
    let e_orb = solve_2d_schrodinger(&single, &opts.solver, None)?.e_orb();

    let double = potential_from_gates(&layout, 0.0, double_pocket_region(&layout, opts.spacing)?)?;
    // Detuning per field is the pocket separation 4P (meV per V/m).
    let lever = 4.0 * pitch * 1e-6;
    let tunnel = TunnelOptions {
        e_lat_max: opts.field_fraction * e_orb / lever,
        fit_window: opts.fit_fraction * e_orb,
        ..opts.tunnel.clone()
    };
    let fit = extract_tunnel_coupling(|e| Ok(double.with_field(e, 0.0)), &tunnel)?;
    let t_p = fit.t_c / UEV_PER_MEV;
    Ok(WindowCell {
        pitch,
        v_amp,
        e_orb,
        t_p,
        t_p_resolved: fit.resolved,
        fit_residual: fit.fit_residual,
        in_window: e_orb > E_ORB_THRESHOLD_MEV && t_p < T_P_THRESHOLD_MEV,
    })
}

/// Every (P, V_amp) combination, P outermost. Cells run in parallel.
pub fn operating_window(pitches: &[f64], v_amps: &[f64], opts: &WindowOptions) -> Result<Vec<WindowCell>> {
    let inside = |x: f64, (lo, hi): (f64, f64)| x >= lo && x <= hi;
    if let Some(p) = pitches.iter().find(|&&p| !inside(p, PITCH_RANGE)) {
        return Err(invalid("pitch", format!("{p} nm outside {PITCH_RANGE:?}")));
    }
    if let Some(v) = v_amps.iter().find(|&&v| !inside(v, V_AMP_RANGE)) {
        return Err(invalid("v_amp", format!("{v} mV outside {V_AMP_RANGE:?}")));
    }
    let cells: Vec<(f64, f64)> = pitches.iter().flat_map(|&p| v_amps.iter().map(move |&v| (p, v))).collect();
    cells.par_iter().map(|&(p, v)| window_cell(p, v, opts)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Trajectory {
    X,
    Y,
    Diagonal,
}

impl Trajectory {
    pub const ALL: [Trajectory; 3] = [Trajectory::X, Trajectory::Y, Trajectory::Diagonal];

    /// (Ω_x, Ω_y) for drive frequency ω.
    pub fn drive(self, omega: f64) -> (f64, f64) {
        match self {
            Trajectory::X => (omega, 0.0),
            Trajectory::Y => (0.0, omega),
            Trajectory::Diagonal => (omega, omega),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub tau_ns: f64,
    #[serde(rename = "E_orb_meV")]
    pub e_orb: f64,
    pub trajectory: Trajectory,
}

/// E_orb of the moving pocket at `samples` instants over one drive period
/// 2π/ω. The region follows the pocket, so the previous eigenvectors warm
/// start each solve.
pub fn orbital_scan(
    pitch: f64,
    v_amp: f64,
    trajectory: Trajectory,
    omega: f64,
    samples: usize,
    opts: &WindowOptions,
) -> Result<Vec<ScanPoint>> {
    if !(omega > 0.0) || samples == 0 {
        return Err(invalid("scan", "need ω > 0 and at least one sample"));
    }
    let (omega_x, omega_y) = trajectory.drive(omega);
    let layout = GateLayout { omega_x, omega_y, ..static_layout(pitch, v_amp, opts.gap) };
    let period = std::f64::consts::TAU / omega;
    let mut warm: Option<Vec<Vec<f64>>> = None;
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let tau = period * k as f64 / samples as f64;
        let grid = potential_from_gates(&layout, tau, pocket_region(&layout, tau, opts.spacing)?)?;
        let s = solve_2d_schrodinger(&grid, &opts.solver, warm.as_deref())?;
        out.push(ScanPoint { tau_ns: tau, e_orb: s.e_orb(), trajectory });
        warm = Some(s.vectors);
    }
    Ok(out)
}

fn write_rows<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Columns P_nm, Vamp_mV, E_orb_meV, t_p_meV, in_window, then the
/// diagnostics.
pub fn write_window_csv(path: &Path, cells: &[WindowCell]) -> Result<()> {
    #[derive(Serialize)]
    struct Row {
        #[serde(rename = "P_nm")]
        p: f64,
        #[serde(rename = "Vamp_mV")]
        v: f64,
        #[serde(rename = "E_orb_meV")]
        e: f64,
        #[serde(rename = "t_p_meV")]
        t: f64,
        in_window: u8,
        t_p_resolved: u8,
        fit_residual: f64,
    }
    let rows: Vec<Row> = cells
        .iter()
        .map(|c| Row {
            p: c.pitch,
            v: c.v_amp,
            e: c.e_orb,
            t: c.t_p,
            in_window: c.in_window as u8,
            t_p_resolved: c.t_p_resolved as u8,
            fit_residual: c.fit_residual,
        })
        .collect();
    write_rows(path, &rows)
}

pub fn write_scan_csv(path: &Path, points: &[ScanPoint]) -> Result<()> {
    write_rows(path, points)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pocket_minimum_tracks_drive() {
        // Over one period the pocket moves 4P; its grid minimum should stay
        // within one cell of the drive-phase prediction.
        for traj in Trajectory::ALL {
            let (omega_x, omega_y) = traj.drive(0.5);
            let layout = GateLayout { omega_x, omega_y, ..Default::default() };
            let (vx, vy) = layout.velocity();
            let (x0, y0) = layout.pocket_center(0.0);
            for k in 0..32 {
                let tau = std::f64::consts::TAU / 0.5 * k as f64 / 32.0;
                let region = pocket_region(&layout, tau, 1.0).unwrap();
                let (mx, my, _) = potential_from_gates(&layout, tau, region).unwrap().minimum();
                let (ex, ey) = (x0 + vx * tau, y0 + vy * tau);
                assert!((mx - ex).abs() <= region.hx && (my - ey).abs() <= region.hy, "{traj:?} τ={tau}");
            }
        }
    }

    #[test]
    fn rejects_out_of_range_cells() {
        let o = WindowOptions::default();
        assert!(operating_window(&[20.0], &[100.0], &o).is_err());
        assert!(operating_window(&[50.0], &[200.0], &o).is_err());
    }

    #[test]
    fn csv_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("w.csv");
        let cell = WindowCell {
            pitch: 50.0,
            v_amp: 100.0,
            e_orb: 1.0,
            t_p: 1e-7,
            t_p_resolved: true,
            fit_residual: 0.0,
            in_window: false,
        };
        write_window_csv(&path, &[cell]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("P_nm,Vamp_mV,E_orb_meV,t_p_meV,in_window,"));
        let scan = [ScanPoint { tau_ns: 0.5, e_orb: 1.2, trajectory: Trajectory::Diagonal }];
        write_scan_csv(&path, &scan).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text, "tau_ns,E_orb_meV,trajectory\n0.5,1.2,diagonal\n");
    }
}
