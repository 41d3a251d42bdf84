use super::config::{ExperimentConfig, ExperimentKind};
use super::summary::{aggregate, PointSummary};
use crate::disorder::{sample_landscape_bundle, CrossChannel, LandscapeConfig, TunnelSpec};
use crate::electrostatics::{orbital_scan, window_cell, ScanPoint, Trajectory, WindowCell, WindowOptions};
use crate::error::{Error, Result};
use crate::lindblad::{phonon_table_for, run_shuttle, ShuttleConfig};
use crate::rng;
use crate::transfer::{draw_seed, run_draw, McConfig, McScenario, TransferSchedule};
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::time::Instant;

/// One realization at one grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub point: usize,
    pub realization: u64,
    pub seed: u64,
    pub values: Vec<Option<f64>>,
    pub success: Option<bool>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Default)]
pub struct Extras {
    pub window: Vec<WindowCell>,
    pub scans: Vec<std::result::Result<Vec<ScanPoint>, String>>,
    /// CSV text of each sampled landscape, by realization.
    pub landscapes: Vec<(u64, String)>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub kind: ExperimentKind,
    pub param_names: Vec<String>,
    pub value_names: Vec<String>,
    /// Parameter values of each grid point.
    pub points: Vec<Vec<f64>>,
    /// Grid order, then realization order.
    pub records: Vec<Record>,
    /// Wall time (s) of each record.
    pub wall: Vec<f64>,
    pub extras: Extras,
}

impl SweepResult {
    pub fn failed(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
            + self.extras.scans.iter().filter(|s| s.is_err()).count()
    }

    pub fn summaries(&self) -> Vec<PointSummary> {
        aggregate(&self.points, &self.records)
    }
}

type Outcome = (Vec<Option<f64>>, Option<bool>);

fn cartesian(axes: &[&[f64]]) -> Vec<Vec<f64>> {
    axes.iter().fold(vec![vec![]], |acc, axis| {
        acc.into_iter()
            .flat_map(|prefix| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect()
    })
}

fn panic_message(p: Box<dyn std::any::Any + Send>) -> String {
    p.downcast_ref::<&str>()
        .map(|s| s.to_string())
        .or_else(|| p.downcast_ref::<String>().cloned())
        .unwrap_or_else(|| "panic".into())
}

/// Evaluates every (point, realization) pair on the pool and returns them
/// in grid order. A failing or panicking evaluation becomes an error record.
fn fan_out(
    points: usize,
    n: usize,
    seed_of: impl Fn(u64) -> u64 + Sync,
    eval: impl Fn(usize, u64, u64) -> Result<Outcome> + Sync,
) -> (Vec<Record>, Vec<f64>) {
    let items: Vec<(usize, u64)> = (0..points).flat_map(|p| (0..n as u64).map(move |r| (p, r))).collect();
    let out: Vec<(Record, f64)> = items
        .par_iter()
        .map(|&(point, realization)| {
            let seed = seed_of(realization);
            let start = Instant::now();
            let res = catch_unwind(AssertUnwindSafe(|| eval(point, realization, seed)))
                .unwrap_or_else(|p| Err(Error::Panicked(panic_message(p))));
            let (values, success, error) = match res {
                Ok((v, s)) => (v, s, None),
                Err(e) => (vec![], None, Some(e.to_string())),
            };
            (Record { point, realization, seed, values, success, error }, start.elapsed().as_secs_f64())
        })
        .collect();
    out.into_iter().unzip()
}

fn mc_config(cfg: &ExperimentConfig, scenario: McScenario) -> McConfig {
    let d = McConfig::default();
    let p = &cfg.physics;
    McConfig {
        scenario,
        sigma_delta: p.sigma_delta.unwrap_or(d.sigma_delta),
        sigma_eps: p.sigma_eps.unwrap_or(d.sigma_eps),
        l_dot: p.l_dot.unwrap_or(d.l_dot),
        pitch: p.pitch.unwrap_or(d.pitch),
        success_threshold: p.success_threshold.unwrap_or(d.success_threshold),
        ..d
    }
}

fn shuttle_config(cfg: &ExperimentConfig) -> ShuttleConfig {
    let d = ShuttleConfig::default();
    let p = &cfg.physics;
    ShuttleConfig {
        sigma_delta: p.sigma_delta.unwrap_or(d.sigma_delta),
        sigma_eps: p.sigma_eps.unwrap_or(d.sigma_eps),
        l_dot: p.l_dot.unwrap_or(d.l_dot),
        pitch: p.pitch.unwrap_or(d.pitch),
        distance_um: cfg.shuttle.distance_um,
        ..d
    }
}

fn names(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

fn transfer_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let g = &cfg.transfer;
    let moving = cfg.kind == ExperimentKind::MovingSweep;
    let mut axes: Vec<&[f64]> = vec![&g.epsilon0, &g.t0, &g.tau_tot];
    let mut param_names = names(&["epsilon0_ueV", "t0_ueV", "tau_tot_ns"]);
    if moving {
        axes.push(&g.velocity);
        param_names.push("v_ms".into());
    }
    let points = cartesian(&axes);
    let threshold = mc_config(cfg, McScenario::Paused).success_threshold;
    let (records, wall) = fan_out(
        points.len(),
        cfg.n,
        |r| draw_seed(cfg.seed, r),
        |p, r, _| {
            let q = &points[p];
            let schedule = TransferSchedule::new(q[0], q[1], q[2])?;
            let scenario = if moving {
                McScenario::Moving { v_x: q[3], gate_mode: g.gate_mode }
            } else {
                McScenario::Paused
            };
            let o = run_draw(&schedule, &mc_config(cfg, scenario), cfg.seed, r)?;
            Ok((vec![Some(o.fidelity)], Some(1.0 - o.fidelity <= threshold)))
        },
    );
    Ok(SweepResult {
        kind: cfg.kind,
        param_names,
        value_names: names(&["fidelity"]),
        points,
        records,
        wall,
        extras: Extras::default(),
    })
}

pub fn shuttle_seed(master: u64, realization: u64) -> u64 {
    rng::indexed_seed(master, "shuttle-draw", realization)
}

fn leakage_sweep(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let base = shuttle_config(cfg);
    let threshold = cfg.physics.success_threshold.unwrap_or(McConfig::default().success_threshold);
    let points = cartesian(&[&cfg.shuttle.t0, &cfg.shuttle.velocity]);
    let table = phonon_table_for(&base)?;
    let (records, wall) = fan_out(
        points.len(),
        cfg.n,
        |r| shuttle_seed(cfg.seed, r),
        |p, _, seed| {
            let sc = ShuttleConfig { t0: points[p][0], velocity: points[p][1], seed, ..base.clone() };
            let run = run_shuttle(&sc, &table)?;
            Ok((vec![Some(run.leakage), Some(run.fidelity)], Some(run.leakage <= threshold)))
        },
    );
    Ok(SweepResult {
        kind: cfg.kind,
        param_names: names(&["t0_ueV", "v_ms"]),
        value_names: names(&["leakage", "fidelity"]),
        points,
        records,
        wall,
        extras: Extras::default(),
    })
}

fn electro_window(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let e = &cfg.electro;
    let opts = WindowOptions { gap: e.gap, ..Default::default() };
    let points = cartesian(&[&e.pitch, &e.v_amp]);
    let cells: Vec<std::sync::Mutex<Option<WindowCell>>> = points.iter().map(|_| Default::default()).collect();
    let (records, wall) = fan_out(
        points.len(),
        1,
        |_| 0,
        |p, _, _| {
            let c = window_cell(points[p][0], points[p][1], &opts)?;
            let values = vec![Some(c.e_orb), Some(c.t_p), Some(c.fit_residual), Some(c.t_p_resolved as u8 as f64)];
            let success = Some(c.in_window);
            *cells[p].lock().unwrap() = Some(c);
            Ok((values, success))
        },
    );
    let window = cells.into_iter().filter_map(|c| c.into_inner().unwrap()).collect();
    let scans = if e.scan {
        Trajectory::ALL
            .par_iter()
            .map(|&t| orbital_scan(e.scan_pitch, e.scan_v_amp, t, 1.0, e.scan_samples, &opts).map_err(|e| e.to_string()))
            .collect()
    } else {
        vec![]
    };
    Ok(SweepResult {
        kind: cfg.kind,
        param_names: names(&["P_nm", "Vamp_mV"]),
        value_names: names(&["E_orb_meV", "t_p_meV", "fit_residual", "t_p_resolved"]),
        points,
        records,
        wall,
        extras: Extras { window, scans, landscapes: vec![] },
    })
}

fn gen_landscape(cfg: &ExperimentConfig) -> Result<SweepResult> {
    let l = &cfg.landscape;
    let d = McConfig::default();
    let p = &cfg.physics;
    let base = LandscapeConfig {
        sigma_delta: p.sigma_delta.unwrap_or(d.sigma_delta),
        sigma_eps: p.sigma_eps.unwrap_or(d.sigma_eps),
        l_dot: p.l_dot.unwrap_or(d.l_dot),
        pitch: p.pitch.unwrap_or(d.pitch),
        channels: l.channels.clone(),
        x_min: 0.0,
        x_max: l.length,
        gate_mode: l.gate_mode,
        cross_channel: CrossChannel::Independent,
        tunnel: l.tunnel_t0.map(|t0| TunnelSpec { t0, sigma_t: None, allow_large_sigma_t: false }),
        master_seed: 0,
    };
    let texts: Vec<std::sync::Mutex<Option<String>>> = (0..cfg.n).map(|_| Default::default()).collect();
    let (records, wall) = fan_out(
        1,
        cfg.n,
        |r| rng::indexed_seed(cfg.seed, "landscape-draw", r),
        |_, r, seed| {
            let bundle = sample_landscape_bundle(&LandscapeConfig { master_seed: seed, ..base.clone() })?;
            let mut buf = Vec::new();
            bundle.write_csv(&mut buf)?;
            *texts[r as usize].lock().unwrap() = Some(String::from_utf8(buf).expect("csv is utf-8"));
            let mut sum = 0.0;
            let mut count = 0usize;
            for ch in &bundle.channels {
                for (re, im) in ch.delta_re.values().iter().zip(ch.delta_im.values()) {
                    sum += re.hypot(*im);
                    count += 1;
                }
            }
            Ok((vec![Some(sum / count as f64), Some(bundle.grid.n as f64)], None))
        },
    );
    let landscapes = texts
        .into_iter()
        .enumerate()
        .filter_map(|(r, t)| t.into_inner().unwrap().map(|t| (r as u64, t)))
        .collect();
    Ok(SweepResult {
        kind: cfg.kind,
        param_names: vec![],
        value_names: names(&["mean_abs_delta_ueV", "nodes"]),
        points: vec![vec![]],
        records,
        wall,
        extras: Extras { landscapes, ..Default::default() },
    })
}

/// Runs the sweep on `jobs` worker threads (all cores when `None`). The
/// result does not depend on the worker count.
pub fn run_experiment(cfg: &ExperimentConfig, jobs: Option<usize>) -> Result<SweepResult> {
    cfg.validate()?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = jobs {
        pool = pool.num_threads(j.max(1));
    }
    let pool = pool.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    pool.install(|| match cfg.kind {
        ExperimentKind::TransferSweep | ExperimentKind::MovingSweep => transfer_sweep(cfg),
        ExperimentKind::Leakage2d => leakage_sweep(cfg),
        ExperimentKind::ElectroWindow => electro_window(cfg),
        ExperimentKind::GenLandscape => gen_landscape(cfg),
    })
}

fn fmt(v: f64) -> String {
    format!("{v:e}")
}

/// Record table: point, parameters, realization, seed, values, success,
/// error. Missing values are empty cells.
pub fn write_records<W: Write>(res: &SweepResult, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["point".to_string()];
    header.extend(res.param_names.iter().cloned());
    header.extend(["realization".to_string(), "seed".to_string()]);
    header.extend(res.value_names.iter().cloned());
    header.extend(["success".to_string(), "error".to_string()]);
    w.write_record(&header)?;
    for r in &res.records {
        let mut row = vec![r.point.to_string()];
        row.extend(res.points[r.point].iter().map(|&v| fmt(v)));
        row.extend([r.realization.to_string(), r.seed.to_string()]);
        for k in 0..res.value_names.len() {
            row.push(r.values.get(k).copied().flatten().map(fmt).unwrap_or_default());
        }
        row.push(r.success.map(|s| (s as u8).to_string()).unwrap_or_default());
        row.push(r.error.clone().unwrap_or_default());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub kind: &'static str,
    pub version: String,
    pub config_hash: String,
    pub seed: u64,
    pub n: usize,
    pub records: usize,
    pub failed: usize,
    pub points: Vec<PointSummary>,
}

pub fn version_stamp() -> String {
    format!("{}+g{}", env!("CARGO_PKG_VERSION"), env!("VALLEY_SHUTTLE_GIT"))
}

pub fn run_summary(cfg: &ExperimentConfig, res: &SweepResult) -> RunSummary {
    RunSummary {
        kind: cfg.kind.name(),
        version: version_stamp(),
        config_hash: cfg.hash(),
        seed: cfg.seed,
        n: cfg.n,
        records: res.records.len(),
        failed: res.failed(),
        points: res.summaries(),
    }
}

/// Writes through a temporary file so an interrupted run never leaves a
/// truncated output behind.
fn write_atomic(path: &Path, f: impl FnOnce(&mut std::io::BufWriter<std::fs::File>) -> Result<()>) -> Result<()> {
    let tmp = path.with_extension("partial");
    {
        let mut w = std::io::BufWriter::new(std::fs::File::create(&tmp)?);
        f(&mut w)?;
        w.flush()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

/// Writes records.csv, summary.json and timing.csv (plus kind-specific
/// files) into `dir` and returns the paths written.
pub fn write_outputs(cfg: &ExperimentConfig, res: &SweepResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut emit = |name: &str, f: &mut dyn FnMut(&mut std::io::BufWriter<std::fs::File>) -> Result<()>| {
        let path = dir.join(name);
        write_atomic(&path, f)?;
        written.push(path);
        Ok::<_, Error>(())
    };
    emit("records.csv", &mut |w| write_records(res, w))?;
    emit("summary.json", &mut |w| {
        serde_json::to_writer_pretty(&mut *w, &run_summary(cfg, res))?;
        writeln!(w)?;
        Ok(())
    })?;
    emit("timing.csv", &mut |w| {
        writeln!(w, "point,realization,wall_s")?;
        for (r, t) in res.records.iter().zip(&res.wall) {
            writeln!(w, "{},{},{t:.6}", r.point, r.realization)?;
        }
        Ok(())
    })?;
    emit("config.toml", &mut |w| Ok(w.write_all(cfg.to_toml().as_bytes())?))?;
    if cfg.kind == ExperimentKind::ElectroWindow {
        emit("window.csv", &mut |w| write_window(&res.extras.window, w))?;
        let scan: Vec<ScanPoint> = res.extras.scans.iter().flat_map(|s| s.iter().flatten().cloned()).collect();
        if cfg.electro.scan {
            emit("scan.csv", &mut |w| write_scan(&scan, w))?;
        }
    }
    for (r, text) in &res.extras.landscapes {
        emit(&format!("landscape_{r:04}.csv"), &mut |w| Ok(w.write_all(text.as_bytes())?))?;
    }
    Ok(written)
}

fn write_window<W: Write>(cells: &[WindowCell], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["P_nm", "Vamp_mV", "E_orb_meV", "t_p_meV", "in_window"])?;
    for c in cells {
        w.write_record([fmt(c.pitch), fmt(c.v_amp), fmt(c.e_orb), fmt(c.t_p), (c.in_window as u8).to_string()])?;
    }
    w.flush()?;
    Ok(())
}

fn write_scan<W: Write>(points: &[ScanPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cartesian_order() {
        let g = cartesian(&[&[1.0, 2.0], &[3.0, 4.0, 5.0]]);
        assert_eq!(g.len(), 6);
        assert_eq!(g[0], vec![1.0, 3.0]);
        assert_eq!(g[1], vec![1.0, 4.0]);
        assert_eq!(g[5], vec![2.0, 5.0]);
        assert_eq!(cartesian(&[]), vec![Vec::<f64>::new()]);
    }

    #[test]
    fn panics_become_error_records() {
        let (records, wall) = fan_out(2, 2, |r| r, |p, r, _| {
            if p == 1 && r == 0 {
                panic!("boom");
            }
            Ok((vec![Some(1.0)], Some(true)))
        });
        assert_eq!(records.len(), 4);
        assert_eq!(wall.len(), 4);
        assert_eq!(records[2].error.as_deref(), Some("realization panicked: boom"));
        assert!(records.iter().filter(|r| r.error.is_none()).count() == 3);
    }
}
