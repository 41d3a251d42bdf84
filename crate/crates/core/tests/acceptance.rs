//! Acceptance criteria, one PASS/FAIL line each.
//!
//! Run with `cargo test --test acceptance`; pass criterion ids (`C4 C7`)
//! after `--` to run a subset. The process fails when a criterion outside
//! `KNOWN_UNMET` fails. Known-unmet criteria still run and still print FAIL,
//! their analysis is in the README.

use nalgebra::{DMatrix, DVector, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;
use valley_shuttle::disorder::*;
use valley_shuttle::electrostatics::Trajectory;
use valley_shuttle::harness::*;
use valley_shuttle::lindblad::*;
use valley_shuttle::linalg::C64;
use valley_shuttle::transfer::*;

/// Criteria that this implementation does not reach at the stated
/// tolerance.
const KNOWN_UNMET: &[&str] = &["C3", "C10"];

struct Outcome {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
    secs: f64,
}

/// Every run's output as raw bits, for the determinism check.
type Fingerprint = Vec<u64>;

fn record_bits(records: &[Record]) -> Fingerprint {
    let mut out = Vec::new();
    for r in records {
        out.extend([r.point as u64, r.realization, r.seed, r.success.map_or(2, u64::from)]);
        out.extend(r.values.iter().map(|v| v.map_or(u64::MAX, f64::to_bits)));
        out.push(r.error.is_some() as u64);
    }
    out
}

fn point_p(res: &SweepResult) -> Vec<(f64, f64)> {
    res.summaries().iter().map(|s| (s.p_suc, s.p_suc_stderr)).collect()
}

// C1

fn valley_statistics() -> (bool, String, Fingerprint) {
    let sigma = 56.4;
    let ps = PointSet::from_points(vec![[0.0, 0.0]]).unwrap();
    let mut mags: Vec<f64> =
        (0..10_000u64).map(|s| sample_valley_coupling(&ps, sigma, 14.0, 9000 + s).unwrap().values[0].norm()).collect();
    let bits = mags.iter().map(|m| m.to_bits()).collect();
    let mean_ev = 2.0 * mags.iter().sum::<f64>() / mags.len() as f64;
    // Rayleigh CDF for E|Δ|² = σ².
    mags.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = mags.len() as f64;
    let ks = mags
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let f = 1.0 - (-r * r / (sigma * sigma)).exp();
            ((i + 1) as f64 / n - f).max(f - i as f64 / n)
        })
        .fold(0.0, f64::max);
    let pass = (mean_ev / 100.0 - 1.0).abs() <= 0.02 && ks < 0.02;
    (pass, format!("2<|Δ|> = {mean_ev:.2} μeV, KS = {ks:.4}"), bits)
}

// C2 to C5

fn transfer_preset(name: &str, n: Option<usize>, edit: impl FnOnce(&mut ExperimentConfig)) -> SweepResult {
    let mut cfg = ExperimentConfig::preset(name).unwrap();
    edit(&mut cfg);
    if let Some(n) = n {
        cfg.n = n;
    }
    run_experiment(&cfg, None).unwrap()
}

fn paused_region(n: Option<usize>) -> SweepResult {
    transfer_preset("fig2d", n, |c| {
        c.transfer.epsilon0 = vec![500.0];
        c.transfer.t0 = vec![100.0];
    })
}

fn judge_paused_region(res: &SweepResult) -> (bool, String) {
    let (p, se) = point_p(res)[0];
    let pass = res.failed() == 0 && p >= 0.85 && se <= 0.02;
    (pass, format!("P_suc = {p:.4} ± {se:.4} over {}", res.records.len()))
}

fn judge_duration_trend(res: &SweepResult) -> (bool, String) {
    // Grid order is t0 outer, τ_tot inner.
    let p = point_p(res);
    let mut monotone = true;
    let mut rows = Vec::new();
    for row in p.chunks(3) {
        monotone &= row.windows(2).all(|w| w[1].0 >= w[0].0 - 2.0 * w[0].1.hypot(w[1].1));
        rows.push(row.iter().map(|(p, _)| format!("{p:.3}")).collect::<Vec<_>>().join("/"));
    }
    let best = p.iter().map(|x| x.0).fold(0.0, f64::max);
    let pass = res.failed() == 0 && monotone && best >= 0.95;
    (pass, format!("P_suc(10/20/30 ns) per t0 = {}; monotone {monotone}, best {best:.3}", rows.join(", ")))
}

fn judge_velocity_order(res: &SweepResult) -> (bool, String) {
    let p = point_p(res);
    let (p1, p5, p10) = (p[0].0, p[1].0, p[2].0);
    let pass = res.failed() == 0 && p1 > p5 && p5 > p10 && (p1 - 0.90).abs() <= 0.05;
    (pass, format!("P_suc at 1/5/10 m/s = {p1:.3}/{p5:.3}/{p10:.3}"))
}

fn judge_detuning_order(res: &SweepResult) -> (bool, String) {
    let p = point_p(res);
    let pass = res.failed() == 0 && p[1].0 > p[0].0;
    (pass, format!("P_suc at ε0 = 500/5000 μeV = {:.3}/{:.3}", p[0].0, p[1].0))
}

// C6 to C8

fn shuttle(t0: f64, master: u64, r: u64, table: &SpectralTable) -> ShuttleRun {
    let cfg = ShuttleConfig { t0, seed: shuttle_seed(master, r), ..ShuttleConfig::default() };
    run_shuttle(&cfg, table).unwrap()
}

fn shuttle_bits(run: &ShuttleRun) -> Fingerprint {
    let mut out = vec![run.fidelity.to_bits(), run.leakage.to_bits(), run.steps as u64];
    for p in &run.trace {
        out.push(p.x.to_bits());
        out.extend(p.populations.iter().map(|v| v.to_bits()));
    }
    out
}

fn random_model(rng: &mut ChaCha8Rng) -> FivePocketModel {
    FivePocketModel {
        eps: std::array::from_fn(|_| rng.gen_range(-500.0..500.0)),
        t_hop: std::array::from_fn(|_| rng.gen_range(0.0..50.0)),
        delta: std::array::from_fn(|_| C64::from_polar(rng.gen_range(0.0..150.0), rng.gen_range(-3.2..3.2))),
        spacing: 200.0,
    }
}

fn vec_of(m: &Matrix10) -> DVector<C64> {
    DVector::from_fn(LEVELS * LEVELS, |k, _| m[(k % LEVELS, k / LEVELS)])
}

/// Largest distance between the split step and the dense Liouvillian
/// exponential over 20 random instances.
fn dense_oracle(table: &SpectralTable) -> (f64, Fingerprint) {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut worst = 0.0f64;
    let mut bits = Vec::new();
    for _ in 0..20 {
        let h = build_hamiltonian(&random_model(&mut rng));
        let (spec, rates) = compute_rates(&h, table).unwrap();
        let a = Matrix10::from_fn(|_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        let rho = a * a.adjoint();
        let rho = rho.unscale(rho.trace().re);
        let dt = rng.gen_range(0.01..2.0);
        let split = lindblad_step(&rho, &spec, &rates, dt).unwrap();
        let l: DMatrix<C64> = dense_liouvillian(&h, &spec, &rates).scale(dt);
        let dense = l.exp() * vec_of(&rho);
        worst = worst.max((vec_of(&split) - dense).norm());
        bits.extend(split.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]));
    }
    (worst, bits)
}

// C9

/// Largest state distance between the adaptive integrator and fine RK4
/// over 20 random 1 ns segments, every fourth one moving.
fn integrator_oracle() -> (f64, Fingerprint) {
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut worst = 0.0f64;
    let mut bits = Vec::new();
    for k in 0..20 {
        let s = TransferSchedule::new(rng.gen_range(150.0..1000.0), rng.gen_range(50.0..150.0), rng.gen_range(10.0..30.0))
            .unwrap();
        let (delta_l, delta_r) = sample_valley_pair(56.4, rng.gen());
        let start = rng.gen_range(0.0..s.end() - 1.0);
        let mut psi0 = Vector4::from_fn(|_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
        psi0.unscale_mut(psi0.norm());
        let bundle;
        let scenario = if k % 4 != 3 {
            TransferScenario::Paused { delta_l, delta_r }
        } else {
            let v_x = rng.gen_range(0.5..5.0);
            bundle = sample_landscape_bundle(&LandscapeConfig {
                sigma_delta: 56.4,
                sigma_eps: 1000.0,
                l_dot: 14.0,
                pitch: 70.0,
                channels: vec![0.0, CHANNEL_SEPARATION],
                x_min: -140.0,
                x_max: v_x * s.end() + 140.0,
                gate_mode: GateCorrelation::Correlated,
                cross_channel: CrossChannel::Independent,
                tunnel: None,
                master_seed: rng.gen(),
            })
            .unwrap();
            TransferScenario::Moving(MovingConfig {
                v_x,
                pitch: 70.0,
                disorder_mode: GateCorrelation::Correlated,
                landscape: &bundle,
                x_start: 0.0,
            })
        };
        let ham = TransferHamiltonian::new(&s, scenario).unwrap();
        let opts = IntegratorOptions { h_max: ham.max_step(), ..IntegratorOptions::default() };
        let (a, _) = evolve_adaptive(|t| ham.at(t), psi0, start, start + 1.0, &opts, |_, _| {}).unwrap();
        let b = rk4_reference(|t| ham.at(t), psi0, start, start + 1.0, 1e-6).unwrap();
        worst = worst.max((a - b).norm());
        bits.extend(a.iter().flat_map(|z| [z.re.to_bits(), z.im.to_bits()]));
    }
    (worst, bits)
}

// C10

fn judge_electrostatics(res: &SweepResult) -> (bool, String) {
    let cells = &res.extras.window;
    let (np, nv) = (5, 5);
    let at = |i: usize, j: usize| &cells[i * nv + j];
    let decreasing = |a: &valley_shuttle::electrostatics::WindowCell, b: &valley_shuttle::electrostatics::WindowCell| {
        if a.t_p_resolved && b.t_p_resolved {
            b.t_p < a.t_p
        } else {
            b.t_p <= a.t_p
        }
    };
    let mut e_up = true;
    let mut t_down_v = true;
    let mut t_down_p = true;
    for i in 0..np {
        for j in 1..nv {
            e_up &= at(i, j).e_orb > at(i, j - 1).e_orb;
            t_down_v &= decreasing(at(i, j - 1), at(i, j));
        }
    }
    for j in 0..nv {
        for i in 1..np {
            t_down_p &= decreasing(at(i - 1, j), at(i, j));
        }
    }
    let mut scan_min = f64::INFINITY;
    let mut scans_ok = res.extras.scans.len() == Trajectory::ALL.len();
    for s in &res.extras.scans {
        match s {
            Ok(points) => scan_min = points.iter().map(|p| p.e_orb).fold(scan_min, f64::min),
            Err(_) => scans_ok = false,
        }
    }
    let in_window = cells.iter().filter(|c| c.in_window).count();
    let e_max = cells.iter().map(|c| c.e_orb).fold(0.0, f64::max);
    let pass = cells.len() == np * nv && e_up && t_down_v && t_down_p && scans_ok && scan_min > 1.0 && in_window > 0;
    let detail = format!(
        "E_orb↑V {e_up}, t_p↓V {t_down_v}, t_p↓P {t_down_p}; scan min E_orb {scan_min:.3} meV; \
         window cells {in_window} (max E_orb {e_max:.3} meV)"
    );
    (pass, detail)
}

fn electro(edit: impl FnOnce(&mut ExperimentConfig)) -> SweepResult {
    let mut cfg = ExperimentConfig::preset("fig3h").unwrap();
    edit(&mut cfg);
    run_experiment(&cfg, None).unwrap()
}

fn window_bits(res: &SweepResult) -> Fingerprint {
    let mut out = record_bits(&res.records);
    for s in res.extras.scans.iter().flatten() {
        out.extend(s.iter().map(|p| p.e_orb.to_bits()));
    }
    out
}

struct Suite {
    filter: Vec<String>,
    outcomes: Vec<Outcome>,
}

impl Suite {
    fn wants(&self, id: &str) -> bool {
        self.filter.is_empty() || self.filter.iter().any(|f| f == id) || (id != "C11" && self.wants("C11"))
    }

    fn report(&mut self, id: &'static str, title: &'static str, start: Instant, (pass, detail): (bool, String)) {
        let o = Outcome { id, title, pass, detail, secs: start.elapsed().as_secs_f64() };
        let tag = match (o.pass, KNOWN_UNMET.contains(&id)) {
            (true, false) => "PASS",
            (true, true) => "PASS (listed as unmet)",
            (false, false) => "FAIL",
            (false, true) => "FAIL (known unmet)",
        };
        println!("{tag:<22} {:<4} {:<34} {} [{:.1} s]", o.id, o.title, o.detail, o.secs);
        self.outcomes.push(o);
    }
}

fn main() {
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| a.starts_with('C')).collect();
    let mut suite = Suite { filter, outcomes: Vec::new() };
    // (criterion, first run, rerun) for the determinism check.
    let mut runs: Vec<(&str, Fingerprint, Box<dyn Fn() -> Fingerprint>)> = Vec::new();
    let table: &'static SpectralTable = Box::leak(Box::new(phonon_table_for(&ShuttleConfig::default()).unwrap()));

    if suite.wants("C1") {
        let t = Instant::now();
        let (pass, detail, bits) = valley_statistics();
        let secs = t.elapsed().as_secs_f64();
        suite.report("C1", "valley-splitting statistics", t, (pass && secs < 10.0, detail));
        runs.push(("C1", bits, Box::new(|| valley_statistics().2)));
    }

    if suite.wants("C2") {
        let t = Instant::now();
        let res = paused_region(None);
        suite.report("C2", "paused transfer success", t, judge_paused_region(&res));
        runs.push(("C2", record_bits(&res.records), Box::new(|| record_bits(&paused_region(None).records))));
    }

    // The slow Monte Carlo sweeps are rerun on their first realizations;
    // each realization is seeded on its own, so these must reproduce the
    // matching records of the full run.
    let prefix = |res: &SweepResult, n: u64| -> Fingerprint {
        let kept: Vec<Record> = res.records.iter().filter(|r| r.realization < n).cloned().collect();
        record_bits(&kept)
    };

    if suite.wants("C3") {
        let t = Instant::now();
        let res = transfer_preset("fig2e", None, |_| {});
        suite.report("C3", "success versus ramp duration", t, judge_duration_trend(&res));
        runs.push(("C3", prefix(&res, 50), Box::new(|| record_bits(&transfer_preset("fig2e", Some(50), |_| {}).records))));
    }

    if suite.wants("C4") {
        let t = Instant::now();
        let res = transfer_preset("fig2h", None, |_| {});
        suite.report("C4", "moving correlated, velocity order", t, judge_velocity_order(&res));
        runs.push(("C4", prefix(&res, 20), Box::new(|| record_bits(&transfer_preset("fig2h", Some(20), |_| {}).records))));
    }

    if suite.wants("C5") {
        let t = Instant::now();
        let res = transfer_preset("fig2i", None, |_| {});
        suite.report("C5", "moving uncorrelated, detuning order", t, judge_detuning_order(&res));
        runs.push(("C5", prefix(&res, 20), Box::new(|| record_bits(&transfer_preset("fig2i", Some(20), |_| {}).records))));
    }

    let mut lindblad_runs: Vec<ShuttleRun> = Vec::new();

    if suite.wants("C6") || suite.wants("C8") {
        let t = Instant::now();
        let draws: Vec<ShuttleRun> = (0..3).map(|r| shuttle(1e-6, 5, r, table)).collect();
        let leaks: Vec<f64> = draws.iter().map(|d| 1.0 - d.fidelity).collect();
        let pass = leaks.iter().all(|l| (1e-13..=1e-10).contains(l));
        let shown: Vec<String> = leaks.iter().map(|l| format!("{l:.2e}")).collect();
        suite.report("C6", "leakage scale at 1 peV", t, (pass, format!("1-F = {}", shown.join(", "))));
        runs.push(("C6", shuttle_bits(&draws[0]), Box::new(move || shuttle_bits(&shuttle(1e-6, 5, 0, table)))));
        lindblad_runs.extend(draws);
    }

    if suite.wants("C7") || suite.wants("C8") {
        let t = Instant::now();
        let mean_leak = |t0: f64, keep: &mut Vec<ShuttleRun>| {
            let draws: Vec<ShuttleRun> = (0..5).map(|r| shuttle(t0, 6, r, table)).collect();
            let m = draws.iter().map(|d| 1.0 - d.fidelity).sum::<f64>() / 5.0;
            keep.extend(draws);
            m
        };
        let low = mean_leak(1e-2, &mut lindblad_runs);
        let high = mean_leak(1.0, &mut lindblad_runs);
        let pass = low <= 1e-3 && high > 1e-3;
        let detail = format!("<1-F> = {low:.3e} at 10 neV (need ≤ 1e-3), {high:.3e} at 1 μeV (need > 1e-3)");
        suite.report("C7", "leakage threshold", t, (pass, detail));
        runs.push(("C7", shuttle_bits(&shuttle(1e-2, 6, 0, table)), Box::new(move || shuttle_bits(&shuttle(1e-2, 6, 0, table)))));
    }

    if suite.wants("C8") {
        let t = Instant::now();
        let worst = lindblad_runs.iter().fold(
            DensityChecks { trace_error: 0.0, hermiticity: 0.0, min_eigenvalue: 0.0 },
            |a, r| DensityChecks {
                trace_error: a.trace_error.max(r.worst.trace_error),
                hermiticity: a.hermiticity.max(r.worst.hermiticity),
                min_eigenvalue: a.min_eigenvalue.min(r.worst.min_eigenvalue),
            },
        );
        let (dist, bits) = dense_oracle(table);
        let secs = t.elapsed().as_secs_f64();
        let pass = !lindblad_runs.is_empty() && worst.ok() && dist < 1e-8 && secs < 60.0;
        let detail = format!(
            "{} runs: |Trρ-1| ≤ {:.1e}, herm ≤ {:.1e}, λmin ≥ {:.1e}; dense oracle {dist:.1e}",
            lindblad_runs.len(),
            worst.trace_error,
            worst.hermiticity,
            worst.min_eigenvalue
        );
        suite.report("C8", "Lindblad validity", t, (pass, detail));
        runs.push(("C8", bits, Box::new(move || dense_oracle(table).1)));
    }

    if suite.wants("C9") {
        let t = Instant::now();
        let (dist, bits) = integrator_oracle();
        let secs = t.elapsed().as_secs_f64();
        suite.report("C9", "integrator oracle", t, (dist < 1e-8 && secs < 60.0, format!("max |ψ - ψ_ref| = {dist:.2e}")));
        runs.push(("C9", bits, Box::new(|| integrator_oracle().1)));
    }

    if suite.wants("C10") {
        let t = Instant::now();
        let res = electro(|_| {});
        suite.report("C10", "electrostatics trends", t, judge_electrostatics(&res));
        // A one-cell, short-scan rerun at the scan operating point.
        let one = |c: &mut ExperimentConfig| {
            c.electro.pitch = vec![50.0];
            c.electro.v_amp = vec![100.0];
            c.electro.scan_samples = 4;
        };
        let cell = res.records.iter().find(|r| res.points[r.point] == [50.0, 100.0]).cloned().unwrap();
        let mut expect = record_bits(&[Record { point: 0, ..cell }]);
        let short = electro(one);
        expect.extend(short.extras.scans.iter().flatten().flat_map(|s| s.iter().map(|p| p.e_orb.to_bits())));
        runs.push(("C10", expect, Box::new(move || window_bits(&electro(one)))));
    }

    if suite.wants("C11") {
        let t = Instant::now();
        let differ: Vec<&str> = runs.iter().filter(|(_, first, again)| *first != again()).map(|(id, _, _)| *id).collect();
        let covered: Vec<&str> = runs.iter().map(|(id, _, _)| *id).collect();
        let pass = !runs.is_empty() && differ.is_empty();
        let detail = format!("reran {}; differing: {}", covered.join(" "), if differ.is_empty() { "none".into() } else { differ.join(" ") });
        suite.report("C11", "determinism", t, (pass, detail));
    }

    let unexpected: Vec<&str> =
        suite.outcomes.iter().filter(|o| !o.pass && !KNOWN_UNMET.contains(&o.id)).map(|o| o.id).collect();
    let passed = suite.outcomes.iter().filter(|o| o.pass).count();
    println!("\n{passed}/{} criteria passed; unexpected failures: {}", suite.outcomes.len(), unexpected.len());
    if !unexpected.is_empty() {
        std::process::exit(1);
    }
}
