use super::potential::PotentialGrid;
use super::schrodinger::{solve_2d_schrodinger, SolverOptions};
use crate::error::{invalid, Error, Result};
use crate::units::{kinetic_prefactor_mev_nm2, UEV_PER_MEV};

#[derive(Debug, Clone, PartialEq)]
pub struct TunnelOptions {
    /// Sweep E_lat over [−e_lat_max, e_lat_max] (V/m).
    pub e_lat_max: f64,
    pub sweep_points: usize,
    /// Stop refining once the bracket shifts the detuning by less than
    /// this fraction of the current minimum gap.
    pub refine_rel: f64,
    pub max_refine: usize,
    /// Sweep points with a gap below this (meV) enter the two-level check.
    pub fit_window: f64,
    pub solver: SolverOptions,
}

impl Default for TunnelOptions {
    fn default() -> Self {
        Self {
            e_lat_max: 1000.0,
            sweep_points: 41,
            refine_rel: 1e-4,
            max_refine: 100,
            fit_window: 0.05,
            solver: SolverOptions { levels: 2, guard: 1, ..Default::default() },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoLevelFit {
    /// Detuning at zero field (μeV).
    pub epsilon: f64,
    /// Half the minimum gap (μeV).
    pub t_c: f64,
    /// Field at the minimum gap (V/m).
    pub e_lat: f64,
    /// dε/dE_lat (μeV per V/m).
    pub lever: f64,
    /// Largest relative deviation of the sweep gaps from √(ε² + 4t²) among
    /// points well inside the two-level regime.
    pub fit_residual: f64,
    /// False when 2t_c is below the floating-point resolution of the
    /// eigenvalue difference; t_c is then only an upper bound.
    pub resolved: bool,
    pub solves: usize,
}

struct Evaluator<'a, F> {
    build: &'a F,
    opts: &'a TunnelOptions,
    warm: Option<Vec<Vec<f64>>>,
    solves: usize,
    norm: f64,
}

impl<F: Fn(f64) -> Result<PotentialGrid>> Evaluator<'_, F> {
    /// E₁ − E₀ (meV) at field e.
    fn gap(&mut self, e: f64) -> Result<f64> {
        let grid = (self.build)(e)?;
        let vmax = grid.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let r = &grid.region;
        let kin = kinetic_prefactor_mev_nm2(self.opts.solver.mass_ratio);
        self.norm = self.norm.max(4.0 * kin * (1.0 / (r.hx * r.hx) + 1.0 / (r.hy * r.hy)) + vmax);
        let s = solve_2d_schrodinger(&grid, &self.opts.solver, self.warm.as_deref())?;
        self.solves += 1;
        let gap = s.energies[1] - s.energies[0];
        self.warm = Some(s.vectors);
        Ok(gap)
    }
}

/// Brent minimization of f on [a, b] (golden-section steps with parabolic
/// acceleration). Stops when `done(width, step, f(x))` holds, with `step`
/// the length of the last parabolic step (infinite after golden steps).
fn brent(
    mut f: impl FnMut(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    x0: f64,
    f0: f64,
    max_iter: usize,
    mut done: impl FnMut(f64, f64, f64) -> bool,
) -> Result<(f64, f64)> {
    const CGOLD: f64 = 0.381_966_011_250_105;
    let (mut x, mut w, mut v) = (x0, x0, x0);
    let (mut fx, mut fw, mut fv) = (f0, f0, f0);
    let (mut d, mut e) = (0.0f64, 0.0f64);
    let mut step = f64::INFINITY;
    for _ in 0..max_iter {
        let xm = 0.5 * (a + b);
        let tol1 = 1e-15 * x.abs() + 1e-300;
        if done(b - a, step, fx) {
            break;
        }
        let mut golden = true;
        if e.abs() > tol1 {
            let r = (x - w) * (fx - fv);
            let mut q = (x - v) * (fx - fw);
            let mut p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if q > 0.0 {
                p = -p;
            }
            q = q.abs();
            let etemp = e;
            e = d;
            if p.abs() < (0.5 * q * etemp).abs() && p > q * (a - x) && p < q * (b - x) {
                d = p / q;
                golden = false;
            }
        }
        if golden {
            e = if x >= xm { a - x } else { b - x };
            d = CGOLD * e;
        }
        let u = if d.abs() >= tol1 { x + d } else { x + tol1.copysign(d) };
        step = if golden { f64::INFINITY } else { (u - x).abs() };
        let fu = f(u)?;
        if fu <= fx {
            if u >= x {
                a = x;
            } else {
                b = x;
            }
            (v, fv, w, fw, x, fx) = (w, fw, x, fx, u, fu);
        } else {
            if u < x {
                a = u;
            } else {
                b = u;
            }
            if fu <= fw || w == x {
                (v, fv, w, fw) = (w, fw, u, fu);
            } else if fu <= fv || v == x || v == w {
                (v, fv) = (u, fu);
            }
        }
    }
    Ok((x, fx))
}

/// Sweeps a lateral field across a two-pocket potential, locates the
/// minimum ground-to-excited gap and reports t_c = gap/2. `build(E_lat)`
/// returns the tilted potential. A potential with fewer than two local
/// minima yields `Error::NotApplicable`.
pub fn extract_tunnel_coupling(
    build: impl Fn(f64) -> Result<PotentialGrid>,
    opts: &TunnelOptions,
) -> Result<TwoLevelFit> {
    if opts.sweep_points < 3 || !(opts.e_lat_max > 0.0) {
        return Err(invalid("sweep", "need ≥ 3 points over a positive range"));
    }
    if opts.solver.levels < 2 {
        return Err(invalid("levels", "tunnel extraction needs two levels"));
    }
    let flat = build(0.0)?;
    if flat.local_minima().len() < 2 {
        return Err(Error::NotApplicable("potential has a single minimum".into()));
    }
    let mut ev = Evaluator { build: &build, opts, warm: None, solves: 0, norm: 0.0 };
    let n = opts.sweep_points;
    let fields: Vec<f64> =
        (0..n).map(|k| opts.e_lat_max * (2.0 * k as f64 / (n - 1) as f64 - 1.0)).collect();
    let mut samples = Vec::with_capacity(n);
    // Start at the middle so warm starts follow a continuous path outward.
    let mid = n / 2;
    let mut order: Vec<usize> = (mid..n).collect();
    order.extend((0..mid).rev());
    let mut gaps = vec![0.0; n];
    let mut mid_warm = None;
    for &k in &order {
        if k + 1 == mid {
            ev.warm = mid_warm.take();
        }
        gaps[k] = ev.gap(fields[k])?;
        if k == mid {
            mid_warm = ev.warm.clone();
        }
    }
    for k in 0..n {
        samples.push((fields[k], gaps[k]));
    }
    let kbest = (0..n).min_by(|&a, &b| samples[a].1.partial_cmp(&samples[b].1).unwrap()).unwrap();
    if kbest == 0 || kbest == n - 1 {
        return Err(Error::NotApplicable("minimum gap outside the field sweep".into()));
    }

    let floor = 100.0 * f64::EPSILON * ev.norm;
    // Rough lever from the sweep ends, only used to scale the stopping test.
    let lever_end = (samples[n - 1].1 + samples[0].1) / (fields[n - 1] - fields[0]);
    let (e_best, g2_best) = {
        let lo = fields[kbest - 1];
        let hi = fields[kbest + 1];
        let root = samples[kbest].1 * samples[kbest].1;
        let mut sq = |e: f64| ev.gap(e).map(|g| g * g);
        brent(&mut sq, lo, hi, fields[kbest], root, opts.max_refine, |width, step, fx| {
            let tol = (opts.refine_rel * fx.max(0.0).sqrt()).max(floor);
            lever_end * width <= tol || lever_end * step <= tol
        })?
    };
    let gap_min = g2_best.max(0.0).sqrt();
    let t_mev = 0.5 * gap_min;

    // Two-level model g² = a²(E − E₀)² + g₀² on the points near the
    // anticrossing; always keep the bracket around the minimum.
    let window = opts.fit_window.max(1.5 * gap_min);
    let near: Vec<(f64, f64)> = samples
        .iter()
        .enumerate()
        .filter(|(k, s)| s.1 <= window || k.abs_diff(kbest) <= 1)
        .map(|(_, &(e, g))| (e - e_best, g))
        .collect();
    let (num, den) = near.iter().fold((0.0, 0.0), |(a, b), &(de, g)| {
        (a + (g * g - g2_best) * de * de, b + de.powi(4))
    });
    let lever_mev = if den > 0.0 { (num / den).max(0.0).sqrt() } else { lever_end };
    let fit_residual = near
        .iter()
        .map(|&(de, g)| {
            let model = ((lever_mev * de).powi(2) + g2_best.max(0.0)).sqrt();
            (g - model).abs() / model.max(1e-300)
        })
        .fold(0.0, f64::max);
    Ok(TwoLevelFit {
        epsilon: -lever_mev * e_best * UEV_PER_MEV,
        t_c: t_mev * UEV_PER_MEV,
        e_lat: e_best,
        lever: lever_mev * UEV_PER_MEV,
        fit_residual,
        resolved: gap_min > floor,
        solves: ev.solves,
    })
}
