use super::potential::PotentialGrid;
use crate::error::{invalid, Error, Result};
use crate::units::{kinetic_prefactor_mev_nm2, MT_SI};
use nalgebra::{DMatrix, SymmetricEigen};
use rustdct::{DctPlanner, Dst1};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Effective mass in units of mₑ.
    pub mass_ratio: f64,
    /// Number of levels reported.
    pub levels: usize,
    /// Extra block vectors carried by the eigensolver.
    pub guard: usize,
    /// Required residual ‖Hψ − Eψ‖ (meV, unit-norm ψ).
    pub residual_tol: f64,
    pub max_iter: usize,
    /// Restarts allowed when a run stalls above the tolerance.
    pub restarts: usize,
    /// Shift (meV) of the kinetic preconditioner (T + shift)⁻¹.
    pub precond_shift: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            mass_ratio: MT_SI,
            levels: 2,
            guard: 2,
            residual_tol: 5e-9,
            max_iter: 400,
            restarts: 4,
            precond_shift: 3.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumResult {
    /// Ascending eigenvalues (meV).
    pub energies: Vec<f64>,
    /// Unit-norm eigenvectors on the grid nodes, x fastest.
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
}

impl SpectrumResult {
    /// E₁ − E₀ (meV).
    pub fn e_orb(&self) -> f64 {
        self.energies[1] - self.energies[0]
    }
}

struct Operator<'a> {
    grid: &'a PotentialGrid,
    cx: f64,
    cy: f64,
}

impl Operator<'_> {
    fn apply(&self, psi: &[f64], out: &mut [f64]) {
        let r = &self.grid.region;
        let (nx, ny) = (r.nx, r.ny);
        let diag = 2.0 * (self.cx + self.cy);
        for j in 0..ny {
            for i in 0..nx {
                let k = j * nx + i;
                let mut acc = (diag + self.grid.values[k]) * psi[k];
                if i > 0 {
                    acc -= self.cx * psi[k - 1];
                }
                if i + 1 < nx {
                    acc -= self.cx * psi[k + 1];
                }
                if j > 0 {
                    acc -= self.cy * psi[k - nx];
                }
                if j + 1 < ny {
                    acc -= self.cy * psi[k + nx];
                }
                out[k] = acc;
            }
        }
    }
}

/// (T + shift)⁻¹ for the Dirichlet kinetic operator, diagonal in the
/// sine basis.
struct Preconditioner {
    nx: usize,
    ny: usize,
    dst_x: Arc<dyn Dst1<f64>>,
    dst_y: Arc<dyn Dst1<f64>>,
    inv: Vec<f64>,
}

impl Preconditioner {
    fn new(nx: usize, ny: usize, cx: f64, cy: f64, shift: f64) -> Self {
        let mut planner = DctPlanner::new();
        let lam = |n: usize, c: f64| -> Vec<f64> {
            (0..n).map(|k| c * (2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / (n + 1) as f64).cos())).collect()
        };
        let (lx, ly) = (lam(nx, cx), lam(ny, cy));
        let norm = 4.0 / ((nx + 1) * (ny + 1)) as f64;
        let mut inv = Vec::with_capacity(nx * ny);
        for l in &ly {
            for k in &lx {
                inv.push(norm / (k + l + shift));
            }
        }
        Self { nx, ny, dst_x: planner.plan_dst1(nx), dst_y: planner.plan_dst1(ny), inv }
    }

    fn transform(&self, buf: &mut [f64], tmp: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        for row in buf.chunks_exact_mut(nx) {
            self.dst_x.process_dst1(row);
        }
        for j in 0..ny {
            for i in 0..nx {
                tmp[i * ny + j] = buf[j * nx + i];
            }
        }
        for col in tmp.chunks_exact_mut(ny) {
            self.dst_y.process_dst1(col);
        }
        for i in 0..nx {
            for j in 0..ny {
                buf[j * nx + i] = tmp[i * ny + j];
            }
        }
    }

    fn apply(&self, buf: &mut [f64], tmp: &mut [f64]) {
        self.transform(buf, tmp);
        for (b, s) in buf.iter_mut().zip(&self.inv) {
            *b *= s;
        }
        self.transform(buf, tmp);
    }
}

/// Orthonormal basis of the column span by eigen-decomposition of the
/// Gram matrix (SVQB), dropping directions below a relative threshold.
fn svqb(mut s: DMatrix<f64>) -> DMatrix<f64> {
    for _ in 0..2 {
        for mut c in s.column_iter_mut() {
            let norm = c.norm();
            if norm > 0.0 {
                c /= norm;
            }
        }
        let eig = SymmetricEigen::new(s.tr_mul(&s));
        let lmax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
        let keep: Vec<usize> = (0..eig.eigenvalues.len()).filter(|&k| eig.eigenvalues[k] > 1e-13 * lmax).collect();
        let mut t = DMatrix::zeros(s.ncols(), keep.len());
        for (c, &k) in keep.iter().enumerate() {
            let scale = 1.0 / eig.eigenvalues[k].sqrt();
            t.set_column(c, &(eig.eigenvectors.column(k) * scale));
        }
        s = &s * t;
    }
    s
}

fn initial_block(grid: &PotentialGrid, b: usize, guess: Option<&[Vec<f64>]>) -> DMatrix<f64> {
    let r = &grid.region;
    let n = r.len();
    let mut cols: Vec<Vec<f64>> = guess.unwrap_or(&[]).iter().filter(|v| v.len() == n).take(b).cloned().collect();
    // Low box modes weighted toward the potential minima.
    let (lx, ly) = (r.x1() - r.x0, r.y1() - r.y0);
    let mut modes: Vec<(usize, usize)> = (1..=b + 2).flat_map(|p| (1..=b + 2).map(move |q| (p, q))).collect();
    let key = |a: &(usize, usize)| (a.0 * a.0) as f64 / (lx * lx) + (a.1 * a.1) as f64 / (ly * ly);
    modes.sort_by(|a, c| key(a).partial_cmp(&key(c)).unwrap().then(a.cmp(c)));
    let vmin = grid.values.iter().cloned().fold(f64::INFINITY, f64::min);
    let pi = std::f64::consts::PI;
    let need = b - cols.len();
    for &(p, q) in modes.iter().take(need) {
        let mut col = vec![0.0; n];
        for j in 0..r.ny {
            for i in 0..r.nx {
                let k = j * r.nx + i;
                let w = (-(grid.values[k] - vmin) / 2.0).exp();
                col[k] = w
                    * (pi * p as f64 * (i + 1) as f64 / (r.nx + 1) as f64).sin()
                    * (pi * q as f64 * (j + 1) as f64 / (r.ny + 1) as f64).sin();
            }
        }
        cols.push(col);
    }
    DMatrix::from_fn(n, b, |i, c| cols[c][i])
}

fn apply_block(op: &Operator, s: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(s.nrows(), s.ncols());
    for c in 0..s.ncols() {
        op.apply(s.column(c).as_slice(), out.column_mut(c).as_mut_slice());
    }
    out
}

/// Rayleigh-Ritz on an orthonormal basis: the lowest `b` Ritz pairs as
/// (values, vectors, H·vectors).
fn rayleigh_ritz(op: &Operator, basis: &DMatrix<f64>, b: usize) -> (Vec<f64>, DMatrix<f64>, DMatrix<f64>) {
    let hb = apply_block(op, basis);
    let a = basis.tr_mul(&hb);
    let a = (&a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].partial_cmp(&eig.eigenvalues[j]).unwrap());
    let take = b.min(order.len());
    let mut c = DMatrix::zeros(basis.ncols(), take);
    for (col, &k) in order.iter().take(take).enumerate() {
        c.set_column(col, &eig.eigenvectors.column(k));
    }
    let vals = order.iter().take(take).map(|&k| eig.eigenvalues[k]).collect();
    (vals, basis * &c, hb * c)
}

/// Lowest `opts.levels` eigenpairs of −ħ²/(2m)∇² + U on the grid, with a
/// 5-point Laplacian and Dirichlet walls, by block LOBPCG preconditioned
/// with the inverse shifted kinetic operator. `guess` warm-starts the block.
pub fn solve_2d_schrodinger(
    grid: &PotentialGrid,
    opts: &SolverOptions,
    guess: Option<&[Vec<f64>]>,
) -> Result<SpectrumResult> {
    let r = &grid.region;
    if opts.levels == 0 {
        return Err(invalid("levels", "must be ≥ 1"));
    }
    if !(opts.mass_ratio > 0.0) {
        return Err(invalid("mass_ratio", "must be > 0"));
    }
    let b = opts.levels + opts.guard;
    if r.len() < 5 * b {
        return Err(invalid("region", "too few grid nodes for the eigensolver block"));
    }
    if grid.values.iter().any(|v| !v.is_finite()) {
        return Err(invalid("potential", "non-finite value"));
    }
    let kin = kinetic_prefactor_mev_nm2(opts.mass_ratio);
    let op = Operator { grid, cx: kin / (r.hx * r.hx), cy: kin / (r.hy * r.hy) };
    let pre = Preconditioner::new(r.nx, r.ny, op.cx, op.cy, opts.precond_shift);
    let n = r.len();
    let k = opts.levels;
    let mut tmp = vec![0.0; n];

    let (mut vals, mut x, mut hx) = rayleigh_ritz(&op, &svqb(initial_block(grid, b, guess)), b);
    let mut p: Option<DMatrix<f64>> = None;
    let iterations = opts.max_iter * (opts.restarts + 1);
    let mut worst = f64::INFINITY;
    for _ in 0..iterations {
        let mut res = hx.clone();
        for c in 0..x.ncols() {
            res.column_mut(c).axpy(-vals[c], &x.column(c), 1.0);
        }
        let norms: Vec<f64> = res.column_iter().map(|c| c.norm()).collect();
        worst = norms[..k].iter().cloned().fold(0.0, f64::max);
        if worst < opts.residual_tol {
            break;
        }
        let active: Vec<usize> = (0..norms.len()).filter(|&c| norms[c] >= 0.1 * opts.residual_tol).collect();
        let np = p.as_ref().map_or(0, |p| p.ncols());
        let mut s = DMatrix::zeros(n, x.ncols() + active.len() + np);
        s.columns_mut(0, x.ncols()).copy_from(&x);
        for (j, &c) in active.iter().enumerate() {
            let mut col = s.column_mut(x.ncols() + j);
            col.copy_from(&res.column(c));
            pre.apply(col.as_mut_slice(), &mut tmp);
        }
        if let Some(p) = &p {
            s.columns_mut(x.ncols() + active.len(), np).copy_from(p);
        }
        let (nv, nx, nhx) = rayleigh_ritz(&op, &svqb(s), b);
        // Search directions: the new block minus its projection on the old.
        let mut d = &nx - &x * x.tr_mul(&nx);
        let keep: Vec<usize> = (0..d.ncols()).filter(|&c| d.column(c).norm() > 1e-14).collect();
        p = if keep.is_empty() {
            None
        } else {
            for c in 0..d.ncols() {
                let norm = d.column(c).norm();
                if norm > 0.0 {
                    d.column_mut(c).scale_mut(1.0 / norm);
                }
            }
            Some(d.select_columns(&keep))
        };
        vals = nv;
        x = nx;
        hx = nhx;
    }
    if worst >= opts.residual_tol {
        return Err(Error::EigenNonConvergence { iterations, residual: worst });
    }
    let mut energies = Vec::with_capacity(k);
    let mut vectors = Vec::with_capacity(k);
    let mut residuals = Vec::with_capacity(k);
    let mut hv = vec![0.0; n];
    for c in 0..k {
        let v = x.column(c);
        let v: Vec<f64> = (v / v.norm()).iter().cloned().collect();
        op.apply(&v, &mut hv);
        let e: f64 = v.iter().zip(&hv).map(|(a, h)| a * h).sum();
        residuals.push(hv.iter().zip(&v).map(|(h, a)| (h - e * a).powi(2)).sum::<f64>().sqrt());
        energies.push(e);
        vectors.push(v);
    }
    Ok(SpectrumResult { energies, vectors, residuals })
}

#[cfg(test)]
mod tests {
    use super::super::{PotentialGrid, Region};
    use super::*;
    use crate::units::HBAR2_OVER_2ME_MEV_NM2;

    #[test]
    fn particle_in_a_box() {
        let l = 100.0;
        let g = PotentialGrid::from_fn(Region::new(0.0, l, 0.0, l, 1.0).unwrap(), |_, _| 0.0);
        let opts = SolverOptions { levels: 4, ..Default::default() };
        let s = solve_2d_schrodinger(&g, &opts, None).unwrap();
        let k = HBAR2_OVER_2ME_MEV_NM2 / MT_SI * std::f64::consts::PI.powi(2) / (l * l);
        let exact = [2.0 * k, 5.0 * k, 5.0 * k, 8.0 * k];
        for (e, x) in s.energies.iter().zip(exact) {
            assert!((e / x - 1.0).abs() < 0.01, "{e} vs {x}");
        }
        assert!(s.residuals.iter().all(|&r| r < 1e-8));
    }

    #[test]
    fn harmonic_well() {
        let hw = 2.0;
        let kin = HBAR2_OVER_2ME_MEV_NM2 / MT_SI;
        // U = (ħω)² r² / (4 ħ²/2m)
        let c = hw * hw / (4.0 * kin);
        let g = PotentialGrid::from_fn(Region::new(-80.0, 80.0, -80.0, 80.0, 1.0).unwrap(), |x, y| {
            c * (x * x + y * y)
        });
        let s = solve_2d_schrodinger(&g, &SolverOptions::default(), None).unwrap();
        assert!((s.energies[0] / (2.0 * hw / 2.0) - 1.0).abs() < 0.01);
        assert!((s.e_orb() / hw - 1.0).abs() < 0.01, "{}", s.e_orb());
    }
}
