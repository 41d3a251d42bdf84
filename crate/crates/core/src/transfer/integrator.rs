use crate::error::{Error, Result};
use crate::linalg::{c, expm_small, matmul, matvec, C64};
use crate::units::HBAR;
use nalgebra::{SMatrix, SVector};

/// Step-size control for [`evolve_adaptive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorOptions {
    /// Accepted local error per ns of propagated time.
    pub tol_per_ns: f64,
    pub h_init: f64,
    pub h_max: f64,
    pub h_min: f64,
    /// Allowed deviation of ‖ψ‖ from one.
    pub max_norm_drift: f64,
}

impl Default for IntegratorOptions {
    fn default() -> Self {
        Self { tol_per_ns: 1e-9, h_init: 1e-3, h_max: 0.25, h_min: 1e-9, max_norm_drift: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntegratorStats {
    pub accepted: usize,
    pub rejected: usize,
}

const SQRT15: f64 = 3.872_983_346_207_417;

#[inline]
fn comm<const N: usize>(a: &SMatrix<C64, N, N>, b: &SMatrix<C64, N, N>) -> SMatrix<C64, N, N> {
    matmul(a, b) - matmul(b, a)
}

/// One sixth-order Magnus step from H at the three Gauss-Legendre nodes.
fn magnus6_step<const N: usize, F>(h: &F, psi: &SVector<C64, N>, t: f64, dt: f64) -> Result<SVector<C64, N>>
where
    F: Fn(f64) -> Result<SMatrix<C64, N, N>>,
{
    let d = SQRT15 / 10.0;
    let k = c(0.0, -1.0 / HBAR);
    let a1 = h(t + (0.5 - d) * dt)?.map(|z| z * k);
    let a2 = h(t + 0.5 * dt)?.map(|z| z * k);
    let a3 = h(t + (0.5 + d) * dt)?.map(|z| z * k);
    let b1 = a2.scale(dt);
    let b2 = (a3 - a1).scale(SQRT15 * dt / 3.0);
    let b3 = (a3 - a2.scale(2.0) + a1).scale(10.0 * dt / 3.0);
    let c1 = comm(&b1, &b2);
    let c2 = comm(&b1, &(b3.scale(2.0) + c1)).scale(-1.0 / 60.0);
    let omega = b1 + b3.unscale(12.0) + comm(&(b1.scale(-20.0) - b3 + c1), &(b2 + c2)).unscale(240.0);
    Ok(matvec(&expm_small(&omega), psi))
}

/// Propagates ψ from `t0` to `t1` under iħ∂ψ/∂t = H(t)ψ with an adaptive
/// sixth-order Magnus scheme. The local error is estimated
/// by step doubling and the two-half-step result is kept. `on_step` sees
/// every accepted (t, ψ).
pub fn evolve_adaptive<const N: usize, F, S>(
    h: F,
    psi0: SVector<C64, N>,
    t0: f64,
    t1: f64,
    opts: &IntegratorOptions,
    mut on_step: S,
) -> Result<(SVector<C64, N>, IntegratorStats)>
where
    F: Fn(f64) -> Result<SMatrix<C64, N, N>>,
    S: FnMut(f64, &SVector<C64, N>),
{
    let mut stats = IntegratorStats::default();
    let mut psi = psi0;
    let mut t = t0;
    let mut dt = opts.h_init.min(opts.h_max);
    let norm0 = psi0.norm();
    while t < t1 {
        let last = t + dt >= t1;
        let step = if last { t1 - t } else { dt };
        let big = magnus6_step(&h, &psi, t, step)?;
        let mid = magnus6_step(&h, &psi, t, 0.5 * step)?;
        let small = magnus6_step(&h, &mid, t + 0.5 * step, 0.5 * step)?;
        let err = (big - small).norm();
        let allowed = opts.tol_per_ns * step;
        if err <= allowed || step <= opts.h_min {
            if err > allowed {
                return Err(Error::StepTooSmall { dx: step, min: opts.h_min });
            }
            psi = small;
            t = if last { t1 } else { t + step };
            stats.accepted += 1;
            let drift = (psi.norm() - norm0).abs();
            if drift > opts.max_norm_drift {
                return Err(Error::NormDrift { drift });
            }
            on_step(t, &psi);
        } else {
            stats.rejected += 1;
        }
        // err ∝ step⁷ while the allowance ∝ step.
        let factor = if err == 0.0 { 4.0 } else { (0.9 * (allowed / err).powf(1.0 / 6.0)).clamp(0.2, 4.0) };
        dt = (step * factor).clamp(opts.h_min, opts.h_max);
    }
    Ok((psi, stats))
}

/// Classical fixed-step RK4; used as the reference integrator.
pub fn rk4_reference<const N: usize, F>(h: F, psi0: SVector<C64, N>, t0: f64, t1: f64, dt: f64) -> Result<SVector<C64, N>>
where
    F: Fn(f64) -> Result<SMatrix<C64, N, N>>,
{
    let steps = ((t1 - t0) / dt).ceil().max(1.0) as usize;
    let dt = (t1 - t0) / steps as f64;
    let k = c(0.0, -1.0 / HBAR);
    let f = |t: f64, y: &SVector<C64, N>| -> Result<SVector<C64, N>> { Ok((h(t)? * y).map(|z| z * k)) };
    let mut y = psi0;
    for i in 0..steps {
        let t = t0 + i as f64 * dt;
        let k1 = f(t, &y)?;
        let k2 = f(t + 0.5 * dt, &(y + k1.scale(0.5 * dt)))?;
        let k3 = f(t + 0.5 * dt, &(y + k2.scale(0.5 * dt)))?;
        let k4 = f(t + dt, &(y + k3.scale(dt)))?;
        y += (k1 + k2.scale(2.0) + k3.scale(2.0) + k4).scale(dt / 6.0);
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix2, Vector2};

    // Driven two-level system with a closed-form solution in the rotating frame.
    fn rabi(omega0: f64, omega: f64) -> impl Fn(f64) -> Result<Matrix2<C64>> {
        move |t: f64| {
            let w = C64::from_polar(0.5 * omega, -omega0 * t / HBAR);
            Ok(Matrix2::new(c(0.5 * omega0, 0.0), w, w.conj(), c(-0.5 * omega0, 0.0)))
        }
    }

    #[test]
    fn resonant_rabi_oscillation() {
        let (e0, om) = (200.0, 5.0);
        let psi0 = Vector2::new(c(0.0, 0.0), c(1.0, 0.0));
        let t1 = 3.0;
        let (psi, _) = evolve_adaptive(rabi(e0, om), psi0, 0.0, t1, &IntegratorOptions::default(), |_, _| {}).unwrap();
        let p_up = (0.5 * om * t1 / HBAR).sin().powi(2);
        assert!((psi[0].norm_sqr() - p_up).abs() < 1e-8);
    }

    #[test]
    fn agrees_with_rk4_on_static_hamiltonian() {
        let h = |_: f64| Ok(Matrix2::new(c(10.0, 0.0), c(3.0, 1.0), c(3.0, -1.0), c(-20.0, 0.0)));
        let psi0 = Vector2::new(c(1.0, 0.0), c(0.0, 0.0));
        let (a, _) = evolve_adaptive(h, psi0, 0.0, 1.0, &IntegratorOptions::default(), |_, _| {}).unwrap();
        let b = rk4_reference(h, psi0, 0.0, 1.0, 1e-5).unwrap();
        assert!((a - b).norm() < 1e-9);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let h = rabi(100.0, 20.0);
        let psi0 = Vector2::new(c(1.0, 0.0), c(0.0, 0.0));
        let fine = rk4_reference(&h, psi0, 0.0, 0.5, 1e-5).unwrap();
        let e1 = (rk4_reference(&h, psi0, 0.0, 0.5, 4e-4).unwrap() - fine).norm();
        let e2 = (rk4_reference(&h, psi0, 0.0, 0.5, 2e-4).unwrap() - fine).norm();
        let order = (e1 / e2).log2();
        assert!((order - 4.0).abs() < 0.3, "order {order}");
    }

    #[test]
    fn magnus_is_sixth_order() {
        let h = rabi(100.0, 20.0);
        let psi0 = Vector2::new(c(1.0, 0.0), c(0.0, 0.0));
        let fine = rk4_reference(&h, psi0, 0.0, 0.5, 1e-6).unwrap();
        let fixed = |n: usize| {
            let dt = 0.5 / n as f64;
            let mut y = psi0;
            for i in 0..n {
                y = magnus6_step(&h, &y, i as f64 * dt, dt).unwrap();
            }
            (y - fine).norm()
        };
        let order = (fixed(80) / fixed(160)).log2();
        assert!((order - 6.0).abs() < 0.4, "order {order}");
    }

    #[test]
    fn failing_hamiltonian_propagates() {
        let h = |t: f64| {
            if t > 0.5 {
                Err(Error::Invariant("boom".into()))
            } else {
                Ok(Matrix2::<C64>::zeros())
            }
        };
        let psi0 = Vector2::new(c(1.0, 0.0), c(0.0, 0.0));
        assert!(evolve_adaptive(h, psi0, 0.0, 1.0, &IntegratorOptions::default(), |_, _| {}).is_err());
    }
}
