use super::rates::{rate_generator, RateMatrix, Spectrum};
use super::{to_dynamic, Matrix10, LEVELS};
use crate::error::{Error, Result};
use crate::linalg::{c, hermitian_eigh, hermiticity_defect, C64};
use crate::units::HBAR;
use nalgebra::{DMatrix, DVector, SVector};

pub const TRACE_TOL: f64 = 1e-9;
pub const HERMITICITY_TOL: f64 = 1e-10;
pub const POSITIVITY_TOL: f64 = -1e-8;

/// One step of the Lindblad evolution with H and Γ frozen over `dt` (ns).
///
/// `rho` is in the site basis. In the eigenbasis of H the generator splits
/// into a classical rate equation on the populations and independent
/// scalar evolution of each coherence: phase (E_m − E_n)/ħ and decay
/// ½(Σ_ℓ Γ_nℓ + Σ_ℓ Γ_mℓ), the mean of the two total out-rates.
pub fn lindblad_step(rho: &Matrix10, spec: &Spectrum, rates: &RateMatrix, dt: f64) -> Result<Matrix10> {
    let v = &spec.vectors;
    let mut r = v.adjoint() * rho * v;
    let pops = SVector::<f64, LEVELS>::from_fn(|n, _| r[(n, n)].re);
    let new_pops = (rate_generator(rates) * dt).exp() * pops;
    let out: [f64; LEVELS] = std::array::from_fn(|n| (0..LEVELS).map(|m| rates.gamma[(n, m)]).sum());
    for n in 0..LEVELS {
        for m in 0..LEVELS {
            if n == m {
                r[(n, n)] = c(new_pops[n], 0.0);
            } else {
                let decay = 0.5 * (out[n] + out[m]);
                let phase = -(spec.energies[n] - spec.energies[m]) / HBAR;
                r[(n, m)] *= C64::new(-decay * dt, phase * dt).exp();
            }
        }
    }
    let back = v * r * v.adjoint();
    let next = (back + back.adjoint()).unscale(2.0);
    let drift = (next.trace() - rho.trace()).norm();
    if drift > TRACE_TOL {
        return Err(Error::Invariant(format!("trace drift {drift:e} in one step")));
    }
    Ok(next)
}

/// Full 100×100 Lindblad superoperator in the site basis acting on the
/// column-stacked density matrix, with collapse operators L_nm = |m⟩⟨n|.
pub fn dense_liouvillian(h: &Matrix10, spec: &Spectrum, rates: &RateMatrix) -> DMatrix<C64> {
    let n = LEVELS;
    let eye = DMatrix::<C64>::identity(n, n);
    let hd = to_dynamic(h);
    let k = c(0.0, -1.0 / HBAR);
    let mut l = (eye.kronecker(&hd) - hd.transpose().kronecker(&eye)).map(|z| z * k);
    let cols: Vec<DVector<C64>> = (0..n).map(|i| DVector::from_fn(n, |r, _| spec.vectors[(r, i)])).collect();
    for a in 0..n {
        for b in 0..n {
            let g = rates.gamma[(a, b)];
            if a == b || g == 0.0 {
                continue;
            }
            let op = &cols[b] * cols[a].adjoint();
            let opd = op.adjoint();
            let ll = &opd * &op;
            let jump = op.conjugate().kronecker(&op);
            let anti = eye.kronecker(&ll) + ll.transpose().kronecker(&eye);
            l += (jump - anti.scale(0.5)).scale(g);
        }
    }
    l
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityChecks {
    pub trace_error: f64,
    pub hermiticity: f64,
    pub min_eigenvalue: f64,
}

impl DensityChecks {
    pub fn ok(&self) -> bool {
        self.trace_error < TRACE_TOL && self.hermiticity < HERMITICITY_TOL && self.min_eigenvalue >= POSITIVITY_TOL
    }
}

pub fn check_density(rho: &Matrix10) -> DensityChecks {
    let d = to_dynamic(rho);
    let hermiticity = hermiticity_defect(&d);
    let herm = (&d + d.adjoint()).unscale(2.0);
    let (vals, _) = hermitian_eigh(&herm);
    DensityChecks { trace_error: (rho.trace() - c(1.0, 0.0)).norm(), hermiticity, min_eigenvalue: vals[0] }
}

#[cfg(test)]
mod tests {
    use super::super::{build_hamiltonian, compute_rates, FivePocketModel, PhononParams, SpectralTable};
    use super::*;

    #[test]
    fn coherences_rotate_without_rates() {
        let h = Matrix10::from_diagonal(&SVector::from_fn(|i, _| c(10.0 * i as f64, 0.0)));
        let spec = Spectrum::of(&h);
        let rates = RateMatrix { gamma: nalgebra::SMatrix::zeros() };
        let mut rho = Matrix10::zeros();
        rho[(0, 0)] = c(0.5, 0.0);
        rho[(3, 3)] = c(0.5, 0.0);
        rho[(0, 3)] = c(0.5, 0.0);
        rho[(3, 0)] = c(0.5, 0.0);
        let dt = 0.37;
        let next = lindblad_step(&rho, &spec, &rates, dt).unwrap();
        assert!((next[(0, 0)] - c(0.5, 0.0)).norm() < 1e-15);
        let expect = C64::from_polar(0.5, (30.0 - 0.0) * dt / HBAR);
        assert!((next[(0, 3)] - expect).norm() < 1e-13);
    }

    #[test]
    fn two_level_decay_is_exponential() {
        let h = Matrix10::from_diagonal(&SVector::from_fn(|i, _| c(i as f64, 0.0)));
        let spec = Spectrum::of(&h);
        let mut gamma = nalgebra::SMatrix::<f64, LEVELS, LEVELS>::zeros();
        let g = 0.8;
        gamma[(1, 0)] = g;
        let rates = RateMatrix { gamma };
        let mut rho = Matrix10::zeros();
        rho[(1, 1)] = c(1.0, 0.0);
        let mut t = 0.0;
        for _ in 0..50 {
            rho = lindblad_step(&rho, &spec, &rates, 0.05).unwrap();
            t += 0.05;
        }
        assert!((rho[(1, 1)].re - (-g * t).exp()).abs() < 1e-8);
        assert!((rho[(0, 0)].re - (1.0 - (-g * t).exp())).abs() < 1e-8);
    }

    #[test]
    fn split_step_matches_dense_superoperator() {
        let table = SpectralTable::new(PhononParams::default()).unwrap();
        let m = FivePocketModel {
            eps: [0.0, 150.0, -250.0, 80.0, 400.0],
            t_hop: [20.0, 15.0, 30.0, 10.0],
            delta: [c(20.0, 5.0), c(-30.0, 1.0), c(0.0, 40.0), c(10.0, 0.0), c(3.0, 3.0)],
            spacing: 20.0,
        };
        let h = build_hamiltonian(&m);
        let (spec, rates) = compute_rates(&h, &table).unwrap();
        assert!(rates.gamma.iter().any(|&g| g > 1e-3));
        let mut rho = Matrix10::zeros();
        rho[(0, 0)] = c(0.6, 0.0);
        rho[(2, 2)] = c(0.4, 0.0);
        rho[(0, 2)] = c(0.2, 0.3);
        rho[(2, 0)] = c(0.2, -0.3);
        let dt = 0.2;
        let split = lindblad_step(&rho, &spec, &rates, dt).unwrap();
        let prop = (dense_liouvillian(&h, &spec, &rates) * c(dt, 0.0)).exp();
        let v = DVector::from_iterator(LEVELS * LEVELS, rho.iter().copied());
        let w = prop * v;
        let dense = Matrix10::from_iterator(w.iter().copied());
        assert!((split - dense).norm() < 1e-8, "{}", (split - dense).norm());
    }
}
