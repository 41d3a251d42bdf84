use super::phonons::SpectralTable;
use super::{to_dynamic, Matrix10, LEVELS, POCKETS};
use crate::error::{Error, Result};
use crate::linalg::{hermitian_eigh, C64};
use crate::units::HBAR;
use nalgebra::SMatrix;

pub type Real10 = SMatrix<f64, LEVELS, LEVELS>;

/// Eigenvalues (ascending, μeV) and eigenvectors (columns) of H.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub energies: [f64; LEVELS],
    pub vectors: Matrix10,
}

impl Spectrum {
    pub fn of(h: &Matrix10) -> Self {
        let (vals, vecs) = hermitian_eigh(&to_dynamic(h));
        Self { energies: std::array::from_fn(|i| vals[i]), vectors: Matrix10::from_fn(|i, j| vecs[(i, j)]) }
    }
}

/// Γ[(n, m)] is the rate (1/ns) of the transition |n⟩ → |m⟩ between
/// eigenstates.
#[derive(Debug, Clone, PartialEq)]
pub struct RateMatrix {
    pub gamma: Real10,
}

/// Energy gaps at or below this (μeV) count as degenerate and get no rate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// |⟨n|Π_ε|m⟩|² and |⟨n|Π_t|m⟩|² between all eigenstates. The on-site
/// coupling acts independently on each pocket, so its weight is
/// Σ_j |⟨n|P_j|m⟩|² with P_j the projector on pocket j; the tunnel coupling
/// uses the center↔neighbor hopping pattern.
pub fn coupling_weights(spec: &Spectrum) -> (Real10, Real10) {
    let v = &spec.vectors;
    let mut w_eps = Real10::zeros();
    let mut w_t = Real10::zeros();
    for n in 0..LEVELS {
        for m in 0..LEVELS {
            let mut acc = 0.0;
            for j in 0..POCKETS {
                let mut z = C64::new(0.0, 0.0);
                for s in 0..2 {
                    z += v[(2 * j + s, n)].conj() * v[(2 * j + s, m)];
                }
                acc += z.norm_sqr();
            }
            w_eps[(n, m)] = acc;
            let mut z = C64::new(0.0, 0.0);
            for j in 1..POCKETS {
                for s in 0..2 {
                    z += v[(s, n)].conj() * v[(2 * j + s, m)] + v[(2 * j + s, n)].conj() * v[(s, m)];
                }
            }
            w_t[(n, m)] = z.norm_sqr();
        }
    }
    (w_eps, w_t)
}

/// Zero-temperature golden-rule rates in the eigenbasis of `h`, from the
/// weights of [`coupling_weights`].
pub fn compute_rates(h: &Matrix10, table: &SpectralTable) -> Result<(Spectrum, RateMatrix)> {
    let spec = Spectrum::of(h);
    let (w_eps, w_t) = coupling_weights(&spec);
    let mut gamma = Real10::zeros();
    for n in 0..LEVELS {
        for m in 0..LEVELS {
            let gap = spec.energies[n] - spec.energies[m];
            if gap <= DEGENERACY_TOL * spec.energies[n].abs().max(1.0) {
                continue;
            }
            let omega = gap / HBAR;
            let rate = w_eps[(n, m)] * table.s_eps(omega)? + w_t[(n, m)] * table.s_t(omega)?;
            if !rate.is_finite() || rate < 0.0 {
                return Err(Error::Invariant(format!("rate {n}→{m} = {rate}")));
            }
            gamma[(n, m)] = rate;
        }
    }
    Ok((spec, RateMatrix { gamma }))
}

/// Population generator 𝒟: dp/dt = 𝒟 p with 𝒟[(m, n)] = Γ_nm off the
/// diagonal and columns summing to zero.
pub fn rate_generator(r: &RateMatrix) -> Real10 {
    let mut d = r.gamma.transpose();
    for n in 0..LEVELS {
        d[(n, n)] = 0.0;
        let out: f64 = (0..LEVELS).filter(|&m| m != n).map(|m| r.gamma[(n, m)]).sum();
        d[(n, n)] = -out;
    }
    d
}

#[cfg(test)]
mod tests {
    use super::super::{build_hamiltonian, FivePocketModel, PhononParams};
    use super::*;
    use crate::linalg::c;

    fn table() -> SpectralTable {
        SpectralTable::new(PhononParams::default()).unwrap()
    }

    #[test]
    fn decoupled_pockets_have_no_onsite_rates() {
        let m = FivePocketModel {
            eps: [0.0, 100.0, -200.0, 300.0, 50.0],
            t_hop: [0.0; 4],
            delta: [c(0.0, 0.0); 5],
            spacing: 200.0,
        };
        let tab = table();
        let h = build_hamiltonian(&m);
        let (spec, r) = compute_rates(&h, &tab).unwrap();
        let (w_eps, w_t) = coupling_weights(&spec);
        let pocket = |n: usize| (0..LEVELS).find(|&i| spec.vectors[(i, n)].norm() > 0.5).unwrap() / 2;
        for n in 0..LEVELS {
            for k in 0..LEVELS {
                let (pn, pk) = (pocket(n), pocket(k));
                if pn != pk {
                    assert!(w_eps[(n, k)] < 1e-28, "{n} {k} {}", w_eps[(n, k)]);
                }
                // Localized states couple through the hop pattern only
                // between the center and a neighbor, weighted by the
                // overlap of their valley parts.
                let hop = (pn == 0) != (pk == 0);
                let valley_overlap = (0..2)
                    .map(|s| spec.vectors[(2 * pn + s, n)].conj() * spec.vectors[(2 * pk + s, k)])
                    .sum::<C64>()
                    .norm_sqr();
                let expect_t = if hop { valley_overlap } else { 0.0 };
                assert!((w_t[(n, k)] - expect_t).abs() < 1e-12);
                let gap = spec.energies[n] - spec.energies[k];
                if gap > 1e-9 && pn != pk {
                    let s_t = if hop { expect_t * tab.s_t(gap / HBAR).unwrap() } else { 0.0 };
                    assert!((r.gamma[(n, k)] - s_t).abs() <= 1e-9 * s_t + 1e-300);
                } else if pn != pk {
                    assert_eq!(r.gamma[(n, k)], 0.0);
                }
            }
        }
    }

    #[test]
    fn generator_columns_sum_to_zero() {
        let m = FivePocketModel {
            eps: [0.0, 100.0, -200.0, 300.0, 50.0],
            t_hop: [1.0, 2.0, 3.0, 4.0],
            delta: [c(20.0, 5.0), c(-30.0, 1.0), c(0.0, 40.0), c(10.0, 0.0), c(3.0, 3.0)],
            spacing: 200.0,
        };
        let (_, r) = compute_rates(&build_hamiltonian(&m), &table()).unwrap();
        let d = rate_generator(&r);
        for n in 0..LEVELS {
            let col: f64 = d.column(n).iter().sum();
            assert!(col.abs() <= 1e-12 * d[(n, n)].abs().max(1e-300));
            for m in 0..LEVELS {
                if m != n {
                    assert!(d[(m, n)] >= 0.0);
                }
            }
        }
        // Emission only.
        let spec = Spectrum::of(&build_hamiltonian(&m));
        for n in 0..LEVELS {
            for k in 0..LEVELS {
                if spec.energies[n] <= spec.energies[k] {
                    assert_eq!(r.gamma[(n, k)], 0.0);
                }
            }
        }
    }

    #[test]
    fn two_site_golden_rule() {
        // Pockets 0 and 1 with a 100 μeV detuning and 1 μeV hopping; every
        // other pocket far away and uncoupled. Valley-degenerate, so each
        // valley copy holds an independent two-level problem.
        let (eps_gap, t) = (100.0, 1.0);
        let m = FivePocketModel {
            eps: [eps_gap, 0.0, 5e4, 6e4, 7e4],
            t_hop: [t, 0.0, 0.0, 0.0],
            delta: [c(0.0, 0.0); 5],
            spacing: 200.0,
        };
        let tab = table();
        let (spec, r) = compute_rates(&build_hamiltonian(&m), &tab).unwrap();
        // Hand-assembled: |±⟩ = (cos, sin) mixing with tan 2θ = 2t/ε.
        let theta = 0.5 * (2.0 * t / eps_gap).atan();
        let (cs, sn) = (theta.cos(), theta.sin());
        let gap = (eps_gap * eps_gap + 4.0 * t * t).sqrt();
        let w_eps = 2.0 * (cs * sn).powi(2);
        let w_t = (cs * cs - sn * sn).powi(2);
        let omega = gap / HBAR;
        let expect = w_eps * tab.s_eps(omega).unwrap() + w_t * tab.s_t(omega).unwrap();
        // Levels 2, 3 are the upper pair (one per valley), 0, 1 the lower.
        assert!((spec.energies[2] - spec.energies[0] - gap).abs() < 1e-9);
        let total: f64 = (0..2).map(|lo| r.gamma[(2, lo)]).sum();
        assert!(((total - expect) / expect).abs() < 1e-9, "{total} vs {expect}");
    }
}
