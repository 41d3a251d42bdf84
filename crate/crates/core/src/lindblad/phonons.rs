use crate::error::{invalid, Error, Result};
use crate::units::{ELEMENTARY_CHARGE, HBAR};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Bulk silicon phonon constants in SI units plus the orbital geometry.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhononParams {
    /// kg/m³
    pub rho_si: f64,
    /// m/s
    pub c_l: f64,
    /// m/s
    pub c_t: f64,
    /// eV
    pub xi_d: f64,
    /// eV
    pub xi_u: f64,
    /// nm
    pub l_dot: f64,
    /// nm
    pub pitch: f64,
}

impl Default for PhononParams {
    fn default() -> Self {
        Self { rho_si: 2330.0, c_l: 9330.0, c_t: 5420.0, xi_d: 5.0, xi_u: 8.77, l_dot: 14.0, pitch: 50.0 }
    }
}

impl PhononParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("rho_si", self.rho_si),
            ("c_l", self.c_l),
            ("c_t", self.c_t),
            ("xi_d", self.xi_d),
            ("xi_u", self.xi_u),
            ("l_dot", self.l_dot),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(name, format!("must be > 0, got {v}")));
            }
        }
        if !(self.pitch >= 0.0 && self.pitch.is_finite()) {
            return Err(invalid("pitch", "must be ≥ 0"));
        }
        Ok(())
    }

    /// Mass density in μeV·ns²/nm⁵.
    pub fn rho(&self) -> f64 {
        // kg/m³ = J·s²/m⁵
        self.rho_si / ELEMENTARY_CHARGE * 1e6 * 1e18 / 1e45
    }

    /// Longitudinal and transverse sound speeds in nm/ns.
    pub fn speeds(&self) -> (f64, f64) {
        (self.c_l, self.c_t)
    }

    /// Deformation potentials in μeV.
    pub fn deformation(&self) -> (f64, f64) {
        (self.xi_d * 1e6, self.xi_u * 1e6)
    }

    /// exp(−8P²/l_dot²), the squared overlap factor for Gaussian orbitals
    /// a distance 4P apart.
    pub fn neighbor_suppression(&self) -> f64 {
        (-8.0 * self.pitch * self.pitch / (self.l_dot * self.l_dot)).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FormFactorKind {
    SameDot,
    Neighbor,
}

/// |⟨d|e^{iq·r}|d'⟩|² for in-plane Gaussian orbitals of radius `l_dot`;
/// neighbors sit 4P apart.
pub fn form_factor_sq(q_parallel: f64, l_dot: f64, pitch: f64, kind: FormFactorKind) -> Result<f64> {
    if !(q_parallel >= 0.0) {
        return Err(invalid("q_parallel", "must be ≥ 0"));
    }
    let same = (-0.5 * (q_parallel * l_dot).powi(2)).exp();
    Ok(match kind {
        FormFactorKind::SameDot => same,
        FormFactorKind::Neighbor => same * (-8.0 * pitch * pitch / (l_dot * l_dot)).exp(),
    })
}

/// Relative change allowed between successive quadrature refinements.
pub const QUADRATURE_TOL: f64 = 1e-6;

/// ∫₀¹ f on Gauss-Legendre nodes; nodes and weights by Newton iteration on
/// the Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, 0.0);
            for k in 0..n {
                let p2 = p1;
                p1 = p0;
                p0 = ((2 * k + 1) as f64 * z * p1 - k as f64 * p2) / (k + 1) as f64;
            }
            dp = n as f64 * (z * p0 - p1) / (z * z - 1.0);
            let dz = p0 / dp;
            z -= dz;
            if dz.abs() < 1e-15 {
                break;
            }
        }
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        // Map [−1, 1] to [0, 1].
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wi;
        w[n - 1 - i] = 0.5 * wi;
    }
    (x, w)
}

/// Angular integrals (I₀, I₂, I₄, J) at in-plane form-factor exponent
/// a = q²l²/2. The φ integral is 2π since the orbital is isotropic; the θ
/// integral is done in u = cos θ on a split grid that resolves the
/// boundary layer of width 1/(2a) at u = 1.
fn angular_integrals(a: f64, n: usize) -> [f64; 4] {
    let (x, w) = gauss_legendre(n);
    let mut acc = [0.0; 4];
    let split = if a > 1.0 { (1.0 - 20.0 / a).max(0.0) } else { 0.0 };
    let pieces: &[(f64, f64)] = if split > 0.0 { &[(0.0, split), (split, 1.0)] } else { &[(0.0, 1.0)] };
    for &(lo, hi) in pieces {
        let span = hi - lo;
        for (xi, wi) in x.iter().zip(&w) {
            let u = lo + span * xi;
            let u2 = u * u;
            let f = (-a * (1.0 - u2)).exp() * wi * span;
            acc[0] += f;
            acc[1] += f * u2;
            acc[2] += f * u2 * u2;
            acc[3] += f * (1.0 - u2) * u2;
        }
    }
    // Both halves of u ∈ [−1, 1] contribute equally, times 2π from φ.
    acc.map(|v| v * 4.0 * PI)
}

fn angular_converged(a: f64) -> Result<[f64; 4]> {
    let mut n = 32;
    let mut prev = angular_integrals(a, n);
    while n < 2048 {
        n *= 2;
        let next = angular_integrals(a, n);
        let change = prev
            .iter()
            .zip(&next)
            .map(|(p, q)| if *q == 0.0 { 0.0 } else { ((p - q) / q).abs() })
            .fold(0.0, f64::max);
        if change < QUADRATURE_TOL {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::Quadrature { change: QUADRATURE_TOL })
}

/// On-site phonon spectral density S_ε(ω) (1/ns) at angular frequency ω
/// (rad/ns), by direct quadrature.
pub fn spectral_density_eps(omega: f64, p: &PhononParams) -> Result<f64> {
    if !(omega >= 0.0) {
        return Err(invalid("omega", "must be ≥ 0"));
    }
    p.validate()?;
    if omega == 0.0 {
        return Ok(0.0);
    }
    let (cl, ct) = p.speeds();
    let (xd, xu) = p.deformation();
    let l2 = p.l_dot * p.l_dot;
    let il = angular_converged(0.5 * (omega / cl).powi(2) * l2)?;
    let it = angular_converged(0.5 * (omega / ct).powi(2) * l2)?;
    let long = (xd * xd * il[0] + 2.0 * xd * xu * il[1] + xu * xu * il[2]) / cl.powi(5);
    let trans = xu * xu * it[3] / ct.powi(5);
    Ok(omega.powi(3) / (8.0 * PI * PI * p.rho() * HBAR) * (long + trans))
}

/// Inter-pocket spectral density S_t(ω) = S_ε(ω)·exp(−8P²/l_dot²).
pub fn spectral_density_t(omega: f64, p: &PhononParams) -> Result<f64> {
    Ok(spectral_density_eps(omega, p)? * p.neighbor_suppression())
}

/// Tabulated S_ε on 400 log-spaced energies from 1 neV to 10 meV with
/// log-log linear interpolation. Below the table the cubic law is used;
/// above it the density is computed directly.
#[derive(Debug, Clone)]
pub struct SpectralTable {
    params: PhononParams,
    ln_omega: Vec<f64>,
    ln_s: Vec<f64>,
}

pub const TABLE_POINTS: usize = 400;
pub const TABLE_MIN_UEV: f64 = 1e-3;
pub const TABLE_MAX_UEV: f64 = 1e4;

impl SpectralTable {
    pub fn new(params: PhononParams) -> Result<Self> {
        params.validate()?;
        let (lo, hi) = ((TABLE_MIN_UEV / HBAR).ln(), (TABLE_MAX_UEV / HBAR).ln());
        let mut ln_omega = Vec::with_capacity(TABLE_POINTS);
        let mut ln_s = Vec::with_capacity(TABLE_POINTS);
        for i in 0..TABLE_POINTS {
            let lw = lo + (hi - lo) * i as f64 / (TABLE_POINTS - 1) as f64;
            ln_omega.push(lw);
            ln_s.push(spectral_density_eps(lw.exp(), &params)?.ln());
        }
        Ok(Self { params, ln_omega, ln_s })
    }

    pub fn params(&self) -> &PhononParams {
        &self.params
    }

    pub fn s_eps(&self, omega: f64) -> Result<f64> {
        if omega <= 0.0 {
            return Ok(0.0);
        }
        let lw = omega.ln();
        let (first, last) = (self.ln_omega[0], self.ln_omega[TABLE_POINTS - 1]);
        if lw <= first {
            return Ok((self.ln_s[0] + 3.0 * (lw - first)).exp());
        }
        if lw >= last {
            return spectral_density_eps(omega, &self.params);
        }
        let step = (last - first) / (TABLE_POINTS - 1) as f64;
        let i = (((lw - first) / step) as usize).min(TABLE_POINTS - 2);
        let t = (lw - self.ln_omega[i]) / step;
        Ok((self.ln_s[i] * (1.0 - t) + self.ln_s[i + 1] * t).exp())
    }

    pub fn s_t(&self, omega: f64) -> Result<f64> {
        Ok(self.s_eps(omega)? * self.params.neighbor_suppression())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(7);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(12)).sum();
        assert!((s - 1.0 / 13.0).abs() < 1e-14);
    }

    #[test]
    fn form_factor_values() {
        assert_eq!(form_factor_sq(0.0, 14.0, 50.0, FormFactorKind::SameDot).unwrap(), 1.0);
        let v = form_factor_sq(1.0 / 14.0, 14.0, 50.0, FormFactorKind::SameDot).unwrap();
        assert!((v - (-0.5f64).exp()).abs() < 1e-15);
        let n = form_factor_sq(0.03, 14.0, 50.0, FormFactorKind::Neighbor).unwrap();
        let s = form_factor_sq(0.03, 14.0, 50.0, FormFactorKind::SameDot).unwrap();
        assert!(((n / s).ln() + 8.0 * 2500.0 / 196.0).abs() < 1e-9);
        assert!(form_factor_sq(-1.0, 14.0, 50.0, FormFactorKind::SameDot).is_err());
    }

    #[test]
    fn zero_frequency_and_cubic_law() {
        let p = PhononParams::default();
        assert_eq!(spectral_density_eps(0.0, &p).unwrap(), 0.0);
        let w = 0.01 / HBAR;
        let r = spectral_density_eps(2.0 * w, &p).unwrap() / spectral_density_eps(w, &p).unwrap();
        assert!((r - 8.0).abs() < 0.08);
    }

    #[test]
    fn t_density_scales_by_overlap() {
        let mut p = PhononParams::default();
        let w = 100.0 / HBAR;
        assert!((spectral_density_t(w, &p).unwrap() / spectral_density_eps(w, &p).unwrap() - p.neighbor_suppression()).abs() < 1e-300);
        p.pitch = 0.0;
        assert_eq!(spectral_density_t(w, &p).unwrap(), spectral_density_eps(w, &p).unwrap());
    }

    #[test]
    fn table_tracks_direct_quadrature() {
        let table = SpectralTable::new(PhononParams::default()).unwrap();
        for e in [0.5, 7.0, 100.0, 850.0, 3000.0] {
            let w = e / HBAR;
            let direct = spectral_density_eps(w, table.params()).unwrap();
            let tab = table.s_eps(w).unwrap();
            assert!(((tab - direct) / direct).abs() < 1e-3, "{e}: {tab} vs {direct}");
        }
    }
}
