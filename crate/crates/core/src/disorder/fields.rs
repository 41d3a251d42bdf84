use super::{sample_gaussian_field, KernelSpec, PointSet};
use crate::error::{invalid, Result};
use crate::linalg::C64;
use crate::rng;

/// Complex intervalley coupling Δ (μeV) at every point of a set.
#[derive(Debug, Clone)]
pub struct ValleyCouplingField {
    pub points: PointSet,
    pub values: Vec<C64>,
    pub sigma_delta: f64,
    pub l_dot: f64,
    pub seed: u64,
}

impl ValleyCouplingField {
    /// Valley splitting E_v = 2|Δ| at point `i`.
    pub fn valley_splitting(&self, i: usize) -> f64 {
        2.0 * self.values[i].norm()
    }
}

/// Origin of a scalar potential-disorder field.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PotentialSource {
    Alloy,
    GateCorrelated,
    GateUncorrelated,
}

/// Scalar potential offset δε (μeV) per point.
#[derive(Debug, Clone)]
pub struct PotentialField {
    pub values: Vec<f64>,
    pub source: PotentialSource,
    pub seed: u64,
}

/// Log-normal tunnel couplings t_p (μeV, strictly positive) per point.
#[derive(Debug, Clone)]
pub struct TunnelField {
    pub values: Vec<f64>,
    pub t0_mean: f64,
    pub sigma_t: f64,
    pub seed: u64,
}

/// Real and imaginary parts are independent fields of variance σ_Δ²/2 and
/// length `l_dot`, so that ⟨|Δ|²⟩ = σ_Δ².
pub fn sample_valley_coupling(
    ps: &PointSet,
    sigma_delta: f64,
    l_dot: f64,
    seed: u64,
) -> Result<ValleyCouplingField> {
    if !(sigma_delta >= 0.0) {
        return Err(invalid("sigma_delta", format!("must be ≥ 0, got {sigma_delta}")));
    }
    let k = KernelSpec::new(0.5 * sigma_delta * sigma_delta, l_dot)?;
    let re = sample_gaussian_field(ps, &k, rng::sub_seed(seed, "re"))?;
    let im = sample_gaussian_field(ps, &k, rng::sub_seed(seed, "im"))?;
    Ok(ValleyCouplingField {
        points: ps.clone(),
        values: re.into_iter().zip(im).map(|(a, b)| C64::new(a, b)).collect(),
        sigma_delta,
        l_dot,
        seed,
    })
}

/// Alloy potential disorder: variance σ_Δ², length `l_dot`.
pub fn sample_alloy_potential(
    ps: &PointSet,
    sigma_delta: f64,
    l_dot: f64,
    seed: u64,
) -> Result<PotentialField> {
    let k = KernelSpec::new(sigma_delta * sigma_delta, l_dot)?;
    Ok(PotentialField {
        values: sample_gaussian_field(ps, &k, seed)?,
        source: PotentialSource::Alloy,
        seed,
    })
}

/// Gate-related potential disorder: variance σ_ε², correlation length equal
/// to the gate pitch.
pub fn sample_gate_potential(
    ps: &PointSet,
    sigma_eps: f64,
    pitch: f64,
    source: PotentialSource,
    seed: u64,
) -> Result<PotentialField> {
    let k = KernelSpec::new(sigma_eps * sigma_eps, pitch)?;
    Ok(PotentialField { values: sample_gaussian_field(ps, &k, seed)?, source, seed })
}

/// Variance of ln(t_p/t₀) for a log-normal of mean t₀ and std σ_t.
pub fn log_variance(t0: f64, sigma_t: f64) -> f64 {
    (sigma_t * sigma_t / (t0 * t0)).ln_1p()
}

/// Log-normal tunnel couplings with mean `t0` and standard deviation
/// `sigma_t`; ln(t_p/t₀) + s²/2 is a zero-mean Gaussian field of variance
/// s² = ln(1+σ_t²/t₀²) and correlation length `pitch`.
pub fn sample_tunnel_field(
    ps: &PointSet,
    t0: f64,
    sigma_t: f64,
    pitch: f64,
    seed: u64,
) -> Result<TunnelField> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(invalid("t0", format!("must be > 0, got {t0}")));
    }
    if !(sigma_t >= 0.0) {
        return Err(invalid("sigma_t", format!("must be ≥ 0, got {sigma_t}")));
    }
    let s2 = log_variance(t0, sigma_t);
    let k = KernelSpec::new(s2, pitch)?;
    let g = sample_gaussian_field(ps, &k, seed)?;
    Ok(TunnelField {
        values: g.into_iter().map(|v| t0 * (v - 0.5 * s2).exp()).collect(),
        t0_mean: t0,
        sigma_t,
        seed,
    })
}
