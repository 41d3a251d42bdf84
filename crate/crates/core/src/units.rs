//! Unit system and physical constants.
//!
//! Energies are in μeV, lengths in nm and times in ns throughout the
//! dynamics modules. With this choice a velocity of 1 m/s is exactly
//! 1 nm/ns. The electrostatics module works in meV, matching the scale of
//! orbital energies.

/// Reduced Planck constant in μeV·ns.
pub const HBAR: f64 = 0.658_211_956_9;

/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Elementary charge in C (also J per eV).
pub const ELEMENTARY_CHARGE: f64 = 1.602_176_634e-19;

/// Electron rest mass in kg.
pub const ELECTRON_MASS: f64 = 9.109_383_7015e-31;

/// Transverse effective mass of the Si conduction band, in units of the
/// electron mass.
pub const MT_SI: f64 = 0.19;

/// ħ²/(2 mₑ) in meV·nm².
pub const HBAR2_OVER_2ME_MEV_NM2: f64 = 38.099_821_0;

/// 1 μeV in meV.
pub const UEV_PER_MEV: f64 = 1000.0;

/// Converts a velocity in m/s to nm/ns (identity, kept for readability at
/// call sites).
#[inline]
pub fn m_per_s_to_nm_per_ns(v: f64) -> f64 {
    v
}

/// ħ²/(2 m) in meV·nm² for an effective mass given in units of mₑ.
#[inline]
pub fn kinetic_prefactor_mev_nm2(mass_ratio: f64) -> f64 {
    HBAR2_OVER_2ME_MEV_NM2 / mass_ratio
}

/// Dot radius l = sqrt(ħ²/(m E_orb)) in nm for an orbital energy in meV.
pub fn dot_radius_nm(e_orb_mev: f64, mass_ratio: f64) -> f64 {
    (2.0 * kinetic_prefactor_mev_nm2(mass_ratio) / e_orb_mev).sqrt()
}
