use std::f64::consts::PI;

use serde::Serialize;

use crate::constants::{ea2_to_debye2, ea2_to_si, si_to_ea2, C_LIGHT, EPS0, EV_IN_JOULE, HBAR};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Lifetime {
    pub tau_ns: f64,
    pub einstein_a_per_s: f64,
    /// |μ|² implied by I through ε₀VI/π.
    pub mu_sq_ea2: f64,
    pub mu_sq_debye2: f64,
}

fn positive(quantity: &'static str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Domain {
            quantity: quantity.into(),
            value,
        })
    }
}

/// |μ|² = ε₀ V I / π in (e·Å)², V in nm³, I in eV.
pub fn mu_sq_from_intensity(volume_nm3: f64, intensity_ev: f64) -> f64 {
    si_to_ea2(EPS0 * volume_nm3 * 1e-27 * intensity_ev * EV_IN_JOULE / PI)
}

/// A = n ω³ |μ|² / (3π ε₀ ħ c³), s⁻¹.
pub fn einstein_coefficient(refractive_index: f64, hw_ev: f64, mu_sq_ea2: f64) -> Result<f64> {
    positive("refractive index", refractive_index)?;
    positive("photon energy", hw_ev)?;
    positive("|mu|^2", mu_sq_ea2)?;
    let omega = hw_ev * EV_IN_JOULE / HBAR;
    Ok(refractive_index * omega.powi(3) * ea2_to_si(mu_sq_ea2) / (3.0 * PI * EPS0 * HBAR * C_LIGHT.powi(3)))
}

/// τ = 3π²ħc³ / (n ω³ V I).
pub fn radiative_lifetime(refractive_index: f64, hw_ev: f64, volume_nm3: f64, intensity_ev: f64) -> Result<Lifetime> {
    positive("refractive index", refractive_index)?;
    positive("photon energy", hw_ev)?;
    positive("cell volume", volume_nm3)?;
    positive("integrated intensity", intensity_ev)?;
    let omega = hw_ev * EV_IN_JOULE / HBAR;
    let tau = 3.0 * PI * PI * HBAR * C_LIGHT.powi(3)
        / (refractive_index * omega.powi(3) * volume_nm3 * 1e-27 * intensity_ev * EV_IN_JOULE);
    let mu_sq = mu_sq_from_intensity(volume_nm3, intensity_ev);
    Ok(Lifetime {
        tau_ns: tau * 1e9,
        einstein_a_per_s: 1.0 / tau,
        mu_sq_ea2: mu_sq,
        mu_sq_debye2: ea2_to_debye2(mu_sq),
    })
}
