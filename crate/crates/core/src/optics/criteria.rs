use serde::{Deserialize, Serialize};

use crate::constants::ea_to_debye;
use crate::polarization::DipoleDifference;
use crate::{Error, Result};

use super::TransitionDipole;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriteriaThresholds {
    /// Largest |Δp_tot| still counted as stable, e·Å.
    pub stability_dp_ea: f64,
    /// |μ|² must exceed this, Debye².
    pub brightness_mu_sq_debye2: f64,
}

impl Default for CriteriaThresholds {
    fn default() -> Self {
        CriteriaThresholds {
            stability_dp_ea: 0.1,
            brightness_mu_sq_debye2: 10.0,
        }
    }
}

impl CriteriaThresholds {
    pub fn validate(&self) -> Result<()> {
        for (quantity, value) in [
            ("stability threshold", self.stability_dp_ea),
            ("brightness threshold", self.brightness_mu_sq_debye2),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(Error::Domain {
                    quantity,
                    value,
                });
            }
        }
        Ok(())
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmitterCriteriaReport {
    pub label: String,
    pub dp_tot_eA: f64,
    pub dp_tot_debye: f64,
    pub stability_threshold_eA: f64,
    pub stability_pass: bool,
    /// None when no transition dipole was supplied.
    pub mu_sq_debye2: Option<f64>,
    pub brightness_threshold_debye2: f64,
    pub brightness_pass: Option<bool>,
    pub polarization_axis_fraction_unitless: Option<f64>,
    pub lifetime_ns: Option<f64>,
    pub verdict: String,
}

fn verdict(stable: bool, bright: Option<bool>, dark: bool, axis_fraction: Option<f64>) -> String {
    let mut text = match (stable, bright) {
        (true, Some(true)) => "stable and bright: ideal emitter candidate".to_string(),
        (true, Some(false)) if dark => "stable but dark emitter: no transition dipole".to_string(),
        (true, Some(false)) => "stable but dim: transition dipole below brightness threshold".to_string(),
        (false, Some(true)) => "bright but spectrally unstable: dipole change above stability threshold".to_string(),
        (false, Some(false)) if dark => "spectrally unstable and dark emitter".to_string(),
        (false, Some(false)) => "spectrally unstable and dim".to_string(),
        (true, None) => "stable: dipole change below stability threshold; brightness not evaluated".to_string(),
        (false, None) => "spectrally unstable: dipole change above stability threshold; brightness not evaluated".to_string(),
    };
    if let (false, Some(true) | Some(false), Some(axis_fraction)) = (dark, bright, axis_fraction) {
        let polar = if axis_fraction >= 0.9 {
            "; emission polarized along the symmetry axis"
        } else if axis_fraction <= 0.1 {
            "; emission polarized perpendicular to the symmetry axis"
        } else {
            "; emission of mixed polarization"
        };
        text.push_str(polar);
    }
    text
}

pub fn emitter_criteria_from_values(
    label: &str,
    dp_tot_ea: f64,
    mu_sq_debye2: Option<f64>,
    axis_fraction: Option<f64>,
    lifetime_ns: Option<f64>,
    thresholds: &CriteriaThresholds,
) -> Result<EmitterCriteriaReport> {
    thresholds.validate()?;
    if !(dp_tot_ea >= 0.0 && dp_tot_ea.is_finite()) {
        return Err(Error::Domain {
            quantity: "|dp_tot|",
            value: dp_tot_ea,
        });
    }
    if let Some(m) = mu_sq_debye2 {
        if !(m >= 0.0 && m.is_finite()) {
            return Err(Error::Domain {
                quantity: "|mu|^2",
                value: m,
            });
        }
    }
    let stable = dp_tot_ea < thresholds.stability_dp_ea;
    let bright = mu_sq_debye2.map(|m| m > thresholds.brightness_mu_sq_debye2);
    Ok(EmitterCriteriaReport {
        label: label.to_string(),
        dp_tot_eA: dp_tot_ea,
        dp_tot_debye: ea_to_debye(dp_tot_ea),
        stability_threshold_eA: thresholds.stability_dp_ea,
        stability_pass: stable,
        mu_sq_debye2,
        brightness_threshold_debye2: thresholds.brightness_mu_sq_debye2,
        brightness_pass: bright,
        polarization_axis_fraction_unitless: axis_fraction,
        lifetime_ns,
        verdict: verdict(stable, bright, mu_sq_debye2 == Some(0.0), axis_fraction),
    })
}

pub fn emitter_criteria(
    dp: &DipoleDifference,
    mu: &TransitionDipole,
    lifetime_ns: Option<f64>,
    thresholds: &CriteriaThresholds,
) -> Result<EmitterCriteriaReport> {
    let label = format!("{} -> {}", dp.from, dp.to);
    emitter_criteria_from_values(
        &label,
        dp.magnitude_ea(),
        Some(mu.mu_sq_debye2()),
        Some(mu.axis_fraction()),
        lifetime_ns,
        thresholds,
    )
}

/// How many times larger the unstable dipole change is.
pub fn dipole_contrast(stable_ea: f64, unstable_ea: f64) -> Result<f64> {
    if !(stable_ea > 0.0 && stable_ea.is_finite()) {
        return Err(Error::Domain {
            quantity: "reference |dp_tot|",
            value: stable_ea,
        });
    }
    Ok(unstable_ea / stable_ea)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_rows() {
        let t = CriteriaThresholds::default();
        let v1 = emitter_criteria_from_values("V1", 0.044, Some(25.0), Some(1.0), Some(12.0), &t).unwrap();
        assert!(v1.stability_pass && v1.brightness_pass == Some(true));
        let nv = emitter_criteria_from_values("NV", 0.903, None, None, None, &t).unwrap();
        assert!(!nv.stability_pass && nv.brightness_pass.is_none());
        assert!((dipole_contrast(0.044, 0.903).unwrap() - 20.52).abs() < 0.01);
    }

    #[test]
    fn dark_emitter() {
        let r = emitter_criteria_from_values("x", 0.0, Some(0.0), None, None, &CriteriaThresholds::default()).unwrap();
        assert!(r.stability_pass && r.brightness_pass == Some(false));
        assert!(r.verdict.contains("dark emitter"));
    }

    #[test]
    fn brightness_is_strict() {
        let r = emitter_criteria_from_values("x", 0.0, Some(10.0), None, None, &CriteriaThresholds::default()).unwrap();
        assert_eq!(r.brightness_pass, Some(false));
    }
}
