use serde::{Deserialize, Serialize};

use super::{wrap_half, PolarizationResult};
use crate::constants::ea_to_debye;
use crate::model::Vec3;
use crate::{Error, Result};

/// Change of the cell dipole between two configurations, e·Å.
#[derive(Debug, Clone, PartialEq)]
pub struct DipoleDifference {
    pub from: String,
    pub to: String,
    pub dp_ion: Vec3,
    /// Minimal-norm representative of the electronic change over quanta.
    pub dp_el: Vec3,
    /// Difference of fundamental-branch values, no shift applied.
    pub dp_el_raw: Vec3,
    /// Difference of branch-tracked values.
    pub dp_el_branch: Vec3,
    pub dp_tot: Vec3,
}

impl DipoleDifference {
    /// Builds a difference from given ionic and electronic parts, e.g. for
    /// tabulated reference values.
    pub fn from_components(from: &str, to: &str, dp_ion: Vec3, dp_el: Vec3) -> Self {
        DipoleDifference {
            from: from.to_string(),
            to: to.to_string(),
            dp_ion,
            dp_el,
            dp_el_raw: dp_el,
            dp_el_branch: dp_el,
            dp_tot: dp_ion + dp_el,
        }
    }

    pub fn magnitude_ea(&self) -> f64 {
        self.dp_tot.norm()
    }

    pub fn magnitude_debye(&self) -> f64 {
        ea_to_debye(self.magnitude_ea())
    }

    pub fn record(&self) -> DipoleDifferenceRecord {
        DipoleDifferenceRecord {
            from: self.from.clone(),
            to: self.to.clone(),
            dp_ion_eA: self.dp_ion.into(),
            dp_el_eA: self.dp_el.into(),
            dp_el_raw_eA: self.dp_el_raw.into(),
            dp_el_branch_eA: self.dp_el_branch.into(),
            dp_tot_eA: self.dp_tot.into(),
            magnitude_eA: self.magnitude_ea(),
            magnitude_debye: self.magnitude_debye(),
        }
    }
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DipoleDifferenceRecord {
    pub from: String,
    pub to: String,
    pub dp_ion_eA: [f64; 3],
    pub dp_el_eA: [f64; 3],
    pub dp_el_raw_eA: [f64; 3],
    pub dp_el_branch_eA: [f64; 3],
    pub dp_tot_eA: [f64; 3],
    pub magnitude_eA: f64,
    pub magnitude_debye: f64,
}

/// Shortest vector Σ (Δc_i + n_i) R_i over integer n.
pub fn minimal_norm_difference(delta_coeff: [f64; 3], quanta: &[Vec3; 3]) -> (Vec3, [f64; 3]) {
    let base = delta_coeff.map(wrap_half);
    let mut best = (f64::INFINITY, Vec3::zeros(), base);
    for n0 in -1..=1 {
        for n1 in -1..=1 {
            for n2 in -1..=1 {
                let c = [base[0] + n0 as f64, base[1] + n1 as f64, base[2] + n2 as f64];
                let v = quanta[0] * c[0] + quanta[1] * c[1] + quanta[2] * c[2];
                // strict comparison keeps the first candidate on exact ties
                if v.norm() < best.0 - 1e-14 {
                    best = (v.norm(), v, c);
                }
            }
        }
    }
    (best.1, best.2)
}

/// Dipole change a → b with the electronic part branch-matched.
pub fn dipole_difference(a: &PolarizationResult, b: &PolarizationResult) -> Result<DipoleDifference> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch { a: a.grid, b: b.grid });
    }
    let delta = [0, 1, 2].map(|i| b.fractional[i] - a.fractional[i]);
    let (dp_el, _) = minimal_norm_difference(delta, &a.quantum);
    let dp_ion = b.p_ion - a.p_ion;
    let out = DipoleDifference {
        from: a.label.clone(),
        to: b.label.clone(),
        dp_ion,
        dp_el,
        dp_el_raw: b.p_el - a.p_el,
        dp_el_branch: b.branch_el() - a.branch_el(),
        dp_tot: dp_ion + dp_el,
    };
    debug_assert!(out.dp_tot.norm() <= out.dp_ion.norm() + out.dp_el.norm() + 1e-12);
    Ok(out)
}
