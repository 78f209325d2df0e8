//! Electronic polarization from discrete Berry phases, ionic dipoles,
//! dipole changes between occupation configurations, Born effective
//! charges and the adiabatic sum-over-states response.

mod berry;
mod born;
mod difference;
mod response;

pub use berry::{berry_phase_from_eigensystem, berry_phase_polarization, PolarizationRecord, PolarizationResult, GAP_TOL};
pub use born::{born_effective_charge, BornCharge, DEFAULT_BORN_DISPLACEMENT};
pub use difference::{dipole_difference, minimal_norm_difference, DipoleDifference};
pub use response::{
    integrate_response, polarization_response, response_from_eigensystems, simpson, LAMBDA_STEP, SIMPSON_NODES,
};

use crate::model::{BlochEigensystem, Vec3};
use crate::{Error, Result};

pub(crate) fn wrap_half(x: f64) -> f64 {
    let r = x - x.round();
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

/// Smallest |ε_n − ε_m| between a band in `manifold` and a band outside it,
/// with the k index where it occurs.
pub(crate) fn manifold_gap(es: &BlochEigensystem, manifold: &[usize]) -> (f64, usize) {
    let mut best = (f64::INFINITY, 0);
    for (ik, e) in es.energies.iter().enumerate() {
        for &n in manifold {
            for m in (0..e.len()).filter(|m| !manifold.contains(m)) {
                let gap = (e[n] - e[m]).abs();
                if gap < best.0 {
                    best = (gap, ik);
                }
            }
        }
    }
    best
}

pub(crate) fn check_gap(es: &BlochEigensystem, manifold: &[usize]) -> Result<()> {
    let (gap, k_index) = manifold_gap(es, manifold);
    if gap < GAP_TOL {
        return Err(Error::GapClosure { k_index, gap });
    }
    Ok(())
}

pub(crate) fn ionic_dipole(model: &crate::model::TightBindingModel) -> Vec3 {
    let g = model.geometry();
    g.sites()
        .iter()
        .enumerate()
        .fold(Vec3::zeros(), |acc, (s, site)| acc + g.site_cartesian(s) * site.ionic_charge)
}
