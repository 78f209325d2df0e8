use super::{berry_phase_polarization, minimal_norm_difference, PolarizationResult};
use crate::model::{KPointGrid, OccupationConfig, TightBindingModel, Vec3};
use crate::{Error, Result};

/// Default ionic displacement for finite differences, Å.
pub const DEFAULT_BORN_DISPLACEMENT: f64 = 1e-3;

/// Born effective charge tensor of one site, units of e. Row α, column β
/// holds ∂p_α/∂u_β.
#[derive(Debug, Clone, PartialEq)]
pub struct BornCharge {
    pub site: usize,
    pub tensor: [[f64; 3]; 3],
}

impl BornCharge {
    pub fn trace(&self) -> f64 {
        (0..3).map(|i| self.tensor[i][i]).sum()
    }
}

fn delta_coeff(a: &PolarizationResult, b: &PolarizationResult) -> [f64; 3] {
    [0, 1, 2].map(|i| b.fractional[i] - a.fractional[i])
}

/// Z*_αβ = (1/e) ∂p_el,α/∂u_β + Z_ion δ_αβ by centered differences of the
/// Berry-phase dipole.
///
/// Displacing a site moves its orbital centers with it; hopping amplitudes
/// stay fixed. The ionic term is added analytically.
pub fn born_effective_charge(
    model: &TightBindingModel,
    site: usize,
    delta: f64,
    grid: &KPointGrid,
    occ: &OccupationConfig,
) -> Result<BornCharge> {
    if !(delta > 0.0) {
        return Err(Error::Domain { quantity: "displacement", value: delta });
    }
    let z_ion = model
        .geometry()
        .sites()
        .get(site)
        .ok_or_else(|| Error::InvalidInput(format!("no site {site}")))?
        .ionic_charge;
    let p0 = berry_phase_polarization(model, grid, occ)?;
    let quanta = p0.quantum;
    let mut tensor = [[0.0; 3]; 3];
    for beta in 0..3 {
        let mut u = Vec3::zeros();
        u[beta] = delta;
        let plus = berry_phase_polarization(&model.with_displaced_site(site, &u)?, grid, occ)?;
        let minus = berry_phase_polarization(&model.with_displaced_site(site, &-u)?, grid, occ)?;
        let (_, full) = minimal_norm_difference(delta_coeff(&minus, &plus), &quanta);
        let (_, upper) = minimal_norm_difference(delta_coeff(&p0, &plus), &quanta);
        let (_, lower) = minimal_norm_difference(delta_coeff(&minus, &p0), &quanta);
        if (0..3).any(|i| (full[i] - upper[i] - lower[i]).abs() > 1e-9) {
            return Err(Error::BranchJump { direction: beta });
        }
        let dp = quanta[0] * full[0] + quanta[1] * full[1] + quanta[2] * full[2];
        for alpha in 0..3 {
            tensor[alpha][beta] = dp[alpha] / (2.0 * delta);
            if alpha == beta {
                tensor[alpha][beta] += z_ion;
            }
        }
    }
    Ok(BornCharge { site, tensor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn bare_ion_is_rigid_charge() {
        // site 0: bare ion without orbitals; site 1 carries the electron
        let g = fixtures::chain_geometry(1.0, &[(0.1, 1.0), (0.6, 0.0)]).unwrap();
        let model = TightBindingModel::builder(g)
            .orbital(1, "s", 0.0, [0.6, 0.0, 0.0])
            .electrons(1)
            .build()
            .unwrap();
        let occ = OccupationConfig::ground("gr", 1, 1).unwrap();
        let z = born_effective_charge(&model, 0, DEFAULT_BORN_DISPLACEMENT, &KPointGrid::line(8).unwrap(), &occ).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                let expected = if a == b { 1.0 } else { 0.0 };
                assert!((z.tensor[a][b] - expected).abs() < 1e-9, "{:?}", z.tensor);
            }
        }
        // the orbital-carrying site sees its electron move along: Z* = 0 − 1
        let z1 = born_effective_charge(&model, 1, DEFAULT_BORN_DISPLACEMENT, &KPointGrid::line(8).unwrap(), &occ).unwrap();
        assert!((z1.trace() + 3.0).abs() < 1e-8, "{:?}", z1.tensor);
    }

    #[test]
    fn rejects_bad_displacement() {
        let model = fixtures::ssh(1.0, 0.5, 2).unwrap();
        let occ = OccupationConfig::ground("gr", 2, 2).unwrap();
        let grid = KPointGrid::line(8).unwrap();
        assert!(born_effective_charge(&model, 0, 0.0, &grid, &occ).is_err());
        assert!(born_effective_charge(&model, 5, 1e-3, &grid, &occ).is_err());
    }

    #[test]
    fn large_displacement_reports_branch_jump() {
        // a displacement of almost half a lattice constant makes the
        // centered difference ambiguous
        let model = fixtures::flat_band(0.0, 0.0, 1).unwrap();
        let occ = OccupationConfig::ground("gr", 1, 1).unwrap();
        let r = born_effective_charge(&model, 0, 0.3, &KPointGrid::line(4).unwrap(), &occ);
        assert!(matches!(r, Err(Error::BranchJump { direction: 0 })), "{r:?}");
    }
}
