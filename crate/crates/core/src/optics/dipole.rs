use nalgebra::Vector3;
use num_complex::Complex64;

use crate::constants::{ea2_to_debye2, ea_to_debye};
use crate::model::{BlochEigensystem, TightBindingModel, Vec3, DEGENERACY_TOL};
use crate::{Error, Result};

/// ⟨e| r |g⟩ in e·Å, split along a declared symmetry axis.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionDipole {
    pub mu: Vector3<Complex64>,
    /// Unit vector of the symmetry axis.
    pub axis: Vec3,
    /// μ · axis.
    pub parallel: Complex64,
    /// |μ − (μ·axis) axis|.
    pub perpendicular: f64,
    /// (band g, band e, k index).
    pub transition: (usize, usize, usize),
    /// ε_e − ε_g, eV.
    pub energy: f64,
}

fn unit_axis(axis: &Vec3) -> Result<Vec3> {
    let norm = axis.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidInput("symmetry axis must be a nonzero vector".into()));
    }
    Ok(axis / norm)
}

impl TransitionDipole {
    pub fn from_vector(mu: Vector3<Complex64>, axis: &Vec3, energy: f64, transition: (usize, usize, usize)) -> Result<Self> {
        let axis = unit_axis(axis)?;
        let parallel = mu[0] * axis[0] + mu[1] * axis[1] + mu[2] * axis[2];
        let rest = mu - axis.map(|a| Complex64::new(a, 0.0)) * parallel;
        Ok(TransitionDipole {
            mu,
            axis,
            parallel,
            perpendicular: rest.norm(),
            transition,
            energy,
        })
    }

    /// A real dipole of given magnitude pointing along `direction`.
    pub fn from_magnitude(magnitude_ea: f64, direction: &Vec3, axis: &Vec3, energy: f64) -> Result<Self> {
        let d = unit_axis(direction)? * magnitude_ea;
        Self::from_vector(d.map(|x| Complex64::new(x, 0.0)), axis, energy, (0, 1, 0))
    }

    pub fn magnitude_ea(&self) -> f64 {
        self.mu.norm()
    }

    pub fn magnitude_debye(&self) -> f64 {
        ea_to_debye(self.magnitude_ea())
    }

    pub fn mu_sq_ea2(&self) -> f64 {
        self.mu.norm_squared()
    }

    pub fn mu_sq_debye2(&self) -> f64 {
        ea2_to_debye2(self.mu_sq_ea2())
    }

    /// |μ_∥|² / |μ|²; zero for a dark transition.
    pub fn axis_fraction(&self) -> f64 {
        let total = self.mu_sq_ea2();
        if total == 0.0 {
            0.0
        } else {
            self.parallel.norm_sqr() / total
        }
    }
}

/// μ = −i ⟨u_e|∂H/∂k|u_g⟩ / (ε_e − ε_g), from [r, H] = i ∂H/∂k.
pub fn transition_dipole(
    es: &BlochEigensystem,
    model: &TightBindingModel,
    k_index: usize,
    g: usize,
    e: usize,
    axis: &Vec3,
) -> Result<TransitionDipole> {
    let bands = es.num_bands();
    if g >= bands || e >= bands || k_index >= es.num_k() {
        return Err(Error::InvalidInput(format!("transition ({g} → {e}) at k {k_index} out of range")));
    }
    let energy = es.energies[k_index][e] - es.energies[k_index][g];
    if energy.abs() <= DEGENERACY_TOL {
        return Err(Error::DegenerateTransition { energy });
    }
    let velocity = model.velocity_matrices(&es.kpoints[k_index]);
    let u = &es.vectors[k_index];
    let (ug, ue) = (u.column(g), u.column(e));
    let mut mu = Vector3::zeros();
    for alpha in 0..3 {
        let element = ue.dotc(&(&velocity[alpha] * ug));
        mu[alpha] = Complex64::new(0.0, -1.0) * element / energy;
    }
    TransitionDipole::from_vector(mu, axis, energy, (g, e, k_index))
}

/// Σ |μ_i|² over degenerate partner transitions, Debye².
pub fn summed_mu_sq_debye2(partners: &[TransitionDipole]) -> f64 {
    partners.iter().map(TransitionDipole::mu_sq_debye2).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{KPointGrid, OccupationConfig};

    fn dimer() -> (TightBindingModel, BlochEigensystem) {
        let model = fixtures::dimer_molecule(1.54, -1.0, 20.0).unwrap();
        let occ = OccupationConfig::ground("gr", 2, 1).unwrap();
        let es = BlochEigensystem::diagonalize(&model, &KPointGrid::new([1, 1, 1]).unwrap(), &occ).unwrap();
        (model, es)
    }

    #[test]
    fn dimer_bonding_antibonding() {
        let (model, es) = dimer();
        let along = transition_dipole(&es, &model, 0, 0, 1, &Vec3::x()).unwrap();
        assert!((along.magnitude_ea() - 0.77).abs() < 1e-12);
        assert!((along.parallel.norm() - 0.77).abs() < 1e-12);
        assert!(along.perpendicular < 1e-12);
        assert!((along.energy - 2.0).abs() < 1e-12);

        let across = transition_dipole(&es, &model, 0, 0, 1, &Vec3::z()).unwrap();
        assert!(across.parallel.norm() < 1e-12);
        assert!((across.perpendicular - 0.77).abs() < 1e-12);
    }

    #[test]
    fn reversed_transition_same_magnitude() {
        let model = fixtures::rice_mele(1.0, 0.5, 0.5, 1.0, 1).unwrap();
        let occ = OccupationConfig::ground("gr", 2, 1).unwrap();
        let es = BlochEigensystem::diagonalize(&model, &KPointGrid::line(8).unwrap(), &occ).unwrap();
        for ik in 0..8 {
            let up = transition_dipole(&es, &model, ik, 0, 1, &Vec3::x()).unwrap();
            let down = transition_dipole(&es, &model, ik, 1, 0, &Vec3::x()).unwrap();
            assert!((up.magnitude_ea() - down.magnitude_ea()).abs() < 1e-12);
            assert!(up.energy > 0.0 && down.energy < 0.0);
        }
    }

    #[test]
    fn degenerate_transition_rejected() {
        let model = fixtures::dimer_molecule(1.54, 0.0, 20.0).unwrap();
        let occ = OccupationConfig::ground("gr", 2, 1).unwrap();
        let es = BlochEigensystem::diagonalize(&model, &KPointGrid::new([1, 1, 1]).unwrap(), &occ).unwrap();
        assert!(matches!(
            transition_dipole(&es, &model, 0, 0, 1, &Vec3::x()),
            Err(Error::DegenerateTransition { .. })
        ));
    }
}
