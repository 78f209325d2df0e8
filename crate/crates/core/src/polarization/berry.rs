use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use super::{check_gap, ionic_dipole, wrap_half};
use crate::model::{BlochEigensystem, KPointGrid, OccupationConfig, TightBindingModel, Vec3};
use crate::Result;

/// Minimum occupied/unoccupied separation for a well-defined Berry phase, eV.
pub const GAP_TOL: f64 = 1e-6;

/// Dipole per cell in e·Å. `p_el` sits in the fundamental branch: its
/// coefficients along the lattice vectors lie in (−1/2, 1/2].
#[derive(Debug, Clone, PartialEq)]
pub struct PolarizationResult {
    pub label: String,
    pub p_el: Vec3,
    pub p_ion: Vec3,
    pub p_tot: Vec3,
    /// Dipole quanta e·R_i, one per lattice vector.
    pub quantum: [Vec3; 3],
    /// Fractional coefficients of `p_el` along the quanta.
    pub fractional: [f64; 3],
    /// Integer number of quanta separating `p_el` from the continuous
    /// reference (orbital-center charge or a supplied polarization).
    pub branch: [i64; 3],
    pub grid: [usize; 3],
}

impl PolarizationResult {
    /// p_el shifted onto the recorded branch.
    pub fn branch_el(&self) -> Vec3 {
        (0..3).fold(Vec3::zeros(), |acc, i| {
            acc + self.quantum[i] * (self.fractional[i] + self.branch[i] as f64)
        })
    }

    pub fn record(&self) -> PolarizationRecord {
        PolarizationRecord {
            label: self.label.clone(),
            p_el_eA: self.p_el.into(),
            p_ion_eA: self.p_ion.into(),
            p_tot_eA: self.p_tot.into(),
            quantum_eA: self.quantum.map(Into::into),
            branch_quanta: self.branch,
            grid_count: self.grid,
        }
    }
}

/// Serialized form of a [`PolarizationResult`]; key suffixes carry units.
#[allow(non_snake_case)]
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PolarizationRecord {
    pub label: String,
    pub p_el_eA: [f64; 3],
    pub p_ion_eA: [f64; 3],
    pub p_tot_eA: [f64; 3],
    pub quantum_eA: [[f64; 3]; 3],
    pub branch_quanta: [i64; 3],
    pub grid_count: [usize; 3],
}

pub fn berry_phase_polarization(
    model: &TightBindingModel,
    grid: &KPointGrid,
    occ: &OccupationConfig,
) -> Result<PolarizationResult> {
    let es = BlochEigensystem::diagonalize(model, grid, occ)?;
    berry_phase_from_eigensystem(model, &es, None)
}

/// Overlap ⟨u_a,m | D | u_b,n⟩ over the bands of a manifold. `closing`
/// carries the diagonal phases e^{−i b·τ} that map u(k) to u(k + b).
fn overlap(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>, bands: &[usize], closing: Option<&[Complex64]>) -> DMatrix<Complex64> {
    let m = bands.len();
    let norb = a.nrows();
    DMatrix::from_fn(m, m, |i, j| {
        let (ci, cj) = (a.column(bands[i]), b.column(bands[j]));
        (0..norb)
            .map(|o| {
                let z = ci[o].conj() * cj[o];
                match closing {
                    Some(d) => z * d[o],
                    None => z,
                }
            })
            .sum()
    })
}

/// −Im ln det Π_s S(k_s, k_{s+1}) along one closed string.
fn string_phase(es: &BlochEigensystem, string: &[usize], bands: &[usize], closing: &[Complex64]) -> f64 {
    let mut acc = Complex64::new(1.0, 0.0);
    for s in 0..string.len() {
        let a = &es.vectors[string[s]];
        let det = if s + 1 < string.len() {
            overlap(a, &es.vectors[string[s + 1]], bands, None).determinant()
        } else {
            overlap(a, &es.vectors[string[0]], bands, Some(closing)).determinant()
        };
        let norm = det.norm();
        acc *= if norm > 0.0 { det / norm } else { det };
    }
    -acc.arg()
}

/// Average of string phases, each unwrapped to within π of the first.
fn mean_phase(phases: &[f64]) -> f64 {
    let first = phases[0];
    let sum: f64 = phases
        .iter()
        .map(|&p| first + 2.0 * PI * wrap_half((p - first) / (2.0 * PI)))
        .sum();
    sum / phases.len() as f64
}

/// Berry-phase dipole from an existing eigensystem. With `reference` the
/// branch integers pick the representative closest to that polarization;
/// otherwise the occupied orbital-center charge serves as reference.
pub fn berry_phase_from_eigensystem(
    model: &TightBindingModel,
    es: &BlochEigensystem,
    reference: Option<Vec3>,
) -> Result<PolarizationResult> {
    let geometry = model.geometry();
    let recip = geometry.reciprocal_vectors();
    let manifolds = es.occupation.spin_manifolds()?;
    for manifold in &manifolds {
        check_gap(es, manifold)?;
    }
    let centers: Vec<Vec3> = (0..model.num_orbitals()).map(|o| model.orbital_center_cartesian(o)).collect();

    let mut coeff = [0.0f64; 3];
    for manifold in &manifolds {
        for d in 0..3 {
            let closing: Vec<Complex64> = centers
                .iter()
                .map(|tau| Complex64::from_polar(1.0, -recip[d].dot(tau)))
                .collect();
            let phases: Vec<f64> = es
                .grid
                .strings(d)
                .par_iter()
                .map(|string| string_phase(es, string, manifold, &closing))
                .collect();
            coeff[d] -= mean_phase(&phases) / (2.0 * PI);
        }
    }

    let reference_coeff = match reference {
        Some(p) => geometry.to_fractional(&p),
        None => {
            let mut c = [0.0; 3];
            let nk = es.num_k() as f64;
            for manifold in &manifolds {
                for u in &es.vectors {
                    for &n in manifold {
                        for (o, orb) in model.orbitals().iter().enumerate() {
                            let w = u[(o, n)].norm_sqr() / nk;
                            for d in 0..3 {
                                c[d] -= w * orb.center[d];
                            }
                        }
                    }
                }
            }
            c
        }
    };

    let fractional = coeff.map(wrap_half);
    let branch = [0, 1, 2].map(|d| (reference_coeff[d] - fractional[d]).round() as i64);
    let quantum = geometry.lattice_vectors();
    let p_el = quantum[0] * fractional[0] + quantum[1] * fractional[1] + quantum[2] * fractional[2];
    let p_ion = ionic_dipole(model);
    Ok(PolarizationResult {
        label: es.occupation.label.clone(),
        p_el,
        p_ion,
        p_tot: p_el + p_ion,
        quantum,
        fractional,
        branch,
        grid: es.grid.divisions(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::{fixtures, Error};

    fn ground(model: &TightBindingModel, n: usize) -> PolarizationResult {
        let occ = OccupationConfig::ground("gr", model.num_orbitals(), model.electron_count()).unwrap();
        berry_phase_polarization(model, &KPointGrid::line(n).unwrap(), &occ).unwrap()
    }

    #[test]
    fn flat_band_sits_on_orbital() {
        let model = fixtures::flat_band(0.3, 0.0, 1).unwrap();
        let p = ground(&model, 8);
        assert!((p.p_el[0] + 0.3).abs() < 1e-12, "{}", p.p_el[0]);
        assert_eq!(p.branch, [0, 0, 0]);
        assert!((p.p_ion[0] - 0.3).abs() < 1e-12);
        assert!(p.p_tot.norm() < 1e-12);
    }

    #[test]
    fn quantum_is_lattice() {
        let model = fixtures::rice_mele(1.0, 0.5, 0.5, 2.5, 1).unwrap();
        let p = ground(&model, 16);
        assert_eq!(p.quantum[0], Vec3::new(2.5, 0.0, 0.0));
        assert!(p.fractional.iter().all(|c| *c > -0.5 && *c <= 0.5));
        assert_eq!(p.p_tot, p.p_el + p.p_ion);
    }

    #[test]
    fn ssh_is_quantized() {
        for (t1, t2) in [(1.0, 0.5), (0.5, 1.0)] {
            let model = fixtures::ssh(t1, t2, 2).unwrap();
            let p = ground(&model, 64);
            let c = p.fractional[0];
            let to_half = (c.abs() - 0.5).abs();
            assert!(c.abs() < 1e-8 || to_half < 1e-8, "t1={t1} t2={t2}: {c}");
        }
    }

    #[test]
    fn gapless_ssh_rejected() {
        let model = fixtures::ssh(1.0, 1.0, 2).unwrap();
        let occ = OccupationConfig::ground("gr", 2, 2).unwrap();
        let r = berry_phase_polarization(&model, &KPointGrid::line(64).unwrap(), &occ);
        assert!(matches!(r, Err(Error::GapClosure { .. })), "{r:?}");
    }

    #[test]
    fn fully_occupied_bands_need_no_gap() {
        let model = fixtures::rice_mele(1.0, 0.5, 0.5, 1.0, 4).unwrap();
        let p = ground(&model, 16);
        // two full bands: charge sits on the orbitals, 2·(0 + 0.5)
        assert!(wrap_half(p.fractional[0] + 1.0).abs() < 1e-10, "{:?}", p.fractional);
    }
}
