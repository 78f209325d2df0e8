use nalgebra::{DMatrix, Vector3};
use num_complex::Complex64;

use crate::model::{TightBindingModel, Vec3};
use crate::{Error, Result};

pub const DEFAULT_ORBITAL_CAP: usize = 10_000;
/// Fraction of cells excluded at each open edge when extracting bulk values.
pub const DEFAULT_EDGE_FRACTION: f64 = 0.25;

const CLUSTER_GAP_TOL: f64 = 1e-6;

/// Finite open-boundary supercell of a periodic model.
#[derive(Debug, Clone)]
pub struct ClusterModel {
    pub hamiltonian: DMatrix<Complex64>,
    /// Absolute orbital positions, Å.
    pub positions: Vec<Vec3>,
    /// Orbital positions in units of the primitive lattice vectors,
    /// measured from the cluster origin.
    pub cell_coordinates: Vec<[f64; 3]>,
    pub repeats: [usize; 3],
    pub lattice: [Vec3; 3],
    pub electron_count: usize,
    /// Ionic dipole of one primitive cell, e·Å.
    pub ionic_dipole_per_cell: Vec3,
    orbitals_per_cell: usize,
}

impl ClusterModel {
    pub fn dimension(&self) -> usize {
        self.positions.len()
    }

    pub fn num_cells(&self) -> usize {
        self.repeats.iter().product()
    }

    pub fn orbitals_per_cell(&self) -> usize {
        self.orbitals_per_cell
    }

    /// Number of nonzero upper-triangle off-diagonal entries.
    pub fn hop_pairs(&self) -> usize {
        let n = self.dimension();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.hamiltonian[(i, j)].norm() > 0.0)
            .count()
    }

    /// Ascending eigenvalues and matching eigenvectors (columns).
    pub fn eigensystem(&self) -> (Vec<f64>, DMatrix<Complex64>) {
        let n = self.dimension();
        let real = self.hamiltonian.iter().all(|z| z.im == 0.0);
        let (values, vectors): (Vec<f64>, DMatrix<Complex64>) = if real {
            let eig = self.hamiltonian.map(|z| z.re).symmetric_eigen();
            (
                eig.eigenvalues.iter().copied().collect(),
                eig.eigenvectors.map(|x| Complex64::new(x, 0.0)),
            )
        } else {
            let eig = self.hamiltonian.clone().symmetric_eigen();
            (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
        };
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
        let sorted_values = order.iter().map(|&i| values[i]).collect();
        let sorted_vectors = DMatrix::from_fn(n, n, |r, c| vectors[(r, order[c])]);
        (sorted_values, sorted_vectors)
    }
}

/// Repeats the primitive cell L1×L2×L3 times and drops hoppings that leave
/// the cluster.
pub fn cluster_from_model(model: &TightBindingModel, repeats: [usize; 3], cap: usize) -> Result<ClusterModel> {
    if repeats.iter().any(|&l| l == 0) {
        return Err(Error::InvalidInput(format!("cluster repeats must be ≥ 1, got {repeats:?}")));
    }
    let norb = model.num_orbitals();
    let cells: usize = repeats.iter().product();
    let dim = cells * norb;
    if dim > cap {
        return Err(Error::Size { orbitals: dim, cap });
    }
    let geometry = model.geometry();
    let lattice = geometry.lattice_vectors();
    let cell_index = |c: [i64; 3]| -> Option<usize> {
        for d in 0..3 {
            if c[d] < 0 || c[d] >= repeats[d] as i64 {
                return None;
            }
        }
        Some(((c[0] as usize * repeats[1] + c[1] as usize) * repeats[2]) + c[2] as usize)
    };

    let mut hamiltonian = DMatrix::zeros(dim, dim);
    let mut positions = vec![Vec3::zeros(); dim];
    let mut cell_coordinates = vec![[0.0; 3]; dim];
    for c0 in 0..repeats[0] as i64 {
        for c1 in 0..repeats[1] as i64 {
            for c2 in 0..repeats[2] as i64 {
                let c = [c0, c1, c2];
                let base = cell_index(c).expect("inside") * norb;
                for (i, orb) in model.orbitals().iter().enumerate() {
                    let frac = [0, 1, 2].map(|d| c[d] as f64 + orb.center[d]);
                    cell_coordinates[base + i] = frac;
                    positions[base + i] = lattice[0] * frac[0] + lattice[1] * frac[1] + lattice[2] * frac[2];
                    hamiltonian[(base + i, base + i)] += Complex64::new(orb.onsite, 0.0);
                }
                for hop in model.hoppings() {
                    let target = [0, 1, 2].map(|d| c[d] + hop.cell[d] as i64);
                    if let Some(t) = cell_index(target) {
                        hamiltonian[(base + hop.from, t * norb + hop.to)] += hop.amplitude;
                    }
                }
            }
        }
    }

    let ionic_dipole_per_cell = geometry
        .sites()
        .iter()
        .enumerate()
        .map(|(s, site)| geometry.site_cartesian(s) * site.ionic_charge)
        .fold(Vec3::zeros(), |acc, v| acc + v);

    Ok(ClusterModel {
        hamiltonian,
        positions,
        cell_coordinates,
        repeats,
        lattice,
        electron_count: model.electron_count() * cells,
        ionic_dipole_per_cell,
        orbitals_per_cell: norb,
    })
}

/// Occupation of cluster eigenstates (ascending energy), 0, 1 or 2 each.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterOccupation(pub Vec<u8>);

impl ClusterOccupation {
    /// Maps periodic band occupations onto blocks of cluster states: band n
    /// covers states [n·N_cells, (n+1)·N_cells). Valid for isolated bands
    /// without in-gap edge states.
    pub fn from_bands(bands: &[u8], num_cells: usize) -> Self {
        ClusterOccupation(bands.iter().flat_map(|&f| std::iter::repeat(f).take(num_cells)).collect())
    }

    fn manifolds(&self) -> Vec<Vec<usize>> {
        (1..=2u8)
            .map(|s| (0..self.0.len()).filter(|&i| self.0[i] >= s).collect::<Vec<_>>())
            .filter(|m| !m.is_empty())
            .collect()
    }
}

/// Bulk dipole per primitive cell of an open cluster, e·Å.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterDipole {
    pub p_el: Vec3,
    pub p_ion: Vec3,
    pub p_tot: Vec3,
}

fn wrap_half(x: f64) -> f64 {
    let r = x - x.round();
    if r <= -0.5 {
        r + 1.0
    } else {
        r
    }
}

/// Sum of fractional offsets of the hybrid Wannier centers of one cell.
///
/// Centers are the eigenvalues of the position operator projected onto the
/// occupied states. The cut of the unit circle is placed in the widest gap
/// between offsets so that every center is measured consistently.
fn bulk_offset_per_cell(centers: &[f64], length: usize, occupied_per_cell: f64, edge: f64) -> f64 {
    let lo = edge * length as f64;
    let hi = (1.0 - edge) * length as f64;
    let mut fracs: Vec<f64> = centers
        .iter()
        .filter(|&&w| w >= lo && w < hi)
        .map(|w| w - w.floor())
        .collect();
    if fracs.is_empty() {
        return 0.0;
    }
    fracs.sort_by(f64::total_cmp);
    let mut cut = fracs[0] - 0.5 * (fracs[0] + 1.0 - fracs[fracs.len() - 1]);
    let mut widest = fracs[0] + 1.0 - fracs[fracs.len() - 1];
    for w in fracs.windows(2) {
        if w[1] - w[0] > widest {
            widest = w[1] - w[0];
            cut = 0.5 * (w[0] + w[1]);
        }
    }
    let mean = fracs
        .iter()
        .map(|f| {
            let mut x = f - cut;
            x -= x.floor();
            x + cut
        })
        .sum::<f64>()
        / fracs.len() as f64;
    mean * occupied_per_cell
}

/// Electronic plus ionic dipole per cell of the cluster in the bulk.
///
/// Along directions repeated more than once the electronic part comes from
/// hybrid Wannier centers in the central region (cells within `edge_fraction`
/// of either end are excluded) and is reported in the fundamental branch.
/// Along unrepeated directions it is the plain expectation of the position
/// operator per cell.
pub fn cluster_dipole(cluster: &ClusterModel, occupation: &ClusterOccupation, edge_fraction: f64) -> Result<ClusterDipole> {
    let n = cluster.dimension();
    if occupation.0.len() != n {
        return Err(Error::InvalidInput(format!(
            "cluster occupation lists {} states, cluster has {n}",
            occupation.0.len()
        )));
    }
    let (energies, vectors) = cluster.eigensystem();
    let cells = cluster.num_cells() as f64;
    let mut coeff = [0.0f64; 3];
    for manifold in occupation.manifolds() {
        let occupied: Vec<bool> = (0..n).map(|i| manifold.contains(&i)).collect();
        let mut gap = f64::INFINITY;
        for i in manifold.iter().copied() {
            for j in (0..n).filter(|&j| !occupied[j]) {
                gap = gap.min((energies[i] - energies[j]).abs());
            }
        }
        if gap < CLUSTER_GAP_TOL {
            return Err(Error::GaplessCluster { gap });
        }
        let m = manifold.len();
        let v = DMatrix::from_fn(n, m, |r, c| vectors[(r, manifold[c])]);
        for d in 0..3 {
            let x = DMatrix::from_fn(n, n, |r, c| {
                if r == c {
                    Complex64::new(cluster.cell_coordinates[r][d], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            });
            let projected = v.adjoint() * x * &v;
            if cluster.repeats[d] > 1 {
                let centers = projected.symmetric_eigen().eigenvalues;
                let centers: Vec<f64> = centers.iter().copied().collect();
                coeff[d] += bulk_offset_per_cell(&centers, cluster.repeats[d], m as f64 / cells, edge_fraction);
            } else {
                coeff[d] += projected.trace().re / cells;
            }
        }
    }
    for d in 0..3 {
        if cluster.repeats[d] > 1 {
            coeff[d] = wrap_half(coeff[d]);
        }
    }
    let p_el = -(cluster.lattice[0] * coeff[0] + cluster.lattice[1] * coeff[1] + cluster.lattice[2] * coeff[2]);
    let p_ion = cluster.ionic_dipole_per_cell;
    Ok(ClusterDipole {
        p_el,
        p_ion,
        p_tot: p_el + p_ion,
    })
}

/// ⟨ψ_i| r |ψ_j⟩ between cluster eigenstates (ascending energy), e·Å.
pub fn cluster_transition_dipole(cluster: &ClusterModel, i: usize, j: usize) -> Result<Vector3<Complex64>> {
    let n = cluster.dimension();
    if i >= n || j >= n {
        return Err(Error::InvalidInput(format!("state index out of range for {n} states")));
    }
    let (_, vectors) = cluster.eigensystem();
    let mut mu = Vector3::zeros();
    for r in 0..n {
        let w = vectors[(r, i)].conj() * vectors[(r, j)];
        for d in 0..3 {
            mu[d] += w * cluster.positions[r][d];
        }
    }
    Ok(mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn single_cell_cluster_matches_gamma_hamiltonian() {
        let model = fixtures::dimer_molecule(1.54, -1.0, 20.0).unwrap();
        let cluster = cluster_from_model(&model, [1, 1, 1], DEFAULT_ORBITAL_CAP).unwrap();
        let h = model.bloch_hamiltonian(&Vec3::zeros());
        assert_eq!(cluster.hamiltonian, h);
    }

    #[test]
    fn ssh_cluster_counts() {
        let model = fixtures::ssh(1.0, 0.5, 2).unwrap();
        let cluster = cluster_from_model(&model, [400, 1, 1], DEFAULT_ORBITAL_CAP).unwrap();
        assert_eq!(cluster.dimension(), 800);
        assert_eq!(cluster.hop_pairs(), 799);
    }

    #[test]
    fn boundary_hoppings_dropped() {
        // hopping to the next-nearest cell never fits in a two-cell cluster
        let g = fixtures::chain_geometry(1.0, &[(0.0, 1.0)]).unwrap();
        let model = TightBindingModel::builder(g)
            .orbital(0, "s", 0.0, [0.0; 3])
            .real_hop(0, 0, [2, 0, 0], 0.3)
            .electrons(1)
            .build()
            .unwrap();
        let two = cluster_from_model(&model, [2, 1, 1], DEFAULT_ORBITAL_CAP).unwrap();
        assert_eq!(two.hop_pairs(), 0);
        let five = cluster_from_model(&model, [5, 1, 1], DEFAULT_ORBITAL_CAP).unwrap();
        assert_eq!(five.hop_pairs(), 3);
    }

    #[test]
    fn size_cap() {
        let model = fixtures::ssh(1.0, 0.5, 2).unwrap();
        assert_eq!(
            cluster_from_model(&model, [100, 1, 1], 150).unwrap_err(),
            Error::Size { orbitals: 200, cap: 150 }
        );
    }

    #[test]
    fn symmetric_molecule_has_no_dipole() {
        let model = fixtures::dimer_molecule(1.54, -1.0, 20.0).unwrap();
        let cluster = cluster_from_model(&model, [1, 1, 1], DEFAULT_ORBITAL_CAP).unwrap();
        let d = cluster_dipole(&cluster, &ClusterOccupation(vec![1, 0]), DEFAULT_EDGE_FRACTION).unwrap();
        assert!(d.p_tot.norm() < 1e-12, "{:?}", d.p_tot);
    }

    #[test]
    fn dimer_transition_dipole_closed_form() {
        // bonding (1,1)/√2 and antibonding (1,−1)/√2 on sites ±d/2:
        // ⟨b|x|a⟩ = (x1 − x2)/2 = −d/2
        let d = 1.54;
        let model = fixtures::dimer_molecule(d, -1.0, 20.0).unwrap();
        let cluster = cluster_from_model(&model, [1, 1, 1], DEFAULT_ORBITAL_CAP).unwrap();
        let mu = cluster_transition_dipole(&cluster, 0, 1).unwrap();
        assert!((mu[0].norm() - d / 2.0).abs() < 1e-12);
        assert!(mu[1].norm() < 1e-12 && mu[2].norm() < 1e-12);
    }

    #[test]
    fn gapless_cluster_rejected() {
        let model = fixtures::dimer_molecule(1.54, 0.0, 20.0).unwrap();
        let cluster = cluster_from_model(&model, [1, 1, 1], DEFAULT_ORBITAL_CAP).unwrap();
        assert!(matches!(
            cluster_dipole(&cluster, &ClusterOccupation(vec![1, 0]), DEFAULT_EDGE_FRACTION),
            Err(Error::GaplessCluster { .. })
        ));
    }

    #[test]
    fn wrap_is_half_open() {
        assert_eq!(wrap_half(0.5), 0.5);
        assert_eq!(wrap_half(-0.5), 0.5);
        assert!((wrap_half(0.75) + 0.25).abs() < 1e-15);
    }
}
