use num_complex::Complex64;
use rayon::prelude::*;

use super::{CMatrix, KPointGrid, OccupationConfig, TightBindingModel, Vec3};
use crate::Result;

/// Eigenvalue separation below which the eigenvector gauge inside a
/// degenerate subspace is arbitrary.
pub const DEGENERACY_TOL: f64 = 1e-8;

/// Eigenvalues and eigenvectors of every H(k) on a grid.
#[derive(Debug, Clone)]
pub struct BlochEigensystem {
    pub grid: KPointGrid,
    pub occupation: OccupationConfig,
    /// Cartesian k-points, Å⁻¹, in grid index order.
    pub kpoints: Vec<Vec3>,
    /// ε_kn in eV, ascending in n.
    pub energies: Vec<Vec<f64>>,
    /// Columns are u_kn in the orbital basis.
    pub vectors: Vec<CMatrix>,
    /// Set when two bands at some k are closer than [`DEGENERACY_TOL`].
    pub degenerate_gauge: bool,
}

/// Diagonalizes a Hermitian matrix. Eigenvalues ascend; each eigenvector
/// has its largest-magnitude coefficient made real and positive (lowest
/// orbital index wins ties).
pub fn solve_hermitian(h: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = h.nrows();
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (col, &src) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(src);
        let max = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let pivot = v
            .iter()
            .position(|z| z.norm() >= max * (1.0 - 1e-10))
            .unwrap_or(0);
        let phase = if v[pivot].norm() > 0.0 {
            v[pivot].conj() / v[pivot].norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        let mut target = vectors.column_mut(col);
        for i in 0..n {
            target[i] = v[i] * phase;
        }
        target[pivot] = Complex64::new(target[pivot].norm(), 0.0);
    }
    (values, vectors)
}

impl BlochEigensystem {
    pub fn diagonalize(model: &TightBindingModel, grid: &KPointGrid, occ: &OccupationConfig) -> Result<Self> {
        occ.validate(model.num_orbitals(), model.electron_count(), grid.len())?;
        let kpoints: Vec<Vec3> = (0..grid.len()).map(|i| grid.cartesian(i, model.geometry())).collect();
        let solved: Vec<(Vec<f64>, CMatrix)> = kpoints
            .par_iter()
            .map(|k| solve_hermitian(&model.bloch_hamiltonian(k)))
            .collect();
        let degenerate_gauge = solved
            .iter()
            .any(|(e, _)| e.windows(2).any(|w| (w[1] - w[0]).abs() < DEGENERACY_TOL));
        let (energies, vectors) = solved.into_iter().unzip();
        Ok(BlochEigensystem {
            grid: *grid,
            occupation: occ.clone(),
            kpoints,
            energies,
            vectors,
            degenerate_gauge,
        })
    }

    pub fn num_bands(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.ncols())
    }

    pub fn num_k(&self) -> usize {
        self.kpoints.len()
    }

    /// Multiplies u_kn by a unit phase e^{iθ}.
    pub fn rephase(&mut self, k: usize, band: usize, theta: f64) {
        let phase = Complex64::from_polar(1.0, theta);
        for z in self.vectors[k].column_mut(band).iter_mut() {
            *z *= phase;
        }
    }

    /// Largest orthonormality error and largest relative residual
    /// ‖H u − ε u‖ / ‖H‖ over the grid.
    pub fn invariant_errors(&self, model: &TightBindingModel) -> (f64, f64) {
        let mut ortho: f64 = 0.0;
        let mut residual: f64 = 0.0;
        for (ik, k) in self.kpoints.iter().enumerate() {
            let u = &self.vectors[ik];
            let gram = u.adjoint() * u;
            for i in 0..gram.nrows() {
                for j in 0..gram.ncols() {
                    let target = if i == j { 1.0 } else { 0.0 };
                    ortho = ortho.max((gram[(i, j)] - Complex64::new(target, 0.0)).norm());
                }
            }
            let h = model.bloch_hamiltonian(k);
            let hnorm = h.norm().max(f64::MIN_POSITIVE);
            for n in 0..u.ncols() {
                let col = u.column(n);
                let r = &h * col - col * Complex64::new(self.energies[ik][n], 0.0);
                residual = residual.max(r.norm() / hnorm);
            }
        }
        (ortho, residual)
    }
}
