//! First-order wavefunction responses from the projected Sternheimer
//! equation Q(H − ε_n)Q x = −Q (∂H) u_n, solved with MINRES.
//!
//! Q projects onto the unoccupied bands, which fixes the gauge of x
//! (parallel transport) and removes the ∂ε/∂k term: Q u_n = 0.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::model::{BlochEigensystem, CMatrix, CVector, TightBindingModel, Vec3, DEGENERACY_TOL};
use crate::polarization::LAMBDA_STEP;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Relative residual target ‖r‖ / ‖(∂H) u‖.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { tol: 1e-10, max_iter: 500 }
    }
}

/// ∂u_kn/∂k_α for α = x, y, z, in Å, orthogonal to the occupied manifold.
#[derive(Debug, Clone)]
pub struct SternheimerSolution {
    pub band: usize,
    pub k_index: usize,
    pub du_dk: [CVector; 3],
    /// Hellmann–Feynman band velocity ⟨u|∂H/∂k|u⟩, eV·Å.
    pub band_velocity: Vec3,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Q-projected response of u_kn to a generic perturbation ∂H/∂λ.
#[derive(Debug, Clone)]
pub struct ParametricSolution {
    pub band: usize,
    pub k_index: usize,
    pub du_dlambda: CVector,
    pub residual_norm: f64,
    pub iterations: usize,
}

/// Σ_{m ∉ occupied} |u_m⟩⟨u_m|.
pub fn unoccupied_projector(u: &CMatrix, occupied: &[usize]) -> CMatrix {
    let n = u.nrows();
    let mut q = CMatrix::zeros(n, n);
    for m in (0..u.ncols()).filter(|m| !occupied.contains(m)) {
        let col = u.column(m);
        q += &col * col.adjoint();
    }
    q
}

fn inner(a: &CVector, b: &CVector) -> Complex64 {
    a.dotc(b)
}

/// MINRES for a Hermitian operator. Returns the solution, the relative
/// residual of the returned iterate and the iteration count.
pub fn minres<F>(apply: F, rhs: &CVector, opts: &SolverOptions) -> Result<(CVector, f64, usize)>
where
    F: Fn(&CVector) -> CVector,
{
    let n = rhs.len();
    let zero = CVector::zeros(n);
    let beta1 = rhs.norm();
    if beta1 == 0.0 {
        return Ok((zero, 0.0, 0));
    }
    let relative = |x: &CVector| (apply(x) - rhs).norm() / beta1;

    let mut x = zero.clone();
    let mut r1 = rhs.clone();
    let mut r2 = rhs.clone();
    let mut y = rhs.clone();
    let (mut w, mut w2) = (zero.clone(), zero.clone());
    let mut oldb = 0.0;
    let mut beta = beta1;
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0, 0.0);
    let mut best = (f64::INFINITY, zero.clone());

    for itn in 1..=opts.max_iter {
        let v = &y / Complex64::new(beta, 0.0);
        y = apply(&v);
        if itn >= 2 {
            y -= &r1 * Complex64::new(beta / oldb, 0.0);
        }
        let alfa = inner(&v, &y).re;
        y -= &r2 * Complex64::new(alfa / beta, 0.0);
        r1 = std::mem::replace(&mut r2, y.clone());
        oldb = beta;
        beta = y.norm();

        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;

        let w1 = std::mem::replace(&mut w2, w.clone());
        w = (&v - &w1 * Complex64::new(oldeps, 0.0) - &w2 * Complex64::new(delta, 0.0)) / Complex64::new(gamma, 0.0);
        x += &w * Complex64::new(phi, 0.0);

        let res = relative(&x);
        if res < best.0 {
            best = (res, x.clone());
        }
        if res < opts.tol {
            return Ok((x, res, itn));
        }
        // Krylov space exhausted
        if beta < f64::EPSILON * beta1 {
            break;
        }
    }
    let res = best.0;
    if res < opts.tol {
        return Ok((best.1, res, opts.max_iter));
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iter,
        best_residual: res,
    })
}

fn check_separation(energies: &[f64], band: usize, occupied: &[usize]) -> Result<()> {
    let separation = (0..energies.len())
        .filter(|m| !occupied.contains(m))
        .map(|m| (energies[m] - energies[band]).abs())
        .fold(f64::INFINITY, f64::min);
    if separation <= DEGENERACY_TOL {
        return Err(Error::SingularSystem { band, separation });
    }
    Ok(())
}

/// Solves Q(H − ε_n)Q x = −Q P u_n for one perturbation matrix P.
fn solve_projected(
    h: &CMatrix,
    energy: f64,
    q: &CMatrix,
    u_n: &CVector,
    perturbation: &CMatrix,
    opts: &SolverOptions,
) -> Result<(CVector, f64, usize)> {
    let shifted = h - CMatrix::identity(h.nrows(), h.ncols()) * Complex64::new(energy, 0.0);
    let source = perturbation * u_n;
    let rhs = -(q * &source);
    let scale = source.norm();
    if scale == 0.0 {
        return Ok((CVector::zeros(u_n.len()), 0.0, 0));
    }
    // relative to ‖P u‖ rather than ‖Q P u‖
    let rhs_norm = rhs.norm();
    let local = SolverOptions {
        tol: opts.tol * scale / rhs_norm.max(f64::MIN_POSITIVE),
        ..*opts
    };
    if rhs_norm == 0.0 {
        return Ok((CVector::zeros(u_n.len()), 0.0, 0));
    }
    let (x, _, iters) = minres(|v| q * (&shifted * (q * v)), &rhs, &local)?;
    let x = q * x;
    let residual = (&shifted * &x + q * &source).norm() / scale;
    Ok((x, residual, iters))
}

/// ∂u_kn/∂k for band `band` at grid point `k_index`; `occupied` is the
/// manifold the band belongs to.
pub fn solve_sternheimer(
    es: &BlochEigensystem,
    model: &TightBindingModel,
    k_index: usize,
    band: usize,
    occupied: &[usize],
    opts: &SolverOptions,
) -> Result<SternheimerSolution> {
    let energies = &es.energies[k_index];
    check_separation(energies, band, occupied)?;
    let k = es.kpoints[k_index];
    let h = model.bloch_hamiltonian(&k);
    let velocity = model.velocity_matrices(&k);
    let u = &es.vectors[k_index];
    let q = unoccupied_projector(u, occupied);
    let u_n: CVector = u.column(band).into_owned();
    let mut du = [CVector::zeros(u_n.len()), CVector::zeros(u_n.len()), CVector::zeros(u_n.len())];
    let mut band_velocity = Vec3::zeros();
    let mut residual_norm: f64 = 0.0;
    let mut iterations = 0;
    for alpha in 0..3 {
        band_velocity[alpha] = u_n.dotc(&(&velocity[alpha] * &u_n)).re;
        let (x, res, it) = solve_projected(&h, energies[band], &q, &u_n, &velocity[alpha], opts)?;
        du[alpha] = x;
        residual_norm = residual_norm.max(res);
        iterations = iterations.max(it);
    }
    Ok(SternheimerSolution {
        band,
        k_index,
        du_dk: du,
        band_velocity,
        residual_norm,
        iterations,
    })
}

/// Response of u_kn to ∂H/∂λ given as a matrix at this k.
pub fn solve_parametric(
    es: &BlochEigensystem,
    model: &TightBindingModel,
    k_index: usize,
    band: usize,
    occupied: &[usize],
    dh_dlambda: &CMatrix,
    opts: &SolverOptions,
) -> Result<ParametricSolution> {
    let energies = &es.energies[k_index];
    check_separation(energies, band, occupied)?;
    let h = model.bloch_hamiltonian(&es.kpoints[k_index]);
    let u = &es.vectors[k_index];
    let q = unoccupied_projector(u, occupied);
    let u_n: CVector = u.column(band).into_owned();
    let (x, residual_norm, iterations) = solve_projected(&h, energies[band], &q, &u_n, dh_dlambda, opts)?;
    Ok(ParametricSolution {
        band,
        k_index,
        du_dlambda: x,
        residual_norm,
        iterations,
    })
}

/// Contribution of one k-point and one occupied manifold to dp/dλ:
/// −2 Σ_n Im⟨∂_k u_n | ∂_λ u_n⟩ with both derivatives Q-projected. This is
/// the interband part of the Berry-phase integrand; the intraband
/// ⟨u|∂_k u⟩ term drops out under the projection.
pub fn berry_integrand_from_sternheimer(
    occupied: &[usize],
    k_solutions: &[SternheimerSolution],
    lambda_solutions: &[ParametricSolution],
) -> Result<Vec3> {
    let mut out = Vec3::zeros();
    for &n in occupied {
        let xk = k_solutions
            .iter()
            .find(|s| s.band == n)
            .ok_or(Error::MissingBand { band: n })?;
        let yl = lambda_solutions
            .iter()
            .find(|s| s.band == n)
            .ok_or(Error::MissingBand { band: n })?;
        for alpha in 0..3 {
            out[alpha] += -2.0 * inner(&xk.du_dk[alpha], &yl.du_dlambda).im;
        }
    }
    Ok(out)
}

/// dp/dλ assembled from Sternheimer solutions on every grid point.
pub fn sternheimer_response(
    model: &TightBindingModel,
    es: &BlochEigensystem,
    dh_dlambda: &[CMatrix],
    opts: &SolverOptions,
) -> Result<Vec3> {
    let manifolds = es.occupation.spin_manifolds()?;
    let per_k = (0..es.num_k())
        .into_par_iter()
        .map(|ik| {
            let mut acc = Vec3::zeros();
            for manifold in &manifolds {
                let ks = manifold
                    .iter()
                    .map(|&n| solve_sternheimer(es, model, ik, n, manifold, opts))
                    .collect::<Result<Vec<_>>>()?;
                let ls = manifold
                    .iter()
                    .map(|&n| solve_parametric(es, model, ik, n, manifold, &dh_dlambda[ik], opts))
                    .collect::<Result<Vec<_>>>()?;
                acc += berry_integrand_from_sternheimer(manifold, &ks, &ls)?;
            }
            Ok(acc)
        })
        .collect::<Result<Vec<Vec3>>>()?;
    let sum = per_k.iter().fold(Vec3::zeros(), |acc, v| acc + v);
    Ok(sum / es.num_k() as f64)
}

/// dp/dλ along a model path, with ∂H/∂λ by central differences.
pub fn sternheimer_response_along_path<F>(
    path: &F,
    lambda: f64,
    grid: &crate::model::KPointGrid,
    occ: &crate::model::OccupationConfig,
    opts: &SolverOptions,
) -> Result<Vec3>
where
    F: Fn(f64) -> Result<TightBindingModel> + Sync,
{
    let model = path(lambda)?;
    let es = BlochEigensystem::diagonalize(&model, grid, occ)?;
    let plus = path(lambda + LAMBDA_STEP)?;
    let minus = path(lambda - LAMBDA_STEP)?;
    let dh: Vec<CMatrix> = es
        .kpoints
        .iter()
        .map(|k| (plus.bloch_hamiltonian(k) - minus.bloch_hamiltonian(k)) / Complex64::new(2.0 * LAMBDA_STEP, 0.0))
        .collect();
    sternheimer_response(&model, &es, &dh, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::model::{KPointGrid, OccupationConfig};

    fn rice_mele_es(n: usize) -> (TightBindingModel, BlochEigensystem) {
        let model = fixtures::rice_mele(1.0, 0.5, 0.5, 1.0, 1).unwrap();
        let occ = OccupationConfig::ground("gr", 2, 1).unwrap();
        let es = BlochEigensystem::diagonalize(&model, &KPointGrid::line(n).unwrap(), &occ).unwrap();
        (model, es)
    }

    #[test]
    fn single_orbital_has_no_response() {
        let model = fixtures::flat_band(0.3, 1.5, 1).unwrap();
        let occ = OccupationConfig::ground("gr", 1, 1).unwrap();
        let es = BlochEigensystem::diagonalize(&model, &KPointGrid::line(4).unwrap(), &occ).unwrap();
        let s = solve_sternheimer(&es, &model, 1, 0, &[0], &SolverOptions::default()).unwrap();
        assert!(s.du_dk.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn solution_is_orthogonal_to_occupied() {
        let (model, es) = rice_mele_es(8);
        for ik in 0..8 {
            let s = solve_sternheimer(&es, &model, ik, 0, &[0], &SolverOptions::default()).unwrap();
            let u0 = es.vectors[ik].column(0).into_owned();
            for a in 0..3 {
                assert!(u0.dotc(&s.du_dk[a]).norm() < 1e-8);
            }
            assert!(s.residual_norm < 1e-10);
        }
    }

    #[test]
    fn projector_is_idempotent() {
        let (_, es) = rice_mele_es(8);
        let q = unoccupied_projector(&es.vectors[3], &[0]);
        assert!((&q * &q - &q).norm() < 1e-12);
    }

    #[test]
    fn degenerate_band_is_singular() {
        let model = fixtures::ssh(1.0, 1.0, 2).unwrap();
        let occ = OccupationConfig::ground("gr", 2, 2).unwrap();
        let es = BlochEigensystem::diagonalize(&model, &KPointGrid::line(4).unwrap(), &occ).unwrap();
        // k index 2 is the zone boundary where the two bands touch
        let r = solve_sternheimer(&es, &model, 2, 0, &[0], &SolverOptions::default());
        assert!(matches!(r, Err(Error::SingularSystem { band: 0, .. })), "{r:?}");
    }

    #[test]
    fn non_convergence_is_reported() {
        let (model, es) = rice_mele_es(8);
        let opts = SolverOptions { tol: 1e-300, max_iter: 3 };
        let r = solve_sternheimer(&es, &model, 1, 0, &[0], &opts);
        assert!(matches!(r, Err(Error::NonConvergence { .. })), "{r:?}");
    }

    #[test]
    fn missing_band() {
        let r = berry_integrand_from_sternheimer(&[0], &[], &[]);
        assert_eq!(r, Err(Error::MissingBand { band: 0 }));
    }

    #[test]
    fn minres_solves_indefinite_system() {
        let a = CMatrix::from_fn(4, 4, |i, j| {
            if i == j {
                Complex64::new([-2.0, -0.5, 1.0, 3.0][i], 0.0)
            } else {
                Complex64::new(0.1, 0.05 * (i as f64 - j as f64))
            }
        });
        let a = (&a + a.adjoint()) * Complex64::new(0.5, 0.0);
        let b = CVector::from_fn(4, |i, _| Complex64::new(i as f64 + 1.0, -0.5));
        let (x, res, _) = minres(|v| &a * v, &b, &SolverOptions::default()).unwrap();
        assert!(res < 1e-10);
        assert!((&a * x - b).norm() < 1e-9);
    }
}
