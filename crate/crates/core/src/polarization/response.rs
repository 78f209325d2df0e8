use num_complex::Complex64;
use rayon::prelude::*;

use super::{manifold_gap, GAP_TOL};
use crate::model::{BlochEigensystem, CMatrix, KPointGrid, OccupationConfig, TightBindingModel, Vec3, DEGENERACY_TOL};
use crate::{Error, Result};

/// Step for the central difference of H along the adiabatic parameter.
pub const LAMBDA_STEP: f64 = 1e-6;
/// Nodes of the composite Simpson rule over λ ∈ [0, 1].
pub const SIMPSON_NODES: usize = 21;

fn check_separation(es: &BlochEigensystem, manifold: &[usize]) -> Result<()> {
    let (gap, k_index) = manifold_gap(es, manifold);
    if gap < DEGENERACY_TOL {
        let e = &es.energies[k_index];
        let mut pair = (0, 0);
        for &n in manifold {
            for m in (0..e.len()).filter(|m| !manifold.contains(m)) {
                if (e[n] - e[m]).abs() == gap {
                    pair = (n, m);
                }
            }
        }
        return Err(Error::Degeneracy {
            k_index,
            occupied: pair.0,
            unoccupied: pair.1,
        });
    }
    if gap < GAP_TOL {
        return Err(Error::GapClosure { k_index, gap });
    }
    Ok(())
}

/// Σ_{n∈occ} Σ_{m∉occ} ⟨n|∂_α H|m⟩⟨m|∂_λ H|n⟩ / (ε_n − ε_m)² at one k,
/// for α = x, y, z.
fn sum_over_states(
    energies: &[f64],
    u: &CMatrix,
    velocity: &[CMatrix; 3],
    dh_dlambda: &CMatrix,
    manifold: &[usize],
) -> [Complex64; 3] {
    let bands = energies.len();
    let mut out = [Complex64::new(0.0, 0.0); 3];
    // rotate perturbations into the band basis once
    let v_band: Vec<CMatrix> = velocity.iter().map(|v| u.adjoint() * v * u).collect();
    let l_band = u.adjoint() * dh_dlambda * u;
    for &n in manifold {
        for m in (0..bands).filter(|m| !manifold.contains(m)) {
            let denom = (energies[n] - energies[m]).powi(2);
            for alpha in 0..3 {
                out[alpha] += v_band[alpha][(n, m)] * l_band[(m, n)] / denom;
            }
        }
    }
    out
}

/// dp/dλ from eigensystems of the model at λ and the Hamiltonian
/// derivative supplied per k. Exposed so the Sternheimer route can reuse
/// the same inputs.
pub fn response_from_eigensystems(
    model: &TightBindingModel,
    es: &BlochEigensystem,
    dh_dlambda: &[CMatrix],
) -> Result<Vec3> {
    let manifolds = es.occupation.spin_manifolds()?;
    for manifold in &manifolds {
        check_separation(es, manifold)?;
    }
    let per_k: Vec<Vec3> = (0..es.num_k())
        .into_par_iter()
        .map(|ik| {
            let velocity = model.velocity_matrices(&es.kpoints[ik]);
            let mut acc = Vec3::zeros();
            for manifold in &manifolds {
                let s = sum_over_states(&es.energies[ik], &es.vectors[ik], &velocity, &dh_dlambda[ik], manifold);
                for alpha in 0..3 {
                    acc[alpha] += -2.0 * s[alpha].im;
                }
            }
            acc
        })
        .collect();
    let sum = per_k.iter().fold(Vec3::zeros(), |acc, v| acc + v);
    Ok(sum / es.num_k() as f64)
}

/// Central difference (H_{λ+h}(k) − H_{λ−h}(k)) / 2h on every grid point.
pub(crate) fn hamiltonian_derivative<F>(path: &F, lambda: f64, es: &BlochEigensystem) -> Result<Vec<CMatrix>>
where
    F: Fn(f64) -> Result<TightBindingModel> + Sync,
{
    let plus = path(lambda + LAMBDA_STEP)?;
    let minus = path(lambda - LAMBDA_STEP)?;
    Ok(es
        .kpoints
        .par_iter()
        .map(|k| (plus.bloch_hamiltonian(k) - minus.bloch_hamiltonian(k)) / Complex64::new(2.0 * LAMBDA_STEP, 0.0))
        .collect())
}

/// Adiabatic response dp/dλ (e·Å per unit λ per cell) by the sum over
/// unoccupied states, with ∂H/∂λ by central differences along `path`.
pub fn polarization_response<F>(path: &F, lambda: f64, grid: &KPointGrid, occ: &OccupationConfig) -> Result<Vec3>
where
    F: Fn(f64) -> Result<TightBindingModel> + Sync,
{
    let model = path(lambda)?;
    let es = BlochEigensystem::diagonalize(&model, grid, occ)?;
    let dh = hamiltonian_derivative(path, lambda, &es)?;
    response_from_eigensystems(&model, &es, &dh)
}

/// Composite Simpson rule over [0, 1] for equally spaced samples; the
/// sample count must be odd.
pub fn simpson(samples: &[Vec3]) -> Result<Vec3> {
    let n = samples.len();
    if n < 3 || n % 2 == 0 {
        return Err(Error::InvalidInput(format!("Simpson rule needs an odd sample count ≥ 3, got {n}")));
    }
    let h = 1.0 / (n - 1) as f64;
    let mut acc = samples[0] + samples[n - 1];
    for (i, s) in samples.iter().enumerate().take(n - 1).skip(1) {
        acc += s * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    Ok(acc * (h / 3.0))
}

/// ∫₀¹ dp/dλ dλ with the composite Simpson rule on [`SIMPSON_NODES`] nodes.
pub fn integrate_response<F>(path: &F, grid: &KPointGrid, occ: &OccupationConfig) -> Result<Vec3>
where
    F: Fn(f64) -> Result<TightBindingModel> + Sync,
{
    let samples = (0..SIMPSON_NODES)
        .map(|i| polarization_response(path, i as f64 / (SIMPSON_NODES - 1) as f64, grid, occ))
        .collect::<Result<Vec<_>>>()?;
    simpson(&samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn constant_path_has_no_response() {
        let path = |_l: f64| fixtures::rice_mele(1.0, 0.5, 0.5, 1.0, 1);
        let occ = OccupationConfig::ground("gr", 2, 1).unwrap();
        let r = polarization_response(&path, 0.5, &KPointGrid::line(16).unwrap(), &occ).unwrap();
        assert_eq!(r, Vec3::zeros());
    }

    #[test]
    fn simpson_is_exact_for_cubics() {
        let samples: Vec<Vec3> = (0..5)
            .map(|i| {
                let x = i as f64 / 4.0;
                Vec3::new(x * x * x, 1.0, 2.0 * x)
            })
            .collect();
        let s = simpson(&samples).unwrap();
        assert!((s[0] - 0.25).abs() < 1e-15);
        assert!((s[1] - 1.0).abs() < 1e-15);
        assert!((s[2] - 1.0).abs() < 1e-15);
        assert!(simpson(&samples[..4]).is_err());
    }

    #[test]
    fn degenerate_pair_rejected() {
        // SSH at t1 = t2 is gapless at the zone boundary
        let path = |l: f64| fixtures::ssh(1.0, 0.5 + 0.5 * l, 2);
        let occ = OccupationConfig::ground("gr", 2, 2).unwrap();
        let r = polarization_response(&path, 1.0, &KPointGrid::line(8).unwrap(), &occ);
        assert!(matches!(r, Err(Error::Degeneracy { .. })), "{r:?}");
    }
}
