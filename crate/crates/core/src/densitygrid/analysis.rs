use std::io::Write;
use std::path::Path;

use nalgebra::Vector3;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::model::Vec3;
use crate::optics::TransitionDipole;
use crate::{Error, Result};

use super::{GridKind, VolumetricGrid};

pub const NORMALIZATION_TOL: f64 = 1e-3;

/// Declared charge content of a density grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Normalization {
    /// ∫ρ dV must match this count to `NORMALIZATION_TOL`.
    Electrons(f64),
    Unnormalized,
}

/// Σ f(point, value) with a fixed slab order, so results do not depend on
/// thread scheduling.
pub(crate) fn blocked_sum<T, F>(grid: &VolumetricGrid, f: F) -> T
where
    T: Send + Copy + std::ops::Add<Output = T> + Default,
    F: Fn(&Vec3, f64) -> T + Sync,
{
    let [n1, n2, n3] = grid.counts;
    let slabs: Vec<T> = (0..n1)
        .into_par_iter()
        .map(|i| {
            let mut acc = T::default();
            for j in 0..n2 {
                for k in 0..n3 {
                    acc = acc + f(&grid.point(i, j, k), grid.values[grid.index(i, j, k)]);
                }
            }
            acc
        })
        .collect();
    slabs.into_iter().fold(T::default(), |a, b| a + b)
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
struct Moment(f64, [f64; 3]);

impl std::ops::Add for Moment {
    type Output = Moment;
    fn add(self, o: Moment) -> Moment {
        Moment(self.0 + o.0, [self.1[0] + o.1[0], self.1[1] + o.1[1], self.1[2] + o.1[2]])
    }
}

/// p = −e ∫ ρ(r) (r − reference) dV, e·Å.
pub fn grid_dipole(grid: &VolumetricGrid, reference: &Vec3, normalization: Normalization) -> Result<Vec3> {
    if grid.kind == GridKind::Wavefunction {
        return Err(Error::InvalidInput("dipoles need a density or density-difference grid".into()));
    }
    let dv = grid.voxel_volume();
    let m = blocked_sum(grid, |r, v| {
        let d = r - reference;
        Moment(v, [v * d[0], v * d[1], v * d[2]])
    });
    if let Normalization::Electrons(expected) = normalization {
        let found = m.0 * dv;
        if (found - expected).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization { expected, found });
        }
    }
    Ok(-Vec3::from(m.1) * dv)
}

/// a − b on identical geometries.
pub fn grid_difference(a: &VolumetricGrid, b: &VolumetricGrid) -> Result<VolumetricGrid> {
    if !a.same_geometry(b) {
        return Err(Error::GeometryMismatch);
    }
    let mut out = a.clone();
    out.kind = GridKind::SignedDifference;
    for (v, w) in out.values.iter_mut().zip(&b.values) {
        *v -= w;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridTransitionDipole {
    pub dipole: TransitionDipole,
    /// (coordinate along the axis in Å, slab contribution in e·Å).
    pub profile: Vec<(f64, f64)>,
}

impl GridTransitionDipole {
    pub fn write_profile_csv(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(out, "z_angstrom,contribution_eA").map_err(io)?;
        for (z, c) in &self.profile {
            writeln!(out, "{z:.8},{c:.10e}").map_err(io)?;
        }
        out.flush().map_err(io)
    }

    pub fn positive_contribution(&self) -> f64 {
        self.profile.iter().map(|p| p.1.max(0.0)).sum()
    }

    pub fn negative_contribution(&self) -> f64 {
        self.profile.iter().map(|p| p.1.min(0.0)).sum()
    }
}

/// μ = e ∫ ψ_e r ψ_g dV for real wavefunctions, with the slab-resolved
/// profile along grid axis `axis`.
pub fn grid_transition_dipole(
    psi_g: &VolumetricGrid,
    psi_e: &VolumetricGrid,
    axis: usize,
) -> Result<GridTransitionDipole> {
    if axis > 2 {
        return Err(Error::InvalidInput(format!("grid axis {axis} out of range")));
    }
    if psi_g.kind != GridKind::Wavefunction || psi_e.kind != GridKind::Wavefunction {
        return Err(Error::InvalidInput("transition dipoles need wavefunction grids".into()));
    }
    if !psi_g.same_geometry(psi_e) {
        return Err(Error::GeometryMismatch);
    }
    let dv = psi_g.voxel_volume();
    for psi in [psi_g, psi_e] {
        let norm = psi.values.iter().map(|v| v * v).sum::<f64>() * dv;
        if (norm - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Normalization {
                expected: 1.0,
                found: norm,
            });
        }
    }
    let unit = psi_g.axes[axis].normalize();
    let counts = psi_g.counts;
    let slab = |l: usize| -> [f64; 3] {
        let mut acc = [0.0; 3];
        let mut idx = [0usize; 3];
        idx[axis] = l;
        let (a, b) = match axis {
            0 => (1, 2),
            1 => (0, 2),
            _ => (0, 1),
        };
        for p in 0..counts[a] {
            for q in 0..counts[b] {
                idx[a] = p;
                idx[b] = q;
                let n = psi_g.index(idx[0], idx[1], idx[2]);
                let w = psi_e.values[n] * psi_g.values[n] * dv;
                let r = psi_g.point(idx[0], idx[1], idx[2]);
                for d in 0..3 {
                    acc[d] += w * r[d];
                }
            }
        }
        acc
    };
    let slabs: Vec<[f64; 3]> = (0..counts[axis]).into_par_iter().map(slab).collect();
    let mut mu = Vec3::zeros();
    let mut profile = Vec::with_capacity(slabs.len());
    for (l, s) in slabs.iter().enumerate() {
        let v = Vec3::from(*s);
        mu += v;
        let mut idx = [0usize; 3];
        idx[axis] = l;
        profile.push((psi_g.point(idx[0], idx[1], idx[2]).dot(&unit), v.dot(&unit)));
    }
    let mu_c: Vector3<Complex64> = mu.map(|x| Complex64::new(x, 0.0));
    let dipole = TransitionDipole::from_vector(mu_c, &unit, 0.0, (0, 1, 0))?;
    Ok(GridTransitionDipole { dipole, profile })
}
