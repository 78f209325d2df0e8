//! Real-space volumetric data: Gaussian-cube I/O, dipoles of densities and
//! density differences, and grid transition dipoles with axial profiles.

mod analysis;
mod cube;

pub use analysis::{
    grid_difference, grid_dipole, grid_transition_dipole, GridTransitionDipole, Normalization, NORMALIZATION_TOL,
};
pub use cube::{format_cube, parse_cube, read_cube, write_cube, CubeRead};

use serde::{Deserialize, Serialize};

use crate::model::Vec3;
use crate::{Error, Result};

/// Isovalue (Å⁻³) used when exporting sign-resolved partitions.
pub const DEFAULT_ISOVALUE: f64 = 0.025;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridKind {
    /// Electron density, Å⁻³, non-negative.
    Density,
    /// Real wavefunction, Å^(−3/2).
    Wavefunction,
    /// Difference of two densities.
    SignedDifference,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LengthUnit {
    Bohr,
    Angstrom,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridAtom {
    pub atomic_number: i32,
    pub charge: f64,
    /// Å.
    pub position: Vec3,
}

/// Scalar field sampled at origin + i a₁ + j a₂ + k a₃, stored with the
/// last index fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct VolumetricGrid {
    pub origin: Vec3,
    pub axes: [Vec3; 3],
    pub counts: [usize; 3],
    pub values: Vec<f64>,
    pub kind: GridKind,
    pub atoms: Vec<GridAtom>,
    pub comments: [String; 2],
    /// Length unit of the file the grid came from; reused on write.
    pub file_unit: LengthUnit,
}

impl VolumetricGrid {
    pub fn new(origin: Vec3, axes: [Vec3; 3], counts: [usize; 3], values: Vec<f64>, kind: GridKind) -> Result<Self> {
        let grid = VolumetricGrid {
            origin,
            axes,
            counts,
            values,
            kind,
            atoms: Vec::new(),
            comments: [String::new(), String::new()],
            file_unit: LengthUnit::Bohr,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Samples `f` at every grid point.
    pub fn from_fn<F>(origin: Vec3, axes: [Vec3; 3], counts: [usize; 3], kind: GridKind, f: F) -> Result<Self>
    where
        F: Fn(&Vec3) -> f64,
    {
        let mut values = Vec::with_capacity(counts.iter().product());
        for i in 0..counts[0] {
            for j in 0..counts[1] {
                for k in 0..counts[2] {
                    values.push(f(&(origin + axes[0] * i as f64 + axes[1] * j as f64 + axes[2] * k as f64)));
                }
            }
        }
        Self::new(origin, axes, counts, values, kind)
    }

    /// Cube of edge `length` Å centred on `center`, `n` points per side.
    pub fn centered_cube<F>(center: Vec3, length: f64, n: usize, kind: GridKind, f: F) -> Result<Self>
    where
        F: Fn(&Vec3) -> f64,
    {
        let h = length / n as f64;
        let origin = center - Vec3::repeat(length / 2.0 - h / 2.0);
        Self::from_fn(origin, [Vec3::x() * h, Vec3::y() * h, Vec3::z() * h], [n, n, n], kind, f)
    }

    pub fn validate(&self) -> Result<()> {
        if self.counts.iter().any(|&c| c < 2) {
            return Err(Error::InvalidInput(format!("grid counts {:?} must be ≥ 2 in every direction", self.counts)));
        }
        if self.values.len() != self.counts.iter().product::<usize>() {
            return Err(Error::InvalidInput(format!(
                "grid holds {} values but counts {:?} need {}",
                self.values.len(),
                self.counts,
                self.counts.iter().product::<usize>()
            )));
        }
        if !(self.voxel_volume() > 0.0) {
            return Err(Error::InvalidInput("voxel volume must be positive".into()));
        }
        if self.kind == GridKind::Density {
            let min = self.values.iter().copied().fold(f64::INFINITY, f64::min);
            if min < -1e-8 {
                return Err(Error::InvalidInput(format!("density grid has negative value {min:e}")));
            }
        }
        Ok(())
    }

    pub fn voxel_volume(&self) -> f64 {
        self.axes[0].dot(&self.axes[1].cross(&self.axes[2]))
    }

    pub fn index(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.counts[1] + j) * self.counts[2] + k
    }

    pub fn point(&self, i: usize, j: usize, k: usize) -> Vec3 {
        self.origin + self.axes[0] * i as f64 + self.axes[1] * j as f64 + self.axes[2] * k as f64
    }

    /// ∫ f dV by the voxel sum.
    pub fn integral(&self) -> f64 {
        analysis::blocked_sum(self, |_, v| v) * self.voxel_volume()
    }

    pub fn same_geometry(&self, other: &VolumetricGrid) -> bool {
        let close = |a: &Vec3, b: &Vec3| (a - b).norm() <= 1e-8;
        self.counts == other.counts
            && close(&self.origin, &other.origin)
            && (0..3).all(|d| close(&self.axes[d], &other.axes[d]))
    }

    /// Values ≥ `isovalue` kept, the rest zeroed.
    pub fn positive_part(&self, isovalue: f64) -> VolumetricGrid {
        self.masked(|v| v >= isovalue)
    }

    /// Values ≤ −`isovalue` kept, the rest zeroed.
    pub fn negative_part(&self, isovalue: f64) -> VolumetricGrid {
        self.masked(|v| v <= -isovalue)
    }

    fn masked(&self, keep: impl Fn(f64) -> bool) -> VolumetricGrid {
        let mut out = self.clone();
        out.kind = GridKind::SignedDifference;
        for v in &mut out.values {
            if !keep(*v) {
                *v = 0.0;
            }
        }
        out
    }
}
