//! Periodic tight-binding models, k-point grids, occupation configurations
//! and Bloch eigensystems.

mod eigensystem;
pub mod file;
mod geometry;
mod kgrid;
mod occupation;
mod tight_binding;

pub use eigensystem::{solve_hermitian, BlochEigensystem, DEGENERACY_TOL};
pub use geometry::{LatticeGeometry, Site};
pub use kgrid::KPointGrid;
pub use occupation::{OccupationConfig, Occupations};
pub use tight_binding::{Hopping, ModelBuilder, Orbital, TightBindingModel};

use nalgebra::{DMatrix, DVector, Vector3};
use num_complex::Complex64;

pub type Vec3 = Vector3<f64>;
pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;
