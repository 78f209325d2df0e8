//! Brute-force reference calculations: open-boundary clusters with an
//! explicit position operator, and finite-difference derivatives. These
//! paths are slow on purpose and share no code with the fast routes they
//! check beyond the model definition and the dense eigensolver.

mod cluster;
mod finite_difference;

pub use cluster::{
    cluster_dipole, cluster_from_model, cluster_transition_dipole, ClusterDipole, ClusterModel, ClusterOccupation,
    DEFAULT_EDGE_FRACTION, DEFAULT_ORBITAL_CAP,
};
pub use finite_difference::{finite_difference, finite_difference_scalar, Derivative, Stencil};
