use serde::{Deserialize, Serialize};

use super::Vec3;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Site {
    /// Fractional coordinates, reduced into [0, 1).
    pub position: [f64; 3],
    pub species: String,
    /// Ionic (core) charge in units of e.
    pub ionic_charge: f64,
}

/// Lattice vectors in Å and the basis sites of one cell.
///
/// Models of dimensionality 1 or 2 pad the unused directions with long
/// orthogonal vectors; those directions carry no hoppings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatticeGeometry {
    lattice: [[f64; 3]; 3],
    sites: Vec<Site>,
    dimensionality: u8,
}

fn reduce_fraction(x: f64) -> f64 {
    let r = x - x.floor();
    // x slightly below an integer can round up to exactly 1.0
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

impl LatticeGeometry {
    pub fn new(lattice: [[f64; 3]; 3], sites: Vec<Site>, dimensionality: u8) -> Result<Self> {
        if !(1..=3).contains(&dimensionality) {
            return Err(Error::InvalidInput(format!(
                "dimensionality must be 1, 2 or 3, got {dimensionality}"
            )));
        }
        let geometry = LatticeGeometry {
            lattice,
            sites: Vec::new(),
            dimensionality,
        };
        let volume = geometry.volume();
        if !(volume.is_finite() && volume > 1e-10) {
            return Err(Error::InvalidInput(format!(
                "lattice vectors are linearly dependent or left-handed (volume {volume})"
            )));
        }
        let sites = sites
            .into_iter()
            .map(|mut s| {
                for x in &mut s.position {
                    *x = reduce_fraction(*x);
                }
                s
            })
            .collect();
        Ok(LatticeGeometry { sites, ..geometry })
    }

    /// A one-dimensional chain of period `a` along x, padded with `pad` Å.
    pub fn chain(a: f64, pad: f64, sites: Vec<Site>) -> Result<Self> {
        Self::new([[a, 0.0, 0.0], [0.0, pad, 0.0], [0.0, 0.0, pad]], sites, 1)
    }

    pub fn lattice_vector(&self, i: usize) -> Vec3 {
        Vec3::from(self.lattice[i])
    }

    pub fn lattice_vectors(&self) -> [Vec3; 3] {
        [0, 1, 2].map(|i| self.lattice_vector(i))
    }

    pub fn lattice_array(&self) -> [[f64; 3]; 3] {
        self.lattice
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn dimensionality(&self) -> u8 {
        self.dimensionality
    }

    /// Cell volume Ω in Å³.
    pub fn volume(&self) -> f64 {
        let [a, b, c] = self.lattice_vectors();
        a.dot(&b.cross(&c))
    }

    /// Reciprocal vectors with a_i · b_j = 2π δ_ij, in Å⁻¹.
    pub fn reciprocal_vectors(&self) -> [Vec3; 3] {
        let [a, b, c] = self.lattice_vectors();
        let scale = 2.0 * std::f64::consts::PI / self.volume();
        [b.cross(&c) * scale, c.cross(&a) * scale, a.cross(&b) * scale]
    }

    pub fn to_cartesian(&self, frac: &[f64; 3]) -> Vec3 {
        let [a, b, c] = self.lattice_vectors();
        a * frac[0] + b * frac[1] + c * frac[2]
    }

    pub fn to_fractional(&self, cart: &Vec3) -> [f64; 3] {
        let b = self.reciprocal_vectors();
        let tau = 2.0 * std::f64::consts::PI;
        [b[0].dot(cart) / tau, b[1].dot(cart) / tau, b[2].dot(cart) / tau]
    }

    pub fn site_cartesian(&self, site: usize) -> Vec3 {
        self.to_cartesian(&self.sites[site].position)
    }

    pub fn total_ionic_charge(&self) -> f64 {
        self.sites.iter().map(|s| s.ionic_charge).sum()
    }

    pub(crate) fn sites_mut(&mut self) -> &mut Vec<Site> {
        &mut self.sites
    }
}
