use std::cmp::Ordering;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{CMatrix, LatticeGeometry, Vec3};
use crate::{Error, Result};

const HERMITICITY_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Orbital {
    pub site: usize,
    pub label: String,
    /// Onsite energy, eV.
    pub onsite: f64,
    /// Fractional orbital center. Not reduced: the center enters the Bloch
    /// phases and defines the position operator.
    pub center: [f64; 3],
}

/// Matrix element ⟨φ_from, 0 | H | φ_to, R⟩ in eV.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hopping {
    pub from: usize,
    pub to: usize,
    pub cell: [i32; 3],
    pub amplitude: Complex64,
}

impl Hopping {
    fn key(&self) -> (usize, usize, [i32; 3]) {
        (self.from, self.to, self.cell)
    }

    fn partner_key(&self) -> (usize, usize, [i32; 3]) {
        (self.to, self.from, self.cell.map(|r| -r))
    }
}

fn describe(h: &Hopping) -> String {
    format!(
        "  missing ({} {} {} {} {} t={}{:+}i) as partner of ({} {} {} {} {})",
        h.to,
        h.from,
        -h.cell[0],
        -h.cell[1],
        -h.cell[2],
        h.amplitude.re,
        -h.amplitude.im,
        h.from,
        h.to,
        h.cell[0],
        h.cell[1],
        h.cell[2]
    )
}

fn total_order(a: f64, b: f64) -> Ordering {
    a.total_cmp(&b)
}

/// Periodic tight-binding Hamiltonian with Bloch phases e^{ik·(R + τ_j − τ_i)}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TightBindingModel {
    geometry: LatticeGeometry,
    orbitals: Vec<Orbital>,
    hoppings: Vec<Hopping>,
    electron_count: usize,
}

impl TightBindingModel {
    /// Builds a model from an explicit hopping list. Every hopping must come
    /// with its Hermitian conjugate partner; duplicates are summed.
    pub fn new(
        geometry: LatticeGeometry,
        orbitals: Vec<Orbital>,
        hoppings: Vec<Hopping>,
        electron_count: usize,
    ) -> Result<Self> {
        for (n, orb) in orbitals.iter().enumerate() {
            if orb.site >= geometry.sites().len() {
                return Err(Error::InvalidInput(format!(
                    "orbital {n} refers to site {} but only {} sites exist",
                    orb.site,
                    geometry.sites().len()
                )));
            }
        }
        if orbitals.is_empty() {
            return Err(Error::InvalidInput("model has no orbitals".into()));
        }
        if electron_count > 2 * orbitals.len() {
            return Err(Error::InvalidInput(format!(
                "{electron_count} electrons exceed the capacity of {} orbitals",
                orbitals.len()
            )));
        }
        for h in &hoppings {
            if h.from >= orbitals.len() || h.to >= orbitals.len() {
                return Err(Error::InvalidInput(format!(
                    "hopping ({} {}) refers to a missing orbital",
                    h.from, h.to
                )));
            }
            if h.from == h.to && h.cell == [0, 0, 0] {
                return Err(Error::InvalidInput(format!(
                    "onsite term for orbital {} given as a hopping; use the onsite energy",
                    h.from
                )));
            }
        }
        let hoppings = canonicalize(hoppings);
        let missing: Vec<String> = hoppings
            .iter()
            .filter(|h| {
                let partner = hoppings.binary_search_by(|p| p.key().cmp(&h.partner_key()));
                match partner {
                    Ok(i) => (hoppings[i].amplitude - h.amplitude.conj()).norm() > HERMITICITY_TOL,
                    Err(_) => true,
                }
            })
            .map(describe)
            .collect();
        if !missing.is_empty() {
            return Err(Error::NonHermitian { missing });
        }
        Ok(TightBindingModel {
            geometry,
            orbitals,
            hoppings,
            electron_count,
        })
    }

    pub fn builder(geometry: LatticeGeometry) -> ModelBuilder {
        ModelBuilder {
            geometry,
            orbitals: Vec::new(),
            hoppings: Vec::new(),
            electron_count: 0,
        }
    }

    pub fn geometry(&self) -> &LatticeGeometry {
        &self.geometry
    }

    pub fn orbitals(&self) -> &[Orbital] {
        &self.orbitals
    }

    pub fn hoppings(&self) -> &[Hopping] {
        &self.hoppings
    }

    pub fn electron_count(&self) -> usize {
        self.electron_count
    }

    pub fn num_orbitals(&self) -> usize {
        self.orbitals.len()
    }

    pub fn orbital_center_cartesian(&self, orbital: usize) -> Vec3 {
        self.geometry.to_cartesian(&self.orbitals[orbital].center)
    }

    fn bond_vector(&self, h: &Hopping) -> Vec3 {
        let r = h.cell.map(f64::from);
        self.geometry.to_cartesian(&r) + self.orbital_center_cartesian(h.to)
            - self.orbital_center_cartesian(h.from)
    }

    /// H(k) in eV for Cartesian k in Å⁻¹.
    pub fn bloch_hamiltonian(&self, k: &Vec3) -> CMatrix {
        let n = self.orbitals.len();
        let mut h = CMatrix::zeros(n, n);
        for (i, orb) in self.orbitals.iter().enumerate() {
            h[(i, i)] += Complex64::new(orb.onsite, 0.0);
        }
        for hop in &self.hoppings {
            let phase = Complex64::from_polar(1.0, k.dot(&self.bond_vector(hop)));
            h[(hop.from, hop.to)] += hop.amplitude * phase;
        }
        h
    }

    /// ∂H(k)/∂k_α for α = x, y, z, in eV·Å.
    pub fn velocity_matrices(&self, k: &Vec3) -> [CMatrix; 3] {
        let n = self.orbitals.len();
        let mut v = [CMatrix::zeros(n, n), CMatrix::zeros(n, n), CMatrix::zeros(n, n)];
        for hop in &self.hoppings {
            let d = self.bond_vector(hop);
            let term = hop.amplitude * Complex64::from_polar(1.0, k.dot(&d));
            for (alpha, m) in v.iter_mut().enumerate() {
                if d[alpha] != 0.0 {
                    m[(hop.from, hop.to)] += term * Complex64::new(0.0, d[alpha]);
                }
            }
        }
        v
    }

    /// Moves a site and every orbital attached to it by a Cartesian
    /// displacement. Hopping amplitudes are left unchanged.
    pub fn with_displaced_site(&self, site: usize, displacement: &Vec3) -> Result<Self> {
        if site >= self.geometry.sites().len() {
            return Err(Error::InvalidInput(format!("no site {site}")));
        }
        let shift = self.geometry.to_fractional(displacement);
        let mut out = self.clone();
        {
            let s = &mut out.geometry.sites_mut()[site];
            for i in 0..3 {
                let x = s.position[i] + shift[i];
                s.position[i] = x - x.floor();
                if s.position[i] >= 1.0 {
                    s.position[i] = 0.0;
                }
            }
        }
        for orb in out.orbitals.iter_mut().filter(|o| o.site == site) {
            for i in 0..3 {
                orb.center[i] += shift[i];
            }
        }
        Ok(out)
    }

    /// Moves a single orbital center by a fractional shift.
    pub fn with_shifted_orbital(&self, orbital: usize, shift: [f64; 3]) -> Result<Self> {
        if orbital >= self.orbitals.len() {
            return Err(Error::InvalidInput(format!("no orbital {orbital}")));
        }
        let mut out = self.clone();
        for i in 0..3 {
            out.orbitals[orbital].center[i] += shift[i];
        }
        Ok(out)
    }

    pub fn with_electron_count(&self, electron_count: usize) -> Result<Self> {
        if electron_count > 2 * self.orbitals.len() {
            return Err(Error::InvalidInput(format!(
                "{electron_count} electrons exceed the capacity of {} orbitals",
                self.orbitals.len()
            )));
        }
        let mut out = self.clone();
        out.electron_count = electron_count;
        Ok(out)
    }
}

/// Sorted by (from, to, cell); duplicate entries summed in a fixed order so
/// that permuted input lists give bit-identical models.
fn canonicalize(mut hoppings: Vec<Hopping>) -> Vec<Hopping> {
    hoppings.sort_by(|a, b| {
        a.key()
            .cmp(&b.key())
            .then(total_order(a.amplitude.re, b.amplitude.re))
            .then(total_order(a.amplitude.im, b.amplitude.im))
    });
    let mut merged: Vec<Hopping> = Vec::with_capacity(hoppings.len());
    for h in hoppings {
        match merged.last_mut() {
            Some(last) if last.key() == h.key() => last.amplitude += h.amplitude,
            _ => merged.push(h),
        }
    }
    merged
}

/// Incremental construction; `hop` inserts both a term and its conjugate.
#[derive(Debug, Clone)]
pub struct ModelBuilder {
    geometry: LatticeGeometry,
    orbitals: Vec<Orbital>,
    hoppings: Vec<Hopping>,
    electron_count: usize,
}

impl ModelBuilder {
    pub fn orbital(mut self, site: usize, label: &str, onsite: f64, center: [f64; 3]) -> Self {
        self.orbitals.push(Orbital {
            site,
            label: label.to_string(),
            onsite,
            center,
        });
        self
    }

    pub fn hop(mut self, from: usize, to: usize, cell: [i32; 3], amplitude: Complex64) -> Self {
        self.hoppings.push(Hopping {
            from,
            to,
            cell,
            amplitude,
        });
        self.hoppings.push(Hopping {
            from: to,
            to: from,
            cell: cell.map(|r| -r),
            amplitude: amplitude.conj(),
        });
        self
    }

    pub fn real_hop(self, from: usize, to: usize, cell: [i32; 3], amplitude: f64) -> Self {
        self.hop(from, to, cell, Complex64::new(amplitude, 0.0))
    }

    pub fn electrons(mut self, count: usize) -> Self {
        self.electron_count = count;
        self
    }

    pub fn build(self) -> Result<TightBindingModel> {
        TightBindingModel::new(self.geometry, self.orbitals, self.hoppings, self.electron_count)
    }
}
