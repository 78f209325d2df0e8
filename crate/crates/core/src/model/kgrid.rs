use serde::{Deserialize, Serialize};

use super::{LatticeGeometry, Vec3};
use crate::{Error, Result};

/// Γ-centered Monkhorst–Pack style grid, k = Σ (n_i / N_i) b_i.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KPointGrid {
    divisions: [usize; 3],
}

impl KPointGrid {
    pub fn new(divisions: [usize; 3]) -> Result<Self> {
        if divisions.iter().any(|&n| n == 0) {
            return Err(Error::InvalidInput(format!(
                "k-grid divisions must be positive, got {divisions:?}"
            )));
        }
        Ok(KPointGrid { divisions })
    }

    /// N points along the first lattice direction only.
    pub fn line(n: usize) -> Result<Self> {
        Self::new([n, 1, 1])
    }

    pub fn divisions(&self) -> [usize; 3] {
        self.divisions
    }

    pub fn centered_on_gamma(&self) -> bool {
        true
    }

    pub fn len(&self) -> usize {
        self.divisions.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, n: [usize; 3]) -> usize {
        let [_, n2, n3] = self.divisions;
        (n[0] * n2 + n[1]) * n3 + n[2]
    }

    pub fn triple(&self, index: usize) -> [usize; 3] {
        let [_, n2, n3] = self.divisions;
        [index / (n2 * n3), (index / n3) % n2, index % n3]
    }

    pub fn fractional(&self, index: usize) -> [f64; 3] {
        let t = self.triple(index);
        [0, 1, 2].map(|i| t[i] as f64 / self.divisions[i] as f64)
    }

    pub fn cartesian(&self, index: usize, geometry: &LatticeGeometry) -> Vec3 {
        let b = geometry.reciprocal_vectors();
        let f = self.fractional(index);
        b[0] * f[0] + b[1] * f[1] + b[2] * f[2]
    }

    /// Closed strings along `direction`, ordered by the flattened index of
    /// the two perpendicular coordinates. Each string lists N_direction
    /// points; the implied closing step is k_last → k_first + b_direction.
    pub fn strings(&self, direction: usize) -> Vec<Vec<usize>> {
        let perp: Vec<usize> = (0..3).filter(|&d| d != direction).collect();
        let (p, q) = (perp[0], perp[1]);
        let mut out = Vec::with_capacity(self.divisions[p] * self.divisions[q]);
        for i in 0..self.divisions[p] {
            for j in 0..self.divisions[q] {
                let string = (0..self.divisions[direction])
                    .map(|s| {
                        let mut t = [0; 3];
                        t[p] = i;
                        t[q] = j;
                        t[direction] = s;
                        self.index(t)
                    })
                    .collect();
                out.push(string);
            }
        }
        out
    }
}

impl std::fmt::Display for KPointGrid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let [a, b, c] = self.divisions;
        write!(f, "{a}x{b}x{c}")
    }
}

impl std::str::FromStr for KPointGrid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(['x', 'X', ' ']).filter(|p| !p.is_empty()).collect();
        if parts.len() != 3 {
            return Err(Error::InvalidInput(format!("k-grid '{s}' is not of the form N1xN2xN3")));
        }
        let mut d = [0usize; 3];
        for (slot, p) in d.iter_mut().zip(parts) {
            *slot = p
                .parse()
                .map_err(|_| Error::InvalidInput(format!("k-grid '{s}' has a non-integer entry")))?;
        }
        KPointGrid::new(d)
    }
}
