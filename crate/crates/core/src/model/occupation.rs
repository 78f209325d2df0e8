use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Band occupations with spin folded in: each entry is 0, 1 or 2.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Occupations {
    Uniform(Vec<u8>),
    PerK(Vec<Vec<u8>>),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OccupationConfig {
    pub label: String,
    pub occupations: Occupations,
}

impl OccupationConfig {
    pub fn uniform(label: &str, bands: Vec<u8>) -> Self {
        OccupationConfig {
            label: label.to_string(),
            occupations: Occupations::Uniform(bands),
        }
    }

    /// Aufbau filling: two electrons per band from the bottom up.
    pub fn ground(label: &str, num_bands: usize, electrons: usize) -> Result<Self> {
        if electrons > 2 * num_bands {
            return Err(Error::InvalidInput(format!(
                "{electrons} electrons do not fit in {num_bands} bands"
            )));
        }
        let mut left = electrons;
        let bands = (0..num_bands)
            .map(|_| {
                let f = left.min(2);
                left -= f;
                f as u8
            })
            .collect();
        Ok(Self::uniform(label, bands))
    }

    /// Constrained occupation: moves `amount` electrons from one band to
    /// another at every k.
    pub fn excite(&self, from: usize, to: usize, amount: u8, label: &str) -> Result<Self> {
        let mut bands = match &self.occupations {
            Occupations::Uniform(b) => b.clone(),
            Occupations::PerK(_) => {
                return Err(Error::InvalidInput(
                    "excitations are defined on uniform band occupations".into(),
                ))
            }
        };
        if from >= bands.len() || to >= bands.len() || from == to {
            return Err(Error::InvalidInput(format!("invalid excitation {from} -> {to}")));
        }
        if bands[from] < amount || bands[to] + amount > 2 {
            return Err(Error::InvalidInput(format!(
                "cannot move {amount} electron(s) from band {from} (f={}) to band {to} (f={})",
                bands[from], bands[to]
            )));
        }
        bands[from] -= amount;
        bands[to] += amount;
        Ok(Self::uniform(label, bands))
    }

    /// Occupation of `band` at k index `k`.
    pub fn at(&self, k: usize, band: usize) -> u8 {
        match &self.occupations {
            Occupations::Uniform(b) => b[band],
            Occupations::PerK(rows) => rows[k][band],
        }
    }

    pub fn num_bands(&self) -> usize {
        match &self.occupations {
            Occupations::Uniform(b) => b.len(),
            Occupations::PerK(rows) => rows.first().map_or(0, Vec::len),
        }
    }

    /// Checks the occupation against a model with `num_bands` bands and
    /// `electrons` electrons on a grid of `num_k` points.
    pub fn validate(&self, num_bands: usize, electrons: usize, num_k: usize) -> Result<()> {
        let check_row = |row: &[u8]| -> Result<usize> {
            if row.len() != num_bands {
                return Err(Error::InvalidInput(format!(
                    "occupation '{}' lists {} bands, model has {num_bands}",
                    self.label,
                    row.len()
                )));
            }
            if let Some(f) = row.iter().find(|&&f| f > 2) {
                return Err(Error::InvalidInput(format!("occupation {f} exceeds 2")));
            }
            Ok(row.iter().map(|&f| f as usize).sum())
        };
        match &self.occupations {
            Occupations::Uniform(b) => {
                let total = check_row(b)?;
                if total != electrons {
                    return Err(Error::InvalidInput(format!(
                        "occupation '{}' holds {total} electrons, model has {electrons}",
                        self.label
                    )));
                }
            }
            Occupations::PerK(rows) => {
                if rows.len() != num_k {
                    return Err(Error::InvalidInput(format!(
                        "per-k occupation lists {} k-points, grid has {num_k}",
                        rows.len()
                    )));
                }
                let mut total = 0;
                for row in rows {
                    total += check_row(row)?;
                }
                if total != electrons * num_k {
                    return Err(Error::InvalidInput(format!(
                        "occupation '{}' averages {} electrons, model has {electrons}",
                        self.label,
                        total as f64 / num_k as f64
                    )));
                }
            }
        }
        Ok(())
    }

    /// Per-band occupations; fails when a band is not uniformly occupied
    /// across the grid.
    pub fn band_occupations(&self) -> Result<Vec<u8>> {
        match &self.occupations {
            Occupations::Uniform(b) => Ok(b.clone()),
            Occupations::PerK(rows) => {
                let first = rows.first().cloned().unwrap_or_default();
                for row in rows {
                    if let Some(band) = (0..first.len()).find(|&n| row[n] != first[n]) {
                        return Err(Error::MetallicOccupation { band });
                    }
                }
                Ok(first)
            }
        }
    }

    /// Occupied band sets per spin channel: channel s holds bands with f ≥ s.
    pub fn spin_manifolds(&self) -> Result<Vec<Vec<usize>>> {
        let f = self.band_occupations()?;
        Ok((1..=2u8)
            .map(|s| (0..f.len()).filter(|&n| f[n] >= s).collect::<Vec<_>>())
            .filter(|m| !m.is_empty())
            .collect())
    }
}
