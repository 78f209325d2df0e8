use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::constants::{ea2_to_si, EPS0, EV_IN_JOULE};
use crate::model::{BlochEigensystem, TightBindingModel, Vec3, DEGENERACY_TOL};
use crate::{Error, Result};

use super::dipole::transition_dipole;

pub const DEFAULT_BROADENING: f64 = 0.02;

/// One broadened line: excitation energy and occupation-weighted |μ|².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OpticalTransition {
    pub energy_ev: f64,
    pub weight_ea2: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DielectricSpectrum {
    pub energies: Vec<f64>,
    pub im_eps: Vec<f64>,
    /// Lorentzian HWHM, eV.
    pub broadening: f64,
    /// nm³.
    pub cell_volume: f64,
    pub refractive_index: f64,
    pub transitions: Vec<OpticalTransition>,
}

/// π/(ε₀ V) in units that turn |μ|² (e·Å)² into ∫Im ε dE in eV.
fn prefactor(volume_nm3: f64) -> f64 {
    PI * ea2_to_si(1.0) / (EPS0 * volume_nm3 * 1e-27 * EV_IN_JOULE)
}

fn lorentzian_unit(x: f64, gamma: f64) -> f64 {
    gamma / PI / (x * x + gamma * gamma)
}

fn check_inputs(gamma: f64, volume_nm3: f64, refractive_index: f64) -> Result<()> {
    for (quantity, value) in [("broadening", gamma), ("cell volume", volume_nm3), ("refractive index", refractive_index)] {
        if !(value > 0.0 && value.is_finite()) {
            return Err(Error::Domain {
                quantity: quantity.into(),
                value,
            });
        }
    }
    Ok(())
}

/// Builds Im ε on a uniform grid from explicit lines. Without a grid the
/// range is [0, E_max + 50γ] with step γ/10.
pub fn spectrum_from_transitions(
    transitions: &[OpticalTransition],
    gamma: f64,
    volume_nm3: f64,
    refractive_index: f64,
    grid: Option<&[f64]>,
) -> Result<DielectricSpectrum> {
    check_inputs(gamma, volume_nm3, refractive_index)?;
    let energies: Vec<f64> = match grid {
        Some(g) => {
            if g.len() < 3 || g.windows(2).any(|w| !(w[1] > w[0])) {
                return Err(Error::InvalidInput("energy grid must be strictly ascending with ≥ 3 points".into()));
            }
            if g.windows(2).any(|w| w[1] - w[0] > gamma / 5.0 * (1.0 + 1e-12)) {
                return Err(Error::InvalidInput(format!("energy grid step exceeds γ/5 = {} eV", gamma / 5.0)));
            }
            g.to_vec()
        }
        None => {
            let top = transitions.iter().map(|t| t.energy_ev).fold(0.0, f64::max) + 50.0 * gamma;
            let step = gamma / 10.0;
            let n = (top / step).ceil() as usize + 1;
            (0..n).map(|i| i as f64 * step).collect()
        }
    };
    let scale = prefactor(volume_nm3);
    let im_eps = energies
        .par_iter()
        .map(|&e| {
            transitions
                .iter()
                .map(|t| scale * t.weight_ea2 * lorentzian_unit(e - t.energy_ev, gamma))
                .sum::<f64>()
        })
        .collect();
    Ok(DielectricSpectrum {
        energies,
        im_eps,
        broadening: gamma,
        cell_volume: volume_nm3,
        refractive_index,
        transitions: transitions.to_vec(),
    })
}

/// Im ε(E) = (π/ε₀V) Σ f_g (1 − f_e/2) |μ|² L_γ(E − ΔE), averaged over k.
pub fn imaginary_dielectric(
    es: &BlochEigensystem,
    model: &TightBindingModel,
    gamma: f64,
    volume_nm3: f64,
    refractive_index: f64,
) -> Result<DielectricSpectrum> {
    check_inputs(gamma, volume_nm3, refractive_index)?;
    let nk = es.num_k() as f64;
    let bands = es.num_bands();
    let mut transitions = Vec::new();
    for k in 0..es.num_k() {
        for g in 0..bands {
            let fg = es.occupation.at(k, g) as f64;
            if fg == 0.0 {
                continue;
            }
            for e in 0..bands {
                let fe = es.occupation.at(k, e) as f64;
                let weight = fg * (1.0 - fe / 2.0);
                if weight == 0.0 || es.energies[k][e] - es.energies[k][g] <= DEGENERACY_TOL {
                    continue;
                }
                let mu = transition_dipole(es, model, k, g, e, &Vec3::x())?;
                let w = weight * mu.mu_sq_ea2() / nk;
                if w > 0.0 {
                    transitions.push(OpticalTransition {
                        energy_ev: mu.energy,
                        weight_ea2: w,
                    });
                }
            }
        }
    }
    spectrum_from_transitions(&transitions, gamma, volume_nm3, refractive_index, None)
}

impl DielectricSpectrum {
    /// ∫ Im ε dE over the whole real line, eV.
    pub fn integrated_intensity(&self) -> f64 {
        let scale = prefactor(self.cell_volume);
        self.transitions.iter().map(|t| scale * t.weight_ea2).sum()
    }

    /// Trapezoid ∫ Im ε dE over the sampled grid, eV.
    pub fn integrated_intensity_on_grid(&self) -> f64 {
        self.energies
            .windows(2)
            .zip(self.im_eps.windows(2))
            .map(|(e, y)| 0.5 * (e[1] - e[0]) * (y[0] + y[1]))
            .sum()
    }

    /// |μ|² in (e·Å)² that an integrated intensity `i_ev` corresponds to.
    pub fn mu_sq_for_intensity(&self, i_ev: f64) -> f64 {
        i_ev / prefactor(self.cell_volume)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let io = |e: std::io::Error| Error::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        };
        let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
        writeln!(out, "energy_eV,im_eps").map_err(io)?;
        for (e, y) in self.energies.iter().zip(&self.im_eps) {
            writeln!(out, "{e:.6},{y:.10e}").map_err(io)?;
        }
        out.flush().map_err(io)
    }
}
