use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector3};

use crate::{Error, Result};

use super::DielectricSpectrum;

pub const POOR_FIT_THRESHOLD: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LorentzianFit {
    /// ħω, eV.
    pub center: f64,
    /// I = ∫ Im ε dE of the fitted line, eV.
    pub integrated_intensity: f64,
    pub hwhm: f64,
    /// ‖y − f‖ / ‖y‖ over the fit window.
    pub fit_residual: f64,
    pub poor_fit: bool,
    /// Energy range used, eV.
    pub window: (f64, f64),
}

/// Lorentzian of unit-normalised shape scaled by `area`.
pub fn lorentzian(e: f64, center: f64, area: f64, hwhm: f64) -> f64 {
    area * hwhm / PI / ((e - center).powi(2) + hwhm * hwhm)
}

fn gradient(e: f64, p: &Vector3<f64>) -> Vector3<f64> {
    let (c, a, g) = (p[0], p[1], p[2]);
    let x = e - c;
    let d = x * x + g * g;
    Vector3::new(
        2.0 * a * g * x / (PI * d * d),
        g / (PI * d),
        a * (x * x - g * g) / (PI * d * d),
    )
}

fn cost(xs: &[f64], ys: &[f64], p: &Vector3<f64>) -> f64 {
    xs.iter()
        .zip(ys)
        .map(|(&e, &y)| (y - lorentzian(e, p[0], p[1], p[2])).powi(2))
        .sum()
}

fn levenberg_marquardt(xs: &[f64], ys: &[f64], start: Vector3<f64>) -> Vector3<f64> {
    let mut p = start;
    let mut current = cost(xs, ys, &p);
    let mut damping = 1e-3;
    for _ in 0..500 {
        let mut jtj = Matrix3::zeros();
        let mut jtr = Vector3::zeros();
        for (&e, &y) in xs.iter().zip(ys) {
            let j = gradient(e, &p);
            jtj += j * j.transpose();
            jtr += j * (y - lorentzian(e, p[0], p[1], p[2]));
        }
        let mut improved = false;
        while damping < 1e12 {
            let mut a = jtj;
            for i in 0..3 {
                a[(i, i)] += damping * jtj[(i, i)].max(1e-300);
            }
            let Some(step) = a.lu().solve(&jtr) else {
                damping *= 10.0;
                continue;
            };
            let trial = p + step;
            if trial[2] <= 0.0 || trial[1] <= 0.0 {
                damping *= 10.0;
                continue;
            }
            let c = cost(xs, ys, &trial);
            if c < current {
                let converged = step.abs().component_div(&trial.abs().add_scalar(1e-300)).max() < 1e-14;
                p = trial;
                let gain = current - c;
                current = c;
                damping = (damping / 10.0).max(1e-15);
                improved = true;
                if converged || gain <= 1e-30 * current.max(1e-300) {
                    return p;
                }
                break;
            }
            damping *= 10.0;
        }
        if !improved {
            break;
        }
    }
    p
}

/// Fits a Lorentzian to the first peak, using the window from the low-energy
/// edge to the first local minimum after it.
pub fn fit_first_peak(spectrum: &DielectricSpectrum) -> Result<LorentzianFit> {
    let (xs, ys) = (&spectrum.energies, &spectrum.im_eps);
    let n = ys.len();
    let peak = (1..n.saturating_sub(1))
        .find(|&i| ys[i] > 1e-12 && ys[i] >= ys[i - 1] && ys[i] > ys[i + 1])
        .ok_or(Error::NoPeak)?;
    let end = (peak + 1..n - 1).find(|&j| ys[j] <= ys[j + 1]).unwrap_or(n - 1);
    let (wx, wy) = (&xs[..=end], &ys[..=end]);

    let height = ys[peak];
    let left = (0..peak).rev().find(|&i| ys[i] < height / 2.0).map(|i| xs[i]);
    let right = (peak..=end).find(|&i| ys[i] < height / 2.0).map(|i| xs[i]);
    let width = match (left, right) {
        (Some(l), Some(r)) => 0.5 * (r - l),
        (Some(l), None) => xs[peak] - l,
        (None, Some(r)) => r - xs[peak],
        (None, None) => spectrum.broadening,
    }
    .max(xs[1] - xs[0]);
    let start = Vector3::new(xs[peak], PI * width * height, width);
    let p = levenberg_marquardt(wx, wy, start);

    let norm: f64 = wy.iter().map(|y| y * y).sum::<f64>().sqrt();
    let fit_residual = cost(wx, wy, &p).sqrt() / norm;
    Ok(LorentzianFit {
        center: p[0],
        integrated_intensity: p[1],
        hwhm: p[2],
        fit_residual,
        poor_fit: fit_residual >= POOR_FIT_THRESHOLD,
        window: (wx[0], wx[end]),
    })
}
