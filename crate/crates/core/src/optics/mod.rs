//! Transition dipoles, the imaginary dielectric function, first-peak
//! Lorentzian fits, radiative lifetimes and the emitter criteria engine.

mod criteria;
mod dielectric;
mod dipole;
mod fit;
mod lifetime;

pub use criteria::{dipole_contrast, emitter_criteria, emitter_criteria_from_values, CriteriaThresholds, EmitterCriteriaReport};
pub use dielectric::{
    imaginary_dielectric, spectrum_from_transitions, DielectricSpectrum, OpticalTransition, DEFAULT_BROADENING,
};
pub use dipole::{summed_mu_sq_debye2, transition_dipole, TransitionDipole};
pub use fit::{fit_first_peak, lorentzian, LorentzianFit, POOR_FIT_THRESHOLD};
pub use lifetime::{einstein_coefficient, mu_sq_from_intensity, radiative_lifetime, Lifetime};
