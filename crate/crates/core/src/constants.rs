//! CODATA-2018 physical constants and the unit conversions used at report
//! boundaries. Internal working units are Å, eV and e·Å.

use serde::{Deserialize, Serialize};

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054_571_817e-34;
/// Elementary charge, C.
pub const E_CHARGE: f64 = 1.602_176_634e-19;
/// Electron mass, kg.
pub const M_E: f64 = 9.109_383_701_5e-31;
/// Vacuum permittivity, F/m.
pub const EPS0: f64 = 8.854_187_812_8e-12;
/// Speed of light in vacuum, m/s.
pub const C_LIGHT: f64 = 299_792_458.0;
/// Bohr radius, Å.
pub const BOHR_IN_ANGSTROM: f64 = 0.529_177_210_903;
/// Joules per electronvolt.
pub const EV_IN_JOULE: f64 = E_CHARGE;
/// 1 Debye = 1e-21/c C·m, expressed in e·Å.
pub const DEBYE_IN_EA: f64 = 1e-21 / C_LIGHT / (E_CHARGE * 1e-10);

/// The constant set as a value, for echoing into reports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub e_charge: f64,
    pub m_e: f64,
    pub eps0: f64,
    pub c_light: f64,
    pub debye_in_ea: f64,
    pub ev_in_joule: f64,
}

impl PhysicalConstants {
    pub const CODATA_2018: PhysicalConstants = PhysicalConstants {
        hbar: HBAR,
        e_charge: E_CHARGE,
        m_e: M_E,
        eps0: EPS0,
        c_light: C_LIGHT,
        debye_in_ea: DEBYE_IN_EA,
        ev_in_joule: EV_IN_JOULE,
    };

    /// Accepts a constant set only if it is exactly the CODATA-2018 set.
    pub fn new(candidate: PhysicalConstants) -> Result<Self, crate::Error> {
        if candidate == Self::CODATA_2018 {
            Ok(candidate)
        } else {
            Err(crate::Error::InvalidInput(
                "physical constants must be the CODATA-2018 values".into(),
            ))
        }
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::CODATA_2018
    }
}

pub fn ea_to_debye(x: f64) -> f64 {
    x / DEBYE_IN_EA
}

pub fn debye_to_ea(x: f64) -> f64 {
    x * DEBYE_IN_EA
}

/// (e·Å)² to Debye².
pub fn ea2_to_debye2(x: f64) -> f64 {
    x / (DEBYE_IN_EA * DEBYE_IN_EA)
}

pub fn debye2_to_ea2(x: f64) -> f64 {
    x * DEBYE_IN_EA * DEBYE_IN_EA
}

/// (e·Å)² to C²·m².
pub fn ea2_to_si(x: f64) -> f64 {
    let q = E_CHARGE * 1e-10;
    x * q * q
}

pub fn si_to_ea2(x: f64) -> f64 {
    let q = E_CHARGE * 1e-10;
    x / (q * q)
}
