//! Canonical model systems: Rice–Mele and SSH chains, a flat band, a
//! two-site molecule.

use crate::model::{LatticeGeometry, Site, TightBindingModel};
use crate::Result;

/// Transverse padding for 1D chains, Å.
pub const CHAIN_PADDING: f64 = 10.0;

/// Chain geometry with sites given as (fractional x, ionic charge).
pub fn chain_geometry(a: f64, sites: &[(f64, f64)]) -> Result<LatticeGeometry> {
    let sites = sites
        .iter()
        .enumerate()
        .map(|(i, &(x, z))| Site {
            position: [x, 0.0, 0.0],
            species: ((b'A' + i as u8) as char).to_string(),
            ionic_charge: z,
        })
        .collect();
    LatticeGeometry::chain(a, CHAIN_PADDING, sites)
}

/// Rice–Mele chain: A at x=0 with onsite +Δ, B at x=a/2 with onsite −Δ,
/// intra-cell hopping t1 (A→B) and inter-cell hopping t2 (B→A of the next
/// cell). Ionic charges neutralize `electrons` equally over both sites.
pub fn rice_mele(t1: f64, t2: f64, delta: f64, a: f64, electrons: usize) -> Result<TightBindingModel> {
    let z = electrons as f64 / 2.0;
    let geometry = chain_geometry(a, &[(0.0, z), (0.5, z)])?;
    TightBindingModel::builder(geometry)
        .orbital(0, "s", delta, [0.0, 0.0, 0.0])
        .orbital(1, "s", -delta, [0.5, 0.0, 0.0])
        .real_hop(0, 1, [0, 0, 0], t1)
        .real_hop(1, 0, [1, 0, 0], t2)
        .electrons(electrons)
        .build()
}

/// SSH chain with a = 1 Å: Rice–Mele at zero staggering.
pub fn ssh(t1: f64, t2: f64, electrons: usize) -> Result<TightBindingModel> {
    rice_mele(t1, t2, 0.0, 1.0, electrons)
}

/// One orbital per cell at fractional `center`, no hopping, a = 1 Å. The
/// site carries an ionic charge equal to the electron count.
pub fn flat_band(center: f64, onsite: f64, electrons: usize) -> Result<TightBindingModel> {
    let geometry = chain_geometry(1.0, &[(center, electrons as f64)])?;
    TightBindingModel::builder(geometry)
        .orbital(0, "s", onsite, [center, 0.0, 0.0])
        .electrons(electrons)
        .build()
}

/// Homonuclear two-site molecule of bond length `d` along x in a cubic box
/// of edge `box_len`, hopping `t` between the sites. One electron in the
/// bonding orbital.
pub fn dimer_molecule(d: f64, t: f64, box_len: f64) -> Result<TightBindingModel> {
    let half = d / (2.0 * box_len);
    let sites = vec![
        Site {
            position: [0.5 - half, 0.5, 0.5],
            species: "C".into(),
            ionic_charge: 0.5,
        },
        Site {
            position: [0.5 + half, 0.5, 0.5],
            species: "C".into(),
            ionic_charge: 0.5,
        },
    ];
    let geometry = LatticeGeometry::new(
        [[box_len, 0.0, 0.0], [0.0, box_len, 0.0], [0.0, 0.0, box_len]],
        sites,
        3,
    )?;
    TightBindingModel::builder(geometry)
        .orbital(0, "pz", 0.0, [0.5 - half, 0.5, 0.5])
        .orbital(1, "pz", 0.0, [0.5 + half, 0.5, 0.5])
        .real_hop(0, 1, [0, 0, 0], t)
        .electrons(1)
        .build()
}
