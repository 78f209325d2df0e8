//! Plain-text model definition files.
//!
//! ```text
//! # comments start with '#'
//! [lattice]            three rows, Å
//! 1.0 0.0 0.0
//! 0.0 10.0 0.0
//! 0.0 0.0 10.0
//! [dimensionality]     optional, default 3
//! 1
//! [sites]              species  frac_x frac_y frac_z  ionic_charge_e
//! A 0.0 0.0 0.0 0.5
//! [orbitals]           site label onsite_eV frac_x frac_y frac_z
//! 0 s 0.5 0.0 0.0 0.0
//! [hoppings]           i j R1 R2 R3 re_eV im_eV
//! 0 1 0 0 0 1.0 0.0
//! 1 0 0 0 0 1.0 0.0
//! [electrons]
//! 1
//! [kgrid]              optional
//! 128 1 1
//! ```
//!
//! Both members of each Hermitian pair must be listed.

use std::fmt::Write as _;
use std::path::Path;

use num_complex::Complex64;

use super::{Hopping, KPointGrid, LatticeGeometry, Orbital, Site, TightBindingModel};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: TightBindingModel,
    pub kgrid: Option<KPointGrid>,
}

const SECTIONS: [&str; 7] = ["lattice", "dimensionality", "sites", "orbitals", "hoppings", "electrons", "kgrid"];

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn numbers<T: std::str::FromStr>(line: usize, fields: &[&str], what: &str) -> Result<Vec<T>> {
    fields
        .iter()
        .map(|f| f.parse::<T>().map_err(|_| parse_err(line, format!("bad {what} value '{f}'"))))
        .collect()
}

pub fn parse_model(text: &str) -> Result<ModelFile> {
    let mut section: Option<&str> = None;
    let mut seen: Vec<&str> = Vec::new();
    let mut lattice: Vec<[f64; 3]> = Vec::new();
    let mut dimensionality: u8 = 3;
    let mut sites = Vec::new();
    let mut orbitals = Vec::new();
    let mut hoppings = Vec::new();
    let mut electrons: Option<usize> = None;
    let mut kgrid = None;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            let name = name.trim();
            let known = SECTIONS
                .iter()
                .find(|s| **s == name)
                .ok_or_else(|| parse_err(line_no, format!("unknown section [{name}]")))?;
            if seen.contains(known) {
                return Err(parse_err(line_no, format!("section [{name}] repeated")));
            }
            seen.push(known);
            section = Some(known);
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match section {
            None => return Err(parse_err(line_no, "data before the first section header")),
            Some("lattice") => {
                if fields.len() != 3 || lattice.len() == 3 {
                    return Err(parse_err(line_no, "[lattice] needs exactly three rows of three numbers"));
                }
                let v: Vec<f64> = numbers(line_no, &fields, "lattice")?;
                lattice.push([v[0], v[1], v[2]]);
            }
            Some("dimensionality") => {
                let v: Vec<u8> = numbers(line_no, &fields, "dimensionality")?;
                if v.len() != 1 {
                    return Err(parse_err(line_no, "[dimensionality] takes one integer"));
                }
                dimensionality = v[0];
            }
            Some("sites") => {
                if fields.len() != 5 {
                    return Err(parse_err(line_no, "site line: species x y z ionic_charge"));
                }
                let v: Vec<f64> = numbers(line_no, &fields[1..], "site")?;
                sites.push(Site {
                    position: [v[0], v[1], v[2]],
                    species: fields[0].to_string(),
                    ionic_charge: v[3],
                });
            }
            Some("orbitals") => {
                if fields.len() != 6 {
                    return Err(parse_err(line_no, "orbital line: site label onsite x y z"));
                }
                let site = fields[0]
                    .parse()
                    .map_err(|_| parse_err(line_no, format!("bad site index '{}'", fields[0])))?;
                let v: Vec<f64> = numbers(line_no, &fields[2..], "orbital")?;
                orbitals.push(Orbital {
                    site,
                    label: fields[1].to_string(),
                    onsite: v[0],
                    center: [v[1], v[2], v[3]],
                });
            }
            Some("hoppings") => {
                if fields.len() != 7 {
                    return Err(parse_err(line_no, "hopping line: i j R1 R2 R3 re im"));
                }
                let ij: Vec<usize> = numbers(line_no, &fields[..2], "orbital index")?;
                let r: Vec<i32> = numbers(line_no, &fields[2..5], "cell")?;
                let t: Vec<f64> = numbers(line_no, &fields[5..], "amplitude")?;
                hoppings.push(Hopping {
                    from: ij[0],
                    to: ij[1],
                    cell: [r[0], r[1], r[2]],
                    amplitude: Complex64::new(t[0], t[1]),
                });
            }
            Some("electrons") => {
                let v: Vec<usize> = numbers(line_no, &fields, "electron count")?;
                if v.len() != 1 || electrons.is_some() {
                    return Err(parse_err(line_no, "[electrons] takes one integer"));
                }
                electrons = Some(v[0]);
            }
            Some("kgrid") => {
                let v: Vec<usize> = numbers(line_no, &fields, "k-grid")?;
                if v.len() != 3 || kgrid.is_some() {
                    return Err(parse_err(line_no, "[kgrid] takes N1 N2 N3"));
                }
                kgrid = Some(KPointGrid::new([v[0], v[1], v[2]]).map_err(|e| parse_err(line_no, e.to_string()))?);
            }
            Some(other) => unreachable!("section {other}"),
        }
    }

    let end = text.lines().count();
    for required in ["lattice", "sites", "orbitals", "electrons"] {
        if !seen.contains(&required) {
            return Err(parse_err(end, format!("missing section [{required}]")));
        }
    }
    if lattice.len() != 3 {
        return Err(parse_err(end, "[lattice] needs three rows"));
    }
    let geometry = LatticeGeometry::new([lattice[0], lattice[1], lattice[2]], sites, dimensionality)?;
    let model = TightBindingModel::new(geometry, orbitals, hoppings, electrons.unwrap_or(0))?;
    Ok(ModelFile { model, kgrid })
}

pub fn read_model(path: &Path) -> Result<ModelFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_model(&text)
}

/// Serializes a model in the format accepted by [`parse_model`].
pub fn format_model(model: &TightBindingModel, kgrid: Option<&KPointGrid>) -> String {
    let g = model.geometry();
    let mut out = String::from("[lattice]\n");
    for row in g.lattice_array() {
        let _ = writeln!(out, "{:?} {:?} {:?}", row[0], row[1], row[2]);
    }
    let _ = writeln!(out, "[dimensionality]\n{}", g.dimensionality());
    out.push_str("[sites]\n");
    for s in g.sites() {
        let p = s.position;
        let _ = writeln!(out, "{} {:?} {:?} {:?} {:?}", s.species, p[0], p[1], p[2], s.ionic_charge);
    }
    out.push_str("[orbitals]\n");
    for o in model.orbitals() {
        let c = o.center;
        let _ = writeln!(out, "{} {} {:?} {:?} {:?} {:?}", o.site, o.label, o.onsite, c[0], c[1], c[2]);
    }
    out.push_str("[hoppings]\n");
    for h in model.hoppings() {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {:?} {:?}",
            h.from, h.to, h.cell[0], h.cell[1], h.cell[2], h.amplitude.re, h.amplitude.im
        );
    }
    let _ = writeln!(out, "[electrons]\n{}", model.electron_count());
    if let Some(k) = kgrid {
        let [a, b, c] = k.divisions();
        let _ = writeln!(out, "[kgrid]\n{a} {b} {c}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    const SSH: &str = "\
[lattice]
1.0 0.0 0.0
0.0 10.0 0.0
0.0 0.0 10.0
[dimensionality]
1
[sites]
A 0.0 0.0 0.0 1.0
B 0.5 0.0 0.0 1.0
[orbitals]
0 s 0.0 0.0 0.0 0.0
1 s 0.0 0.5 0.0 0.0
[hoppings]
0 1 0 0 0 1.0 0.0
1 0 0 0 0 1.0 0.0
1 0 1 0 0 0.5 0.0
0 1 -1 0 0 0.5 0.0
[electrons]
2
[kgrid]
64 1 1
";

    #[test]
    fn parses_ssh_file() {
        let parsed = parse_model(SSH).unwrap();
        assert_eq!(parsed.kgrid.unwrap().divisions(), [64, 1, 1]);
        assert_eq!(parsed.model, fixtures::ssh(1.0, 0.5, 2).unwrap());
    }

    #[test]
    fn format_round_trip() {
        let model = fixtures::rice_mele(1.0, 0.5, 0.5, 1.0, 1).unwrap();
        let grid = KPointGrid::line(32).unwrap();
        let text = format_model(&model, Some(&grid));
        let parsed = parse_model(&text).unwrap();
        assert_eq!(parsed.model, model);
        assert_eq!(parsed.kgrid, Some(grid));
    }

    #[test]
    fn reports_missing_conjugates() {
        let broken = SSH.replace("0 1 -1 0 0 0.5 0.0\n", "");
        match parse_model(&broken) {
            Err(Error::NonHermitian { missing }) => {
                assert_eq!(missing.len(), 1);
                assert!(missing[0].contains("(0 1 -1 0 0"), "{}", missing[0]);
            }
            other => panic!("expected NonHermitian, got {other:?}"),
        }
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let bad = SSH.replace("0 1 0 0 0 1.0 0.0", "0 1 0 0 zero 1.0 0.0");
        match parse_model(&bad) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 14),
            other => panic!("{other:?}"),
        }
        let missing = SSH.split("[electrons]").next().unwrap().to_string();
        assert!(matches!(parse_model(&missing), Err(Error::Parse { .. })));
    }
}
