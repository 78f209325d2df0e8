use std::fmt::Write as _;
use std::path::Path;

use crate::constants::BOHR_IN_ANGSTROM;
use crate::model::Vec3;
use crate::{Error, Result};

use super::{GridAtom, GridKind, LengthUnit, VolumetricGrid};

#[derive(Debug, Clone, PartialEq)]
pub struct CubeRead {
    pub grid: VolumetricGrid,
    pub warnings: Vec<String>,
}

/// Exponent of length in the field's unit: ρ ~ L⁻³, ψ ~ L^(−3/2).
fn value_length_power(kind: GridKind) -> f64 {
    match kind {
        GridKind::Wavefunction => -1.5,
        _ => -3.0,
    }
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self, section: &str) -> Result<&'a str> {
        match self.inner.next() {
            Some((i, line)) => {
                self.last = i + 1;
                Ok(line)
            }
            None => Err(Error::Parse {
                line: self.last + 1,
                message: format!("file ends before the {section} section"),
            }),
        }
    }
}

fn numbers(line: &str, at: usize, section: &str, want: usize) -> Result<Vec<f64>> {
    let values: Vec<f64> = line
        .split_whitespace()
        .take(want)
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse {
            line: at,
            message: format!("bad number in {section}: {e}"),
        })?;
    if values.len() < want {
        return Err(Error::Parse {
            line: at,
            message: format!("{section} needs {want} fields, found {}", values.len()),
        });
    }
    Ok(values)
}

fn count_field(x: f64, at: usize, section: &str) -> Result<i64> {
    if x.fract() != 0.0 {
        return Err(Error::Parse {
            line: at,
            message: format!("{section} count {x} is not an integer"),
        });
    }
    Ok(x as i64)
}

/// Parses Gaussian-cube text. Positive voxel counts mean Bohr units, which
/// are converted to Å (field values too); negative counts mean Å.
pub fn parse_cube(text: &str, kind: GridKind) -> Result<CubeRead> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };
    let mut warnings = Vec::new();
    let comments = [lines.next("comment")?.to_string(), lines.next("comment")?.to_string()];

    let header = lines.next("atom count and origin")?;
    let at = lines.last;
    let h = numbers(header, at, "atom count and origin", 4)?;
    let natoms = count_field(h[0], at, "atom")?;

    let mut counts = [0usize; 3];
    let mut axes = [Vec3::zeros(); 3];
    let mut signs = [0i64; 3];
    for d in 0..3 {
        let section = ["first axis", "second axis", "third axis"][d];
        let line = lines.next(section)?;
        let at = lines.last;
        let v = numbers(line, at, section, 4)?;
        let n = count_field(v[0], at, section)?;
        if n == 0 {
            return Err(Error::Parse {
                line: at,
                message: format!("{section} has zero points"),
            });
        }
        signs[d] = n.signum();
        counts[d] = n.unsigned_abs() as usize;
        axes[d] = Vec3::new(v[1], v[2], v[3]);
    }
    if signs.iter().any(|&s| s != signs[0]) {
        return Err(Error::Parse {
            line: lines.last,
            message: "voxel counts mix positive (Bohr) and negative (Å) signs".into(),
        });
    }
    let unit = if signs[0] > 0 {
        LengthUnit::Bohr
    } else {
        warnings.push(
            "negative voxel counts: lengths read as Å; this convention is not universal, check the producing code".into(),
        );
        LengthUnit::Angstrom
    };
    let scale = match unit {
        LengthUnit::Bohr => BOHR_IN_ANGSTROM,
        LengthUnit::Angstrom => 1.0,
    };

    let mut atoms = Vec::new();
    for _ in 0..natoms.unsigned_abs() {
        let line = lines.next("atoms")?;
        let v = numbers(line, lines.last, "atoms", 5)?;
        atoms.push(GridAtom {
            atomic_number: v[0] as i32,
            charge: v[1],
            position: Vec3::new(v[2], v[3], v[4]) * scale,
        });
    }
    if natoms < 0 {
        let line = lines.next("orbital list")?;
        let v = numbers(line, lines.last, "orbital list", 1)?;
        if v[0] != 1.0 {
            return Err(Error::Parse {
                line: lines.last,
                message: format!("{} orbitals in one file; only single-field cubes are supported", v[0]),
            });
        }
    }

    let total: usize = counts.iter().product();
    let mut values = Vec::with_capacity(total);
    let value_scale = scale.powf(value_length_power(kind));
    while values.len() < total {
        let line = lines.next("volumetric data")?;
        let at = lines.last;
        for token in line.split_whitespace() {
            let v: f64 = token.parse().map_err(|e| Error::Parse {
                line: at,
                message: format!("bad value in volumetric data: {e}"),
            })?;
            values.push(v * value_scale);
        }
    }
    if values.len() > total {
        return Err(Error::Parse {
            line: lines.last,
            message: format!("volumetric data has {} values, expected {total}", values.len()),
        });
    }

    let grid = VolumetricGrid {
        origin: Vec3::new(h[1], h[2], h[3]) * scale,
        axes: axes.map(|a| a * scale),
        counts,
        values,
        kind,
        atoms,
        comments,
        file_unit: unit,
    };
    grid.validate()?;
    Ok(CubeRead { grid, warnings })
}

pub fn read_cube(path: &Path, kind: GridKind) -> Result<CubeRead> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_cube(&text, kind)
}

/// Cube text in the grid's file unit, six values per line.
pub fn format_cube(grid: &VolumetricGrid) -> String {
    let (scale, sign) = match grid.file_unit {
        LengthUnit::Bohr => (1.0 / BOHR_IN_ANGSTROM, 1i64),
        LengthUnit::Angstrom => (1.0, -1i64),
    };
    let value_scale = scale.powf(value_length_power(grid.kind));
    let mut out = String::new();
    for c in &grid.comments {
        let _ = writeln!(out, "{}", c.replace('\n', " "));
    }
    let o = grid.origin * scale;
    let _ = writeln!(out, "{:5} {:16.10} {:16.10} {:16.10}", grid.atoms.len(), o[0], o[1], o[2]);
    for d in 0..3 {
        let a = grid.axes[d] * scale;
        let _ = writeln!(out, "{:5} {:16.10} {:16.10} {:16.10}", sign * grid.counts[d] as i64, a[0], a[1], a[2]);
    }
    for atom in &grid.atoms {
        let p = atom.position * scale;
        let _ = writeln!(out, "{:5} {:16.10} {:16.10} {:16.10} {:16.10}", atom.atomic_number, atom.charge, p[0], p[1], p[2]);
    }
    for row in grid.values.chunks(grid.counts[2]) {
        for line in row.chunks(6) {
            let text: Vec<String> = line.iter().map(|v| format!("{:14.7e}", v * value_scale)).collect();
            let _ = writeln!(out, "{}", text.join(" "));
        }
    }
    out
}

pub fn write_cube(grid: &VolumetricGrid, path: &Path) -> Result<()> {
    std::fs::write(path, format_cube(grid)).map_err(|e| Error::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}
