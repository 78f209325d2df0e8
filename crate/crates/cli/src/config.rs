//! Run configuration: TOML schema, defaults, overrides and validation.

use std::path::{Path, PathBuf};

use dipolekit::model::KPointGrid;
use serde::Deserialize;

pub const DEFAULT_BROADENING_EV: f64 = 0.02;
pub const DEFAULT_STABILITY_THRESHOLD_EA: f64 = 0.1;
pub const DEFAULT_BRIGHTNESS_THRESHOLD_DEBYE2: f64 = 10.0;
pub const DEFAULT_ORACLE_TOLERANCE_EA: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Polarization,
    Lifetime,
    Criteria,
    Density,
    OracleCheck,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Polarization => "polarization",
            Command::Lifetime => "lifetime",
            Command::Criteria => "criteria",
            Command::Density => "density",
            Command::OracleCheck => "oracle-check",
        }
    }
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub kgrid: Option<String>,
    pub threshold_dp: Option<f64>,
    pub gamma: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawConfig {
    output_dir: Option<PathBuf>,
    model: Option<RawModel>,
    configurations: Vec<RawConfiguration>,
    optics: RawOptics,
    criteria: RawCriteria,
    density: Option<RawDensity>,
    oracle: RawOracle,
    born: Option<RawBorn>,
}

#[derive(Debug, Deserialize)]
struct RawModel {
    path: PathBuf,
    kgrid: Option<String>,
}

#[derive(Debug, Clone, Deserialize)]
pub struct Move {
    pub from: usize,
    pub to: usize,
    #[serde(default = "one")]
    pub electrons: u8,
}

fn one() -> u8 {
    1
}

#[derive(Debug, Deserialize)]
struct RawConfiguration {
    label: String,
    #[serde(default)]
    moves: Vec<Move>,
}

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawOptics {
    broadening_eV: Option<f64>,
    refractive_index: Option<f64>,
    cell_volume_nm3: Option<f64>,
    photon_energy_eV: Option<f64>,
    integrated_intensity_eV: Option<f64>,
    transition: Option<Transition>,
    axis: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub struct Transition {
    pub ground_band: usize,
    pub excited_band: usize,
    #[serde(default)]
    pub k_index: usize,
}

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawCriteria {
    stability_threshold_eA: Option<f64>,
    brightness_threshold_debye2: Option<f64>,
    centers: Vec<Center>,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Deserialize)]
pub struct Center {
    pub label: String,
    pub dp_tot_eA: f64,
    #[serde(default)]
    pub mu_sq_debye2: Option<f64>,
    #[serde(default)]
    pub axis_fraction: Option<f64>,
    #[serde(default)]
    pub lifetime_ns: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawDensity {
    ground: Option<PathBuf>,
    excited: Option<PathBuf>,
    electrons: Option<f64>,
    reference_angstrom: Option<[f64; 3]>,
    isovalue: Option<f64>,
    psi_ground: Option<PathBuf>,
    psi_excited: Option<PathBuf>,
    axis: Option<usize>,
}

#[allow(non_snake_case)]
#[derive(Debug, Default, Deserialize)]
#[serde(default)]
struct RawOracle {
    repeats: Option<usize>,
    tolerance_eA: Option<f64>,
}

#[derive(Debug, Deserialize)]
struct RawBorn {
    sites: Vec<usize>,
    displacement_angstrom: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct Configuration {
    pub label: String,
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone)]
pub struct ModelSpec {
    pub path: PathBuf,
    /// As written in the config or on the command line.
    pub path_display: String,
    pub kgrid: Option<KPointGrid>,
}

#[derive(Debug, Clone)]
pub struct DensitySpec {
    pub ground: Option<(PathBuf, String)>,
    pub excited: Option<(PathBuf, String)>,
    pub electrons: Option<f64>,
    pub reference: [f64; 3],
    pub isovalue: f64,
    pub psi_ground: Option<(PathBuf, String)>,
    pub psi_excited: Option<(PathBuf, String)>,
    pub axis: usize,
}

/// Normalized configuration with every default filled.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub config_path: String,
    pub output_dir: PathBuf,
    pub model: Option<ModelSpec>,
    pub configurations: Vec<Configuration>,
    pub broadening: f64,
    pub refractive_index: Option<f64>,
    pub cell_volume_nm3: Option<f64>,
    pub photon_energy: Option<f64>,
    pub integrated_intensity: Option<f64>,
    pub transition: Option<Transition>,
    pub axis: [f64; 3],
    pub stability_threshold: f64,
    pub brightness_threshold: f64,
    pub centers: Vec<Center>,
    pub density: Option<DensitySpec>,
    pub oracle_repeats: Option<usize>,
    pub oracle_tolerance: f64,
    pub born_sites: Vec<usize>,
    pub born_displacement: f64,
}

#[derive(Debug, Clone)]
pub struct Validated {
    pub config: RunConfig,
    pub warnings: Vec<String>,
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

fn positive(errors: &mut Vec<String>, field: &str, value: Option<f64>) {
    if let Some(v) = value {
        if !(v > 0.0 && v.is_finite()) {
            errors.push(format!("{field}: must be > 0, got {v}"));
        }
    }
}

fn existing(errors: &mut Vec<String>, field: &str, base: &Path, p: &Option<PathBuf>) -> Option<(PathBuf, String)> {
    let p = p.as_ref()?;
    let full = resolve(base, p);
    if !full.is_file() {
        errors.push(format!("{field}: file '{}' does not exist", full.display()));
    }
    Some((full, p.display().to_string()))
}

/// Reads, defaults and validates a config file. Errors are collected, not
/// reported one at a time.
pub fn validate_config(path: &Path, command: Command, overrides: &Overrides) -> Result<Validated, Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read config file '{}': {e}", path.display())])?;
    validate_config_str(&text, path, command, overrides)
}

pub fn validate_config_str(
    text: &str,
    path: &Path,
    command: Command,
    overrides: &Overrides,
) -> Result<Validated, Vec<String>> {
    let mut warnings = Vec::new();
    let deserializer = toml::Deserializer::new(text);
    let raw: RawConfig = serde_ignored::deserialize(deserializer, |ignored| {
        let key = ignored.to_string().replace(".?", "");
        warnings.push(format!("unknown key '{key}' ignored"));
    })
    .map_err(|e| vec![format!("config '{}' is not valid: {}", path.display(), e.to_string().trim())])?;

    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let base = if base.as_os_str().is_empty() { PathBuf::from(".") } else { base };
    let mut errors = Vec::new();

    let kgrid_text = overrides.kgrid.clone().or_else(|| raw.model.as_ref().and_then(|m| m.kgrid.clone()));
    let kgrid = kgrid_text.and_then(|t| match t.parse::<KPointGrid>() {
        Ok(g) => Some(g),
        Err(e) => {
            errors.push(format!("kgrid: '{t}' is not a grid of the form N1xN2xN3 ({e})"));
            None
        }
    });
    let model = raw.model.as_ref().map(|m| {
        let full = resolve(&base, &m.path);
        if !full.is_file() {
            errors.push(format!("model.path: file '{}' does not exist", full.display()));
        }
        ModelSpec {
            path: full,
            path_display: m.path.display().to_string(),
            kgrid: kgrid.clone(),
        }
    });

    let broadening = overrides.gamma.or(raw.optics.broadening_eV).unwrap_or(DEFAULT_BROADENING_EV);
    positive(&mut errors, "optics.broadening_eV", Some(broadening));
    positive(&mut errors, "optics.refractive_index", raw.optics.refractive_index);
    positive(&mut errors, "optics.cell_volume_nm3", raw.optics.cell_volume_nm3);
    positive(&mut errors, "optics.photon_energy_eV", raw.optics.photon_energy_eV);
    positive(&mut errors, "optics.integrated_intensity_eV", raw.optics.integrated_intensity_eV);
    let axis = raw.optics.axis.unwrap_or([0.0, 0.0, 1.0]);
    if axis.iter().all(|&a| a == 0.0) || axis.iter().any(|a| !a.is_finite()) {
        errors.push("optics.axis: must be a finite nonzero vector".into());
    }

    let stability_threshold = overrides
        .threshold_dp
        .or(raw.criteria.stability_threshold_eA)
        .unwrap_or(DEFAULT_STABILITY_THRESHOLD_EA);
    positive(&mut errors, "criteria.stability_threshold_eA", Some(stability_threshold));
    let brightness_threshold = raw
        .criteria
        .brightness_threshold_debye2
        .unwrap_or(DEFAULT_BRIGHTNESS_THRESHOLD_DEBYE2);
    positive(&mut errors, "criteria.brightness_threshold_debye2", Some(brightness_threshold));
    for (i, c) in raw.criteria.centers.iter().enumerate() {
        if !(c.dp_tot_eA >= 0.0 && c.dp_tot_eA.is_finite()) {
            errors.push(format!("criteria.centers[{i}].dp_tot_eA: must be ≥ 0, got {}", c.dp_tot_eA));
        }
        if let Some(m) = c.mu_sq_debye2 {
            if !(m >= 0.0 && m.is_finite()) {
                errors.push(format!("criteria.centers[{i}].mu_sq_debye2: must be ≥ 0, got {m}"));
            }
        }
        if let Some(f) = c.axis_fraction {
            if !(0.0..=1.0).contains(&f) {
                errors.push(format!("criteria.centers[{i}].axis_fraction: must lie in [0, 1], got {f}"));
            }
        }
        positive(&mut errors, &format!("criteria.centers[{i}].lifetime_ns"), c.lifetime_ns);
    }

    let mut configurations: Vec<Configuration> = raw
        .configurations
        .iter()
        .map(|c| Configuration {
            label: c.label.clone(),
            moves: c.moves.clone(),
        })
        .collect();
    if configurations.is_empty() {
        configurations.push(Configuration {
            label: "ground".into(),
            moves: Vec::new(),
        });
    }
    for (i, c) in configurations.iter().enumerate() {
        if configurations[..i].iter().any(|d| d.label == c.label) {
            errors.push(format!("configurations[{i}].label: '{}' is used twice", c.label));
        }
        for (j, m) in c.moves.iter().enumerate() {
            if m.electrons == 0 || m.electrons > 2 {
                errors.push(format!("configurations[{i}].moves[{j}].electrons: must be 1 or 2, got {}", m.electrons));
            }
        }
    }

    let density = raw.density.as_ref().map(|d| {
        let spec = DensitySpec {
            ground: existing(&mut errors, "density.ground", &base, &d.ground),
            excited: existing(&mut errors, "density.excited", &base, &d.excited),
            electrons: d.electrons,
            reference: d.reference_angstrom.unwrap_or([0.0; 3]),
            isovalue: d.isovalue.unwrap_or(dipolekit::densitygrid::DEFAULT_ISOVALUE),
            psi_ground: existing(&mut errors, "density.psi_ground", &base, &d.psi_ground),
            psi_excited: existing(&mut errors, "density.psi_excited", &base, &d.psi_excited),
            axis: d.axis.unwrap_or(2),
        };
        if spec.axis > 2 {
            errors.push(format!("density.axis: must be 0, 1 or 2, got {}", spec.axis));
        }
        positive(&mut errors, "density.isovalue", Some(spec.isovalue));
        if spec.ground.is_some() != spec.excited.is_some() {
            errors.push("density: 'ground' and 'excited' must be given together".into());
        }
        if spec.psi_ground.is_some() != spec.psi_excited.is_some() {
            errors.push("density: 'psi_ground' and 'psi_excited' must be given together".into());
        }
        spec
    });

    if let Some(r) = raw.oracle.repeats {
        if r == 0 {
            errors.push("oracle.repeats: must be ≥ 1".into());
        }
    }
    let oracle_tolerance = raw.oracle.tolerance_eA.unwrap_or(DEFAULT_ORACLE_TOLERANCE_EA);
    positive(&mut errors, "oracle.tolerance_eA", Some(oracle_tolerance));
    let born_displacement = raw
        .born
        .as_ref()
        .and_then(|b| b.displacement_angstrom)
        .unwrap_or(dipolekit::polarization::DEFAULT_BORN_DISPLACEMENT);
    positive(&mut errors, "born.displacement_angstrom", Some(born_displacement));

    match command {
        Command::Polarization | Command::OracleCheck => {
            if model.is_none() {
                errors.push(format!("model.path: required by '{}'", command.name()));
            }
        }
        Command::Lifetime => {
            let direct = raw.optics.photon_energy_eV.is_some() || raw.optics.integrated_intensity_eV.is_some();
            if direct {
                for (field, v) in [
                    ("optics.photon_energy_eV", raw.optics.photon_energy_eV),
                    ("optics.integrated_intensity_eV", raw.optics.integrated_intensity_eV),
                    ("optics.cell_volume_nm3", raw.optics.cell_volume_nm3),
                ] {
                    if v.is_none() {
                        errors.push(format!("{field}: required for a lifetime from (ħω, I) inputs"));
                    }
                }
            } else if model.is_none() {
                errors.push("lifetime: give either model.path or optics.photon_energy_eV and optics.integrated_intensity_eV".into());
            }
            if raw.optics.refractive_index.is_none() {
                errors.push("optics.refractive_index: required by 'lifetime'".into());
            }
        }
        Command::Criteria => {
            if raw.criteria.centers.is_empty() {
                if model.is_none() {
                    errors.push("criteria: give either criteria.centers or model.path".into());
                } else if configurations.len() < 2 {
                    errors.push("configurations: a ground and an excited configuration are required by 'criteria'".into());
                }
                if model.is_some() && raw.optics.transition.is_none() {
                    errors.push("optics.transition: required by 'criteria' on a model".into());
                }
            }
        }
        Command::Density => match &density {
            None => errors.push("density: section required by 'density'".into()),
            Some(d) if d.ground.is_none() && d.psi_ground.is_none() => {
                errors.push("density: give 'ground'/'excited' densities or 'psi_ground'/'psi_excited' wavefunctions".into())
            }
            _ => {}
        },
    }

    if !errors.is_empty() {
        return Err(errors);
    }
    let output_dir = overrides
        .output_dir
        .clone()
        .or_else(|| raw.output_dir.as_ref().map(|o| resolve(&base, o)))
        .unwrap_or_else(|| base.join("out"));
    Ok(Validated {
        config: RunConfig {
            command,
            config_path: path.display().to_string(),
            output_dir,
            model,
            configurations,
            broadening,
            refractive_index: raw.optics.refractive_index,
            cell_volume_nm3: raw.optics.cell_volume_nm3,
            photon_energy: raw.optics.photon_energy_eV,
            integrated_intensity: raw.optics.integrated_intensity_eV,
            transition: raw.optics.transition,
            axis,
            stability_threshold,
            brightness_threshold,
            centers: raw.criteria.centers,
            density,
            oracle_repeats: raw.oracle.repeats,
            oracle_tolerance,
            born_sites: raw.born.map(|b| b.sites).unwrap_or_default(),
            born_displacement,
        },
        warnings,
    })
}

/// Default k-grid when neither the config nor the model file names one.
pub fn default_kgrid(dimensionality: u8) -> KPointGrid {
    let n = match dimensionality {
        1 => [64, 1, 1],
        2 => [16, 16, 1],
        _ => [8, 8, 8],
    };
    KPointGrid::new(n).expect("nonzero divisions")
}
