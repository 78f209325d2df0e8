use std::path::Path;

use dipolekit::densitygrid::{
    grid_difference, grid_dipole, grid_transition_dipole, read_cube, write_cube, GridKind, Normalization,
};
use dipolekit::model::file::read_model;
use dipolekit::model::{BlochEigensystem, KPointGrid, OccupationConfig, TightBindingModel, Vec3};
use dipolekit::optics::{
    dipole_contrast, einstein_coefficient, emitter_criteria, emitter_criteria_from_values, fit_first_peak,
    imaginary_dielectric, radiative_lifetime, transition_dipole, CriteriaThresholds, POOR_FIT_THRESHOLD,
};
use dipolekit::oracle::{cluster_dipole, cluster_from_model, ClusterOccupation, DEFAULT_EDGE_FRACTION, DEFAULT_ORBITAL_CAP};
use dipolekit::polarization::{
    berry_phase_polarization, born_effective_charge, dipole_difference, minimal_norm_difference,
};
use serde_json::{json, Value};

use crate::config::{default_kgrid, Command, RunConfig};
use crate::CliError;

pub struct Outcome {
    pub inputs: Value,
    pub results: Value,
    pub warnings: Vec<String>,
    /// Set when the run finished but a check inside it failed.
    pub failed_check: Option<String>,
}

struct Loaded {
    model: TightBindingModel,
    kgrid: KPointGrid,
}

fn load_model(cfg: &RunConfig) -> Result<Loaded, CliError> {
    let spec = cfg.model.as_ref().expect("validated");
    let file = read_model(&spec.path)?;
    let kgrid = spec
        .kgrid
        .clone()
        .or(file.kgrid)
        .unwrap_or_else(|| default_kgrid(file.model.geometry().dimensionality()));
    Ok(Loaded { model: file.model, kgrid })
}

fn occupations(cfg: &RunConfig, model: &TightBindingModel) -> Result<Vec<OccupationConfig>, CliError> {
    let nbands = model.num_orbitals();
    cfg.configurations
        .iter()
        .map(|c| {
            let mut occ = OccupationConfig::ground(&c.label, nbands, model.electron_count())?;
            for m in &c.moves {
                occ = occ.excite(m.from, m.to, m.electrons, &c.label)?;
            }
            Ok(occ)
        })
        .collect()
}

fn echo(cfg: &RunConfig, kgrid: Option<&KPointGrid>) -> Value {
    let configurations: Vec<Value> = cfg
        .configurations
        .iter()
        .map(|c| {
            json!({
                "label": c.label,
                "moves": c.moves.iter().map(|m| json!({
                    "from_band_index": m.from,
                    "to_band_index": m.to,
                    "electrons_count": m.electrons,
                })).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "config_path": cfg.config_path,
        "model_path": cfg.model.as_ref().map(|m| m.path_display.clone()),
        "kgrid": kgrid.map(|g| g.to_string()),
        "configurations": configurations,
        "broadening_eV": cfg.broadening,
        "refractive_index_unitless": cfg.refractive_index,
        "cell_volume_nm3": cfg.cell_volume_nm3,
        "photon_energy_eV": cfg.photon_energy,
        "integrated_intensity_eV": cfg.integrated_intensity,
        "transition": cfg.transition.map(|t| json!({
            "ground_band_index": t.ground_band,
            "excited_band_index": t.excited_band,
            "k_index": t.k_index,
        })),
        "axis_unitless": cfg.axis,
        "stability_threshold_eA": cfg.stability_threshold,
        "brightness_threshold_debye2": cfg.brightness_threshold,
        "centers": cfg.centers.iter().map(|c| json!({
            "label": c.label,
            "dp_tot_eA": c.dp_tot_eA,
            "mu_sq_debye2": c.mu_sq_debye2,
            "axis_fraction_unitless": c.axis_fraction,
            "lifetime_ns": c.lifetime_ns,
        })).collect::<Vec<_>>(),
        "density": cfg.density.as_ref().map(|d| json!({
            "ground": d.ground.as_ref().map(|p| p.1.clone()),
            "excited": d.excited.as_ref().map(|p| p.1.clone()),
            "psi_ground": d.psi_ground.as_ref().map(|p| p.1.clone()),
            "psi_excited": d.psi_excited.as_ref().map(|p| p.1.clone()),
            "electrons_e": d.electrons,
            "reference_angstrom": d.reference,
            "isovalue_unitless": d.isovalue,
            "axis_index": d.axis,
        })),
        "oracle": {
            "repeats_count": cfg.oracle_repeats,
            "tolerance_eA": cfg.oracle_tolerance,
        },
        "born": {
            "sites_index": cfg.born_sites,
            "displacement_angstrom": cfg.born_displacement,
        },
    })
}

pub fn run(cfg: &RunConfig) -> Result<Outcome, CliError> {
    match cfg.command {
        Command::Polarization => polarization(cfg),
        Command::Lifetime => lifetime(cfg),
        Command::Criteria => criteria(cfg),
        Command::Density => density(cfg),
        Command::OracleCheck => oracle_check(cfg),
    }
}

fn thresholds(cfg: &RunConfig) -> CriteriaThresholds {
    CriteriaThresholds {
        stability_dp_ea: cfg.stability_threshold,
        brightness_mu_sq_debye2: cfg.brightness_threshold,
    }
}

fn polarization(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let Loaded { model, kgrid } = load_model(cfg)?;
    let occs = occupations(cfg, &model)?;
    let results: Vec<_> = occs
        .iter()
        .map(|o| berry_phase_polarization(&model, &kgrid, o))
        .collect::<Result<_, _>>()?;
    let differences: Vec<Value> = results
        .iter()
        .skip(1)
        .map(|r| dipole_difference(&results[0], r).map(|d| json!(d.record())))
        .collect::<Result<_, _>>()?;
    let born: Vec<Value> = cfg
        .born_sites
        .iter()
        .map(|&site| {
            born_effective_charge(&model, site, cfg.born_displacement, &kgrid, &occs[0]).map(|z| {
                json!({ "site_index": site, "tensor_e": z.tensor, "trace_e": z.trace() })
            })
        })
        .collect::<Result<_, _>>()?;
    Ok(Outcome {
        inputs: echo(cfg, Some(&kgrid)),
        results: json!({
            "configurations": results.iter().map(|r| json!(r.record())).collect::<Vec<_>>(),
            "differences": differences,
            "born_charges": born,
        }),
        warnings: Vec::new(),
        failed_check: None,
    })
}

fn lifetime(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let n = cfg.refractive_index.expect("validated");
    if let (Some(hw), Some(i)) = (cfg.photon_energy, cfg.integrated_intensity) {
        let v = cfg.cell_volume_nm3.expect("validated");
        let t = radiative_lifetime(n, hw, v, i)?;
        return Ok(Outcome {
            inputs: echo(cfg, None),
            results: json!({
                "mode": "direct",
                "photon_energy_eV": hw,
                "integrated_intensity_eV": i,
                "cell_volume_nm3": v,
                "refractive_index_unitless": n,
                "tau_ns": t.tau_ns,
                "einstein_a_per_s": t.einstein_a_per_s,
                "mu_sq_ea2": t.mu_sq_ea2,
                "mu_sq_debye2": t.mu_sq_debye2,
            }),
            warnings: Vec::new(),
            failed_check: None,
        });
    }

    let Loaded { model, kgrid } = load_model(cfg)?;
    let occs = occupations(cfg, &model)?;
    let es = BlochEigensystem::diagonalize(&model, &kgrid, &occs[0])?;
    let v = cfg.cell_volume_nm3.unwrap_or(model.geometry().volume() * 1e-3);
    let spectrum = imaginary_dielectric(&es, &model, cfg.broadening, v, n)?;
    let csv = cfg.output_dir.join("spectrum.csv");
    spectrum.write_csv(&csv)?;
    let fit = fit_first_peak(&spectrum)?;
    let mut warnings = Vec::new();
    if fit.poor_fit {
        warnings.push(format!(
            "PoorFitWarning: Lorentzian fit residual {:.3e} is at or above {POOR_FIT_THRESHOLD}",
            fit.fit_residual
        ));
    }
    let t = radiative_lifetime(n, fit.center, v, fit.integrated_intensity)?;
    let einstein = match cfg.transition {
        Some(tr) => {
            let mu = transition_dipole(&es, &model, tr.k_index, tr.ground_band, tr.excited_band, &Vec3::from(cfg.axis))?;
            let a = einstein_coefficient(n, mu.energy.abs(), mu.mu_sq_ea2())?;
            json!({
                "transition_energy_eV": mu.energy,
                "mu_sq_ea2": mu.mu_sq_ea2(),
                "mu_sq_debye2": mu.mu_sq_debye2(),
                "einstein_a_per_s": a,
                "tau_ns": 1e9 / a,
            })
        }
        None => Value::Null,
    };
    Ok(Outcome {
        inputs: echo(cfg, Some(&kgrid)),
        results: json!({
            "mode": "model",
            "cell_volume_nm3": v,
            "refractive_index_unitless": n,
            "fit": {
                "center_eV": fit.center,
                "integrated_intensity_eV": fit.integrated_intensity,
                "hwhm_eV": fit.hwhm,
                "fit_residual_unitless": fit.fit_residual,
                "poor_fit": fit.poor_fit,
                "window_eV": [fit.window.0, fit.window.1],
            },
            "tau_ns": t.tau_ns,
            "einstein_a_per_s": t.einstein_a_per_s,
            "mu_sq_ea2": t.mu_sq_ea2,
            "mu_sq_debye2": t.mu_sq_debye2,
            "einstein_route": einstein,
            "spectrum_csv": "spectrum.csv",
        }),
        warnings,
        failed_check: None,
    })
}

fn contrast(reports: &[dipolekit::optics::EmitterCriteriaReport]) -> Result<Value, CliError> {
    if reports.len() < 2 {
        return Ok(Value::Null);
    }
    let lo = reports
        .iter()
        .min_by(|a, b| a.dp_tot_eA.total_cmp(&b.dp_tot_eA))
        .expect("nonempty");
    let hi = reports
        .iter()
        .max_by(|a, b| a.dp_tot_eA.total_cmp(&b.dp_tot_eA))
        .expect("nonempty");
    if lo.dp_tot_eA == 0.0 {
        return Ok(json!({ "most_stable": lo.label, "least_stable": hi.label, "dp_ratio_unitless": null }));
    }
    Ok(json!({
        "most_stable": lo.label,
        "least_stable": hi.label,
        "dp_ratio_unitless": dipole_contrast(lo.dp_tot_eA, hi.dp_tot_eA)?,
    }))
}

fn criteria(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let th = thresholds(cfg);
    if !cfg.centers.is_empty() {
        let reports: Vec<_> = cfg
            .centers
            .iter()
            .map(|c| emitter_criteria_from_values(&c.label, c.dp_tot_eA, c.mu_sq_debye2, c.axis_fraction, c.lifetime_ns, &th))
            .collect::<Result<_, _>>()?;
        return Ok(Outcome {
            inputs: echo(cfg, None),
            results: json!({ "centers": reports, "contrast": contrast(&reports)? }),
            warnings: Vec::new(),
            failed_check: None,
        });
    }

    let Loaded { model, kgrid } = load_model(cfg)?;
    let occs = occupations(cfg, &model)?;
    let gr = berry_phase_polarization(&model, &kgrid, &occs[0])?;
    let ex = berry_phase_polarization(&model, &kgrid, &occs[1])?;
    let dp = dipole_difference(&gr, &ex)?;
    let es = BlochEigensystem::diagonalize(&model, &kgrid, &occs[0])?;
    let tr = cfg.transition.expect("validated");
    let mu = transition_dipole(&es, &model, tr.k_index, tr.ground_band, tr.excited_band, &Vec3::from(cfg.axis))?;
    let tau = match cfg.refractive_index {
        Some(n) if mu.mu_sq_ea2() > 0.0 => Some(1e9 / einstein_coefficient(n, mu.energy.abs(), mu.mu_sq_ea2())?),
        _ => None,
    };
    let report = emitter_criteria(&dp, &mu, tau, &th)?;
    Ok(Outcome {
        inputs: echo(cfg, Some(&kgrid)),
        results: json!({
            "centers": [report],
            "dipole_difference": dp.record(),
            "transition_energy_eV": mu.energy,
            "contrast": Value::Null,
        }),
        warnings: Vec::new(),
        failed_check: None,
    })
}

fn density(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let spec = cfg.density.as_ref().expect("validated");
    let mut warnings = Vec::new();
    let mut results = serde_json::Map::new();
    let read = |p: &Path, kind: GridKind, warnings: &mut Vec<String>| -> Result<_, CliError> {
        let r = read_cube(p, kind)?;
        warnings.extend(r.warnings.iter().map(|w| format!("UnitAmbiguityWarning ({}): {w}", p.display())));
        Ok(r.grid)
    };
    if let (Some(g), Some(e)) = (&spec.ground, &spec.excited) {
        let gr = read(&g.0, GridKind::Density, &mut warnings)?;
        let ex = read(&e.0, GridKind::Density, &mut warnings)?;
        let reference = Vec3::from(spec.reference);
        let (norm, diff_norm) = match spec.electrons {
            Some(n) => (Normalization::Electrons(n), Normalization::Electrons(0.0)),
            None => (Normalization::Unnormalized, Normalization::Unnormalized),
        };
        let p_gr = grid_dipole(&gr, &reference, norm)?;
        let p_ex = grid_dipole(&ex, &reference, norm)?;
        let diff = grid_difference(&ex, &gr)?;
        let p_diff = grid_dipole(&diff, &reference, diff_norm)?;
        write_cube(&diff.positive_part(spec.isovalue), &cfg.output_dir.join("difference_positive.cube"))?;
        write_cube(&diff.negative_part(spec.isovalue), &cfg.output_dir.join("difference_negative.cube"))?;
        results.insert(
            "difference".into(),
            json!({
                "ground_dipole_eA": [p_gr[0], p_gr[1], p_gr[2]],
                "excited_dipole_eA": [p_ex[0], p_ex[1], p_ex[2]],
                "difference_dipole_eA": [p_diff[0], p_diff[1], p_diff[2]],
                "difference_magnitude_eA": p_diff.norm(),
                "ground_integral_e": gr.integral(),
                "excited_integral_e": ex.integral(),
                "positive_cube": "difference_positive.cube",
                "negative_cube": "difference_negative.cube",
            }),
        );
    }
    if let (Some(g), Some(e)) = (&spec.psi_ground, &spec.psi_excited) {
        let pg = read(&g.0, GridKind::Wavefunction, &mut warnings)?;
        let pe = read(&e.0, GridKind::Wavefunction, &mut warnings)?;
        let t = grid_transition_dipole(&pg, &pe, spec.axis)?;
        t.write_profile_csv(&cfg.output_dir.join("axial_profile.csv"))?;
        let mu = t.dipole.mu.map(|z| z.re);
        results.insert(
            "transition".into(),
            json!({
                "mu_eA": [mu[0], mu[1], mu[2]],
                "parallel_eA": t.dipole.parallel.re,
                "perpendicular_eA": t.dipole.perpendicular,
                "mu_sq_debye2": t.dipole.mu_sq_debye2(),
                "positive_contribution_eA": t.positive_contribution(),
                "negative_contribution_eA": t.negative_contribution(),
                "profile_csv": "axial_profile.csv",
            }),
        );
    }
    Ok(Outcome {
        inputs: echo(cfg, None),
        results: Value::Object(results),
        warnings,
        failed_check: None,
    })
}

fn oracle_check(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let Loaded { model, kgrid } = load_model(cfg)?;
    let occs = occupations(cfg, &model)?;
    let berry = berry_phase_polarization(&model, &kgrid, &occs[0])?;
    let dim = model.geometry().dimensionality() as usize;
    let default_repeats = match dim {
        1 => 400,
        2 => 20,
        _ => 6,
    };
    let l = cfg.oracle_repeats.unwrap_or(default_repeats);
    let repeats = [0, 1, 2].map(|d| if d < dim { l } else { 1 });
    let cells: usize = repeats.iter().product();
    let cluster = cluster_from_model(&model, repeats, DEFAULT_ORBITAL_CAP)?;
    let bands = occs[0].band_occupations()?;
    let oracle = cluster_dipole(&cluster, &ClusterOccupation::from_bands(&bands, cells), DEFAULT_EDGE_FRACTION)?;
    let g = model.geometry();
    let (fa, fb) = (g.to_fractional(&berry.p_el), g.to_fractional(&oracle.p_el));
    let (delta, _) = minimal_norm_difference([0, 1, 2].map(|i| fb[i] - fa[i]), &g.lattice_vectors());
    let err = delta.norm();
    let pass = err <= cfg.oracle_tolerance;
    Ok(Outcome {
        inputs: echo(cfg, Some(&kgrid)),
        results: json!({
            "berry_p_el_eA": [berry.p_el[0], berry.p_el[1], berry.p_el[2]],
            "cluster_p_el_eA": [oracle.p_el[0], oracle.p_el[1], oracle.p_el[2]],
            "difference_eA": err,
            "tolerance_eA": cfg.oracle_tolerance,
            "repeats_count": repeats,
            "pass": pass,
        }),
        warnings: Vec::new(),
        failed_check: (!pass).then(|| {
            format!(
                "Berry-phase and cluster dipoles differ by {err:.3e} e·Å, above the tolerance {:.1e}",
                cfg.oracle_tolerance
            )
        }),
    })
}
