//! One PASS/FAIL line per acceptance criterion.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use dipolekit::densitygrid::{
    format_cube, grid_dipole, grid_transition_dipole, parse_cube, GridKind, LengthUnit, Normalization, VolumetricGrid,
};
use dipolekit::fixtures;
use dipolekit::model::{solve_hermitian, BlochEigensystem, CVector, KPointGrid, OccupationConfig, TightBindingModel, Vec3};
use dipolekit::optics::{einstein_coefficient, fit_first_peak, imaginary_dielectric, radiative_lifetime, transition_dipole};
use dipolekit::oracle::{cluster_dipole, cluster_from_model, ClusterOccupation, DEFAULT_EDGE_FRACTION, DEFAULT_ORBITAL_CAP};
use dipolekit::polarization::{
    berry_phase_from_eigensystem, berry_phase_polarization, born_effective_charge, dipole_difference,
    integrate_response, minimal_norm_difference, simpson, DEFAULT_BORN_DISPLACEMENT, SIMPSON_NODES,
};
use dipolekit::sternheimer::{solve_sternheimer, sternheimer_response_along_path, unoccupied_projector, SolverOptions};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use serde_json::Value;
use tempfile::TempDir;

type Check = Result<String, String>;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn cli(sub: &str, config: &str, out: &Path) -> Result<Value, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_dipolekit"))
        .args([sub, "--config", fixture(config).to_str().unwrap(), "--output-dir", out.to_str().unwrap()])
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
    }
    let text = std::fs::read_to_string(out.join("report.json")).map_err(|e| e.to_string())?;
    serde_json::from_str(&text).map_err(|e| e.to_string())
}

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn rice_mele_path(lambda: f64) -> dipolekit::Result<TightBindingModel> {
    fixtures::rice_mele(1.0, 0.5, 0.5 * lambda, 1.0, 1)
}

fn lifetime_formula() -> Check {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let report = cli("lifetime", "lifetime_v1.toml", dir.path())?;
    let tau = report["results"]["tau_ns"].as_f64().ok_or("tau_ns missing")?;
    ensure((11.76..=12.26).contains(&tau), format!("tau = {tau:.4} ns"))
}

fn emitter_contrast() -> Check {
    let dir = TempDir::new().map_err(|e| e.to_string())?;
    let report = cli("criteria", "emitters.toml", dir.path())?;
    let r = &report["results"];
    let stable = r["centers"][0]["stability_pass"] == true;
    let unstable = r["centers"][1]["stability_pass"] == false;
    let ratio = r["contrast"]["dp_ratio_unitless"].as_f64().ok_or("ratio missing")?;
    ensure(
        stable && unstable && (ratio - 20.5).abs() <= 0.1,
        format!("V1 stable {stable}, NV unstable {unstable}, ratio {ratio:.3}"),
    )
}

fn berry_correctness() -> Check {
    let model = rice_mele_path(1.0).map_err(|e| e.to_string())?;
    let occ = OccupationConfig::ground("gr", 2, 1).map_err(|e| e.to_string())?;
    let berry = berry_phase_polarization(&model, &KPointGrid::line(128).unwrap(), &occ).map_err(|e| e.to_string())?;
    let cluster = cluster_from_model(&model, [400, 1, 1], DEFAULT_ORBITAL_CAP).map_err(|e| e.to_string())?;
    let oracle = cluster_dipole(&cluster, &ClusterOccupation::from_bands(&[1, 0], 400), DEFAULT_EDGE_FRACTION)
        .map_err(|e| e.to_string())?;
    let g = model.geometry();
    let (fa, fb) = (g.to_fractional(&berry.p_el), g.to_fractional(&oracle.p_el));
    let (d, _) = minimal_norm_difference([0, 1, 2].map(|i| fb[i] - fa[i]), &g.lattice_vectors());
    let err = d.norm();

    let ssh = fixtures::ssh(1.0, 0.5, 2).map_err(|e| e.to_string())?;
    let occ2 = OccupationConfig::ground("gr", 2, 2).unwrap();
    let p = berry_phase_polarization(&ssh, &KPointGrid::line(64).unwrap(), &occ2).map_err(|e| e.to_string())?;
    let c = p.fractional[0];
    let quantized = c.abs().min((c.abs() - 0.5).abs());
    ensure(err <= 1e-3 && quantized < 1e-8, format!("cluster error {err:.2e} eA, SSH off-quantum {quantized:.1e}"))
}

fn gauge_and_quantum() -> Check {
    let model = rice_mele_path(1.0).unwrap();
    let occ = OccupationConfig::ground("gr", 2, 1).unwrap();
    let es = BlochEigensystem::diagonalize(&model, &KPointGrid::line(32).unwrap(), &occ).map_err(|e| e.to_string())?;
    let reference = berry_phase_from_eigensystem(&model, &es, None).map_err(|e| e.to_string())?;
    let mut rng = rand::rngs::StdRng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let mut shuffled = es.clone();
        for k in 0..es.num_k() {
            for band in 0..2 {
                shuffled.rephase(k, band, rng.gen_range(0.0..2.0 * PI));
            }
        }
        let p = berry_phase_from_eigensystem(&model, &shuffled, None).map_err(|e| e.to_string())?;
        worst = worst.max((p.p_el - reference.p_el).norm());
    }

    let flat = fixtures::flat_band(0.3, 0.0, 1).unwrap();
    let shifted = flat.with_shifted_orbital(0, [1.0, 0.0, 0.0]).map_err(|e| e.to_string())?;
    let occ1 = OccupationConfig::ground("gr", 1, 1).unwrap();
    let grid = KPointGrid::line(16).unwrap();
    let a = berry_phase_polarization(&flat, &grid, &occ1).map_err(|e| e.to_string())?;
    let b = berry_phase_polarization(&shifted, &grid, &occ1).map_err(|e| e.to_string())?;
    let jump = b.branch[0] - a.branch[0];
    let drift = (a.p_el - b.p_el).norm();
    ensure(
        worst < 1e-10 && jump.abs() == 1 && drift < 1e-10,
        format!("gauge drift {worst:.1e} eA, branch change {jump}, value drift {drift:.1e} eA"),
    )
}

fn aligned(model: &TightBindingModel, k: &Vec3, band: usize, reference: &CVector) -> CVector {
    let (_, v) = solve_hermitian(&model.bloch_hamiltonian(k));
    let u: CVector = v.column(band).into_owned();
    let overlap = u.dotc(reference);
    u * (overlap / overlap.norm())
}

fn route_equivalence() -> Check {
    let grid = KPointGrid::line(64).unwrap();
    let occ = OccupationConfig::ground("gr", 2, 1).unwrap();
    let opts = SolverOptions::default();
    let e = |x: dipolekit::Error| x.to_string();
    let sos = integrate_response(&rice_mele_path, &grid, &occ).map_err(e)?;
    let samples = (0..SIMPSON_NODES)
        .map(|i| sternheimer_response_along_path(&rice_mele_path, i as f64 / (SIMPSON_NODES - 1) as f64, &grid, &occ, &opts))
        .collect::<dipolekit::Result<Vec<_>>>()
        .map_err(e)?;
    let stern = simpson(&samples).map_err(e)?;
    let p0 = berry_phase_polarization(&rice_mele_path(0.0).map_err(e)?, &grid, &occ).map_err(e)?;
    let p1 = berry_phase_polarization(&rice_mele_path(1.0).map_err(e)?, &grid, &occ).map_err(e)?;
    let berry = dipole_difference(&p0, &p1).map_err(e)?.dp_el;
    let pair = [(sos - stern).norm(), (sos - berry).norm(), (stern - berry).norm()];
    let worst_pair = pair.iter().cloned().fold(0.0, f64::max);

    let model = rice_mele_path(1.0).unwrap();
    let es = BlochEigensystem::diagonalize(&model, &KPointGrid::line(8).unwrap(), &occ).map_err(e)?;
    let h = 1e-5;
    let mut worst_fd: f64 = 0.0;
    for ik in 0..es.num_k() {
        let u = &es.vectors[ik];
        let q = unoccupied_projector(u, &[0]);
        let sol = solve_sternheimer(&es, &model, ik, 0, &[0], &opts).map_err(e)?;
        let reference: CVector = u.column(0).into_owned();
        let k = es.kpoints[ik];
        let plus = aligned(&model, &(k + Vec3::x() * h), 0, &reference);
        let minus = aligned(&model, &(k - Vec3::x() * h), 0, &reference);
        let fd = &q * ((plus - minus) / Complex64::new(2.0 * h, 0.0));
        worst_fd = worst_fd.max((&fd - &sol.du_dk[0]).norm());
    }
    ensure(
        worst_pair <= 1e-3 && worst_fd <= 1e-6,
        format!("largest route gap {worst_pair:.1e} eA, du/dk vs FD {worst_fd:.1e}"),
    )
}

fn optics_closure() -> Check {
    let e = |x: dipolekit::Error| x.to_string();
    let model = fixtures::dimer_molecule(1.54, -1.0, 12.0).map_err(e)?;
    let occ = OccupationConfig::ground("gr", 2, 1).unwrap();
    let es = BlochEigensystem::diagonalize(&model, &KPointGrid::new([1, 1, 1]).unwrap(), &occ).map_err(e)?;
    let n = 2.0;
    let volume_nm3 = model.geometry().volume() * 1e-3;
    let spectrum = imaginary_dielectric(&es, &model, 0.02, volume_nm3, n).map_err(e)?;
    let fit = fit_first_peak(&spectrum).map_err(e)?;
    let pipeline = radiative_lifetime(n, fit.center, volume_nm3, fit.integrated_intensity).map_err(e)?;
    let mu = transition_dipole(&es, &model, 0, 0, 1, &Vec3::x()).map_err(e)?;
    let direct = einstein_coefficient(n, mu.energy, mu.mu_sq_ea2()).map_err(e)?;
    let rel = (pipeline.einstein_a_per_s - direct).abs() / direct;
    let round_trip = spectrum.mu_sq_for_intensity(spectrum.integrated_intensity());
    let rt = (round_trip - mu.mu_sq_ea2()).abs() / mu.mu_sq_ea2();
    ensure(rel < 0.01 && rt < 1e-6, format!("pipeline vs Einstein {rel:.1e}, intensity round trip {rt:.1e}"))
}

fn born_sum_rule() -> Check {
    let e = |x: dipolekit::Error| x.to_string();
    let model = fixtures::rice_mele(1.0, 0.5, 0.5, 1.0, 2).map_err(e)?;
    let occ = OccupationConfig::ground("gr", 2, 2).unwrap();
    let grid = KPointGrid::line(64).unwrap();
    let za = born_effective_charge(&model, 0, DEFAULT_BORN_DISPLACEMENT, &grid, &occ).map_err(e)?;
    let zb = born_effective_charge(&model, 1, DEFAULT_BORN_DISPLACEMENT, &grid, &occ).map_err(e)?;
    let mut worst: f64 = 0.0;
    for a in 0..3 {
        for b in 0..3 {
            worst = worst.max((za.tensor[a][b] + zb.tensor[a][b]).abs());
        }
    }
    ensure(worst < 1e-3, format!("largest sum {worst:.1e} e, Z*_xx {:.4} e", za.tensor[0][0]))
}

fn gaussian(center: Vec3, sigma: f64) -> impl Fn(&Vec3) -> f64 {
    move |r: &Vec3| (2.0 * PI * sigma * sigma).powf(-1.5) * (-(r - center).norm_squared() / (2.0 * sigma * sigma)).exp()
}

fn wavefunction(sigma: f64) -> impl Fn(&Vec3) -> f64 {
    move |r: &Vec3| (PI * sigma * sigma).powf(-0.75) * (-r.norm_squared() / (2.0 * sigma * sigma)).exp()
}

fn grid_analysis() -> Check {
    let e = |x: dipolekit::Error| x.to_string();
    let d = 0.5;
    let sigma = 0.7;
    let length = 10.0;
    let g = VolumetricGrid::centered_cube(Vec3::zeros(), length, 64, GridKind::Density, gaussian(Vec3::new(d, 0.0, 0.0), sigma))
        .map_err(e)?;
    let p = grid_dipole(&g, &Vec3::zeros(), Normalization::Electrons(1.0)).map_err(e)?;
    let dipole_err = (p + Vec3::new(d, 0.0, 0.0)).norm();

    let even = VolumetricGrid::centered_cube(Vec3::zeros(), length, 40, GridKind::Density, gaussian(Vec3::zeros(), 0.8))
        .map_err(e)?;
    let parity_density = grid_dipole(&even, &Vec3::zeros(), Normalization::Electrons(1.0)).map_err(e)?.norm();
    let psi_a = VolumetricGrid::centered_cube(Vec3::zeros(), length, 40, GridKind::Wavefunction, wavefunction(0.8)).map_err(e)?;
    let psi_b = VolumetricGrid::centered_cube(Vec3::zeros(), length, 40, GridKind::Wavefunction, wavefunction(1.1)).map_err(e)?;
    let parity_mu = grid_transition_dipole(&psi_a, &psi_b, 2).map_err(e)?.dipole.magnitude_ea();

    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let values = (0..8000).map(|_| rng.gen_range(1e-3..3.0)).collect();
    let mut cube = VolumetricGrid::new(
        Vec3::new(-1.3, 0.2, 4.1),
        [Vec3::new(0.21, 0.0, 0.0), Vec3::new(0.02, 0.19, 0.0), Vec3::new(0.0, 0.01, 0.23)],
        [20, 20, 20],
        values,
        GridKind::Density,
    )
    .map_err(e)?;
    cube.file_unit = LengthUnit::Bohr;
    let back = parse_cube(&format_cube(&cube), GridKind::Density).map_err(e)?.grid;
    let value_err = cube.values.iter().zip(&back.values).map(|(a, b)| ((a - b) / a).abs()).fold(0.0, f64::max);
    let geometry_err = std::iter::once((cube.origin - back.origin).norm())
        .chain((0..3).map(|i| (cube.axes[i] - back.axes[i]).norm()))
        .fold(0.0, f64::max);
    ensure(
        dipole_err < 1e-4 && parity_density < 1e-8 && parity_mu < 1e-8 && value_err < 1e-6 && geometry_err < 1e-10,
        format!(
            "dipole error {dipole_err:.1e} eA, parity {parity_density:.1e}/{parity_mu:.1e} eA, cube {value_err:.1e}/{geometry_err:.1e}"
        ),
    )
}

fn determinism() -> Check {
    let a = TempDir::new().map_err(|e| e.to_string())?;
    let b = TempDir::new().map_err(|e| e.to_string())?;
    let strip = |v: Value| {
        let mut v = v;
        v.as_object_mut().map(|o| o.remove("metadata"));
        serde_json::to_string_pretty(&v).unwrap()
    };
    let ra = strip(cli("polarization", "polarization.toml", a.path())?);
    let rb = strip(cli("polarization", "polarization.toml", b.path())?);
    ensure(ra == rb, format!("{} bytes without metadata", ra.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Check, Option<Duration>); 9] = [
        ("lifetime formula", lifetime_formula, Some(Duration::from_secs(1))),
        ("emitter contrast", emitter_contrast, Some(Duration::from_secs(1))),
        ("Berry-phase correctness", berry_correctness, Some(Duration::from_secs(30))),
        ("gauge and quantum invariance", gauge_and_quantum, Some(Duration::from_secs(60))),
        ("route equivalence", route_equivalence, Some(Duration::from_secs(60))),
        ("optics pipeline closure", optics_closure, Some(Duration::from_secs(10))),
        ("Born-charge sum rule", born_sum_rule, Some(Duration::from_secs(30))),
        ("grid analysis", grid_analysis, Some(Duration::from_secs(60))),
        ("determinism", determinism, None),
    ];
    let mut failures = Vec::new();
    for (i, (name, check, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = check();
        let elapsed = start.elapsed();
        let slow = budget.is_some_and(|b| elapsed > b);
        let (status, detail) = match (&outcome, slow) {
            (Ok(d), false) => ("PASS", d.clone()),
            (Ok(d), true) => ("FAIL", format!("{d}; over time budget")),
            (Err(d), _) => ("FAIL", d.clone()),
        };
        println!("criterion {}: {status} {name} ({detail}; {:.2} s)", i + 1, elapsed.as_secs_f64());
        if status == "FAIL" {
            failures.push(i + 1);
        }
    }
    if !failures.is_empty() {
        eprintln!("failed criteria: {failures:?}");
        std::process::exit(1);
    }
}
