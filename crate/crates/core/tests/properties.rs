use dipolekit::constants::{debye_to_ea, ea_to_debye};
use dipolekit::fixtures;
use dipolekit::model::{BlochEigensystem, CMatrix, KPointGrid, OccupationConfig, TightBindingModel, Vec3};
use dipolekit::optics::{einstein_coefficient, mu_sq_from_intensity, radiative_lifetime, TransitionDipole};
use dipolekit::polarization::{
    berry_phase_from_eigensystem, berry_phase_polarization, born_effective_charge, dipole_difference,
    DEFAULT_BORN_DISPLACEMENT,
};
use dipolekit::sternheimer::{solve_parametric, unoccupied_projector, SolverOptions};
use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;
use std::f64::consts::PI;

fn config(cases: u32) -> ProptestConfig {
    ProptestConfig {
        cases,
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn rice_mele() -> TightBindingModel {
    fixtures::rice_mele(1.0, 0.5, 0.5, 1.0, 1).unwrap()
}

fn ground(model: &TightBindingModel, nk: usize, electrons: usize) -> BlochEigensystem {
    let occ = OccupationConfig::ground("gr", model.num_orbitals(), electrons).unwrap();
    BlochEigensystem::diagonalize(model, &KPointGrid::line(nk).unwrap(), &occ).unwrap()
}

proptest! {
    #![proptest_config(config(100))]

    #[test]
    fn berry_phase_is_gauge_invariant(phases in prop::collection::vec(0.0f64..2.0 * PI, 64)) {
        let model = rice_mele();
        let es = ground(&model, 32, 1);
        let reference = berry_phase_from_eigensystem(&model, &es, None).unwrap();
        let mut shuffled = es.clone();
        for k in 0..32 {
            for band in 0..2 {
                shuffled.rephase(k, band, phases[2 * k + band]);
            }
        }
        let p = berry_phase_from_eigensystem(&model, &shuffled, None).unwrap();
        prop_assert!((p.p_el - reference.p_el).norm() < 1e-10);
        prop_assert_eq!(p.branch, reference.branch);
    }
}

proptest! {
    #![proptest_config(config(32))]

    #[test]
    fn velocity_elements_are_gauge_covariant(k in -3.0f64..3.0, a in 0.0f64..6.3, b in 0.0f64..6.3) {
        let model = rice_mele();
        let kv = Vec3::new(k, 0.0, 0.0);
        let (e, u) = dipolekit::model::solve_hermitian(&model.bloch_hamiltonian(&kv));
        let mut w = u.clone();
        let pa = Complex64::from_polar(1.0, a);
        let pb = Complex64::from_polar(1.0, b);
        for i in 0..2 {
            w[(i, 0)] *= pa;
            w[(i, 1)] *= pb;
        }
        let v = model.velocity_matrices(&kv);
        let m = |x: &CMatrix| x.column(1).dotc(&(&v[0] * x.column(0))).norm_sqr();
        prop_assert!((m(&u) - m(&w)).abs() < 1e-12);
        let (e2, _) = dipolekit::model::solve_hermitian(&model.bloch_hamiltonian(&kv));
        prop_assert_eq!(e, e2);
    }

    #[test]
    fn spectrum_is_reciprocal_periodic(k in prop::array::uniform3(-2.0f64..2.0), n in -2i32..3) {
        let model = fixtures::rice_mele(0.8, -0.4, 0.3, 2.1, 1).unwrap();
        let b = model.geometry().reciprocal_vectors()[0];
        let k = Vec3::from(k);
        let (e1, _) = dipolekit::model::solve_hermitian(&model.bloch_hamiltonian(&k));
        let (e2, _) = dipolekit::model::solve_hermitian(&model.bloch_hamiltonian(&(k + b * n as f64)));
        for (x, y) in e1.iter().zip(&e2) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn lifetime_and_einstein_routes_agree(
        n in 1.0f64..4.0, hw in 0.2f64..5.0, v in 0.1f64..50.0, i in 0.01f64..5.0,
    ) {
        let t = radiative_lifetime(n, hw, v, i).unwrap();
        let a = einstein_coefficient(n, hw, mu_sq_from_intensity(v, i)).unwrap();
        prop_assert!((a - t.einstein_a_per_s).abs() / a < 1e-10);
        prop_assert!((t.einstein_a_per_s * t.tau_ns * 1e-9 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axis_split_is_pythagorean(
        re in prop::array::uniform3(-3.0f64..3.0),
        im in prop::array::uniform3(-3.0f64..3.0),
        axis in prop::array::uniform3(0.1f64..1.0),
    ) {
        let mu = Vector3::from_fn(|i, _| Complex64::new(re[i], im[i]));
        let t = TransitionDipole::from_vector(mu, &Vec3::from(axis), 1.0, (0, 1, 0)).unwrap();
        let total = t.mu_sq_ea2();
        let split = t.parallel.norm_sqr() + t.perpendicular.powi(2);
        prop_assert!((total - split).abs() <= 1e-12 * total.max(1e-300));
        let mag = t.magnitude_ea();
        prop_assert!((debye_to_ea(ea_to_debye(mag)) - mag).abs() <= 1e-12 * mag);
    }
}

#[test]
fn lattice_shift_of_orbital_moves_branch() {
    let model = fixtures::flat_band(0.3, 0.0, 1).unwrap();
    let shifted = model.with_shifted_orbital(0, [1.0, 0.0, 0.0]).unwrap();
    let occ = OccupationConfig::ground("gr", 1, 1).unwrap();
    let grid = KPointGrid::line(16).unwrap();
    let a = berry_phase_polarization(&model, &grid, &occ).unwrap();
    let b = berry_phase_polarization(&shifted, &grid, &occ).unwrap();
    assert_eq!(b.branch[0] - a.branch[0], -1);
    assert!((a.p_el - b.p_el).norm() < 1e-10);
    assert!((b.branch_el() - a.branch_el() + a.quantum[0]).norm() < 1e-10);
}

#[test]
fn whole_cell_translation_moves_branch() {
    let model = rice_mele();
    let shifted = model
        .with_shifted_orbital(0, [1.0, 0.0, 0.0])
        .unwrap()
        .with_shifted_orbital(1, [1.0, 0.0, 0.0])
        .unwrap();
    let occ = OccupationConfig::ground("gr", 2, 1).unwrap();
    let grid = KPointGrid::line(32).unwrap();
    let a = berry_phase_polarization(&model, &grid, &occ).unwrap();
    let b = berry_phase_polarization(&shifted, &grid, &occ).unwrap();
    assert_eq!((b.branch[0] - a.branch[0]).abs(), 1);
    assert!((a.p_el - b.p_el).norm() < 1e-10);
}

#[test]
fn inversion_symmetric_differences_are_half_quantized() {
    let model = fixtures::ssh(1.0, 0.5, 2).unwrap();
    let grid = KPointGrid::line(32).unwrap();
    let gr = OccupationConfig::ground("gr", 2, 2).unwrap();
    let ex = gr.excite(0, 1, 1, "ex").unwrap();
    let ex2 = gr.excite(0, 1, 2, "ex2").unwrap();
    let p = |o: &OccupationConfig| berry_phase_polarization(&model, &grid, o).unwrap();
    for (x, y) in [(&gr, &ex), (&gr, &ex2), (&ex, &ex2)] {
        let d = dipole_difference(&p(x), &p(y)).unwrap();
        let c = 2.0 * d.dp_el[0];
        assert!((c - c.round()).abs() < 1e-8, "{} -> {}: {}", x.label, y.label, d.dp_el[0]);
    }
}

#[test]
fn berry_dipole_converges_monotonically() {
    let model = rice_mele();
    let occ = OccupationConfig::ground("gr", 2, 1).unwrap();
    let p = |n: usize| berry_phase_polarization(&model, &KPointGrid::line(n).unwrap(), &occ).unwrap().p_el[0];
    let values: Vec<f64> = [16, 32, 64, 128, 256].iter().map(|&n| p(n)).collect();
    let steps: Vec<f64> = values.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
    println!("{steps:?}");
    assert!(steps.windows(2).all(|s| s[1] < s[0]));
}

#[test]
fn born_charges_obey_acoustic_sum_rule() {
    let model = fixtures::rice_mele(1.0, 0.5, 0.5, 1.0, 2).unwrap();
    let occ = OccupationConfig::ground("gr", 2, 2).unwrap();
    let grid = KPointGrid::line(64).unwrap();
    let za = born_effective_charge(&model, 0, DEFAULT_BORN_DISPLACEMENT, &grid, &occ).unwrap();
    let zb = born_effective_charge(&model, 1, DEFAULT_BORN_DISPLACEMENT, &grid, &occ).unwrap();
    println!("Z*_A {:?}\nZ*_B {:?}", za.tensor, zb.tensor);
    for a in 0..3 {
        for b in 0..3 {
            assert!((za.tensor[a][b] + zb.tensor[a][b]).abs() < 1e-3);
        }
    }
    assert!(za.tensor[0][0].abs() > 1e-2);
}

#[test]
fn sternheimer_solution_is_linear_in_perturbation() {
    let model = rice_mele();
    let es = ground(&model, 8, 1);
    let q = unoccupied_projector(&es.vectors[3], &[0]);
    assert!((&q * &q - &q).norm() < 1e-12);
    let dh = model.velocity_matrices(&es.kpoints[3])[0].clone();
    let opts = SolverOptions::default();
    let one = solve_parametric(&es, &model, 3, 0, &[0], &dh, &opts).unwrap();
    let two = solve_parametric(&es, &model, 3, 0, &[0], &(&dh * Complex64::new(2.0, 0.0)), &opts).unwrap();
    let dev = (&two.du_dlambda - &one.du_dlambda * Complex64::new(2.0, 0.0)).norm() / two.du_dlambda.norm();
    assert!(dev < 1e-10, "{dev:e}");
}
