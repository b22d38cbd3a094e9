use std::f64::consts::PI;

use fermisim::equilibrium::*;
use fermisim::grid::kinetic_matrix;
use fermisim::linalg::{self, eigh};
use fermisim::{Grid, Potential, PotentialKind};

fn grid(n: usize, eps: f64) -> Grid {
    Grid::new(1, n, 2.0 * PI, eps).unwrap()
}

#[test]
fn free_thomas_fermi_profile_has_closed_form() {
    let g = grid(64, 0.5);
    let v_ext: Vec<f64> = g.axis_points().iter().map(|x| -2.0 * x.cos()).collect();
    let sol = solve_thomas_fermi(&g, &v_ext, &Potential::zero(&g), 4.0, 1).unwrap();
    let c1 = 0.25 * tf_constant(1);
    for (r, v) in sol.density.iter().zip(&v_ext) {
        let expected = ((sol.lambda - v).max(0.0) / c1).sqrt();
        assert!((r - expected).abs() < 1e-9 * (1.0 + expected));
    }
    let mass: f64 = sol.density.iter().sum::<f64>() * g.spacing();
    assert!((mass - 4.0).abs() < 1e-9);
}

#[test]
fn interacting_thomas_fermi_satisfies_first_order_condition() {
    let g = grid(64, 0.25);
    let pot = Potential::new(PotentialKind::Gaussian { amplitude: 5.0, width: 1.0 }, &g).unwrap();
    let v_ext: Vec<f64> = g.axis_points().iter().map(|x| -x.cos()).collect();
    for tf_dim in 1..=3 {
        let sol = solve_thomas_fermi(&g, &v_ext, &pot, 8.0, tf_dim).unwrap();
        assert!(sol.residual < 1e-6, "dimension {tf_dim}: residual {}", sol.residual);
        assert!(sol.density.iter().all(|&r| r >= 0.0));
    }
    assert!(solve_thomas_fermi(&g, &v_ext, &pot, 8.0, 4).is_err());
    assert!(solve_thomas_fermi(&g, &v_ext[..10], &pot, 8.0, 1).is_err());
    assert!(solve_thomas_fermi(&g, &v_ext, &pot, -1.0, 1).is_err());
}

#[test]
fn fermi_dirac_density_hits_the_particle_number() {
    let g = grid(32, 0.5);
    let rho: Vec<f64> = g.axis_points().iter().map(|x| 1.0 + 0.5 * x.cos()).collect();
    let vel = VelocityGrid::covering(&g, 6.0, 2).unwrap();
    let params = FermiDiracParams::semiclassical(0.5, 0.5, 1);
    let (m, mu) = fermi_dirac_density(&rho, &params, &g, &vel, Some(6.0)).unwrap();
    assert!((m.particle_number() - 6.0).abs() < 1e-9);
    assert!(m.values().iter().all(|&x| (0.0..=1.0).contains(&x)));
    let fixed = FermiDiracParams { mu, ..params };
    let (again, _) = fermi_dirac_density(&rho, &fixed, &g, &vel, None).unwrap();
    assert_eq!(again.values(), m.values());
    assert!(fermi_dirac_density(&rho, &FermiDiracParams { temperature: 0.0, ..params }, &g, &vel, None).is_err());
}

#[test]
fn logistic_occupation_is_stable_at_extremes() {
    assert_eq!(fermi_dirac(1e6, 0.1, 0.0), 0.0);
    assert_eq!(fermi_dirac(-1e6, 0.1, 0.0), 1.0);
    assert!((fermi_dirac(0.3, 0.2, 0.3) - 0.5).abs() < 1e-15);
}

#[test]
fn weyl_of_a_velocity_profile_is_a_fourier_multiplier() {
    let g = grid(16, 0.5);
    let vel = VelocityGrid::for_grid(&g, 1).unwrap();
    let m = PhaseSpaceDensity::from_fn(g, vel, |_, v| (-v * v).exp()).unwrap();
    let op = weyl_matrix(&m, &g).unwrap();
    let hat = to_momentum_basis(&op, &g);
    for a in 0..16 {
        for b in 0..16 {
            let v = (a as f64 - 8.0) * 0.5;
            let expected = if a == b { (-v * v).exp() } else { 0.0 };
            assert!((hat[(a, b)].re - expected).abs() < 1e-12 && hat[(a, b)].im.abs() < 1e-12);
        }
    }
}

#[test]
fn wigner_of_thermal_state_has_the_right_mass() {
    let g = grid(32, 0.5);
    let (omega, _) = thermal_density(&kinetic_matrix(&g), 0.7, 5.0).unwrap();
    let vel = VelocityGrid::for_grid(&g, 2).unwrap();
    let w = wigner_transform(&omega, &g, &vel).unwrap();
    assert!(w.mass_defect.abs() < 1e-9);
    assert!(w.imaginary_residue < 1e-12);
    assert!((w.density.particle_number() - 5.0).abs() < 1e-9);
}

#[test]
fn weyl_quantize_clamps_and_normalizes() {
    let g = grid(32, 0.5);
    let vel = VelocityGrid::for_grid(&g, 1).unwrap();
    let m = PhaseSpaceDensity::from_fn(g, vel, |x, v| if v.abs() < 2.0 + x.cos() { 1.0 } else { 0.0 }).unwrap();
    let d = weyl_quantize(&m, &g, 6.0).unwrap();
    assert!((d.trace() - 6.0).abs() < 1e-10);
    assert!(d.eigenvalues().iter().all(|&x| (0.0..=1.0).contains(&x)));
    let coarse = VelocityGrid::new(8, 2.0).unwrap();
    let m = PhaseSpaceDensity::from_fn(g, coarse, |_, _| 0.5).unwrap();
    assert!(weyl_quantize(&m, &g, 6.0).is_err());
}

#[test]
fn thermal_density_has_fermi_dirac_spectrum() {
    let g = grid(16, 0.5);
    let h = kinetic_matrix(&g);
    let (omega, mu) = thermal_density(&h, 0.3, 3.0).unwrap();
    assert!((linalg::trace(&omega).re - 3.0).abs() < 1e-10);
    let (eh, _) = eigh(&h);
    let (eo, _) = eigh(&omega);
    let mut expected: Vec<f64> = eh.iter().map(|&e| fermi_dirac(e, 0.3, mu)).collect();
    expected.sort_by(f64::total_cmp);
    for (a, b) in eo.iter().zip(&expected) {
        assert!((a - b).abs() < 1e-10);
    }
    assert!(thermal_density(&h, 0.3, 16.0).is_err());
}

#[test]
fn phase_space_density_roundtrips_through_bytes() {
    let g = grid(8, 0.5);
    let vel = VelocityGrid::new(6, 0.25).unwrap();
    let m = PhaseSpaceDensity::from_fn(g, vel, |x, v| x.sin() * v).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.fsps");
    m.save(&path).unwrap();
    let back = PhaseSpaceDensity::load(&path).unwrap();
    assert_eq!(back.values(), m.values());
    assert!(back.same_lattice(&m));
    let mut bytes = m.to_bytes();
    bytes.truncate(bytes.len() - 8);
    assert!(PhaseSpaceDensity::from_bytes(&bytes, &path).is_err());
    assert!(PhaseSpaceDensity::from_bytes(b"nonsense", &path).is_err());
    assert!(VelocityGrid::new(5, 0.1).is_err());
    assert!(VelocityGrid::new(4, 0.0).is_err());
}
