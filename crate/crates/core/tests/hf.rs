mod common;

use common::*;
use fermisim::equilibrium::thermal_density;
use fermisim::grid::kinetic_matrix;
use fermisim::hf::*;
use fermisim::linalg::{self, c, eigh, frobenius, CMat};
use fermisim::states::make_density;
use fermisim::{Grid, OneBodyOperator, Potential, PotentialKind};

fn setup(exchange: ExchangeMode) -> (Grid, Potential, HfModel, CMat) {
    let n_particles = 6.0;
    let grid = Grid::new(1, 32, 2.0 * std::f64::consts::PI, 0.5).unwrap();
    let pot = Potential::new(
        PotentialKind::Gaussian {
            amplitude: 1.0,
            width: 0.7,
        },
        &grid,
    )
    .unwrap();
    let model = HfModel::on_grid(&grid, &pot, n_particles, exchange).unwrap();
    let mut h = kinetic_matrix(&grid);
    for (i, x) in grid.axis_points().iter().enumerate() {
        h[(i, i)] += c(-2.0 * x.cos());
    }
    let (omega, _) = thermal_density(&h, 0.5, n_particles).unwrap();
    (grid, pot, model, omega)
}

#[test]
fn invariants_hold_for_every_exchange_mode() {
    for mode in [ExchangeMode::Subtract, ExchangeMode::Add, ExchangeMode::Off] {
        let (_, _, model, omega0) = setup(mode);
        let state = evolve_hf(&model, &omega0, 0.3, &HfOptions::new(1e-3, 100), None).unwrap();
        let (e0, _) = eigh(&omega0);
        let (e1, _) = eigh(&state.omega);
        let spec = e0.iter().zip(&e1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let tr = (linalg::trace(&state.omega).re - linalg::trace(&omega0).re).abs();
        let en0 = model.energy(&omega0);
        let en1 = model.energy(&state.omega);
        assert!(spec < 1e-10, "{mode:?} spectrum {spec:e}");
        assert!(tr < 1e-10, "{mode:?} trace {tr:e}");
        assert!(((en1 - en0) / en0).abs() < 1e-8, "{mode:?} energy");
        assert!(frobenius(&(&state.omega - &omega0)) > 1e-6, "state should move");
        assert_eq!(state.log.len(), 4);
    }
}

#[test]
fn hamiltonian_matches_direct_sums() {
    let (grid, _, model, omega) = setup(ExchangeMode::Subtract);
    let h = model.hamiltonian(&omega);
    let kin = kinetic_matrix(&grid);
    let pair = model.pair();
    let n = model.n_particles();
    let d = grid.size();
    let mut worst = 0.0f64;
    for i in 0..d {
        for j in 0..d {
            let mut expected = kin[(i, j)] - omega[(i, j)] * pair[(i, j)] / n;
            if i == j {
                let direct: f64 = (0..d).map(|k| pair[(i, k)] * omega[(k, k)].re).sum();
                expected += c(direct / n);
            }
            worst = worst.max((h[(i, j)] - expected).norm());
        }
    }
    assert!(worst < 1e-12, "{worst:e}");
}

#[test]
fn energy_is_stationary_along_commuting_states() {
    let (grid, pot, model, _) = setup(ExchangeMode::Subtract);
    let (omega, _) = thermal_density(&kinetic_matrix(&grid), 0.5, 6.0).unwrap();
    let step = hf_step(&model, &omega, 1e-2).unwrap();
    assert!(frobenius(&(&step - &omega)) < 1e-10);
    let density = make_density(OneBodyOperator::new(grid, omega.clone()).unwrap(), 6.0).unwrap();
    let e = hf_energy(&density, &pot, 6.0, None).unwrap();
    assert!((e - model.energy(&omega)).abs() < 1e-10);
}

#[test]
fn invalid_options_are_rejected() {
    let (_, _, model, omega) = setup(ExchangeMode::Subtract);
    assert!(evolve_hf(&model, &omega, 1.0, &HfOptions::new(0.0, 1), None).is_err());
    assert!(evolve_hf(&model, &omega, -1.0, &HfOptions::new(1e-3, 1), None).is_err());
    let zero = evolve_hf(&model, &omega, 0.0, &HfOptions::new(1e-3, 1), None).unwrap();
    assert_eq!(zero.omega, omega);
}

#[test]
fn random_initial_density_keeps_spectrum() {
    let mut r = rng(21);
    let (_, _, model, _) = setup(ExchangeMode::Subtract);
    let omega = random_density(&mut r, 32, 0.0, 0.4);
    let state = evolve_hf(&model, &omega, 0.1, &HfOptions::new(1e-3, 50), None).unwrap();
    let (e0, _) = eigh(&omega);
    let (e1, _) = eigh(&state.omega);
    let spec = e0.iter().zip(&e1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(spec < 1e-10);
}
