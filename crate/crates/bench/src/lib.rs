//! Fixtures shared by the benchmarks.

use fermisim::fock::{build_liouvillian, FockOperator, FockSpace, ModeSpace};
use fermisim::{
    weyl_quantize, CMat, DensityMatrix, ExchangeMode, Grid, HfModel, PhaseSpaceDensity, Potential, PotentialKind,
    VelocityGrid,
};

pub fn gaussian() -> PotentialKind {
    PotentialKind::Gaussian {
        amplitude: 1.0,
        width: 0.8,
    }
}

/// A smooth thermal-like density on a one-dimensional grid of `n` points.
pub fn grid_state(n: usize, n_particles: f64) -> (Grid, Potential, VelocityGrid, DensityMatrix) {
    let grid = Grid::new(1, n, 1.0, 0.25).expect("grid");
    let potential = Potential::new(gaussian(), &grid).expect("potential");
    let velocities = VelocityGrid::for_grid(&grid, 1).expect("velocities");
    let m = PhaseSpaceDensity::from_fn(grid, velocities, |x, v| {
        let energy = v * v - (x * std::f64::consts::TAU).cos();
        1.0 / (1.0 + (2.0 * (energy - 0.5)).exp())
    })
    .expect("phase-space density");
    let omega = weyl_quantize(&m, &grid, n_particles).expect("density");
    (grid, potential, velocities, omega)
}

pub fn grid_model(grid: &Grid, potential: &Potential, n_particles: f64) -> HfModel {
    HfModel::on_grid(grid, potential, n_particles, ExchangeMode::Subtract).expect("model")
}

/// Liouvillian of a `d`-mode model on the doubled Fock space.
pub fn liouvillian(d: usize) -> FockOperator {
    let space = FockSpace::new(d, true).expect("space");
    let modes = ModeSpace::new(d, 2.0, 0.7).expect("modes");
    let model = modes.hf_model(&gaussian(), 2.0, ExchangeMode::Subtract).expect("model");
    build_liouvillian(&space, model.one_body(), model.pair(), 2.0).expect("liouvillian")
}

pub fn omega_matrix(d: &DensityMatrix) -> CMat {
    d.matrix().clone()
}
