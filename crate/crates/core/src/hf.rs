//! Time-dependent Hartree-Fock flow `iε∂_t ω = [h(ω), ω]`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::csvfmt;
use crate::error::{Error, Result};
use crate::grid::{kinetic_matrix, Grid, OneBodyOperator, Potential};
use crate::linalg::{self, c, eigh, max_abs, unitary_propagator, CMat};
use crate::states::{make_density_clamped, semiclassical_report, DensityMatrix};

/// How the exchange term enters the mean-field Hamiltonian.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExchangeMode {
    /// `h = h₀ + V*ρ - X`, the usual Hartree-Fock sign.
    #[default]
    Subtract,
    /// `h = h₀ + V*ρ + X`.
    Add,
    /// Hartree only.
    Off,
}

impl ExchangeMode {
    fn sign(self) -> f64 {
        match self {
            ExchangeMode::Subtract => -1.0,
            ExchangeMode::Add => 1.0,
            ExchangeMode::Off => 0.0,
        }
    }
}

/// One-body part, pair interaction and scaling of a mean-field model, all in
/// an orthonormal basis of position-like states.
#[derive(Debug, Clone)]
pub struct HfModel {
    one_body: CMat,
    pair: DMatrix<f64>,
    n_particles: f64,
    epsilon: f64,
    exchange: ExchangeMode,
}

impl HfModel {
    /// `one_body` is the single-particle Hamiltonian and `pair[(i, j)]` the
    /// interaction `V(x_i - x_j)` between basis sites.
    pub fn new(
        one_body: CMat,
        pair: DMatrix<f64>,
        n_particles: f64,
        epsilon: f64,
        exchange: ExchangeMode,
    ) -> Result<Self> {
        let d = one_body.nrows();
        if one_body.ncols() != d || pair.nrows() != d || pair.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "one-body part is {}x{}, pair matrix {}x{}",
                one_body.nrows(),
                one_body.ncols(),
                pair.nrows(),
                pair.ncols()
            )));
        }
        if !(n_particles > 0.0) || !(epsilon > 0.0) {
            return Err(Error::InvalidArgument(
                "particle number and epsilon must be positive".into(),
            ));
        }
        Ok(HfModel {
            one_body: linalg::hermitize(&one_body),
            pair,
            n_particles,
            epsilon,
            exchange,
        })
    }

    /// Kinetic energy `-ε²Δ` plus the grid-sampled interaction.
    pub fn on_grid(grid: &Grid, potential: &Potential, n_particles: f64, exchange: ExchangeMode) -> Result<Self> {
        potential.check_grid(grid)?;
        Self::new(
            kinetic_matrix(grid),
            potential.pair_matrix(),
            n_particles,
            grid.epsilon(),
            exchange,
        )
    }

    /// Add a static external potential to the one-body part.
    pub fn with_external(mut self, v_ext: &[f64]) -> Result<Self> {
        if v_ext.len() != self.dim() {
            return Err(Error::ShapeMismatch(format!(
                "external potential has {} samples, model has {} sites",
                v_ext.len(),
                self.dim()
            )));
        }
        for (i, v) in v_ext.iter().enumerate() {
            self.one_body[(i, i)] += c(*v);
        }
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.one_body.nrows()
    }

    pub fn one_body(&self) -> &CMat {
        &self.one_body
    }

    pub fn pair(&self) -> &DMatrix<f64> {
        &self.pair
    }

    pub fn n_particles(&self) -> f64 {
        self.n_particles
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn exchange(&self) -> ExchangeMode {
        self.exchange
    }

    /// `h(ω) = h₀ + diag(N⁻¹ Σ_j V_ij ω_jj) ± N⁻¹ V∘ω`.
    pub fn hamiltonian(&self, omega: &CMat) -> CMat {
        let d = self.dim();
        let inv_n = 1.0 / self.n_particles;
        let mut h = self.one_body.clone();
        for i in 0..d {
            let direct: f64 = (0..d).map(|j| self.pair[(i, j)] * omega[(j, j)].re).sum();
            h[(i, i)] += c(direct * inv_n);
        }
        let s = self.exchange.sign() * inv_n;
        if s != 0.0 {
            for j in 0..d {
                for i in 0..d {
                    h[(i, j)] += omega[(i, j)] * (s * self.pair[(i, j)]);
                }
            }
        }
        linalg::hermitize(&h)
    }

    /// `tr h₀ω + (2N)⁻¹ Σ V_ij [ω_ii ω_jj ± |ω_ij|²]`, conserved by the flow.
    pub fn energy(&self, omega: &CMat) -> f64 {
        let d = self.dim();
        let one: f64 = self.one_body.transpose().dot(omega).re;
        let s = self.exchange.sign();
        let mut two = 0.0;
        for j in 0..d {
            for i in 0..d {
                let v = self.pair[(i, j)];
                if v != 0.0 {
                    two += v * (omega[(i, i)].re * omega[(j, j)].re + s * omega[(i, j)].norm_sqr());
                }
            }
        }
        one + two / (2.0 * self.n_particles)
    }
}

/// Mean-field Hamiltonian of a grid density matrix with the exchange term
/// subtracted.
pub fn build_hf_hamiltonian(omega: &DensityMatrix, potential: &Potential, n_particles: f64) -> Result<OneBodyOperator> {
    let model = HfModel::on_grid(omega.grid(), potential, n_particles, ExchangeMode::Subtract)?;
    OneBodyOperator::new(*omega.grid(), model.hamiltonian(omega.matrix()))
}

/// Hartree-Fock energy of a grid density matrix, optionally with an external
/// potential.
pub fn hf_energy(omega: &DensityMatrix, potential: &Potential, n_particles: f64, v_ext: Option<&[f64]>) -> Result<f64> {
    let mut model = HfModel::on_grid(omega.grid(), potential, n_particles, ExchangeMode::Subtract)?;
    if let Some(v) = v_ext {
        model = model.with_external(v)?;
    }
    Ok(model.energy(omega.matrix()))
}

/// One row of the trajectory log.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HfLogRow {
    pub t: f64,
    pub trace: f64,
    pub energy: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    /// Largest normalized commutator ratio, `NaN` when not computed.
    pub semiclassical_c: f64,
}

#[derive(Debug, Clone)]
pub struct HFState {
    pub omega: CMat,
    pub time: f64,
    pub log: Vec<HfLogRow>,
    /// `(t, ω_t)` at every recorded step when requested.
    pub trajectory: Vec<(f64, CMat)>,
}

impl HFState {
    pub fn new(omega: CMat) -> Self {
        HFState {
            omega,
            time: 0.0,
            log: Vec::new(),
            trajectory: Vec::new(),
        }
    }

    /// The current state as a grid density matrix with trace `n_particles`.
    pub fn density(&self, grid: &Grid, n_particles: f64) -> Result<DensityMatrix> {
        make_density_clamped(OneBodyOperator::new(*grid, self.omega.clone())?, n_particles)
    }

    pub fn log_csv(&self) -> String {
        let mut out = String::from("t,trace,energy,eig_min,eig_max,semiclassical_C\n");
        for r in &self.log {
            out.push_str(&csvfmt::row(&[r.t, r.trace, r.energy, r.eig_min, r.eig_max, r.semiclassical_c]));
            out.push('\n');
        }
        out
    }
}

const MAX_FIXED_POINT_ITERATIONS: usize = 8;
const FIXED_POINT_TOLERANCE: f64 = 1e-12;
const FIXED_POINT_FAILURE: f64 = 1e-6;

/// One midpoint step: `ω' = e^{-iτh̄}ωe^{iτh̄}`, `τ = dt/ε`, with
/// `h̄ = h((ω+ω')/2)` found by fixed-point iteration.
pub fn hf_step(model: &HfModel, omega: &CMat, dt: f64) -> Result<CMat> {
    step_from(model, omega, omega.clone(), dt)
}

/// Midpoint step with a starting guess for the midpoint density.
fn step_from(model: &HfModel, omega: &CMat, guess: CMat, dt: f64) -> Result<CMat> {
    let tau = dt / model.epsilon;
    let mut half = guess;
    let mut next = omega.clone();
    let mut increment = f64::INFINITY;
    for _ in 0..MAX_FIXED_POINT_ITERATIONS {
        let u = unitary_propagator(&model.hamiltonian(&half), tau);
        next = linalg::conjugate_by(&u, omega);
        let new_half = (omega + &next).scale(0.5);
        increment = max_abs(&(&new_half - &half));
        half = new_half;
        if increment <= FIXED_POINT_TOLERANCE {
            break;
        }
    }
    if increment > FIXED_POINT_FAILURE {
        return Err(Error::NotConverged {
            what: format!("midpoint iteration at dt = {dt} (reduce the time step)"),
            residual: increment,
        });
    }
    Ok(linalg::hermitize(&next))
}

/// Computes the semiclassical constant of recorded states.
#[derive(Debug, Clone)]
pub struct SemiclassicalProbe {
    pub grid: Grid,
    pub probes: Vec<Vec<f64>>,
    pub n_particles: f64,
}

impl SemiclassicalProbe {
    pub fn constant(&self, omega: &CMat) -> Result<f64> {
        let d = make_density_clamped(OneBodyOperator::new(self.grid, omega.clone())?, self.n_particles)?;
        Ok(semiclassical_report(&d, &self.probes)?.max_ratio())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HfOptions {
    /// Nominal step; the actual step divides the interval evenly.
    pub dt: f64,
    pub record_every: usize,
    pub keep_states: bool,
}

impl HfOptions {
    pub fn new(dt: f64, record_every: usize) -> Self {
        HfOptions {
            dt,
            record_every,
            keep_states: false,
        }
    }
}

/// Integrate to `t_final` with steps of sign `dt` and size at most `|dt|`.
pub fn evolve_hf(
    model: &HfModel,
    omega0: &CMat,
    t_final: f64,
    options: &HfOptions,
    probe: Option<&SemiclassicalProbe>,
) -> Result<HFState> {
    if options.dt == 0.0 || !options.dt.is_finite() {
        return Err(Error::InvalidArgument("time step must be nonzero".into()));
    }
    if t_final < 0.0 {
        return Err(Error::InvalidArgument("final time must be nonnegative".into()));
    }
    let steps = (t_final / options.dt.abs() - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 {
        0.0
    } else {
        options.dt.signum() * t_final / steps as f64
    };
    let every = options.record_every.max(1);
    let mut state = HFState::new(omega0.clone());
    let record = |state: &mut HFState| -> Result<()> {
        let (values, _) = eigh(&state.omega);
        let row = HfLogRow {
            t: state.time,
            trace: linalg::trace(&state.omega).re,
            energy: model.energy(&state.omega),
            eig_min: values.first().copied().unwrap_or(0.0),
            eig_max: values.last().copied().unwrap_or(0.0),
            semiclassical_c: match probe {
                Some(p) => p.constant(&state.omega)?,
                None => f64::NAN,
            },
        };
        state.log.push(row);
        if options.keep_states {
            state.trajectory.push((state.time, state.omega.clone()));
        }
        Ok(())
    };
    record(&mut state)?;
    let mut previous: Option<CMat> = None;
    for step in 1..=steps {
        // Linear extrapolation of the midpoint from the previous step.
        let guess = match &previous {
            Some(p) => &state.omega * c(1.5) - p * c(0.5),
            None => state.omega.clone(),
        };
        let next = step_from(model, &state.omega, guess, dt)?;
        previous = Some(std::mem::replace(&mut state.omega, next));
        state.time = step as f64 * dt;
        if step % every == 0 || step == steps {
            record(&mut state)?;
        }
    }
    Ok(state)
}
