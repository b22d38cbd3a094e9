//! Truncation of the one-particle space to the lowest momentum modes.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::grid::PotentialKind;
use crate::hf::{ExchangeMode, HfModel};
use crate::linalg::{c, CMat, C64};

/// The span of the `d` plane waves of lowest `|p|` on a one-dimensional box,
/// represented on the dual lattice `x_j = jL/d`.
///
/// In this basis the kinetic energy is `F diag(ε²p²) F†` and the interaction
/// acts locally as `V(x_i - x_j)`, so Fock-space operators use the same
/// formulas as on a grid with `d` points. For even `d` this coincides with a
/// grid of `n = d`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeSpace {
    modes: usize,
    length: f64,
    epsilon: f64,
}

impl ModeSpace {
    pub fn new(modes: usize, length: f64, epsilon: f64) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument("mode space needs at least one mode".into()));
        }
        if !(length > 0.0) || !(epsilon > 0.0) {
            return Err(Error::InvalidArgument("length and epsilon must be positive".into()));
        }
        Ok(ModeSpace {
            modes,
            length,
            epsilon,
        })
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Integer momenta: `-d/2..d/2` for even `d`, symmetric for odd `d`.
    pub fn momentum_indices(&self) -> Vec<i64> {
        let d = self.modes as i64;
        let lo = -(d / 2);
        (lo..lo + d).collect()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.modes)
            .map(|j| j as f64 * self.length / self.modes as f64)
            .collect()
    }

    /// Columns are the plane waves in the position basis.
    pub fn fourier(&self) -> CMat {
        let d = self.modes;
        let ks = self.momentum_indices();
        let xs = self.positions();
        let norm = 1.0 / (d as f64).sqrt();
        CMat::from_fn(d, d, |j, a| {
            C64::from_polar(norm, 2.0 * PI * ks[a] as f64 * xs[j] / self.length)
        })
    }

    pub fn kinetic(&self) -> CMat {
        let f = self.fourier();
        let unit = 2.0 * PI / self.length;
        let energies: Vec<C64> = self
            .momentum_indices()
            .iter()
            .map(|&k| c((self.epsilon * k as f64 * unit).powi(2)))
            .collect();
        let diag = CMat::from_diagonal(&nalgebra::DVector::from_vec(energies));
        crate::linalg::hermitize(&(&f * diag * f.adjoint()))
    }

    /// `V(x_i - x_j)` on the dual lattice.
    pub fn pair_matrix(&self, kind: &PotentialKind) -> Result<DMatrix<f64>> {
        let xs = self.positions();
        let d = self.modes;
        let mut m = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = kind.eval(&[xs[i] - xs[j]], self.length)?;
            }
        }
        Ok(m)
    }

    pub fn hf_model(&self, kind: &PotentialKind, n_particles: f64, exchange: ExchangeMode) -> Result<HfModel> {
        HfModel::new(self.kinetic(), self.pair_matrix(kind)?, n_particles, self.epsilon, exchange)
    }

    /// `F† A F`.
    pub fn to_momentum(&self, a: &CMat) -> CMat {
        let f = self.fourier();
        f.adjoint() * a * f
    }

    /// `F A F†`.
    pub fn from_momentum(&self, a: &CMat) -> CMat {
        let f = self.fourier();
        &f * a * f.adjoint()
    }
}
