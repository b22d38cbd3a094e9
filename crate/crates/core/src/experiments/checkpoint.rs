//! Binary checkpoints of one-body density matrices.

use std::path::Path;

use serde::Serialize;

use crate::equilibrium::{le_floats, padded_header, parse_header, read_file, write_file, HEADER_LEN};
use crate::error::{Error, Result};
use crate::grid::{Grid, OneBodyOperator};
use crate::linalg::{self, eigh, CMat, C64};
use crate::states::{make_density_clamped, semiclassical_report, DensityMatrix};

/// A density matrix with the box it lives on. `dim` and `n` describe the
/// lattice; a few-mode state is stored with `dim = 1` and `n = d`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityCheckpoint {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub epsilon: f64,
    pub n_particles: f64,
    pub omega: CMat,
}

impl DensityCheckpoint {
    pub fn from_density(omega: &DensityMatrix) -> Self {
        let g = omega.grid();
        DensityCheckpoint {
            dim: g.dim(),
            n: g.n(),
            length: g.length(),
            epsilon: g.epsilon(),
            n_particles: omega.particle_number(),
            omega: omega.matrix().clone(),
        }
    }

    /// Header `FSDM1 dim n L ε N`, then `L`, `ε`, `N` as exact `f64`, then the
    /// matrix row-major as little-endian `(re, im)` pairs.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = format!(
            "FSDM1 {} {} {:.6e} {:.6e} {:.6e}",
            self.dim, self.n, self.length, self.epsilon, self.n_particles
        );
        let mut out = padded_header(&header);
        for x in [self.length, self.epsilon, self.n_particles] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        let size = self.omega.nrows();
        for i in 0..size {
            for j in 0..size {
                let z = self.omega[(i, j)];
                out.extend_from_slice(&z.re.to_le_bytes());
                out.extend_from_slice(&z.im.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let fields = parse_header(bytes, "FSDM1", path)?;
        if fields.len() < 2 {
            return Err(bad("header lacks dimensions"));
        }
        let dim: usize = fields[0].parse().map_err(|_| bad("bad dim"))?;
        let n: usize = fields[1].parse().map_err(|_| bad("bad n"))?;
        if !(1..=3).contains(&dim) || n == 0 || n > 8192 {
            return Err(bad("dimensions out of range"));
        }
        let size = n.pow(dim as u32);
        let payload = &bytes[HEADER_LEN..];
        if payload.len() != 8 * (3 + 2 * size * size) {
            return Err(bad("payload length does not match header"));
        }
        let floats = le_floats(payload);
        let omega = CMat::from_fn(size, size, |i, j| {
            let k = 3 + 2 * (i * size + j);
            C64::new(floats[k], floats[k + 1])
        });
        Ok(DensityCheckpoint {
            dim,
            n,
            length: floats[0],
            epsilon: floats[1],
            n_particles: floats[2],
            omega,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?, path)
    }

    /// The grid, when the lattice is a valid [`Grid`].
    pub fn grid(&self) -> Option<Grid> {
        Grid::new(self.dim, self.n, self.length, self.epsilon).ok()
    }

    /// Admissible density on the grid.
    pub fn to_density(&self) -> Result<DensityMatrix> {
        let grid = self
            .grid()
            .ok_or_else(|| Error::InvalidGrid(format!("no grid with dim {} and n {}", self.dim, self.n)))?;
        make_density_clamped(OneBodyOperator::new(grid, self.omega.clone())?, self.n_particles)
    }
}

/// Summary of a stored density matrix.
#[derive(Debug, Clone, Serialize)]
pub struct DensityDiagnostics {
    pub dim: usize,
    pub n: usize,
    pub length: f64,
    pub epsilon: f64,
    pub n_particles: f64,
    pub trace: f64,
    pub hermiticity_defect: f64,
    pub eig_min: f64,
    pub eig_max: f64,
    pub hs_norm: f64,
    /// Largest normalized commutator ratio, when the lattice is a grid.
    pub semiclassical_c: Option<f64>,
}

pub fn diagnose_density(cp: &DensityCheckpoint, probes: usize) -> Result<DensityDiagnostics> {
    let (values, _) = eigh(&cp.omega);
    let semiclassical_c = match cp.grid() {
        Some(grid) => {
            let d = cp.to_density()?;
            let p = crate::states::default_probes(&grid, probes);
            Some(semiclassical_report(&d, &p)?.max_ratio())
        }
        None => None,
    };
    Ok(DensityDiagnostics {
        dim: cp.dim,
        n: cp.n,
        length: cp.length,
        epsilon: cp.epsilon,
        n_particles: cp.n_particles,
        trace: linalg::trace(&cp.omega).re,
        hermiticity_defect: linalg::hermiticity_defect(&cp.omega),
        eig_min: values.first().copied().unwrap_or(0.0),
        eig_max: values.last().copied().unwrap_or(0.0),
        hs_norm: linalg::frobenius(&cp.omega),
        semiclassical_c,
    })
}
