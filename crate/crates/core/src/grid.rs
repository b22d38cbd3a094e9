//! Periodic discretization of the one-particle space.
//!
//! Operators are stored as matrices in the orthonormal position basis
//! `e_j = Δx^{-d/2} 1_{x_j}`, so a kernel `A(x, y)` becomes
//! `A_ij = Δx^d A(x_i, x_j)`. With this choice the Hilbert-Schmidt norm is the
//! Frobenius norm and the trace is the matrix trace, both approximating their
//! continuum counterparts.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::{fft_nd, signed_index};
use crate::linalg::{c, hermiticity_defect, max_abs, CMat, C64, I};

/// A periodic box `[0, L)^dim` sampled with `n` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dim: usize,
    n: usize,
    length: f64,
    epsilon: f64,
}

impl Grid {
    pub fn new(dim: usize, n: usize, length: f64, epsilon: f64) -> Result<Grid> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 2 || !n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "points per axis must be even and at least 2, got {n}"
            )));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::InvalidGrid(format!("box length must be positive, got {length}")));
        }
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidGrid(format!("epsilon must be positive, got {epsilon}")));
        }
        if n.pow(dim as u32) > 1 << 13 {
            return Err(Error::InvalidGrid(format!(
                "{n}^{dim} grid points exceed the dense operator budget"
            )));
        }
        Ok(Grid {
            dim,
            n,
            length,
            epsilon,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Same lattice with a different semiclassical parameter.
    pub fn with_epsilon(&self, epsilon: f64) -> Result<Grid> {
        Grid::new(self.dim, self.n, self.length, epsilon)
    }

    /// Total number of lattice points, `n^dim`.
    pub fn size(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Measure of one lattice cell, `Δx^dim`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn volume(&self) -> f64 {
        self.length.powi(self.dim as i32)
    }

    /// Points `jL/n` along one axis.
    pub fn axis_points(&self) -> Vec<f64> {
        (0..self.n).map(|j| j as f64 * self.spacing()).collect()
    }

    /// Momentum quantum `2π/L`.
    pub fn momentum_unit(&self) -> f64 {
        2.0 * PI / self.length
    }

    /// Momenta along one axis in ascending order, `2πk/L` for `k = -n/2..n/2`.
    pub fn momenta(&self) -> Vec<f64> {
        let half = (self.n / 2) as i64;
        (-half..half).map(|k| k as f64 * self.momentum_unit()).collect()
    }

    /// Per-axis indices of a flat (row-major) index.
    pub fn unflatten(&self, flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dim];
        let mut rest = flat;
        for a in (0..self.dim).rev() {
            idx[a] = rest % self.n;
            rest /= self.n;
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter().fold(0, |acc, &i| acc * self.n + i)
    }

    /// Coordinates of lattice point `flat`.
    pub fn point(&self, flat: usize) -> Vec<f64> {
        self.unflatten(flat)
            .into_iter()
            .map(|i| i as f64 * self.spacing())
            .collect()
    }

    /// Flat index of `x_i - x_j` reduced onto the lattice.
    pub fn difference_index(&self, i: usize, j: usize) -> usize {
        let a = self.unflatten(i);
        let b = self.unflatten(j);
        let diff: Vec<usize> = a
            .iter()
            .zip(&b)
            .map(|(&x, &y)| (x + self.n - y) % self.n)
            .collect();
        self.flatten(&diff)
    }

    /// Signed integer momentum indices of FFT bin `flat`.
    pub fn fft_mode(&self, flat: usize) -> Vec<i64> {
        self.unflatten(flat)
            .into_iter()
            .map(|k| signed_index(k, self.n))
            .collect()
    }

    /// Momentum vector of FFT bin `flat`.
    pub fn fft_momentum(&self, flat: usize) -> Vec<f64> {
        self.fft_mode(flat)
            .into_iter()
            .map(|k| k as f64 * self.momentum_unit())
            .collect()
    }

    /// FFT bin of integer mode `k` (each component in `-n/2..n/2`).
    pub fn fft_bin(&self, k: &[i64]) -> Result<usize> {
        if k.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "mode has {} components, grid has dimension {}",
                k.len(),
                self.dim
            )));
        }
        let half = (self.n / 2) as i64;
        let mut idx = Vec::with_capacity(self.dim);
        for &ka in k {
            if ka < -half || ka >= half {
                return Err(Error::InvalidArgument(format!(
                    "mode index {ka} outside the lattice -{half}..{half}"
                )));
            }
            idx.push(ka.rem_euclid(self.n as i64) as usize);
        }
        Ok(self.flatten(&idx))
    }

    /// Integer mode of a physical momentum vector, if it lies on the lattice.
    pub fn lattice_mode(&self, p: &[f64]) -> Result<Vec<i64>> {
        if p.len() != self.dim {
            return Err(Error::ShapeMismatch(format!(
                "momentum has {} components, grid has dimension {}",
                p.len(),
                self.dim
            )));
        }
        let mut k = Vec::with_capacity(self.dim);
        for &pa in p {
            let q = pa / self.momentum_unit();
            let r = q.round();
            if (q - r).abs() > 1e-9 {
                return Err(Error::InvalidArgument(format!("momentum {pa} is off the lattice")));
            }
            k.push(r as i64);
        }
        self.fft_bin(&k)?;
        Ok(k)
    }

    /// Continuum-normalized plane wave `L^{-d/2} e^{ip·x}` sampled on the lattice.
    pub fn plane_wave(&self, k: &[i64]) -> Result<Vec<C64>> {
        self.fft_bin(k)?;
        let norm = self.volume().sqrt().recip();
        let unit = self.momentum_unit();
        Ok((0..self.size())
            .map(|j| {
                let phase: f64 = self
                    .point(j)
                    .iter()
                    .zip(k)
                    .map(|(x, &ka)| x * ka as f64 * unit)
                    .sum();
                C64::from_polar(norm, phase)
            })
            .collect())
    }

    /// Grid inner product `Δx^d Σ_j conj(f_j) g_j`.
    pub fn inner_product(&self, f: &[C64], g: &[C64]) -> C64 {
        let s: C64 = f.iter().zip(g).map(|(a, b)| a.conj() * b).sum();
        s * self.cell_volume()
    }

    /// Matrix of a translation-invariant operator from its values `g(x_i - x_j)`.
    pub(crate) fn translation_invariant(&self, g: &[C64]) -> CMat {
        let size = self.size();
        CMat::from_fn(size, size, |i, j| g[self.difference_index(i, j)])
    }

    /// Fourier multiplier `s(p)` (indexed by FFT bin) as a position-basis matrix.
    pub fn fourier_multiplier(&self, symbol: &[C64]) -> CMat {
        let mut g = symbol.to_vec();
        fft_nd(&mut g, self.dim, self.n, true);
        let scale = 1.0 / self.size() as f64;
        for z in &mut g {
            *z *= scale;
        }
        self.translation_invariant(&g)
    }
}

/// A one-body operator in the orthonormal position basis of a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct OneBodyOperator {
    grid: Grid,
    matrix: CMat,
}

impl OneBodyOperator {
    pub fn new(grid: Grid, matrix: CMat) -> Result<Self> {
        let size = grid.size();
        if matrix.nrows() != size || matrix.ncols() != size {
            return Err(Error::ShapeMismatch(format!(
                "operator is {}x{}, grid needs {size}x{size}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(OneBodyOperator { grid, matrix })
    }

    pub fn zeros(grid: Grid) -> Self {
        let size = grid.size();
        OneBodyOperator {
            grid,
            matrix: CMat::zeros(size, size),
        }
    }

    pub fn identity(grid: Grid) -> Self {
        let size = grid.size();
        OneBodyOperator {
            grid,
            matrix: CMat::identity(size, size),
        }
    }

    /// Operator with integral kernel `k(x, y)`.
    pub fn from_kernel(grid: Grid, kernel: impl Fn(&[f64], &[f64]) -> C64) -> Self {
        let size = grid.size();
        let w = grid.cell_volume();
        let points: Vec<Vec<f64>> = (0..size).map(|j| grid.point(j)).collect();
        let matrix = CMat::from_fn(size, size, |i, j| kernel(&points[i], &points[j]) * w);
        OneBodyOperator { grid, matrix }
    }

    /// Multiplication by a sampled function.
    pub fn multiplication(grid: Grid, values: &[C64]) -> Result<Self> {
        if values.len() != grid.size() {
            return Err(Error::ShapeMismatch(format!(
                "{} samples for a grid of {} points",
                values.len(),
                grid.size()
            )));
        }
        let matrix = CMat::from_diagonal(&nalgebra::DVector::from_column_slice(values));
        Ok(OneBodyOperator { grid, matrix })
    }

    pub fn real_multiplication(grid: Grid, values: &[f64]) -> Result<Self> {
        let values: Vec<C64> = values.iter().map(|&x| c(x)).collect();
        Self::multiplication(grid, &values)
    }

    /// Multiplication by `e^{ip·x}` for the lattice mode `k`.
    pub fn plane_wave_multiplier(grid: Grid, k: &[i64]) -> Result<Self> {
        let scale = grid.volume().sqrt();
        let values: Vec<C64> = grid.plane_wave(k)?.into_iter().map(|z| z * scale).collect();
        Self::multiplication(grid, &values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn matrix(&self) -> &CMat {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMat {
        self.matrix
    }

    /// Kernel value `A(x_i, x_j)`.
    pub fn kernel(&self, i: usize, j: usize) -> C64 {
        self.matrix[(i, j)] / self.grid.cell_volume()
    }

    /// Apply to a sampled function.
    pub fn apply(&self, f: &[C64]) -> Vec<C64> {
        let v = nalgebra::DVector::from_column_slice(f);
        (&self.matrix * v).iter().copied().collect()
    }

    pub fn adjoint(&self) -> Self {
        OneBodyOperator {
            grid: self.grid,
            matrix: self.matrix.adjoint(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        hermiticity_defect(&self.matrix) <= 1e-12 * max_abs(&self.matrix).max(f64::MIN_POSITIVE)
    }

    pub(crate) fn same_grid(&self, other: &OneBodyOperator) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::ShapeMismatch("operators live on different grids".into()));
        }
        Ok(())
    }
}

/// Canonical operators on a grid.
#[derive(Debug, Clone)]
pub struct CanonicalOperators {
    /// Multiplication by each coordinate.
    pub position: Vec<OneBodyOperator>,
    /// `ε∂_a` for each axis, Nyquist mode removed.
    pub momentum: Vec<OneBodyOperator>,
    /// `-ε²Δ`.
    pub kinetic: OneBodyOperator,
}

pub fn canonical_operators(grid: &Grid) -> CanonicalOperators {
    let size = grid.size();
    let eps = grid.epsilon();
    let position = (0..grid.dim())
        .map(|a| {
            let values: Vec<f64> = (0..size).map(|j| grid.point(j)[a]).collect();
            OneBodyOperator::real_multiplication(*grid, &values).expect("shape matches")
        })
        .collect();
    let nyquist = -((grid.n() / 2) as i64);
    let momentum = (0..grid.dim())
        .map(|a| {
            let symbol: Vec<C64> = (0..size)
                .map(|b| {
                    if grid.fft_mode(b)[a] == nyquist {
                        C64::new(0.0, 0.0)
                    } else {
                        I * eps * grid.fft_momentum(b)[a]
                    }
                })
                .collect();
            OneBodyOperator::new(*grid, grid.fourier_multiplier(&symbol)).expect("shape matches")
        })
        .collect();
    let kinetic = OneBodyOperator::new(*grid, kinetic_matrix(grid)).expect("shape matches");
    CanonicalOperators {
        position,
        momentum,
        kinetic,
    }
}

/// `-ε²Δ` as a matrix.
pub fn kinetic_matrix(grid: &Grid) -> CMat {
    let eps2 = grid.epsilon().powi(2);
    let symbol: Vec<C64> = (0..grid.size())
        .map(|b| c(eps2 * grid.fft_momentum(b).iter().map(|p| p * p).sum::<f64>()))
        .collect();
    crate::linalg::hermitize(&grid.fourier_multiplier(&symbol))
}

/// Families of even two-body potentials on the torus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PotentialKind {
    /// `a Σ_images exp(-|x|²/2σ²)`.
    Gaussian { amplitude: f64, width: f64 },
    /// `c_0 + Σ_{m≥1} c_m Σ_a cos(2πm x_a/L)`.
    CosineSum { coefficients: Vec<f64> },
    /// Periodized screened interaction with Fourier transform
    /// `a·s_d/(|p|² + κ²)`, truncated to the sampling lattice.
    Yukawa { amplitude: f64, screening: f64 },
    /// Values at the lattice points of the grid it is used with.
    Tabulated { values: Vec<f64> },
}

impl PotentialKind {
    pub fn zero() -> Self {
        PotentialKind::CosineSum {
            coefficients: Vec::new(),
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidPotential(msg));
        match self {
            PotentialKind::Gaussian { amplitude, width } => {
                if !amplitude.is_finite() || !(*width > 0.0 && width.is_finite()) {
                    return bad(format!("gaussian needs finite amplitude and width > 0, got {amplitude}, {width}"));
                }
            }
            PotentialKind::CosineSum { coefficients } => {
                if coefficients.iter().any(|c| !c.is_finite()) {
                    return bad("cosine coefficients must be finite".into());
                }
            }
            PotentialKind::Yukawa {
                amplitude,
                screening,
            } => {
                if !amplitude.is_finite() || !(*screening > 0.0 && screening.is_finite()) {
                    return bad(format!("yukawa needs finite amplitude and screening > 0, got {amplitude}, {screening}"));
                }
            }
            PotentialKind::Tabulated { values } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("tabulated values must be finite".into());
                }
            }
        }
        Ok(())
    }

    /// Value at displacement `x` in a box of side `length`.
    ///
    /// Tabulated potentials have no off-lattice values and return an error.
    pub fn eval(&self, x: &[f64], length: f64) -> Result<f64> {
        self.validate()?;
        match self {
            PotentialKind::Gaussian { amplitude, width } => {
                let images = (8.0 * width / length).ceil() as i64 + 1;
                let mut prod = *amplitude;
                for &xa in x {
                    let s: f64 = (-images..=images)
                        .map(|m| {
                            let d = xa - m as f64 * length;
                            (-d * d / (2.0 * width * width)).exp()
                        })
                        .sum();
                    prod *= s;
                }
                Ok(prod)
            }
            PotentialKind::CosineSum { coefficients } => {
                let mut v = coefficients.first().copied().unwrap_or(0.0);
                for (m, cm) in coefficients.iter().enumerate().skip(1) {
                    for &xa in x {
                        v += cm * (2.0 * PI * m as f64 * xa / length).cos();
                    }
                }
                Ok(v)
            }
            PotentialKind::Yukawa { .. } => {
                let dim = x.len();
                let cutoff: i64 = if dim == 1 { 4096 } else { 24 };
                let unit = 2.0 * PI / length;
                let mut total = 0.0;
                let mut k = vec![-cutoff; dim];
                loop {
                    let p2: f64 = k.iter().map(|&ka| (ka as f64 * unit).powi(2)).sum();
                    let phase: f64 = k.iter().zip(x).map(|(&ka, xa)| ka as f64 * unit * xa).sum();
                    total += self.yukawa_symbol(p2, dim) * phase.cos();
                    let mut a = 0;
                    loop {
                        if a == dim {
                            return Ok(total / length.powi(dim as i32));
                        }
                        k[a] += 1;
                        if k[a] <= cutoff {
                            break;
                        }
                        k[a] = -cutoff;
                        a += 1;
                    }
                }
            }
            PotentialKind::Tabulated { .. } => Err(Error::InvalidPotential(
                "tabulated potential has no values off its lattice".into(),
            )),
        }
    }

    fn yukawa_symbol(&self, p2: f64, dim: usize) -> f64 {
        match self {
            PotentialKind::Yukawa {
                amplitude,
                screening,
            } => {
                let prefactor = match dim {
                    1 => 2.0 * screening,
                    2 => 2.0 * PI,
                    _ => 4.0 * PI,
                };
                amplitude * prefactor / (p2 + screening * screening)
            }
            _ => 0.0,
        }
    }
}

/// A potential sampled on a grid together with its Fourier coefficients.
#[derive(Debug, Clone)]
pub struct Potential {
    kind: PotentialKind,
    grid: Grid,
    samples: Vec<f64>,
    fourier: Vec<f64>,
    summability: f64,
}

impl Potential {
    pub fn new(kind: PotentialKind, grid: &Grid) -> Result<Potential> {
        kind.validate()?;
        let size = grid.size();
        let samples: Vec<f64> = match &kind {
            PotentialKind::Tabulated { values } => {
                if values.len() != size {
                    return Err(Error::ShapeMismatch(format!(
                        "tabulated potential has {} values, grid has {size} points",
                        values.len()
                    )));
                }
                values.clone()
            }
            PotentialKind::Yukawa { .. } => {
                let mut g: Vec<C64> = (0..size)
                    .map(|b| {
                        let p2: f64 = grid.fft_momentum(b).iter().map(|p| p * p).sum();
                        c(kind.yukawa_symbol(p2, grid.dim()))
                    })
                    .collect();
                fft_nd(&mut g, grid.dim(), grid.n(), true);
                let scale = 1.0 / grid.volume();
                g.iter().map(|z| z.re * scale).collect()
            }
            _ => (0..size)
                .map(|j| kind.eval(&grid.point(j), grid.length()))
                .collect::<Result<_>>()?,
        };
        let mut spectrum: Vec<C64> = samples.iter().map(|&v| c(v)).collect();
        fft_nd(&mut spectrum, grid.dim(), grid.n(), false);
        let w = grid.cell_volume();
        let scale = spectrum.iter().fold(0.0f64, |m, z| m.max(z.norm())).max(1.0) * w;
        if spectrum.iter().any(|z| z.im.abs() * w > 1e-9 * scale) {
            return Err(Error::InvalidPotential(
                "potential is not even, its Fourier transform is not real".into(),
            ));
        }
        let fourier: Vec<f64> = spectrum.iter().map(|z| z.re * w).collect();
        let summability = (0..size)
            .map(|b| {
                let p: f64 = grid.fft_momentum(b).iter().map(|p| p * p).sum::<f64>().sqrt();
                (1.0 + p).powi(2) * fourier[b].abs()
            })
            .sum();
        Ok(Potential {
            kind,
            grid: *grid,
            samples,
            fourier,
            summability,
        })
    }

    pub fn zero(grid: &Grid) -> Potential {
        Potential::new(PotentialKind::zero(), grid).expect("zero potential is valid")
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// `V(x_j)` at the lattice points.
    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// `V̂(p) = Δx^d Σ_j V(x_j) e^{-ip·x_j}`, indexed by FFT bin.
    pub fn fourier(&self) -> &[f64] {
        &self.fourier
    }

    /// `Σ_p (1+|p|)² |V̂(p)|` over the lattice.
    pub fn summability(&self) -> f64 {
        self.summability
    }

    pub fn is_zero(&self) -> bool {
        self.samples.iter().all(|&v| v == 0.0)
    }

    /// Matrix `V(x_i - x_j)`.
    pub fn pair_matrix(&self) -> DMatrix<f64> {
        let size = self.grid.size();
        DMatrix::from_fn(size, size, |i, j| {
            self.samples[self.grid.difference_index(i, j)]
        })
    }

    pub(crate) fn check_grid(&self, grid: &Grid) -> Result<()> {
        if self.grid.dim() != grid.dim()
            || self.grid.n() != grid.n()
            || self.grid.length() != grid.length()
        {
            return Err(Error::ShapeMismatch(
                "potential was sampled on a different lattice".into(),
            ));
        }
        Ok(())
    }
}

/// `(V*ρ)(x) = ∫V(x-y)ρ(y)dy`, evaluated spectrally.
pub fn apply_convolution(grid: &Grid, potential: &Potential, density: &[f64]) -> Result<Vec<f64>> {
    potential.check_grid(grid)?;
    if density.len() != grid.size() {
        return Err(Error::ShapeMismatch(format!(
            "density has {} samples, grid has {} points",
            density.len(),
            grid.size()
        )));
    }
    let mut data: Vec<C64> = density.iter().map(|&x| c(x)).collect();
    fft_nd(&mut data, grid.dim(), grid.n(), false);
    for (z, v) in data.iter_mut().zip(potential.fourier()) {
        *z *= *v;
    }
    fft_nd(&mut data, grid.dim(), grid.n(), true);
    let scale = 1.0 / grid.size() as f64;
    Ok(data.iter().map(|z| z.re * scale).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_roundtrip() {
        let g = Grid::new(3, 4, 1.0, 1.0).unwrap();
        for flat in 0..g.size() {
            assert_eq!(g.flatten(&g.unflatten(flat)), flat);
        }
    }

    #[test]
    fn difference_index_wraps() {
        let g = Grid::new(1, 8, 1.0, 1.0).unwrap();
        assert_eq!(g.difference_index(1, 3), 6);
        assert_eq!(g.difference_index(5, 5), 0);
    }

    #[test]
    fn yukawa_series_matches_closed_form_in_one_dimension() {
        let kind = PotentialKind::Yukawa {
            amplitude: 1.0,
            screening: 2.0,
        };
        let length = 2.0 * PI;
        for &x in &[0.3, 1.0, 2.5] {
            let closed = (2.0 * (length / 2.0 - x)).cosh() / (2.0 * length / 2.0).sinh();
            let series = kind.eval(&[x], length).unwrap();
            assert!((closed - series).abs() < 1e-3, "{closed} vs {series}");
        }
    }
}
