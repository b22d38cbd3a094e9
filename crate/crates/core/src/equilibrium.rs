//! Thermal initial data: Thomas-Fermi densities, Fermi-Dirac phase-space
//! densities, and the Weyl/Wigner correspondence on a one-dimensional torus.
//!
//! Phase-space densities are normalized so that `(2πε)^{-1} ∫∫ M dx dv = N`.
//! Velocities are `v = εp`.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::csvfmt;
use crate::error::{Error, Result};
use crate::fft::{fft_1d, signed_index};
use crate::grid::{apply_convolution, Grid, OneBodyOperator, Potential};
use crate::linalg::{c, hermitize, CMat, C64};
use crate::states::{make_density_clamped, DensityMatrix};

/// Volume of the unit ball in `d ≤ 3` dimensions.
fn unit_ball_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => PI,
        _ => 4.0 * PI / 3.0,
    }
}

/// Thomas-Fermi constant `(2π)² ω_d^{-2/d}` of the kinetic term `ρ^{1+2/d}`.
pub fn tf_constant(tf_dim: usize) -> f64 {
    (2.0 * PI).powi(2) * unit_ball_volume(tf_dim).powf(-2.0 / tf_dim as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThomasFermiSolution {
    /// Density with `∫ρ = N`.
    pub density: Vec<f64>,
    pub lambda: f64,
    /// Sup norm of the first-order condition on the support.
    pub residual: f64,
    pub iterations: usize,
}

const TF_MAX_ITERATIONS: usize = 10_000;
const TF_DAMPING: f64 = 0.5;
const TF_MIN_DAMPING: f64 = 1e-4;

/// Minimize the Thomas-Fermi functional
/// `∫ c₁ (d'/(d'+2)) ρ^{1+2/d'} + V_ext ρ + (2N)^{-1} ∫∫ V(x-y) ρ(x)ρ(y)`
/// with `c₁ = ε² tf_constant(d')` under `∫ρ = N`.
pub fn solve_thomas_fermi(
    grid: &Grid,
    v_ext: &[f64],
    potential: &Potential,
    n_particles: f64,
    tf_dim: usize,
) -> Result<ThomasFermiSolution> {
    if v_ext.len() != grid.size() {
        return Err(Error::ShapeMismatch(format!(
            "external potential has {} samples, grid has {} points",
            v_ext.len(),
            grid.size()
        )));
    }
    if !(n_particles > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "particle number must be positive, got {n_particles}"
        )));
    }
    if !(1..=3).contains(&tf_dim) {
        return Err(Error::InvalidArgument(format!(
            "Thomas-Fermi dimension must be 1, 2 or 3, got {tf_dim}"
        )));
    }
    let c1 = grid.epsilon().powi(2) * tf_constant(tf_dim);
    let w = grid.cell_volume();
    let expo = tf_dim as f64 / 2.0;
    let profile = |phi: &[f64], lambda: f64| -> Vec<f64> {
        phi.iter()
            .map(|&p| ((lambda - p).max(0.0) / c1).powf(expo))
            .collect()
    };
    let mass = |phi: &[f64], lambda: f64| -> f64 { profile(phi, lambda).iter().sum::<f64>() * w };
    let solve_lambda = |phi: &[f64]| -> f64 {
        let mut lo = phi.iter().copied().fold(f64::INFINITY, f64::min);
        let mut step = 1.0f64.max(c1);
        let mut hi = lo + step;
        while mass(phi, hi) < n_particles {
            lo = hi;
            step *= 2.0;
            hi += step;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if mass(phi, mid) < n_particles {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    };
    let field = |rho: &[f64]| -> Result<Vec<f64>> {
        let conv = apply_convolution(grid, potential, rho)?;
        Ok(v_ext
            .iter()
            .zip(conv)
            .map(|(v, u)| v + u / n_particles)
            .collect())
    };
    let residual = |rho: &[f64], phi: &[f64], lambda: f64| -> f64 {
        let peak = rho.iter().copied().fold(0.0, f64::max);
        rho.iter()
            .zip(phi)
            .filter(|(&r, _)| r > 1e-12 * peak)
            .map(|(&r, &p)| (c1 * r.powf(1.0 / expo) + p - lambda).abs())
            .fold(0.0, f64::max)
    };

    let mut rho = vec![n_particles / grid.volume(); grid.size()];
    let interacting = !potential.is_zero();
    let mut last = f64::INFINITY;
    let mut damping = TF_DAMPING;
    let mut last_step = f64::INFINITY;
    for iteration in 1..=TF_MAX_ITERATIONS {
        let phi = field(&rho)?;
        let lambda = solve_lambda(&phi);
        let target = profile(&phi, lambda);
        let norm: f64 = target.iter().sum::<f64>() * w;
        let target: Vec<f64> = target.iter().map(|x| x * n_particles / norm).collect();
        if !interacting {
            let res = residual(&target, &phi, lambda);
            return Ok(ThomasFermiSolution {
                density: target,
                lambda,
                residual: res,
                iterations: iteration,
            });
        }
        last = residual(&rho, &phi, lambda);
        if last <= 1e-10 {
            return Ok(ThomasFermiSolution {
                density: rho,
                lambda,
                residual: last,
                iterations: iteration,
            });
        }
        // Back off when the update grows, which signals oscillation.
        let step: f64 = rho.iter().zip(&target).map(|(r, t)| (r - t).abs()).sum::<f64>() * w;
        if step > last_step {
            damping = (0.5 * damping).max(TF_MIN_DAMPING);
        } else {
            damping = (1.05 * damping).min(TF_DAMPING);
        }
        last_step = step;
        for (r, t) in rho.iter_mut().zip(&target) {
            *r = (1.0 - damping) * *r + damping * t;
        }
    }
    let phi = field(&rho)?;
    let lambda = solve_lambda(&phi);
    let res = residual(&rho, &phi, lambda);
    if res <= 1e-6 {
        return Ok(ThomasFermiSolution {
            density: rho,
            lambda,
            residual: res,
            iterations: TF_MAX_ITERATIONS,
        });
    }
    Err(Error::NotConverged {
        what: "Thomas-Fermi fixed point".into(),
        residual: res.min(last),
    })
}

/// Parameters of `M(x,v) = g_{T,μ}(v² - c ρ(x)^{2/d'})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FermiDiracParams {
    pub temperature: f64,
    pub mu: f64,
    pub coupling: f64,
    pub tf_dim: usize,
}

impl FermiDiracParams {
    /// Coupling `ε² tf_constant(d')`, which matches the Thomas-Fermi profile.
    pub fn semiclassical(temperature: f64, epsilon: f64, tf_dim: usize) -> Self {
        FermiDiracParams {
            temperature,
            mu: 0.0,
            coupling: epsilon * epsilon * tf_constant(tf_dim),
            tf_dim,
        }
    }
}

/// Logistic occupation `(1 + e^{(E-μ)/T})^{-1}`.
pub fn fermi_dirac(energy: f64, temperature: f64, mu: f64) -> f64 {
    let z = (energy - mu) / temperature;
    if z > 0.0 {
        let e = (-z).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + z.exp())
    }
}

/// Uniform velocity lattice `v_j = (j - count/2)·spacing`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VelocityGrid {
    count: usize,
    spacing: f64,
}

impl VelocityGrid {
    pub fn new(count: usize, spacing: f64) -> Result<Self> {
        if count < 2 || !count.is_multiple_of(2) {
            return Err(Error::VelocityGrid(format!(
                "velocity count must be even and at least 2, got {count}"
            )));
        }
        if !(spacing > 0.0 && spacing.is_finite()) {
            return Err(Error::VelocityGrid(format!("velocity spacing must be positive, got {spacing}")));
        }
        Ok(VelocityGrid { count, spacing })
    }

    /// `oversample · n` velocities of spacing `εΔp/oversample`, covering the
    /// velocities `εp` of every lattice momentum.
    pub fn for_grid(grid: &Grid, oversample: usize) -> Result<Self> {
        let r = oversample.max(1);
        Self::new(
            r * grid.n(),
            grid.epsilon() * grid.momentum_unit() / r as f64,
        )
    }

    /// Spacing `εΔp/oversample`, extent at least `[-v_max, v_max]` and at least
    /// the operator window.
    pub fn covering(grid: &Grid, v_max: f64, oversample: usize) -> Result<Self> {
        let r = oversample.max(1);
        let spacing = grid.epsilon() * grid.momentum_unit() / r as f64;
        let half = ((v_max / spacing).ceil() as usize + 1).max(r * grid.n() / 2);
        Self::new(2 * half, spacing)
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn value(&self, j: usize) -> f64 {
        (j as f64 - (self.count / 2) as f64) * self.spacing
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|j| self.value(j)).collect()
    }

    pub fn min(&self) -> f64 {
        self.value(0)
    }

    /// Length of the periodic window spanned by the lattice.
    pub fn window(&self) -> f64 {
        self.count as f64 * self.spacing
    }
}

/// Real function `W(x, v)` on a one-dimensional position grid times a
/// velocity grid, stored x-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseSpaceDensity {
    grid: Grid,
    velocities: VelocityGrid,
    values: Vec<f64>,
}

impl PhaseSpaceDensity {
    pub fn new(grid: Grid, velocities: VelocityGrid, values: Vec<f64>) -> Result<Self> {
        if grid.dim() != 1 {
            return Err(Error::InvalidGrid(
                "phase-space densities are one-dimensional".into(),
            ));
        }
        if values.len() != grid.n() * velocities.count() {
            return Err(Error::ShapeMismatch(format!(
                "{} values for a {}x{} phase grid",
                values.len(),
                grid.n(),
                velocities.count()
            )));
        }
        Ok(PhaseSpaceDensity {
            grid,
            velocities,
            values,
        })
    }

    pub fn from_fn(grid: Grid, velocities: VelocityGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let xs = grid.axis_points();
        let vs = velocities.values();
        let values = xs
            .iter()
            .flat_map(|&x| vs.iter().map(move |&v| (x, v)))
            .map(|(x, v)| f(x, v))
            .collect();
        Self::new(grid, velocities, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn velocities(&self) -> &VelocityGrid {
        &self.velocities
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn nx(&self) -> usize {
        self.grid.n()
    }

    pub fn nv(&self) -> usize {
        self.velocities.count()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.nv() + j]
    }

    pub fn cell_area(&self) -> f64 {
        self.grid.spacing() * self.velocities.spacing()
    }

    /// `∫∫ W dx dv`.
    pub fn mass(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_area()
    }

    /// `(2πε)^{-1} ∫∫ W`, the particle number of the convention.
    pub fn particle_number(&self) -> f64 {
        self.mass() / (2.0 * PI * self.grid.epsilon())
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// `∫ W dv` per lattice point.
    pub fn spatial_density(&self) -> Vec<f64> {
        let dv = self.velocities.spacing();
        self.values
            .chunks(self.nv())
            .map(|row| row.iter().sum::<f64>() * dv)
            .collect()
    }

    pub fn same_lattice(&self, other: &PhaseSpaceDensity) -> bool {
        self.grid.n() == other.grid.n()
            && self.grid.length() == other.grid.length()
            && self.velocities == other.velocities
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,v,w\n");
        let xs = self.grid.axis_points();
        let vs = self.velocities.values();
        for (i, x) in xs.iter().enumerate() {
            for (j, v) in vs.iter().enumerate() {
                out.push_str(&csvfmt::row(&[*x, *v, self.at(i, j)]));
                out.push('\n');
            }
        }
        out
    }

    /// Binary form: a 64-byte text header, three little-endian `f64`
    /// (`L`, `dv`, `ε`), then the values x-major.
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = format!(
            "FSPS1 {} {} {:.6e} {:.6e} {:.6e}",
            self.nx(),
            self.nv(),
            self.grid.length(),
            self.velocities.spacing(),
            self.grid.epsilon()
        );
        let mut out = padded_header(&header);
        for x in [self.grid.length(), self.velocities.spacing(), self.grid.epsilon()] {
            out.extend_from_slice(&x.to_le_bytes());
        }
        for x in &self.values {
            out.extend_from_slice(&x.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let bad = |reason: &str| Error::Format {
            path: path.to_path_buf(),
            reason: reason.to_string(),
        };
        let fields = parse_header(bytes, "FSPS1", path)?;
        if fields.len() < 2 {
            return Err(bad("header lacks dimensions"));
        }
        let nx: usize = fields[0].parse().map_err(|_| bad("bad nx"))?;
        let nv: usize = fields[1].parse().map_err(|_| bad("bad nv"))?;
        let floats = le_floats(&bytes[HEADER_LEN..]);
        if floats.len() != 3 + nx * nv {
            return Err(bad("payload length does not match header"));
        }
        let grid = Grid::new(1, nx, floats[0], floats[2]).map_err(|e| bad(&e.to_string()))?;
        let velocities = VelocityGrid::new(nv, floats[1]).map_err(|e| bad(&e.to_string()))?;
        PhaseSpaceDensity::new(grid, velocities, floats[3..].to_vec())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_file(path, &self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?, path)
    }
}

pub(crate) const HEADER_LEN: usize = 64;

pub(crate) fn padded_header(text: &str) -> Vec<u8> {
    let mut bytes = text.as_bytes().to_vec();
    bytes.truncate(HEADER_LEN - 1);
    bytes.resize(HEADER_LEN - 1, b' ');
    bytes.push(b'\n');
    bytes
}

pub(crate) fn parse_header(bytes: &[u8], magic: &str, path: &Path) -> Result<Vec<String>> {
    let bad = |reason: &str| Error::Format {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < HEADER_LEN || bytes[HEADER_LEN - 1] != b'\n' {
        return Err(bad("missing 64-byte header"));
    }
    let text = std::str::from_utf8(&bytes[..HEADER_LEN - 1]).map_err(|_| bad("header is not text"))?;
    let mut fields = text.split_whitespace();
    if fields.next() != Some(magic) {
        return Err(bad(&format!("expected magic {magic}")));
    }
    Ok(fields.map(str::to_string).collect())
}

pub(crate) fn le_floats(bytes: &[u8]) -> Vec<f64> {
    bytes
        .chunks_exact(8)
        .map(|b| f64::from_le_bytes(b.try_into().expect("chunk of 8")))
        .collect()
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(bytes).map_err(|e| Error::io(path, e))
}

pub(crate) fn read_file(path: &Path) -> Result<Vec<u8>> {
    let mut f = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    f.read_to_end(&mut bytes).map_err(|e| Error::io(path, e))?;
    Ok(bytes)
}

/// Sample `M(x,v) = g_{T,μ}(v² - c ρ_TF(x)^{2/d'})`.
///
/// With `target = Some(N)` the chemical potential is found by bisection on
/// `[-1e6, 1e6]` so that `(2πε)^{-1}∫∫M = N`; otherwise `params.mu` is used.
/// Returns the density and the chemical potential.
pub fn fermi_dirac_density(
    rho_tf: &[f64],
    params: &FermiDiracParams,
    grid: &Grid,
    velocities: &VelocityGrid,
    target: Option<f64>,
) -> Result<(PhaseSpaceDensity, f64)> {
    if !(params.temperature > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "temperature must be positive, got {}",
            params.temperature
        )));
    }
    if rho_tf.len() != grid.n() || grid.dim() != 1 {
        return Err(Error::ShapeMismatch(
            "Thomas-Fermi density must live on the one-dimensional position grid".into(),
        ));
    }
    let expo = 2.0 / params.tf_dim.max(1) as f64;
    let shift: Vec<f64> = rho_tf
        .iter()
        .map(|&r| params.coupling * r.max(0.0).powf(expo))
        .collect();
    let vs = velocities.values();
    let sample = |mu: f64| -> Vec<f64> {
        shift
            .iter()
            .flat_map(|&s| vs.iter().map(move |&v| fermi_dirac(v * v - s, params.temperature, mu)))
            .collect()
    };
    let norm = grid.spacing() * velocities.spacing() / (2.0 * PI * grid.epsilon());
    let count = |mu: f64| sample(mu).iter().sum::<f64>() * norm;
    let mu = match target {
        None => params.mu,
        Some(n) => {
            let (mut lo, mut hi) = (-1e6, 1e6);
            if count(hi) < n || count(lo) > n {
                return Err(Error::InvalidArgument(format!(
                    "particle number {n} unreachable for chemical potentials in [-1e6, 1e6]"
                )));
            }
            for _ in 0..300 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi || hi - lo <= 1e-13 * mid.abs().max(1.0) {
                    break;
                }
                if count(mid) < n {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        }
    };
    let density = PhaseSpaceDensity::new(*grid, *velocities, sample(mu))?;
    Ok((density, mu))
}

/// Periodic trigonometric interpolant of uniform samples, Nyquist term dropped.
struct PeriodicInterpolant {
    origin: f64,
    period: f64,
    coefficients: Vec<(i64, C64)>,
}

impl PeriodicInterpolant {
    fn new(samples: &[C64], origin: f64, spacing: f64) -> Self {
        let m = samples.len();
        let mut spec = samples.to_vec();
        fft_1d(&mut spec, false);
        let coefficients = spec
            .iter()
            .enumerate()
            .filter_map(|(k, z)| {
                let s = signed_index(k, m);
                if m.is_multiple_of(2) && s == -((m / 2) as i64) {
                    None
                } else {
                    Some((s, z / m as f64))
                }
            })
            .collect();
        PeriodicInterpolant {
            origin,
            period: m as f64 * spacing,
            coefficients,
        }
    }

    fn eval(&self, v: f64) -> C64 {
        let theta = 2.0 * PI * (v - self.origin) / self.period;
        self.coefficients
            .iter()
            .map(|&(k, z)| z * C64::from_polar(1.0, k as f64 * theta))
            .sum()
    }
}

/// Position index on a uniform lattice if `v` is (numerically) a lattice point.
fn lattice_index(v: f64, origin: f64, spacing: f64, count: usize) -> Option<usize> {
    let t = (v - origin) / spacing;
    let r = t.round();
    if (t - r).abs() < 1e-9 && r >= 0.0 && (r as usize) < count {
        Some(r as usize)
    } else {
        None
    }
}

/// Sorted-order index `k + n/2` of momentum `k`, wrapped into the lattice.
fn wrap_mode(k: i64, n: usize) -> usize {
    let half = (n / 2) as i64;
    ((k + half).rem_euclid(n as i64)) as usize
}

/// Unitary from the momentum basis (ascending `k`) to the position basis.
fn momentum_basis(grid: &Grid) -> CMat {
    let n = grid.n();
    let norm = 1.0 / (n as f64).sqrt();
    let xs = grid.axis_points();
    let half = (n / 2) as i64;
    CMat::from_fn(n, n, |j, a| {
        let p = (a as i64 - half) as f64 * grid.momentum_unit();
        C64::from_polar(norm, p * xs[j])
    })
}

/// x-Fourier coefficients `M̂_q(v_j) = n^{-1} Σ_i M(x_i, v_j) e^{-iqΔp x_i}`,
/// returned as `[fft bin q][velocity j]`.
fn position_transform(m: &PhaseSpaceDensity) -> Vec<Vec<C64>> {
    let (nx, nv) = (m.nx(), m.nv());
    let mut out = vec![vec![C64::new(0.0, 0.0); nv]; nx];
    let mut line = vec![C64::new(0.0, 0.0); nx];
    for j in 0..nv {
        for (i, slot) in line.iter_mut().enumerate() {
            *slot = c(m.at(i, j));
        }
        fft_1d(&mut line, false);
        for (row, z) in out.iter_mut().zip(&line) {
            row[j] = z / nx as f64;
        }
    }
    out
}

/// Weyl quantization `Op(M)` with kernel `(2πε)^{-1}∫dv M((x+y)/2, v) e^{iv(x-y)/ε}`.
///
/// In the momentum basis the matrix element between `k_a = k_b + q` and `k_b`
/// is the x-Fourier coefficient `M̂_q` evaluated at the mean velocity
/// `ε(k_a+k_b)Δp/2`; momenta differing by `n/2` are not coupled. Velocities off
/// the sampling lattice are obtained by periodic trigonometric interpolation.
/// The result is clamped into an admissible density with trace `n_particles`.
pub fn weyl_quantize(m: &PhaseSpaceDensity, grid: &Grid, n_particles: f64) -> Result<DensityMatrix> {
    let matrix = weyl_matrix(m, grid)?;
    let op = OneBodyOperator::new(*grid, matrix)?;
    make_density_clamped(op, n_particles)
}

/// The Hermitian Weyl operator before any clamping.
pub fn weyl_matrix(m: &PhaseSpaceDensity, grid: &Grid) -> Result<CMat> {
    if grid.dim() != 1 || m.nx() != grid.n() || m.grid().length() != grid.length() {
        return Err(Error::ShapeMismatch(
            "phase-space density and operator grid differ".into(),
        ));
    }
    let n = grid.n();
    let unit = grid.epsilon() * grid.momentum_unit();
    let vel = m.velocities();
    if vel.spacing() > unit * (1.0 + 1e-9) {
        return Err(Error::VelocityGrid(format!(
            "velocity spacing {} exceeds εΔp = {unit}",
            vel.spacing()
        )));
    }
    let needed_lo = -(n as f64) / 2.0 * unit;
    let needed_hi = (n as f64 / 2.0 - 0.5) * unit;
    let vmax = vel.value(vel.count() - 1);
    let tol = 1e-9 * unit;
    if vel.min() > needed_lo + tol || vmax + vel.spacing() < needed_hi - tol {
        return Err(Error::VelocityGrid(format!(
            "velocity range [{}, {vmax}] does not cover the operator window [{needed_lo}, {needed_hi}]",
            vel.min()
        )));
    }
    let coeffs = position_transform(m);
    let half = (n / 2) as i64;
    let mut omega_hat = CMat::zeros(n, n);
    for (bin, samples) in coeffs.iter().enumerate() {
        let q = signed_index(bin, n);
        if q == -half {
            continue;
        }
        let interp = PeriodicInterpolant::new(samples, vel.min(), vel.spacing());
        for s in -half..half {
            let v = (s as f64 + q as f64 / 2.0) * unit;
            let value = match lattice_index(v, vel.min(), vel.spacing(), vel.count()) {
                Some(j) => samples[j],
                None => interp.eval(v),
            };
            omega_hat[(wrap_mode(s + q, n), wrap_mode(s, n))] = value;
        }
    }
    let f = momentum_basis(grid);
    Ok(hermitize(&(&f * omega_hat * f.adjoint())))
}

/// Result of a Wigner transform.
#[derive(Debug, Clone)]
pub struct WignerOutput {
    pub density: PhaseSpaceDensity,
    /// Largest discarded imaginary part.
    pub imaginary_residue: f64,
    /// `∫∫W - 2πε tr ω`.
    pub mass_defect: f64,
}

/// Wigner transform `W(x,v) = (2π)^{-1}∫dy ω(x+εy/2, x-εy/2) e^{iyv}`,
/// normalized so that `∫∫W dx dv = 2πε tr ω`. Inverse of [`weyl_matrix`] on
/// band-limited data.
pub fn wigner_transform(omega: &CMat, grid: &Grid, velocities: &VelocityGrid) -> Result<WignerOutput> {
    if grid.dim() != 1 || omega.nrows() != grid.n() {
        return Err(Error::ShapeMismatch(
            "Wigner transform needs a one-dimensional grid operator".into(),
        ));
    }
    let n = grid.n();
    let unit = grid.epsilon() * grid.momentum_unit();
    let f = momentum_basis(grid);
    let omega_hat = f.adjoint() * omega * &f;
    let half = (n / 2) as i64;
    let window_lo = -(n as f64) / 2.0 * unit;
    let window_hi = n as f64 / 2.0 * unit;
    let nv = velocities.count();
    let vs = velocities.values();
    // spectrum[q bin][velocity]
    let mut spectrum = vec![vec![C64::new(0.0, 0.0); nv]; n];
    for (bin, row) in spectrum.iter_mut().enumerate() {
        let q = signed_index(bin, n);
        if q == -half {
            continue;
        }
        let samples: Vec<C64> = (-half..half)
            .map(|s| omega_hat[(wrap_mode(s + q, n), wrap_mode(s, n))])
            .collect();
        let origin = (-(half as f64) + q as f64 / 2.0) * unit;
        let interp = PeriodicInterpolant::new(&samples, origin, unit);
        for (j, &v) in vs.iter().enumerate() {
            if v < window_lo - 1e-12 * unit || v >= window_hi - 1e-12 * unit {
                continue;
            }
            row[j] = match lattice_index(v, origin, unit, n) {
                Some(idx) => samples[idx],
                None => {
                    let t = (v - origin) / unit;
                    if (t - t.round()).abs() < 1e-9 {
                        // Lattice point of the periodic extension.
                        samples[(t.round() as i64).rem_euclid(n as i64) as usize]
                    } else {
                        interp.eval(v)
                    }
                }
            };
        }
    }
    let mut values = vec![0.0; n * nv];
    let mut residue = 0.0f64;
    let mut line = vec![C64::new(0.0, 0.0); n];
    for j in 0..nv {
        for (bin, slot) in line.iter_mut().enumerate() {
            *slot = spectrum[bin][j];
        }
        fft_1d(&mut line, true);
        for (i, z) in line.iter().enumerate() {
            values[i * nv + j] = z.re;
            residue = residue.max(z.im.abs());
        }
    }
    let density = PhaseSpaceDensity::new(*grid, *velocities, values)?;
    let tr: f64 = (0..n).map(|i| omega[(i, i)].re).sum();
    let mass_defect = density.mass() - 2.0 * PI * grid.epsilon() * tr;
    Ok(WignerOutput {
        density,
        imaginary_residue: residue,
        mass_defect,
    })
}

/// Momentum-basis form `F† A F` of a one-dimensional operator, ascending `k`.
pub fn to_momentum_basis(a: &CMat, grid: &Grid) -> CMat {
    let f = momentum_basis(grid);
    f.adjoint() * a * f
}

/// Fermi-Dirac state `g_{T,μ}(h)` of a one-body Hamiltonian with `μ` chosen by
/// bisection so that the trace equals `n_particles`. Returns the state and `μ`.
pub fn thermal_density(h: &CMat, temperature: f64, n_particles: f64) -> Result<(CMat, f64)> {
    if !(temperature > 0.0) {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {temperature}")));
    }
    let d = h.nrows();
    if !(n_particles > 0.0 && n_particles < d as f64) {
        return Err(Error::InvalidArgument(format!(
            "particle number {n_particles} must lie strictly between 0 and {d}"
        )));
    }
    let (values, vectors) = crate::linalg::eigh(h);
    let count = |mu: f64| values.iter().map(|&e| fermi_dirac(e, temperature, mu)).sum::<f64>();
    let spread = values.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let (mut lo, mut hi) = (-spread - 50.0 * temperature, spread + 50.0 * temperature);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count(mid) < n_particles {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let omega = crate::linalg::spectral_apply(&values, &vectors, |e| c(fermi_dirac(e, temperature, mu)));
    Ok((omega, mu))
}
