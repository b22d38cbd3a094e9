//! Vlasov transport on a one-dimensional phase-space grid.
//!
//! Characteristics are `ẋ = 2v`, `v̇ = -∂_x U` with `U = V*ρ + V_ext` and
//! `ρ = ∫W dv / ∫∫W`. This is the classical flow of the symbol `v² + U`, the
//! phase-space image of `-ε²Δ + U` under `v = εp`.

use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::Serialize;

use crate::csvfmt;
use crate::equilibrium::PhaseSpaceDensity;
use crate::error::{Error, Result};
use crate::fft::signed_index;
use crate::grid::{apply_convolution, Potential};
use crate::linalg::{c, C64};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VlasovLogRow {
    pub t: f64,
    pub mass: f64,
    pub momentum: f64,
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct VlasovState {
    pub density: PhaseSpaceDensity,
    pub time: f64,
    pub log: Vec<VlasovLogRow>,
    pub warnings: Vec<String>,
}

impl VlasovState {
    pub fn log_csv(&self) -> String {
        let mut out = String::from("t,mass,momentum,energy\n");
        for r in &self.log {
            out.push_str(&csvfmt::row(&[r.t, r.mass, r.momentum, r.energy]));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VlasovOptions {
    pub dt: f64,
    pub record_every: usize,
    /// Static external potential at the position lattice.
    pub external: Option<Vec<f64>>,
}

impl VlasovOptions {
    pub fn new(dt: f64) -> Self {
        VlasovOptions {
            dt,
            record_every: 1,
            external: None,
        }
    }
}

/// Translate every line of a row-major `rows × len` array by `shift[row]`
/// sample spacings, spectrally and periodically.
fn shift_lines(data: &mut [f64], len: usize, shifts: impl Fn(usize) -> f64, planner: &mut FftPlanner<f64>) {
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let mut line = vec![C64::new(0.0, 0.0); len];
    for (row, chunk) in data.chunks_mut(len).enumerate() {
        let s = shifts(row);
        if s == 0.0 {
            continue;
        }
        for (z, &x) in line.iter_mut().zip(chunk.iter()) {
            *z = c(x);
        }
        fwd.process(&mut line);
        for (k, z) in line.iter_mut().enumerate() {
            let m = signed_index(k, len);
            let theta = -2.0 * PI * m as f64 * s / len as f64;
            if len.is_multiple_of(2) && k == len / 2 {
                *z *= theta.cos();
            } else {
                *z *= C64::from_polar(1.0, theta);
            }
        }
        inv.process(&mut line);
        for (x, z) in chunk.iter_mut().zip(&line) {
            *x = z.re / len as f64;
        }
    }
}

fn transpose(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; data.len()];
    for i in 0..rows {
        for j in 0..cols {
            out[j * rows + i] = data[i * cols + j];
        }
    }
    out
}

/// Spectral derivative of a periodic function on the position lattice.
fn derivative(values: &[f64], length: f64) -> Vec<f64> {
    let n = values.len();
    let mut line: Vec<C64> = values.iter().map(|&x| c(x)).collect();
    crate::fft::fft_1d(&mut line, false);
    for (k, z) in line.iter_mut().enumerate() {
        let m = signed_index(k, n);
        if n.is_multiple_of(2) && k == n / 2 {
            *z = C64::new(0.0, 0.0);
        } else {
            *z *= C64::new(0.0, 2.0 * PI * m as f64 / length);
        }
    }
    crate::fft::fft_1d(&mut line, true);
    line.iter().map(|z| z.re / n as f64).collect()
}

struct Diagnostics {
    mass: f64,
    momentum: f64,
    energy: f64,
}

fn potential_field(w: &PhaseSpaceDensity, potential: &Potential, external: Option<&[f64]>, mass0: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let rho: Vec<f64> = w.spatial_density().iter().map(|r| r / mass0).collect();
    let mut u = apply_convolution(w.grid(), potential, &rho)?;
    if let Some(v) = external {
        for (ui, vi) in u.iter_mut().zip(v) {
            *ui += vi;
        }
    }
    Ok((rho, u))
}

fn diagnostics(w: &PhaseSpaceDensity, potential: &Potential, external: Option<&[f64]>, mass0: f64) -> Result<Diagnostics> {
    let vs = w.velocities().values();
    let area = w.cell_area();
    let nv = w.nv();
    let mut kinetic = 0.0;
    let mut momentum = 0.0;
    for (idx, &x) in w.values().iter().enumerate() {
        let v = vs[idx % nv];
        kinetic += v * v * x;
        momentum += v * x;
    }
    let rho: Vec<f64> = w.spatial_density().iter().map(|r| r / mass0).collect();
    let conv = apply_convolution(w.grid(), potential, &rho)?;
    let dx = w.grid().spacing();
    let mut pot: f64 = 0.5 * rho.iter().zip(&conv).map(|(r, u)| r * u).sum::<f64>() * dx;
    if let Some(v) = external {
        pot += rho.iter().zip(v).map(|(r, u)| r * u).sum::<f64>() * dx;
    }
    Ok(Diagnostics {
        mass: w.mass(),
        momentum: momentum * area / mass0,
        energy: kinetic * area / mass0 + pot,
    })
}

/// Strang splitting: half transport in `x`, full kick in `v`, half transport.
/// Both substeps are exact spectral translations, so mass is conserved to
/// roundoff. Energies are per unit mass.
pub fn evolve_vlasov(
    w0: &PhaseSpaceDensity,
    potential: &Potential,
    t_final: f64,
    options: &VlasovOptions,
) -> Result<VlasovState> {
    potential.check_grid(w0.grid())?;
    if !(options.dt > 0.0) || t_final < 0.0 {
        return Err(Error::InvalidArgument(
            "time step must be positive and final time nonnegative".into(),
        ));
    }
    if let Some(v) = &options.external {
        if v.len() != w0.nx() {
            return Err(Error::ShapeMismatch("external potential length".into()));
        }
    }
    let external = options.external.as_deref();
    let mass0 = w0.mass();
    if !(mass0 > 0.0) {
        return Err(Error::InvalidArgument("initial phase-space density has no mass".into()));
    }
    let steps = (t_final / options.dt - 1e-9).ceil().max(0.0) as usize;
    let dt = if steps == 0 { 0.0 } else { t_final / steps as f64 };
    let (nx, nv) = (w0.nx(), w0.nv());
    let dx = w0.grid().spacing();
    let dv = w0.velocities().spacing();
    let vs = w0.velocities().values();
    let length = w0.grid().length();

    let mut warnings = Vec::new();
    let vmax = vs.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if 2.0 * vmax * dt > dx {
        warnings.push(format!(
            "transport CFL number {:.3} exceeds 1; spectral shifts stay exact but resolution may suffer",
            2.0 * vmax * dt / dx
        ));
    }

    let mut state = VlasovState {
        density: w0.clone(),
        time: 0.0,
        log: Vec::new(),
        warnings,
    };
    let record = |state: &mut VlasovState| -> Result<()> {
        let d = diagnostics(&state.density, potential, external, mass0)?;
        state.log.push(VlasovLogRow {
            t: state.time,
            mass: d.mass,
            momentum: d.momentum,
            energy: d.energy,
        });
        Ok(())
    };
    record(&mut state)?;

    let mut planner = FftPlanner::new();
    let every = options.record_every.max(1);
    for step in 1..=steps {
        // v-major layout for the x-transport
        let mut by_v = transpose(state.density.values(), nx, nv);
        shift_lines(&mut by_v, nx, |j| 2.0 * vs[j] * 0.5 * dt / dx, &mut planner);
        let mut by_x = transpose(&by_v, nv, nx);
        state.density.values_mut().copy_from_slice(&by_x);

        let (_, u) = potential_field(&state.density, potential, external, mass0)?;
        let force: Vec<f64> = derivative(&u, length).iter().map(|g| -g).collect();
        shift_lines(&mut by_x, nv, |i| force[i] * dt / dv, &mut planner);

        let mut by_v = transpose(&by_x, nx, nv);
        shift_lines(&mut by_v, nx, |j| 2.0 * vs[j] * 0.5 * dt / dx, &mut planner);
        let by_x = transpose(&by_v, nv, nx);
        state.density.values_mut().copy_from_slice(&by_x);

        state.time = step as f64 * dt;
        if step % every == 0 || step == steps {
            record(&mut state)?;
        }
    }
    Ok(state)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhaseSpaceDistance {
    pub l1: f64,
    pub l2: f64,
    pub sup: f64,
}

pub fn phase_space_distance(a: &PhaseSpaceDensity, b: &PhaseSpaceDensity) -> Result<PhaseSpaceDistance> {
    if !a.same_lattice(b) {
        return Err(Error::ShapeMismatch("phase-space grids differ".into()));
    }
    let area = a.cell_area();
    let mut l1 = 0.0;
    let mut l2 = 0.0;
    let mut sup = 0.0f64;
    for (x, y) in a.values().iter().zip(b.values()) {
        let d = (x - y).abs();
        l1 += d;
        l2 += d * d;
        sup = sup.max(d);
    }
    Ok(PhaseSpaceDistance {
        l1: l1 * area,
        l2: (l2 * area).sqrt(),
        sup,
    })
}
