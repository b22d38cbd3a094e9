//! Ladder operators, second quantization and the Liouvillian.

use nalgebra::DMatrix;

use super::space::{annihilate, create, FockOperator, FockSpace, Side};
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};
use crate::linalg::{c, CMat, C64};

fn global_ladder(space: &FockSpace, mode: usize, dagger: bool) -> FockOperator {
    let dim = space.dimension();
    let triplets = (0..dim)
        .filter_map(|b| {
            let hit = if dagger { create(b, mode) } else { annihilate(b, mode) };
            hit.map(|(s, b2)| (b2, b, c(s)))
        })
        .collect();
    FockOperator::from_parts(*space, SparseMatrix::from_triplets(dim, dim, triplets))
}

/// `a_{k,σ}` or `a†_{k,σ}`.
pub fn ladder_operator(space: &FockSpace, k: usize, side: Side, dagger: bool) -> Result<FockOperator> {
    let mode = space.global_mode(k, side)?;
    Ok(global_ladder(space, mode, dagger))
}

/// `a_σ(f) = Σ_j conj(f_j) a_{j,σ}`.
pub fn smeared_annihilator(space: &FockSpace, side: Side, f: &[C64]) -> Result<FockOperator> {
    smeared(space, side, f, false)
}

/// `a*_σ(f) = Σ_j f_j a†_{j,σ}`.
pub fn smeared_creator(space: &FockSpace, side: Side, f: &[C64]) -> Result<FockOperator> {
    smeared(space, side, f, true)
}

fn smeared(space: &FockSpace, side: Side, f: &[C64], dagger: bool) -> Result<FockOperator> {
    if f.len() != space.modes() {
        return Err(Error::ShapeMismatch(format!(
            "test function has {} entries, space has {} modes",
            f.len(),
            space.modes()
        )));
    }
    let dim = space.dimension();
    let mut triplets = Vec::new();
    for (j, &fj) in f.iter().enumerate() {
        if fj == C64::new(0.0, 0.0) {
            continue;
        }
        let mode = space.global_mode(j, side)?;
        let coef = if dagger { fj } else { fj.conj() };
        for b in 0..dim {
            let hit = if dagger { create(b, mode) } else { annihilate(b, mode) };
            if let Some((s, b2)) = hit {
                triplets.push((b2, b, coef * s));
            }
        }
    }
    Ok(FockOperator::from_parts(*space, SparseMatrix::from_triplets(dim, dim, triplets)))
}

/// Particle number on one side, or in total when `side` is `None`.
pub fn number_operator(space: &FockSpace, side: Option<Side>) -> FockOperator {
    let mask = match side {
        None => usize::MAX,
        Some(s) => space.side_mask(s),
    };
    let d: Vec<C64> = (0..space.dimension())
        .map(|b| c((b & mask).count_ones() as f64))
        .collect();
    FockOperator::from_parts(*space, SparseMatrix::diagonal(&d))
}

/// `dΓ_σ(O) = Σ_{jk} O_jk a†_{j,σ} a_{k,σ}`.
pub fn second_quantize(space: &FockSpace, o: &CMat, side: Side) -> Result<FockOperator> {
    let d = space.modes();
    if o.nrows() != d || o.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "one-body operator is {}x{}, space has {d} modes",
            o.nrows(),
            o.ncols()
        )));
    }
    let offset = space.global_mode(0, side)?;
    let dim = space.dimension();
    let mut triplets = Vec::new();
    for b in 0..dim {
        for k in 0..d {
            let Some((s1, b1)) = annihilate(b, offset + k) else {
                continue;
            };
            for j in 0..d {
                let ojk = o[(j, k)];
                if ojk == C64::new(0.0, 0.0) {
                    continue;
                }
                if let Some((s2, b2)) = create(b1, offset + j) {
                    triplets.push((b2, b, ojk * (s1 * s2)));
                }
            }
        }
    }
    Ok(FockOperator::from_parts(*space, SparseMatrix::from_triplets(dim, dim, triplets)))
}

/// `(2N)⁻¹ Σ_{x≠y} V_xy n_{x,σ} n_{y,σ}`, the normal-ordered two-body term,
/// as a diagonal.
fn interaction_diagonal(space: &FockSpace, pair: &DMatrix<f64>, n_particles: f64, side: Side) -> Result<Vec<f64>> {
    let d = space.modes();
    let offset = space.global_mode(0, side)?;
    let scale = 1.0 / (2.0 * n_particles);
    Ok((0..space.dimension())
        .map(|b| {
            let occ = |x: usize| (b >> (offset + x)) & 1 == 1;
            let mut e = 0.0;
            for x in 0..d {
                if !occ(x) {
                    continue;
                }
                for y in 0..d {
                    if y != x && occ(y) {
                        e += pair[(x, y)];
                    }
                }
            }
            e * scale
        })
        .collect())
}

/// Many-body Hamiltonian `dΓ(h₀) + (2N)⁻¹ Σ V_xy a†_x a†_y a_y a_x` on the left
/// copy (or on a single space).
pub fn build_hamiltonian(space: &FockSpace, h0: &CMat, pair: &DMatrix<f64>, n_particles: f64) -> Result<FockOperator> {
    check_pair(space, pair)?;
    let kinetic = second_quantize(space, h0, Side::Left)?;
    let diag = interaction_diagonal(space, pair, n_particles, Side::Left)?;
    let diag: Vec<C64> = diag.into_iter().map(c).collect();
    Ok(kinetic.add(&FockOperator::from_parts(*space, SparseMatrix::diagonal(&diag))))
}

fn check_pair(space: &FockSpace, pair: &DMatrix<f64>) -> Result<()> {
    let d = space.modes();
    if pair.nrows() != d || pair.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "pair matrix is {}x{}, space has {d} modes",
            pair.nrows(),
            pair.ncols()
        )));
    }
    if (0..d).any(|i| (0..d).any(|j| (pair[(i, j)] - pair[(j, i)]).abs() > 1e-12 * pair.amax().max(1.0))) {
        return Err(Error::ShapeMismatch("pair matrix must be symmetric".into()));
    }
    Ok(())
}

/// Liouvillian `dΓ_l(h₀) - dΓ_r(h̄₀) + (2N)⁻¹ Σ V_xy [a†a†aa]_l - [a†a†aa]_r`.
///
/// The right copy carries the complex conjugate of `h₀`, so that
/// `e^{-iLt/ε}` implements `ω ↦ e^{-iHt/ε} ω e^{iHt/ε}` on the doubled space.
pub fn build_liouvillian(space: &FockSpace, h0: &CMat, pair: &DMatrix<f64>, n_particles: f64) -> Result<FockOperator> {
    space.require_doubled()?;
    check_pair(space, pair)?;
    let left = second_quantize(space, h0, Side::Left)?;
    let right = second_quantize(space, &h0.map(|z| z.conj()), Side::Right)?;
    let dl = interaction_diagonal(space, pair, n_particles, Side::Left)?;
    let dr = interaction_diagonal(space, pair, n_particles, Side::Right)?;
    let diag: Vec<C64> = dl.iter().zip(&dr).map(|(a, b)| c(a - b)).collect();
    Ok(left
        .sub(&right)
        .add(&FockOperator::from_parts(*space, SparseMatrix::diagonal(&diag))))
}
