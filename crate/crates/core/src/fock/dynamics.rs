//! Exact many-body evolution and fluctuation dynamics.

use rayon::prelude::*;

use super::bogoliubov::{bogoliubov_implementor, BogoliubovMap};
use super::space::{FockOperator, FockSpace, Side};
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, c, eigh, CMat, C64, I};

/// Exact propagator of a Hermitian operator that conserves the left and right
/// particle numbers, from dense eigen-decompositions of its sector blocks.
#[derive(Debug, Clone)]
pub struct SectorPropagator {
    dimension: usize,
    sectors: Vec<Sector>,
}

#[derive(Debug, Clone)]
struct Sector {
    basis: Vec<usize>,
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
}

fn sector_key(space: &FockSpace, b: usize) -> (u32, u32) {
    let left = (b & space.side_mask(Side::Left)).count_ones();
    let right = if space.doubled() {
        (b & space.side_mask(Side::Right)).count_ones()
    } else {
        0
    };
    (left, right)
}

impl SectorPropagator {
    pub fn new(op: &FockOperator) -> Result<Self> {
        let space = *op.space();
        let dim = space.dimension();
        let keys: Vec<(u32, u32)> = (0..dim).map(|b| sector_key(&space, b)).collect();
        for (i, j, v) in op.matrix().triplets() {
            if keys[i] != keys[j] && v.norm() > 0.0 {
                return Err(Error::Fock(
                    "operator does not conserve the left and right particle numbers".into(),
                ));
            }
        }
        let mut groups: std::collections::BTreeMap<(u32, u32), Vec<usize>> = Default::default();
        for (b, k) in keys.iter().enumerate() {
            groups.entry(*k).or_default().push(b);
        }
        let mut position = vec![0usize; dim];
        for basis in groups.values() {
            for (p, &b) in basis.iter().enumerate() {
                position[b] = p;
            }
        }
        let groups: Vec<Vec<usize>> = groups.into_values().collect();
        let sectors = groups
            .into_par_iter()
            .map(|basis| {
                let n = basis.len();
                let mut block = CMat::zeros(n, n);
                for (p, &b) in basis.iter().enumerate() {
                    for (j, v) in op.matrix().row(b) {
                        block[(p, position[j])] += v;
                    }
                }
                let (eigenvalues, eigenvectors) = eigh(&block);
                Sector {
                    basis,
                    eigenvalues,
                    eigenvectors,
                }
            })
            .collect();
        Ok(SectorPropagator {
            dimension: dim,
            sectors,
        })
    }

    pub fn largest_sector(&self) -> usize {
        self.sectors.iter().map(|s| s.basis.len()).max().unwrap_or(0)
    }

    /// `e^{-iτA} ψ`.
    pub fn apply(&self, psi: &[C64], tau: f64) -> Vec<C64> {
        assert_eq!(psi.len(), self.dimension);
        let mut out = vec![C64::new(0.0, 0.0); self.dimension];
        for s in &self.sectors {
            let local = nalgebra::DVector::from_iterator(s.basis.len(), s.basis.iter().map(|&b| psi[b]));
            let mut coeff = s.eigenvectors.adjoint() * local;
            for (z, &lam) in coeff.iter_mut().zip(&s.eigenvalues) {
                *z *= (-I * lam * tau).exp();
            }
            let back = &s.eigenvectors * coeff;
            for (&b, z) in s.basis.iter().zip(back.iter()) {
                out[b] = *z;
            }
        }
        out
    }

    /// All eigenvalues, ascending.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut all: Vec<f64> = self.sectors.iter().flat_map(|s| s.eigenvalues.iter().copied()).collect();
        all.sort_by(f64::total_cmp);
        all
    }
}

const KRYLOV_MAX: usize = 40;

/// `e^{-iτA}ψ` by Lanczos with full reorthogonalization and adaptive
/// substeps, aiming at an error of `tol` in norm.
pub fn krylov_evolve(a: &SparseMatrix, psi: &[C64], tau: f64, tol: f64) -> Result<Vec<C64>> {
    let mut v = psi.to_vec();
    let norm0 = linalg::vec_norm(&v);
    if norm0 == 0.0 || tau == 0.0 {
        return Ok(v);
    }
    let mut done = 0.0;
    let mut step = tau;
    let mut attempts = 0usize;
    while (tau - done).abs() > 1e-15 * tau.abs() {
        if (step.abs()) > (tau - done).abs() {
            step = tau - done;
        }
        let (next, err) = lanczos_step(a, &v, step);
        attempts += 1;
        if attempts > 100_000 {
            return Err(Error::NotConverged {
                what: "Krylov propagation".into(),
                residual: err,
            });
        }
        if err <= tol * (step / tau).abs() {
            v = next;
            done += step;
            if err < 0.1 * tol * (step / tau).abs() {
                step *= 2.0;
            }
        } else {
            step *= 0.5;
        }
    }
    Ok(v)
}

/// One Lanczos approximation of `e^{-iτA}v` and its error estimate.
fn lanczos_step(a: &SparseMatrix, v: &[C64], tau: f64) -> (Vec<C64>, f64) {
    let beta0 = linalg::vec_norm(v);
    let mut basis: Vec<Vec<C64>> = vec![v.iter().map(|z| z / beta0).collect()];
    let mut alphas = Vec::new();
    let mut betas = Vec::new();
    let mut breakdown = false;
    for j in 0..KRYLOV_MAX {
        let mut w = a.matvec(&basis[j]);
        alphas.push(linalg::inner(&basis[j], &w).re);
        for q in &basis {
            let h = linalg::inner(q, &w);
            linalg::axpy(-h, q, &mut w);
        }
        for q in &basis {
            let h = linalg::inner(q, &w);
            linalg::axpy(-h, q, &mut w);
        }
        let beta = linalg::vec_norm(&w);
        if beta < 1e-13 * beta0.max(1.0) {
            breakdown = true;
            break;
        }
        betas.push(beta);
        if j + 1 < KRYLOV_MAX {
            basis.push(w.iter().map(|z| z / beta).collect());
        }
    }
    let m = alphas.len();
    let t = CMat::from_fn(m, m, |i, j| {
        if i == j {
            c(alphas[i])
        } else if i + 1 == j || j + 1 == i {
            c(betas[i.min(j)])
        } else {
            C64::new(0.0, 0.0)
        }
    });
    let (vals, vecs) = eigh(&t);
    let e1 = linalg::spectral_apply(&vals, &vecs, |lam| (-I * lam * tau).exp());
    let coeff: Vec<C64> = (0..m).map(|i| e1[(i, 0)]).collect();
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (q, &cf) in basis.iter().zip(&coeff) {
        linalg::axpy(cf * beta0, q, &mut out);
    }
    let err = if breakdown {
        0.0
    } else {
        betas.get(m - 1).copied().unwrap_or(0.0) * coeff[m - 1].norm() * beta0
    };
    (out, err)
}

/// Cached propagator `e^{-iAt/ε}`.
#[derive(Debug, Clone)]
pub enum ManyBodyPropagator {
    Sectors(SectorPropagator),
    Krylov(FockOperator),
}

/// Sector blocks up to this size are diagonalized densely.
const DENSE_SECTOR_LIMIT: usize = 1024;

impl ManyBodyPropagator {
    pub fn new(op: &FockOperator) -> Result<Self> {
        let space = op.space();
        if space.total_modes() <= 12 {
            if let Ok(p) = SectorPropagator::new(op) {
                if p.largest_sector() <= DENSE_SECTOR_LIMIT {
                    return Ok(ManyBodyPropagator::Sectors(p));
                }
            }
        }
        Ok(ManyBodyPropagator::Krylov(op.clone()))
    }

    pub fn krylov(op: &FockOperator) -> Self {
        ManyBodyPropagator::Krylov(op.clone())
    }

    /// `e^{-iAt/ε}ψ`.
    pub fn evolve(&self, psi: &[C64], t: f64, epsilon: f64) -> Result<Vec<C64>> {
        let tau = t / epsilon;
        match self {
            ManyBodyPropagator::Sectors(p) => Ok(p.apply(psi, tau)),
            ManyBodyPropagator::Krylov(op) => krylov_evolve(op.matrix(), psi, tau, 1e-11),
        }
    }
}

/// `ψ_t = e^{-iLt/ε} ψ₀`.
pub fn evolve_many_body(psi0: &[C64], liouvillian: &FockOperator, t: f64, epsilon: f64) -> Result<Vec<C64>> {
    if psi0.len() != liouvillian.space().dimension() {
        return Err(Error::ShapeMismatch("state vector length".into()));
    }
    if t == 0.0 {
        return Ok(psi0.to_vec());
    }
    ManyBodyPropagator::new(liouvillian)?.evolve(psi0, t, epsilon)
}

/// Reference densities `ω_t` along a Hartree-Fock trajectory.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, CMat)>,
}

impl Trajectory {
    pub fn at(&self, t: f64) -> Result<&CMat> {
        self.samples
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-9 * t.abs().max(1.0))
            .map(|(_, m)| m)
            .ok_or_else(|| Error::InvalidArgument(format!("trajectory has no sample at t = {t}")))
    }
}

/// `ξ_t = R_t* e^{-iLt/ε} R₀ ξ` where `R_s` implements the quasi-free state of
/// `ω_s`.
pub fn fluctuation_dynamics(
    space: &FockSpace,
    xi: &[C64],
    trajectory: &Trajectory,
    propagator: &ManyBodyPropagator,
    t: f64,
    epsilon: f64,
) -> Result<Vec<C64>> {
    let r0 = bogoliubov_implementor(space, trajectory.at(0.0)?)?;
    let rt: BogoliubovMap = bogoliubov_implementor(space, trajectory.at(t)?)?;
    let psi = propagator.evolve(&r0.apply(xi), t, epsilon)?;
    Ok(rt.apply_adjoint(&psi))
}
