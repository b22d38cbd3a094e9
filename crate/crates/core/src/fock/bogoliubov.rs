//! Bogoliubov implementors of quasi-free mixed states (Araki-Wyss).

use super::ops::{ladder_operator, smeared_annihilator, smeared_creator};
use super::space::{FockOperator, FockSpace, Side};
use super::sparse::SparseMatrix;
use crate::error::{Error, Result};
use crate::linalg::{self, c, eigh, expm, hermiticity_defect, max_abs, spectral_apply, CMat, C64};

/// The block data `(U, V)` of a quasi-free state together with a unitary `R`
/// on the doubled Fock space such that `RΩ` has one-particle density `ω` and
/// no pairing.
///
/// With `φ_k`, `λ_k` the eigenpairs of `ω` and `θ_k = arcsin √λ_k`,
/// `R = Π_k exp(θ_k G_k)` where
/// `G_k = a_r(φ̄_k) a_l(φ_k) - a*_l(φ_k) a*_r(φ̄_k)`. Then
/// `R* a_l(f) R = a_l(u f) - a*_r(v̄ f̄)`, i.e.
/// `R* a_{x,l} R = a_l(u_x) - a*_r(v̄_x)` with `u_x(y) = u(y,x)`.
#[derive(Debug, Clone)]
pub struct BogoliubovMap {
    space: FockSpace,
    omega: CMat,
    u: CMat,
    v: CMat,
    eigenvalues: Vec<f64>,
    theta: Vec<f64>,
    generators: Vec<SparseMatrix>,
}

pub fn bogoliubov_implementor(space: &FockSpace, omega: &CMat) -> Result<BogoliubovMap> {
    space.require_doubled()?;
    let d = space.modes();
    if omega.nrows() != d || omega.ncols() != d {
        return Err(Error::ShapeMismatch(format!(
            "density is {}x{}, space has {d} modes",
            omega.nrows(),
            omega.ncols()
        )));
    }
    let defect = hermiticity_defect(omega);
    if defect > 1e-10 {
        return Err(Error::InadmissibleDensity(format!("density not Hermitian (defect {defect:.3e})")));
    }
    let (values, vectors) = eigh(omega);
    if values.iter().any(|&x| !(-1e-10..=1.0 + 1e-10).contains(&x)) {
        return Err(Error::InadmissibleDensity(
            "density eigenvalues must lie in [0, 1]".into(),
        ));
    }
    let values: Vec<f64> = values.iter().map(|x| x.clamp(0.0, 1.0)).collect();
    let u = spectral_apply(&values, &vectors, |x| c((1.0 - x).sqrt()));
    let v = spectral_apply(&values, &vectors, |x| c(x.sqrt()));
    // atan2 keeps cos θ equal to √(1-λ) near λ = 1, where asin rounds to π/2.
    let theta: Vec<f64> = values.iter().map(|x| x.sqrt().atan2((1.0 - x).sqrt())).collect();
    let mut generators = Vec::with_capacity(d);
    for k in 0..d {
        let phi: Vec<C64> = vectors.column(k).iter().copied().collect();
        let phi_bar: Vec<C64> = phi.iter().map(|z| z.conj()).collect();
        let a_l = smeared_annihilator(space, Side::Left, &phi)?;
        let a_r = smeared_annihilator(space, Side::Right, &phi_bar)?;
        let pair = a_r.mul(&a_l);
        let g = pair.sub(&pair.adjoint());
        generators.push(g.matrix().clone());
    }
    Ok(BogoliubovMap {
        space: *space,
        omega: linalg::hermitize(omega),
        u,
        v,
        eigenvalues: values,
        theta,
        generators,
    })
}

impl BogoliubovMap {
    pub fn space(&self) -> &FockSpace {
        &self.space
    }

    pub fn omega(&self) -> &CMat {
        &self.omega
    }

    /// `√(1-ω)`.
    pub fn u(&self) -> &CMat {
        &self.u
    }

    /// `√ω`.
    pub fn v(&self) -> &CMat {
        &self.v
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    fn rotate(&self, psi: &[C64], sign: f64) -> Vec<C64> {
        let mut out = psi.to_vec();
        for (g, &th) in self.generators.iter().zip(&self.theta) {
            if th == 0.0 {
                continue;
            }
            // exp(θG) = 1 + sin θ G + (1 - cos θ) G², since G² is minus a projector.
            let g1 = g.matvec(&out);
            let g2 = g.matvec(&g1);
            let (s, co) = ((sign * th).sin(), th.cos());
            for ((o, a), b) in out.iter_mut().zip(&g1).zip(&g2) {
                *o += a * s + b * (1.0 - co);
            }
        }
        out
    }

    /// `Rψ`.
    pub fn apply(&self, psi: &[C64]) -> Vec<C64> {
        self.rotate(psi, 1.0)
    }

    /// `R*ψ`.
    pub fn apply_adjoint(&self, psi: &[C64]) -> Vec<C64> {
        self.rotate(psi, -1.0)
    }

    /// The quasi-free vector `RΩ`.
    pub fn state(&self) -> Vec<C64> {
        self.apply(&self.space.vacuum())
    }

    /// Anti-Hermitian generator `B = Σ_k θ_k G_k` with `R = e^B`.
    pub fn generator(&self) -> FockOperator {
        let dim = self.space.dimension();
        let mut b = SparseMatrix::zeros(dim, dim);
        for (g, &th) in self.generators.iter().zip(&self.theta) {
            b = b.add_scaled(g, c(th));
        }
        FockOperator::new(self.space, b).expect("shape matches")
    }

    /// `R` as a dense matrix by exponentiating the generator.
    pub fn dense_unitary(&self) -> Result<CMat> {
        if self.space.dimension() > 1 << 10 {
            return Err(Error::Fock("dense implementor limited to 10 modes".into()));
        }
        Ok(expm(&self.generator().to_dense()))
    }

    /// `R` as a dense matrix, column by column from the product form.
    pub fn product_unitary(&self) -> CMat {
        let dim = self.space.dimension();
        let mut m = CMat::zeros(dim, dim);
        let mut e = vec![C64::new(0.0, 0.0); dim];
        for j in 0..dim {
            e[j] = c(1.0);
            let col = self.apply(&e);
            for (i, z) in col.into_iter().enumerate() {
                m[(i, j)] = z;
            }
            e[j] = c(0.0);
        }
        m
    }

    /// Blocks `U = diag(u, ū)` and `V = [[0, v̄], [-v, 0]]` on `h ⊕ h`.
    pub fn blocks(&self) -> (CMat, CMat) {
        let d = self.u.nrows();
        let mut big_u = CMat::zeros(2 * d, 2 * d);
        let mut big_v = CMat::zeros(2 * d, 2 * d);
        for i in 0..d {
            for j in 0..d {
                big_u[(i, j)] = self.u[(i, j)];
                big_u[(d + i, d + j)] = self.u[(i, j)].conj();
                big_v[(i, d + j)] = self.v[(i, j)].conj();
                big_v[(d + i, j)] = -self.v[(i, j)];
            }
        }
        (big_u, big_v)
    }

    /// Residuals of `U*U + V*V = 1` and `U*V̄ + V*Ū = 0`.
    pub fn block_residuals(&self) -> (f64, f64) {
        let (u, v) = self.blocks();
        let n = u.nrows();
        let first = u.adjoint() * &u + v.adjoint() * &v - CMat::identity(n, n);
        let second = u.adjoint() * v.map(|z| z.conj()) + v.adjoint() * u.map(|z| z.conj());
        (max_abs(&first), max_abs(&second))
    }

    /// Largest `‖(R* a_{x,l} R - a_l(u_x) + a*_r(v̄_x)) φ‖` over modes `x` and
    /// the given probe vectors.
    pub fn conjugation_residual(&self, probes: &[Vec<C64>]) -> Result<f64> {
        let d = self.space.modes();
        let mut worst = 0.0f64;
        for x in 0..d {
            let a = ladder_operator(&self.space, x, Side::Left, false)?;
            let u_x: Vec<C64> = self.u.column(x).iter().copied().collect();
            let vbar_x: Vec<C64> = self.v.column(x).iter().map(|z| z.conj()).collect();
            let expected = smeared_annihilator(&self.space, Side::Left, &u_x)?
                .sub(&smeared_creator(&self.space, Side::Right, &vbar_x)?);
            for phi in probes {
                let lhs = self.apply_adjoint(&a.apply(&self.apply(phi)));
                let rhs = expected.apply(phi);
                worst = worst.max(linalg::distance(&lhs, &rhs));
            }
        }
        Ok(worst)
    }

    /// Largest `‖R*Rφ - φ‖` and `‖RR*φ - φ‖` over the probes.
    pub fn unitarity_residual(&self, probes: &[Vec<C64>]) -> f64 {
        probes
            .iter()
            .map(|phi| {
                let a = linalg::distance(&self.apply_adjoint(&self.apply(phi)), phi);
                let b = linalg::distance(&self.apply(&self.apply_adjoint(phi)), phi);
                a.max(b)
            })
            .fold(0.0, f64::max)
    }
}
