//! Generator of the fluctuation dynamics.

use nalgebra::DMatrix;

use super::ops::{second_quantize, smeared_annihilator};
use super::space::{FockOperator, FockSpace, Side};
use crate::error::{Error, Result};
use crate::linalg::{c, eigh, spectral_apply, CMat, C64};

/// The fluctuation generator split into its parts.
#[derive(Debug, Clone)]
pub struct FluctuationGenerator {
    /// `dΓ_l(h) - dΓ_r(h̄)`.
    pub quadratic: FockOperator,
    /// Quartic terms commuting with the total number operator.
    pub conserving: FockOperator,
    /// Quartic terms changing the particle number, with their adjoints.
    pub changing: FockOperator,
}

impl FluctuationGenerator {
    pub fn total(&self) -> FockOperator {
        self.quadratic.add(&self.conserving).add(&self.changing)
    }
}

/// Smeared annihilators `a_σ(f_x)` for the columns `f_x` of a matrix,
/// optionally conjugated.
fn family(space: &FockSpace, side: Side, m: &CMat, conjugate: bool) -> Result<Vec<FockOperator>> {
    (0..m.ncols())
        .map(|x| {
            let f: Vec<C64> = m
                .column(x)
                .iter()
                .map(|z| if conjugate { z.conj() } else { *z })
                .collect();
            smeared_annihilator(space, side, &f)
        })
        .collect()
}

fn chain(ops: [&FockOperator; 4]) -> FockOperator {
    ops[0].mul(ops[1]).mul(&ops[2].mul(ops[3]))
}

/// Generator `G(t) = dΓ_l(h) - dΓ_r(h̄) + C + Q` of `R_t* e^{-iLt/ε} R_s`, with
/// `h` the mean-field Hamiltonian of `ω_t` and the quartic parts written with
/// `A_x = a_l(u_x)`, `B_x = a_r(v̄_x)`, `Ã_x = a_r(ū_x)`, `B̃_x = a_l(v_x)`.
pub fn fluctuation_generator(
    space: &FockSpace,
    omega: &CMat,
    h_hf: &CMat,
    pair: &DMatrix<f64>,
    n_particles: f64,
) -> Result<FluctuationGenerator> {
    space.require_doubled()?;
    let d = space.modes();
    for (name, m) in [("density", omega), ("mean-field Hamiltonian", h_hf)] {
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::ShapeMismatch(format!("{name} must be {d}x{d}")));
        }
    }
    if pair.nrows() != d || pair.ncols() != d {
        return Err(Error::ShapeMismatch(format!("pair matrix must be {d}x{d}")));
    }
    let (values, vectors) = eigh(omega);
    let u = spectral_apply(&values, &vectors, |x| c((1.0 - x.clamp(0.0, 1.0)).sqrt()));
    let v = spectral_apply(&values, &vectors, |x| c(x.clamp(0.0, 1.0).sqrt()));

    let quadratic = second_quantize(space, h_hf, Side::Left)?
        .sub(&second_quantize(space, &h_hf.map(|z| z.conj()), Side::Right)?);

    let a = family(space, Side::Left, &u, false)?;
    let b = family(space, Side::Right, &v, true)?;
    let at = family(space, Side::Right, &u, true)?;
    let bt = family(space, Side::Left, &v, false)?;
    let dag = |ops: &[FockOperator]| -> Vec<FockOperator> { ops.iter().map(|o| o.adjoint()).collect() };
    let (ad, bd, atd, btd) = (dag(&a), dag(&b), dag(&at), dag(&bt));

    let mut conserving = FockOperator::zero(*space);
    let mut changing = FockOperator::zero(*space);
    let scale = 1.0 / (2.0 * n_particles);
    for x in 0..d {
        for y in 0..d {
            let w = pair[(x, y)] * scale;
            if w == 0.0 {
                continue;
            }
            let terms_c = [
                (1.0, chain([&ad[x], &ad[y], &a[y], &a[x]])),
                (2.0, chain([&ad[x], &bd[x], &b[y], &a[y]])),
                (-2.0, chain([&ad[x], &bd[y], &b[y], &a[x]])),
                (1.0, chain([&bd[y], &bd[x], &b[x], &b[y]])),
                (-1.0, chain([&atd[x], &atd[y], &at[y], &at[x]])),
                (-2.0, chain([&atd[x], &btd[x], &bt[y], &at[y]])),
                (2.0, chain([&atd[x], &btd[y], &bt[y], &at[x]])),
                (-1.0, chain([&btd[y], &btd[x], &bt[x], &bt[y]])),
            ];
            for (coef, term) in terms_c {
                conserving = conserving.add_scaled(&term, c(coef * w));
            }
            let terms_q = [
                (1.0, chain([&ad[x], &ad[y], &bd[y], &bd[x]])),
                (2.0, chain([&ad[x], &ad[y], &bd[x], &a[y]])),
                (-2.0, chain([&ad[x], &bd[y], &bd[x], &b[y]])),
                (-1.0, chain([&atd[x], &atd[y], &btd[y], &btd[x]])),
                (2.0, chain([&atd[x], &atd[y], &btd[x], &at[y]])),
                (-2.0, chain([&atd[x], &btd[y], &btd[x], &bt[y]])),
            ];
            for (coef, term) in terms_q {
                let both = term.add(&term.adjoint());
                changing = changing.add_scaled(&both, c(coef * w));
            }
        }
    }
    Ok(FluctuationGenerator {
        quadratic,
        conserving,
        changing,
    })
}
