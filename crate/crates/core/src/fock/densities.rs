//! Reduced densities, wedge powers and Wick's rule.

use super::ops::{ladder_operator, smeared_annihilator, smeared_creator};
use super::space::{annihilate, FockOperator, FockSpace, Side};
use crate::error::{Error, Result};
use crate::linalg::{self, c, eigh, inner, CMat, C64};

/// Reduced densities of a vector on the left modes of a Fock space.
#[derive(Debug, Clone)]
pub struct ReducedDensities {
    /// `γ^{(k)}(x;y) = (k!)⁻¹ ⟨ψ, a†_{y1}…a†_{yk} a_{xk}…a_{x1} ψ⟩` on `d^k` indices.
    pub gamma: CMat,
    /// Pairing density `α(x;y) = ⟨ψ, a_y a_x ψ⟩`, for `k = 1`.
    pub alpha: Option<CMat>,
    /// Generalized density `[[γ, α], [α*, 1 - γ̄]]`, for `k = 1`.
    pub generalized: Option<CMat>,
    /// Extreme eigenvalues of the generalized density.
    pub generalized_spectrum: Option<(f64, f64)>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).product::<usize>() as f64
}

/// `a_{x_k} … a_{x_1} ψ` for the flattened tuple `(x_1, …, x_k)`.
fn lowered(psi: &[C64], tuple: &[usize]) -> Vec<C64> {
    let mut cur = psi.to_vec();
    for &x in tuple {
        let mut next = vec![C64::new(0.0, 0.0); cur.len()];
        for (b, amp) in cur.iter().enumerate() {
            if *amp == C64::new(0.0, 0.0) {
                continue;
            }
            if let Some((s, b2)) = annihilate(b, x) {
                next[b2] += amp * s;
            }
        }
        cur = next;
    }
    cur
}

fn tuples(d: usize, k: usize) -> Vec<Vec<usize>> {
    let total = d.pow(k as u32);
    (0..total)
        .map(|mut idx| {
            let mut t = vec![0; k];
            for slot in t.iter_mut().rev() {
                *slot = idx % d;
                idx /= d;
            }
            t
        })
        .collect()
}

pub fn reduced_densities(space: &FockSpace, psi: &[C64], k: usize) -> Result<ReducedDensities> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!("reduced density order {k} not in 1..=3")));
    }
    if psi.len() != space.dimension() {
        return Err(Error::ShapeMismatch("state vector length".into()));
    }
    let d = space.modes();
    let ts = tuples(d, k);
    let vecs: Vec<Vec<C64>> = ts.iter().map(|t| lowered(psi, t)).collect();
    let norm = 1.0 / factorial(k);
    let size = ts.len();
    let gamma = CMat::from_fn(size, size, |i, j| inner(&vecs[j], &vecs[i]) * norm);
    if k != 1 {
        return Ok(ReducedDensities {
            gamma,
            alpha: None,
            generalized: None,
            generalized_spectrum: None,
        });
    }
    // α(x;y) = ⟨ψ, a_y a_x ψ⟩ = ⟨a†_y ψ, a_x ψ⟩
    let raised: Vec<Vec<C64>> = (0..d)
        .map(|y| Ok(ladder_operator(space, y, Side::Left, true)?.apply(psi)))
        .collect::<Result<_>>()?;
    let alpha = CMat::from_fn(d, d, |x, y| inner(&raised[y], &vecs[x]));
    let mut big = CMat::zeros(2 * d, 2 * d);
    for i in 0..d {
        for j in 0..d {
            big[(i, j)] = gamma[(i, j)];
            big[(i, d + j)] = alpha[(i, j)];
            big[(d + i, j)] = alpha[(j, i)].conj();
            let delta = if i == j { 1.0 } else { 0.0 };
            big[(d + i, d + j)] = c(delta) - gamma[(i, j)].conj();
        }
    }
    let (values, _) = eigh(&big);
    let spectrum = (values[0], values[values.len() - 1]);
    Ok(ReducedDensities {
        gamma,
        alpha: Some(alpha),
        generalized: Some(big),
        generalized_spectrum: Some(spectrum),
    })
}

fn permutations(k: usize) -> Vec<(Vec<usize>, f64)> {
    match k {
        1 => vec![(vec![0], 1.0)],
        2 => vec![(vec![0, 1], 1.0), (vec![1, 0], -1.0)],
        _ => vec![
            (vec![0, 1, 2], 1.0),
            (vec![1, 2, 0], 1.0),
            (vec![2, 0, 1], 1.0),
            (vec![0, 2, 1], -1.0),
            (vec![2, 1, 0], -1.0),
            (vec![1, 0, 2], -1.0),
        ],
    }
}

/// `ω^{∧k}(x;y) = (k!)⁻¹ Σ_π σ_π Π_j ω(x_j; y_{π(j)})`, normalized so that it
/// equals the `k`-particle density of the quasi-free state with density `ω`.
pub fn wedge_power(omega: &CMat, k: usize) -> Result<CMat> {
    if !(1..=3).contains(&k) {
        return Err(Error::InvalidArgument(format!("wedge order {k} not in 1..=3")));
    }
    let d = omega.nrows();
    let ts = tuples(d, k);
    let perms = permutations(k);
    let norm = 1.0 / factorial(k);
    Ok(CMat::from_fn(ts.len(), ts.len(), |i, j| {
        let (x, y) = (&ts[i], &ts[j]);
        perms
            .iter()
            .map(|(p, s)| {
                let prod: C64 = (0..k).map(|a| omega[(x[a], y[p[a]])]).product();
                prod * *s
            })
            .sum::<C64>()
            * norm
    }))
}

/// Deviation of a state from Wick's rule on the left modes.
///
/// For each of the 16 choices of creation/annihilation operators built from
/// `f_1..f_4`, compares the four-point function with
/// `⟨12⟩⟨34⟩ - ⟨13⟩⟨24⟩ + ⟨14⟩⟨23⟩`; also includes the largest one- and
/// three-point functions, which vanish for even quasi-free states.
pub fn wick_residual(space: &FockSpace, psi: &[C64], fs: &[Vec<C64>; 4]) -> Result<f64> {
    let mut ops: Vec<[FockOperator; 2]> = Vec::with_capacity(4);
    for f in fs {
        ops.push([
            smeared_annihilator(space, Side::Left, f)?,
            smeared_creator(space, Side::Left, f)?,
        ]);
    }
    let apply_chain = |chain: &[&FockOperator]| -> Vec<C64> {
        let mut v = psi.to_vec();
        for op in chain.iter().rev() {
            v = op.apply(&v);
        }
        v
    };
    let moment = |chain: &[&FockOperator]| -> C64 { inner(psi, &apply_chain(chain)) };
    let mut worst = 0.0f64;
    for pattern in 0..16usize {
        let o: Vec<&FockOperator> = (0..4).map(|i| &ops[i][(pattern >> i) & 1]).collect();
        let four = moment(&[o[0], o[1], o[2], o[3]]);
        let pairs = moment(&[o[0], o[1]]) * moment(&[o[2], o[3]])
            - moment(&[o[0], o[2]]) * moment(&[o[1], o[3]])
            + moment(&[o[0], o[3]]) * moment(&[o[1], o[2]]);
        worst = worst.max((four - pairs).norm());
        if pattern < 8 {
            worst = worst.max(moment(&[o[0], o[1], o[2]]).norm());
        }
        worst = worst.max(moment(&[o[0]]).norm());
    }
    Ok(worst)
}

/// `⟨ψ, (𝒩+1)^k ψ⟩` with `𝒩` the total number operator.
pub fn number_moments(psi: &[C64], k: u32) -> f64 {
    psi.iter()
        .enumerate()
        .map(|(b, a)| a.norm_sqr() * (b.count_ones() as f64 + 1.0).powi(k as i32))
        .sum()
}

/// Distribution of the total particle number, `P(𝒩 = n)`.
pub fn number_distribution(psi: &[C64], max_n: usize) -> Vec<f64> {
    let mut p = vec![0.0; max_n + 1];
    for (b, a) in psi.iter().enumerate() {
        p[b.count_ones() as usize] += a.norm_sqr();
    }
    p
}

/// Scale to unit norm; the zero vector is left alone.
pub fn normalize(psi: &mut [C64]) {
    let n = linalg::vec_norm(psi);
    if n > 0.0 {
        for z in psi.iter_mut() {
            *z /= n;
        }
    }
}
