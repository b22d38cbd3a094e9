#![allow(dead_code)]

use fermisim::linalg::{c, CMat, C64};
use nalgebra::DVector;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, len: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..len)
        .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect();
    let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / n).collect()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    CMat::from_fn(d, d, |_, _| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

pub fn random_hermitian(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    let a = random_matrix(rng, d);
    (&a + a.adjoint()) * c(0.5)
}

pub fn random_unitary(rng: &mut ChaCha8Rng, d: usize) -> CMat {
    random_matrix(rng, d).qr().q()
}

/// `W diag(λ) W*` with eigenvalues drawn from `[lo, hi]`.
pub fn random_density(rng: &mut ChaCha8Rng, d: usize, lo: f64, hi: f64) -> CMat {
    let w = random_unitary(rng, d);
    let lam: Vec<C64> = (0..d).map(|_| c(rng.gen_range(lo..hi))).collect();
    &w * CMat::from_diagonal(&DVector::from_vec(lam)) * w.adjoint()
}

pub fn max_diff(a: &CMat, b: &CMat) -> f64 {
    (a - b).iter().map(|z| z.norm()).fold(0.0, f64::max)
}
