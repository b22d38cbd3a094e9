//! Dense complex linear algebra helpers on top of nalgebra.

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// Complex product through four real products, which use the blocked real
/// kernel instead of the generic one.
pub fn matmul(a: &CMat, b: &CMat) -> CMat {
    let (ar, ai) = (a.map(|z| z.re), a.map(|z| z.im));
    let (br, bi) = (b.map(|z| z.re), b.map(|z| z.im));
    let re = &ar * &br - &ai * &bi;
    let im = &ar * &bi + &ai * &br;
    CMat::from_fn(re.nrows(), re.ncols(), |i, j| C64::new(re[(i, j)], im[(i, j)]))
}

/// `A B A†`.
pub fn conjugate_by(a: &CMat, b: &CMat) -> CMat {
    matmul(&matmul(a, b), &a.adjoint())
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
///
/// Only the lower triangle is trusted, so callers should pass a matrix that is
/// Hermitian up to roundoff.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = nalgebra::SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// Rebuild `Q diag(f(λ)) Q†`.
pub fn spectral_apply(values: &[f64], vectors: &CMat, f: impl Fn(f64) -> C64) -> CMat {
    let n = values.len();
    let mut scaled = vectors.clone();
    for (k, &lam) in values.iter().enumerate() {
        let fk = f(lam);
        for i in 0..n {
            scaled[(i, k)] *= fk;
        }
    }
    matmul(&scaled, &vectors.adjoint())
}

/// `f(H)` for Hermitian `H` through its eigen-decomposition.
pub fn hermitian_function(m: &CMat, f: impl Fn(f64) -> f64) -> CMat {
    let (values, vectors) = eigh(m);
    spectral_apply(&values, &vectors, |x| c(f(x)))
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// `max |A - A†|`.
pub fn hermiticity_defect(m: &CMat) -> f64 {
    max_abs(&(m - m.adjoint()))
}

pub fn frobenius(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

pub fn commutator(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let svd = m.clone().svd(false, false);
    svd.singular_values.iter().copied().collect()
}

/// `exp(A)` by scaling and squaring with a truncated Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm: f64 = (0..n)
        .map(|i| a.row(i).iter().map(|z| z.norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let scaled = a.scale(scale);
    let mut result = CMat::identity(n, n);
    let mut term = CMat::identity(n, n);
    for k in 1..=20 {
        term = &term * &scaled;
        term.scale_mut(1.0 / k as f64);
        result += &term;
        if max_abs(&term) < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result);
    }
    result
}

/// Unitary `exp(-i τ H)` for Hermitian `H`.
pub fn unitary_propagator(h: &CMat, tau: f64) -> CMat {
    let (values, vectors) = eigh(h);
    spectral_apply(&values, &vectors, |lam| (-I * lam * tau).exp())
}

pub fn vec_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn distance(a: &[C64], b: &[C64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_product_matches_generic() {
        let a = CMat::from_fn(5, 4, |i, j| C64::new(i as f64 - 0.5 * j as f64, (i * j) as f64 * 0.3));
        let b = CMat::from_fn(4, 3, |i, j| C64::new(1.0 / (1.0 + i as f64 + j as f64), j as f64 - i as f64));
        assert!(max_abs(&(matmul(&a, &b) - &a * &b)) < 1e-13);
    }

    #[test]
    fn expm_matches_spectral_exponential() {
        let h = CMat::from_fn(4, 4, |i, j| {
            let x = (i * 3 + j * 7) as f64 * 0.1;
            if i == j {
                c(x)
            } else {
                C64::new(0.2 * x.sin(), 0.1 * (i as f64 - j as f64))
            }
        });
        let h = hermitize(&h);
        let a = h.map(|z| -I * z * 1.7);
        let lhs = expm(&a);
        let rhs = unitary_propagator(&h, 1.7);
        assert!(max_abs(&(lhs - rhs)) < 1e-12);
    }

    #[test]
    fn eigh_sorts_ascending() {
        let m = CMat::from_diagonal(&nalgebra::DVector::from_vec(vec![c(3.0), c(-1.0), c(2.0)]));
        let (values, _) = eigh(&m);
        assert_eq!(values, vec![-1.0, 2.0, 3.0]);
    }
}
