mod common;

use std::f64::consts::PI;

use common::*;
use fermisim::grid::kinetic_matrix;
use fermisim::linalg::{self, c, frobenius, C64};
use fermisim::{apply_convolution, canonical_operators, Grid, OneBodyOperator, Potential, PotentialKind};

#[test]
fn grid_rejects_bad_shapes() {
    assert!(Grid::new(0, 8, 1.0, 1.0).is_err());
    assert!(Grid::new(4, 8, 1.0, 1.0).is_err());
    assert!(Grid::new(1, 1, 1.0, 1.0).is_err());
    assert!(Grid::new(1, 8, -1.0, 1.0).is_err());
    assert!(Grid::new(1, 8, 1.0, 0.0).is_err());
    let g = Grid::new(2, 8, 2.0, 0.5).unwrap();
    assert_eq!(g.size(), 64);
    assert!((g.volume() - 4.0).abs() < 1e-15);
    assert!((g.cell_volume() - 1.0 / 16.0).abs() < 1e-15);
}

#[test]
fn plane_waves_are_orthonormal_eigenvectors_of_the_kinetic_term() {
    let g = Grid::new(1, 16, 2.0 * PI, 0.3).unwrap();
    let kin = kinetic_matrix(&g);
    for k in [-7i64, -2, 0, 3, 7] {
        let f = g.plane_wave(&[k]).unwrap();
        assert!((g.inner_product(&f, &f).re - 1.0).abs() < 1e-13);
        let hf: Vec<C64> = (&kin * nalgebra::DVector::from_vec(f.clone())).iter().copied().collect();
        let expected = 0.09 * (k * k) as f64;
        let defect: f64 = hf.iter().zip(&f).map(|(a, b)| (a - b * expected).norm()).fold(0.0, f64::max);
        assert!(defect < 1e-12, "k = {k}");
        let other = g.plane_wave(&[if k < 7 { k + 1 } else { k - 1 }]).unwrap();
        assert!(g.inner_product(&f, &other).norm() < 1e-13);
    }
}

#[test]
fn canonical_commutator_is_epsilon_on_smooth_functions() {
    let g = Grid::new(1, 64, 2.0 * PI, 0.4).unwrap();
    let canon = canonical_operators(&g);
    let x = &canon.position[0];
    let p = &canon.momentum[0];
    // Both operators act on a smooth, well-localized function.
    let f: Vec<C64> = g.axis_points().iter().map(|&t| c((-(4.0 * (t - PI).powi(2))).exp())).collect();
    let xf = x.apply(&f);
    let comm: Vec<C64> = p.apply(&xf).iter().zip(x.apply(&p.apply(&f))).map(|(a, b)| a - b).collect();
    let expected: Vec<C64> = f.iter().map(|z| z * 0.4).collect();
    assert!(linalg::distance(&comm, &expected) < 1e-8);
    assert!(canon.kinetic.is_hermitian());
    assert!(p.adjoint().matrix().iter().zip(p.matrix().iter()).all(|(a, b)| (a + b).norm() < 1e-12));
}

#[test]
fn convolution_matches_direct_sum_for_every_kind() {
    let mut r = rng(1);
    let g = Grid::new(1, 24, 3.0, 1.0).unwrap();
    let kinds = [
        PotentialKind::Gaussian { amplitude: -0.7, width: 0.4 },
        PotentialKind::CosineSum { coefficients: vec![0.2, 1.0, -0.5] },
        PotentialKind::Yukawa { amplitude: 1.0, screening: 2.0 },
    ];
    let rho: Vec<f64> = random_vector(&mut r, 24).iter().map(|z| z.re).collect();
    for kind in kinds {
        let pot = Potential::new(kind.clone(), &g).unwrap();
        let fast = apply_convolution(&g, &pot, &rho).unwrap();
        let pair = pot.pair_matrix();
        for i in 0..24 {
            let slow: f64 = (0..24).map(|j| pair[(i, j)] * rho[j]).sum::<f64>() * g.spacing();
            assert!((slow - fast[i]).abs() < 1e-10, "{kind:?}");
        }
    }
}

#[test]
fn tabulated_potential_must_be_even_and_sized() {
    let g = Grid::new(1, 4, 1.0, 1.0).unwrap();
    let odd = PotentialKind::Tabulated { values: vec![0.0, 1.0, 0.0, -1.0] };
    assert!(Potential::new(odd, &g).is_err());
    let short = PotentialKind::Tabulated { values: vec![0.0, 1.0] };
    assert!(Potential::new(short, &g).is_err());
    let even = PotentialKind::Tabulated { values: vec![2.0, 1.0, 0.5, 1.0] };
    let pot = Potential::new(even, &g).unwrap();
    assert_eq!(pot.pair_matrix()[(0, 1)], 1.0);
    assert!(PotentialKind::Gaussian { amplitude: 1.0, width: 0.0 }.eval(&[0.0], 1.0).is_err());
}

#[test]
fn potential_kinds_parse_from_tables() {
    let kind: PotentialKind = toml::from_str("kind = \"gaussian\"\namplitude = 1.0\nwidth = 0.5").unwrap();
    assert_eq!(kind, PotentialKind::Gaussian { amplitude: 1.0, width: 0.5 });
    assert!(toml::from_str::<PotentialKind>("kind = \"gaussian\"\namplitude = 1.0").is_err());
    assert!(toml::from_str::<PotentialKind>("kind = \"coulomb\"").is_err());
}

#[test]
fn operators_check_shapes_and_hermiticity() {
    let mut r = rng(2);
    let g = Grid::new(1, 6, 1.0, 1.0).unwrap();
    assert!(OneBodyOperator::new(g, random_matrix(&mut r, 5)).is_err());
    let h = OneBodyOperator::new(g, random_hermitian(&mut r, 6)).unwrap();
    assert!(h.is_hermitian());
    let a = OneBodyOperator::new(g, random_matrix(&mut r, 6)).unwrap();
    assert!(frobenius(&(a.adjoint().matrix() - a.matrix().adjoint())) == 0.0);
    let k = OneBodyOperator::from_kernel(g, |x, y| c((x[0] - y[0]).cos()));
    assert!(k.is_hermitian());
    assert!((k.kernel(0, 0).re - 1.0).abs() < 1e-14);
}
