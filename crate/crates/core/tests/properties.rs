use fermisim::fock::*;
use fermisim::linalg::{self, c, eigh, CMat, C64};
use fermisim::{make_density, Grid, OneBodyOperator};
use nalgebra::DVector;
use proptest::prelude::*;

fn complex_vec(len: usize) -> impl Strategy<Value = Vec<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), len).prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
}

/// A density `W diag(λ) W*` with `W` from the QR factor of a random matrix.
fn density(d: usize) -> impl Strategy<Value = CMat> {
    (complex_vec(d * d), prop::collection::vec(0.0f64..=1.0, d)).prop_map(move |(entries, lam)| {
        let w = CMat::from_vec(d, d, entries).qr().q();
        let diag = DVector::from_vec(lam.into_iter().map(c).collect());
        let m = &w * CMat::from_diagonal(&diag) * w.adjoint();
        linalg::hermitize(&m)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn smeared_operators_satisfy_car(f in complex_vec(3), g in complex_vec(3)) {
        let space = FockSpace::new(3, true).unwrap();
        for side in [Side::Left, Side::Right] {
            let a = smeared_annihilator(&space, side, &f).unwrap();
            let b = smeared_creator(&space, side, &g).unwrap();
            let expected = linalg::inner(&f, &g);
            let anti = a.anticommutator(&b).sub(&FockOperator::identity(space).scale(expected));
            prop_assert!(anti.max_abs() < 1e-14);
            let other = smeared_annihilator(&space, side, &g).unwrap();
            prop_assert!(a.anticommutator(&other).max_abs() < 1e-14);
        }
    }

    #[test]
    fn admissible_spectra_survive_construction(lam in prop::collection::vec(0.0f64..=1.0, 6)) {
        let g = Grid::new(1, 6, 1.0, 1.0).unwrap();
        let n: f64 = lam.iter().sum();
        prop_assume!(n > 1e-3);
        let d = make_density(OneBodyOperator::real_multiplication(g, &lam).unwrap(), n).unwrap();
        let mut sorted = lam.clone();
        sorted.sort_by(f64::total_cmp);
        for (a, b) in d.eigenvalues().iter().zip(&sorted) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn implementor_reproduces_any_density(omega in density(3)) {
        let space = FockSpace::new(3, true).unwrap();
        let map = bogoliubov_implementor(&space, &omega).unwrap();
        let rd = reduced_densities(&space, &map.state(), 1).unwrap();
        let gap = (&rd.gamma - &omega).iter().map(|z| z.norm()).fold(0.0, f64::max);
        prop_assert!(gap < 1e-10);
        let norm = linalg::vec_norm(&map.state());
        prop_assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn wedge_square_has_the_pair_trace(omega in density(4)) {
        let w2 = wedge_power(&omega, 2).unwrap();
        let n = linalg::trace(&omega).re;
        let sq = linalg::trace(&(&omega * &omega)).re;
        prop_assert!((linalg::trace(&w2).re - 0.5 * (n * n - sq)).abs() < 1e-10);
        let (values, _) = eigh(&w2);
        prop_assert!(values.iter().all(|&x| x > -1e-10 && x < 1.0 + 1e-10));
    }

    #[test]
    fn number_moments_of_quasi_free_states(omega in density(2)) {
        let space = FockSpace::new(2, true).unwrap();
        let psi = bogoliubov_implementor(&space, &omega).unwrap().state();
        let mean = number_moments(&psi, 1) - 1.0;
        prop_assert!((mean - 2.0 * linalg::trace(&omega).re).abs() < 1e-10);
        let dist = number_distribution(&psi, 4);
        prop_assert!((dist.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
