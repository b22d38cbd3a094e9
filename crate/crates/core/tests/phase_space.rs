use std::f64::consts::PI;

use fermisim::equilibrium::{PhaseSpaceDensity, VelocityGrid};
use fermisim::phase_space::{evolve_vlasov, phase_space_distance, VlasovOptions};
use fermisim::{Grid, Potential, PotentialKind};

fn lattice(nx: usize, nv: usize, dv: f64) -> (Grid, VelocityGrid) {
    (Grid::new(1, nx, 2.0 * PI, 1.0).unwrap(), VelocityGrid::new(nv, dv).unwrap())
}

fn blob(x0: f64, v0: f64, s: f64) -> impl Fn(f64, f64) -> f64 {
    move |x: f64, v: f64| {
        let dx = (x - x0 + PI).rem_euclid(2.0 * PI) - PI;
        (-(dx * dx + (v - v0) * (v - v0)) / (2.0 * s * s)).exp()
    }
}

fn centroid(w: &PhaseSpaceDensity) -> (f64, f64) {
    let xs = w.grid().axis_points();
    let vs = w.velocities().values();
    let (mut sx, mut cx, mut mv, mut m) = (0.0, 0.0, 0.0, 0.0);
    for (i, x) in xs.iter().enumerate() {
        for (j, v) in vs.iter().enumerate() {
            let f = w.at(i, j);
            sx += f * x.sin();
            cx += f * x.cos();
            mv += f * v;
            m += f;
        }
    }
    (sx.atan2(cx).rem_euclid(2.0 * PI), mv / m)
}

#[test]
fn free_streaming_shears_in_position() {
    let (g, vel) = lattice(64, 32, 0.125);
    let w0 = PhaseSpaceDensity::from_fn(g, vel, |x, v| (1.0 + 0.3 * (2.0 * x).cos()) * (-4.0 * v * v).exp()).unwrap();
    let t = 1.3;
    let out = evolve_vlasov(&w0, &Potential::zero(&g), t, &VlasovOptions::new(0.1)).unwrap();
    let exact = PhaseSpaceDensity::from_fn(g, vel, |x, v| (1.0 + 0.3 * (2.0 * (x - 2.0 * v * t)).cos()) * (-4.0 * v * v).exp()).unwrap();
    let d = phase_space_distance(&out.density, &exact).unwrap();
    assert!(d.sup < 1e-10, "{d:?}");
    assert!((out.time - t).abs() < 1e-12);
}

#[test]
fn blob_centroid_follows_the_classical_orbit() {
    let (g, vel) = lattice(128, 128, 0.0625);
    let v_ext: Vec<f64> = g.axis_points().iter().map(|x| -0.5 * x.cos()).collect();
    let (x0, v0, s) = (2.0, 0.6, 0.08);
    let w0 = PhaseSpaceDensity::from_fn(g, vel, blob(x0, v0, s)).unwrap();
    let t = 1.0;
    let options = VlasovOptions {
        external: Some(v_ext),
        ..VlasovOptions::new(2e-3)
    };
    let out = evolve_vlasov(&w0, &Potential::zero(&g), t, &options).unwrap();
    let (xc, vc) = centroid(&out.density);
    // ẋ = 2v, v̇ = -V'(x) with V = -0.5 cos x, by RK4.
    let rhs = |x: f64, v: f64| (2.0 * v, -0.5 * x.sin());
    let (mut x, mut v) = (x0, v0);
    let h = 1e-4;
    for _ in 0..10_000 {
        let k1 = rhs(x, v);
        let k2 = rhs(x + 0.5 * h * k1.0, v + 0.5 * h * k1.1);
        let k3 = rhs(x + 0.5 * h * k2.0, v + 0.5 * h * k2.1);
        let k4 = rhs(x + h * k3.0, v + h * k3.1);
        x += h / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0);
        v += h / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1);
    }
    assert!((xc - x).abs() < 5e-3, "x {xc} vs {x}");
    assert!((vc - v).abs() < 5e-3, "v {vc} vs {v}");
}

#[test]
fn interacting_flow_conserves_mass_momentum_and_energy() {
    let (g, vel) = lattice(64, 64, 0.125);
    let pot = Potential::new(PotentialKind::Gaussian { amplitude: 1.0, width: 0.7 }, &g).unwrap();
    let w0 = PhaseSpaceDensity::from_fn(g, vel, |x, v| (1.0 + 0.4 * x.cos()) * (-2.0 * (v - 0.2) * (v - 0.2)).exp()).unwrap();
    let options = VlasovOptions {
        record_every: 10,
        ..VlasovOptions::new(5e-3)
    };
    let out = evolve_vlasov(&w0, &pot, 0.5, &options).unwrap();
    let first = out.log.first().unwrap();
    let last = out.log.last().unwrap();
    assert_eq!(out.log.len(), 11);
    assert!(((last.mass - first.mass) / first.mass).abs() < 1e-12);
    assert!((last.momentum - first.momentum).abs() < 1e-10);
    assert!(((last.energy - first.energy) / first.energy).abs() < 1e-4);
    assert!(out.log_csv().starts_with("t,mass,momentum,energy\n"));
}

#[test]
fn distances_are_metrics_on_one_lattice() {
    let (g, vel) = lattice(16, 8, 0.5);
    let a = PhaseSpaceDensity::from_fn(g, vel, |x, v| x.cos() + v).unwrap();
    let b = PhaseSpaceDensity::from_fn(g, vel, |x, _| x.sin()).unwrap();
    let ab = phase_space_distance(&a, &b).unwrap();
    let ba = phase_space_distance(&b, &a).unwrap();
    assert_eq!(ab, ba);
    assert_eq!(phase_space_distance(&a, &a).unwrap().l1, 0.0);
    let area = a.cell_area();
    let expected_l1: f64 = a.values().iter().zip(b.values()).map(|(x, y)| (x - y).abs()).sum::<f64>() * area;
    assert!((ab.l1 - expected_l1).abs() < 1e-12);
    let other = PhaseSpaceDensity::from_fn(g, VelocityGrid::new(8, 0.25).unwrap(), |_, _| 0.0).unwrap();
    assert!(phase_space_distance(&a, &other).is_err());
}

#[test]
fn invalid_requests_fail() {
    let (g, vel) = lattice(16, 8, 0.5);
    let w = PhaseSpaceDensity::from_fn(g, vel, |_, _| 1.0).unwrap();
    let pot = Potential::zero(&g);
    assert!(evolve_vlasov(&w, &pot, 1.0, &VlasovOptions::new(0.0)).is_err());
    assert!(evolve_vlasov(&w, &pot, -1.0, &VlasovOptions::new(0.1)).is_err());
    let wrong = VlasovOptions {
        external: Some(vec![0.0; 3]),
        ..VlasovOptions::new(0.1)
    };
    assert!(evolve_vlasov(&w, &pot, 1.0, &wrong).is_err());
    let other = Potential::zero(&Grid::new(1, 8, 2.0 * PI, 1.0).unwrap());
    assert!(evolve_vlasov(&w, &other, 1.0, &VlasovOptions::new(0.1)).is_err());
}
