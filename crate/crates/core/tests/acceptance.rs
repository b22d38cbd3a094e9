//! Acceptance suite. Runs every criterion in sequence, prints one line each
//! and exits nonzero if any fails.

mod common;

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use common::*;
use fermisim::equilibrium::{thermal_density, tf_constant, weyl_matrix, wigner_transform, PhaseSpaceDensity, VelocityGrid};
use fermisim::experiments::{parse_config, run_experiment, Report};
use fermisim::fock::*;
use fermisim::grid::kinetic_matrix;
use fermisim::hf::{evolve_hf, ExchangeMode, HfModel, HfOptions};
use fermisim::linalg::{self, c, eigh, frobenius, CMat, C64};
use fermisim::phase_space::{evolve_vlasov, VlasovOptions};
use fermisim::{apply_convolution, solve_thomas_fermi, Grid, Potential, PotentialKind};

type Outcome = Result<String, String>;

fn ensure(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_config(text: &str) -> Result<Report, String> {
    let parsed = parse_config(text).map_err(|e| e.to_string())?;
    run_experiment(&parsed.config).map_err(|e| e.to_string())
}

fn check_passed(report: &Report, name: &str) -> Result<String, String> {
    let check = report.check(name).ok_or_else(|| format!("missing check {name}"))?;
    ensure(check.passed, format!("{name}: {}", check.detail))
}

fn car_exactness() -> Outcome {
    let space = FockSpace::new(3, true).map_err(|e| e.to_string())?;
    if space.dimension() != 64 {
        return Err(format!("dimension {}", space.dimension()));
    }
    let mut ops = Vec::new();
    for side in [Side::Left, Side::Right] {
        for k in 0..3 {
            ops.push(ladder_operator(&space, k, side, false).map_err(|e| e.to_string())?);
        }
    }
    let id = FockOperator::identity(space);
    let mut worst = 0.0f64;
    for (i, a) in ops.iter().enumerate() {
        for (j, b) in ops.iter().enumerate() {
            worst = worst.max(a.anticommutator(b).max_abs());
            let mixed = a.anticommutator(&b.adjoint());
            let defect = if i == j { mixed.sub(&id) } else { mixed };
            worst = worst.max(defect.max_abs());
        }
    }
    ensure(worst == 0.0, format!("largest anticommutator defect {worst:e}"))
}

fn araki_wyss() -> Outcome {
    let mut r = rng(11);
    let mut worst = [0.0f64; 4];
    for trial in 0..20 {
        let d = 1 + trial % 5;
        let space = FockSpace::new(d, true).map_err(|e| e.to_string())?;
        // Every fourth trial has pure eigenvalues 0 and 1 mixed in.
        let omega = if trial % 4 == 3 {
            let w = random_unitary(&mut r, d);
            let lam: Vec<C64> = (0..d).map(|k| c([0.0, 1.0, 0.3][k % 3])).collect();
            &w * CMat::from_diagonal(&nalgebra::DVector::from_vec(lam)) * w.adjoint()
        } else {
            random_density(&mut r, d, 0.0, 1.0)
        };
        let map = bogoliubov_implementor(&space, &omega).map_err(|e| e.to_string())?;
        let rd = reduced_densities(&space, &map.state(), 1).map_err(|e| e.to_string())?;
        let alpha = rd.alpha.expect("first order has a pairing density");
        let probes: Vec<_> = (0..3).map(|_| random_vector(&mut r, space.dimension())).collect();
        worst[0] = worst[0].max(max_diff(&rd.gamma, &omega));
        worst[1] = worst[1].max(alpha.iter().map(|z| z.norm()).fold(0.0, f64::max));
        worst[2] = worst[2].max(map.unitarity_residual(&probes));
        worst[3] = worst[3].max(map.conjugation_residual(&probes).map_err(|e| e.to_string())?);
    }
    ensure(
        worst.iter().all(|&w| w <= 1e-10),
        format!(
            "gamma {:.2e}, alpha {:.2e}, unitarity {:.2e}, conjugation {:.2e}",
            worst[0], worst[1], worst[2], worst[3]
        ),
    )
}

fn wick_and_wedge() -> Outcome {
    let mut r = rng(12);
    let mut wick = 0.0f64;
    let mut wedge = 0.0f64;
    for d in [3, 4] {
        let space = FockSpace::new(d, true).map_err(|e| e.to_string())?;
        for _ in 0..3 {
            let omega = random_density(&mut r, d, 0.0, 1.0);
            let psi = bogoliubov_implementor(&space, &omega).map_err(|e| e.to_string())?.state();
            let fs = [
                random_vector(&mut r, d),
                random_vector(&mut r, d),
                random_vector(&mut r, d),
                random_vector(&mut r, d),
            ];
            wick = wick.max(wick_residual(&space, &psi, &fs).map_err(|e| e.to_string())?);
            for k in 1..=3 {
                let gamma = reduced_densities(&space, &psi, k).map_err(|e| e.to_string())?.gamma;
                let power = wedge_power(&omega, k).map_err(|e| e.to_string())?;
                wedge = wedge.max(max_diff(&gamma, &power));
            }
        }
    }
    ensure(
        wick <= 1e-10 && wedge <= 1e-9,
        format!("four-point residual {wick:.2e}, wedge residual {wedge:.2e}"),
    )
}

fn generator_finite_difference() -> Outcome {
    let modes = ModeSpace::new(2, 2.0, 0.7).map_err(|e| e.to_string())?;
    let n = 1.0;
    let kind = PotentialKind::Gaussian {
        amplitude: 1.0,
        width: 0.8,
    };
    let model = modes.hf_model(&kind, n, ExchangeMode::Subtract).map_err(|e| e.to_string())?;
    let space = FockSpace::new(2, true).map_err(|e| e.to_string())?;
    let mut r = rng(3);
    let omega0 = random_density(&mut r, 2, 0.1, 0.9);
    let liou = build_liouvillian(&space, model.one_body(), model.pair(), n).map_err(|e| e.to_string())?;
    let prop = ManyBodyPropagator::new(&liou).map_err(|e| e.to_string())?;
    let hf_to = |omega: &CMat, dt: f64| {
        let steps = 64usize;
        evolve_hf(&model, omega, dt, &HfOptions::new(dt / steps as f64, steps), None)
            .expect("hf evolution")
            .omega
    };
    let r0 = bogoliubov_implementor(&space, &omega0).map_err(|e| e.to_string())?;
    let xi = random_vector(&mut r, space.dimension());
    let fluct = |omega_s: &CMat, s: f64| {
        let rs = bogoliubov_implementor(&space, omega_s).expect("admissible");
        rs.apply_adjoint(&prop.evolve(&r0.apply(&xi), s, modes.epsilon()).expect("propagation"))
    };
    let t = 0.3;
    let omega_t = hf_to(&omega0, t);
    let u_t = fluct(&omega_t, t);
    let gen = fluctuation_generator(&space, &omega_t, &model.hamiltonian(&omega_t), model.pair(), n)
        .map_err(|e| e.to_string())?;
    let g_u = gen.total().apply(&u_t);
    let mut errs = Vec::new();
    for delta in [1e-3, 5e-4, 2.5e-4] {
        let u_d = fluct(&hf_to(&omega_t, delta), t + delta);
        let fd: Vec<C64> = u_d
            .iter()
            .zip(&u_t)
            .map(|(a, b)| (a - b) * C64::new(0.0, modes.epsilon() / delta))
            .collect();
        errs.push(linalg::distance(&fd, &g_u));
    }
    let ratios = [errs[0] / errs[1], errs[1] / errs[2]];
    let conserving = gen.conserving.commutator(&number_operator(&space, None)).max_abs();
    ensure(
        ratios.iter().all(|q| (1.7..=2.3).contains(q)) && conserving == 0.0,
        format!(
            "residuals {:.3e} {:.3e} {:.3e}, halving ratios {:.3} {:.3}, number commutator {conserving:e}",
            errs[0], errs[1], errs[2], ratios[0], ratios[1]
        ),
    )
}

fn hf_integrator() -> Outcome {
    let n_particles = 8.0;
    let grid = Grid::new(1, 64, 2.0 * PI, 0.5).map_err(|e| e.to_string())?;
    let pot = Potential::new(
        PotentialKind::Gaussian {
            amplitude: 1.0,
            width: 0.5,
        },
        &grid,
    )
    .map_err(|e| e.to_string())?;
    let model = HfModel::on_grid(&grid, &pot, n_particles, ExchangeMode::Subtract).map_err(|e| e.to_string())?;
    let mut h = kinetic_matrix(&grid);
    for (i, x) in grid.axis_points().iter().enumerate() {
        h[(i, i)] += c(-2.0 * x.cos());
    }
    let (omega0, _) = thermal_density(&h, 0.5, n_particles).map_err(|e| e.to_string())?;
    let run = |omega: &CMat, dt: f64| {
        evolve_hf(&model, omega, 1.0, &HfOptions::new(dt, 1_000_000), None)
            .expect("hf evolution")
            .omega
    };
    let fine = run(&omega0, 1e-3);
    let (e0, _) = eigh(&omega0);
    let (e1, _) = eigh(&fine);
    let spectrum = e0.iter().zip(&e1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let trace = (linalg::trace(&fine).re - linalg::trace(&omega0).re).abs();
    let en0 = model.energy(&omega0);
    let energy = ((model.energy(&fine) - en0) / en0).abs();
    let reversal = frobenius(&(run(&fine, -1e-3) - &omega0));
    let coarse = run(&omega0, 2e-3);
    let finer = run(&omega0, 5e-4);
    let ratio = frobenius(&(&coarse - &fine)) / frobenius(&(&fine - &finer));
    ensure(
        spectrum <= 1e-8 && trace <= 1e-9 * n_particles && energy <= 1e-6 && reversal <= 1e-8 && (3.0..=5.0).contains(&ratio),
        format!(
            "spectrum {spectrum:.2e}, trace {trace:.2e}, energy {energy:.2e}, reversal {reversal:.2e}, dt ratio {ratio:.3}"
        ),
    )
}

fn convergence_trend() -> Outcome {
    let report = run_config(
        r#"
kind = "convergence"
[potential]
kind = "gaussian"
amplitude = 5.0
width = 1.0
[external]
kind = "cosine_sum"
coefficients = [0.0, -1.0]
[thermal]
temperature = 2.0
n_values = [1, 2, 3]
[time]
t_final = 0.5
dt = 0.001
record_every = 500
[fock]
d = 6
"#,
    )?;
    let table = report.table("convergence").ok_or("missing convergence table")?;
    let final_rows: Vec<_> = table.rows.iter().filter(|r| (r[1] - 0.5).abs() < 1e-9).collect();
    let hs: Vec<String> = final_rows.iter().map(|r| format!("{:.3e}", r[4])).collect();
    let tr: Vec<String> = final_rows.iter().map(|r| format!("{:.3e}", r[5])).collect();
    let a = check_passed(&report, "hs_error_over_sqrt_n_decreasing");
    let b = check_passed(&report, "trace_error_over_n_decreasing");
    let detail = format!("HS/sqrt(N) {hs:?}, trace/N {tr:?}");
    ensure(a.is_ok() && b.is_ok(), detail)
}

fn fluctuation_text(d: usize, amplitude: f64) -> String {
    format!(
        r#"
kind = "fluctuation"
[potential]
kind = "gaussian"
amplitude = {amplitude}
width = 1.0
[external]
kind = "cosine_sum"
coefficients = [0.0, -1.0]
[thermal]
temperature = 2.0
n_values = [1, 2]
[time]
t_final = 1.0
dt = 0.001
record_every = 50
[fock]
d = {d}
k_max = 2
"#
    )
}

fn fluctuation_growth() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    // Three ring sites are pairwise equidistant, so d = 3 only exercises the
    // pipeline; d = 4 is the run with genuine growth.
    for d in [3, 4] {
        let report = run_config(&fluctuation_text(d, 3.0))?;
        let failed: Vec<&str> = report.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect();
        ok &= failed.is_empty();
        let table = report.table("fluctuation").ok_or("missing fluctuation table")?;
        let top = table.column("moment_2").ok_or("missing moment column")?.into_iter().fold(0.0, f64::max);
        details.push(format!("d={d} max moment_2 {top:.4} failed {failed:?}"));
    }
    for d in [3, 4] {
        let report = run_config(&fluctuation_text(d, 0.0))?;
        let table = report.table("fluctuation").ok_or("missing fluctuation table")?;
        let mut top = 0.0f64;
        for k in 1..=2 {
            let col = table.column(&format!("moment_{k}")).ok_or("missing moment column")?;
            top = top.max(col.into_iter().fold(0.0, f64::max));
        }
        ok &= top <= 1.0 + 1e-8;
        details.push(format!("d={d} free max moment {:.2e} above 1", top - 1.0));
    }
    ensure(ok, details.join("; "))
}

fn semiclassical_propagation() -> Outcome {
    let report = run_config(
        r#"
kind = "hf"
[grid]
n = 64
[potential]
kind = "gaussian"
amplitude = 5.0
width = 1.0
[external]
kind = "cosine_sum"
coefficients = [0.0, -1.0]
[thermal]
temperature = 2.0
n_values = [8]
[time]
t_final = 2.0
dt = 0.001
record_every = 125
"#,
    )?;
    let point = &report.summary["points"][0];
    let envelope = &point["semiclassical_envelope"];
    let rate = envelope["rate"].as_f64().ok_or("missing envelope")?;
    let gap = envelope["max_log_gap"].as_f64().ok_or("missing envelope")?;
    let growth = check_passed(&report, "no_superexponential_growth_0");
    let detail = format!("envelope rate {rate:.3e}, log gap {gap:.3e}, {}", growth.clone().unwrap_or_else(|e| e));
    ensure(growth.is_ok() && rate.is_finite() && gap.is_finite(), detail)
}

fn vlasov_limit() -> Outcome {
    let report = run_config(
        r#"
kind = "vlasov_compare"
[grid]
n = 64
[potential]
kind = "gaussian"
amplitude = 1.0
width = 1.0
[external]
kind = "cosine_sum"
coefficients = [0.0, -1.0]
[thermal]
temperature = 0.5
n_values = [8, 8, 8]
epsilon_mode = "explicit"
epsilons = [0.5, 0.25, 0.125]
[time]
t_final = 0.5
dt = 0.001
record_every = 250
"#,
    )?;
    check_passed(&report, "l1_decreases_with_epsilon")
}

fn oracle_equivalences() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;

    // Convolution against the direct lattice sum.
    let mut conv_err = 0.0f64;
    for dim in [1, 2] {
        let grid = Grid::new(dim, 16, 2.0 * PI, 1.0).map_err(|e| e.to_string())?;
        let kind = PotentialKind::Gaussian {
            amplitude: 1.3,
            width: 0.7,
        };
        let pot = Potential::new(kind.clone(), &grid).map_err(|e| e.to_string())?;
        let rho: Vec<f64> = (0..grid.size())
            .map(|i| {
                let x = grid.point(i);
                1.0 + 0.5 * x[0].sin() + 0.25 * x.iter().map(|v| (2.0 * v).cos()).sum::<f64>()
            })
            .collect();
        let fast = apply_convolution(&grid, &pot, &rho).map_err(|e| e.to_string())?;
        for (i, fi) in fast.iter().enumerate() {
            let xi = grid.point(i);
            let mut s = 0.0;
            for (j, rj) in rho.iter().enumerate() {
                let xj = grid.point(j);
                let diff: Vec<f64> = xi.iter().zip(&xj).map(|(a, b)| a - b).collect();
                s += kind.eval(&diff, grid.length()).map_err(|e| e.to_string())? * rj;
            }
            conv_err = conv_err.max((s * grid.cell_volume() - fi).abs());
        }
    }
    ok &= conv_err <= 1e-10;
    details.push(format!("convolution {conv_err:.2e}"));

    // Weyl then Wigner on data band-limited in both variables.
    let grid = Grid::new(1, 32, 2.0 * PI, 0.25).map_err(|e| e.to_string())?;
    let vel = VelocityGrid::for_grid(&grid, 1).map_err(|e| e.to_string())?;
    let window = vel.window();
    let origin = vel.min();
    let m = PhaseSpaceDensity::from_fn(grid, vel, |x, v| {
        let s = 2.0 * PI * (v - origin) / window;
        0.4 + 0.2 * x.cos() * s.cos() + 0.1 * (2.0 * x).sin() * (3.0 * s).sin() + 0.05 * (3.0 * x).cos()
    })
    .map_err(|e| e.to_string())?;
    let op = weyl_matrix(&m, &grid).map_err(|e| e.to_string())?;
    let back = wigner_transform(&op, &grid, &vel).map_err(|e| e.to_string())?.density;
    let roundtrip = m.values().iter().zip(back.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    ok &= roundtrip <= 1e-8;
    details.push(format!("Weyl/Wigner {roundtrip:.2e}"));

    // Thomas-Fermi minimizer against projected gradient descent.
    let grid = Grid::new(1, 64, 2.0 * PI, 0.5).map_err(|e| e.to_string())?;
    let kind = PotentialKind::Gaussian {
        amplitude: 1.0,
        width: 0.5,
    };
    let pot = Potential::new(kind.clone(), &grid).map_err(|e| e.to_string())?;
    let v_ext: Vec<f64> = grid.axis_points().iter().map(|x| -2.0 * x.cos()).collect();
    let mut tf_err = 0.0f64;
    for tf_dim in [1, 3] {
        let n_particles = 8.0;
        let sol = solve_thomas_fermi(&grid, &v_ext, &pot, n_particles, tf_dim).map_err(|e| e.to_string())?;
        let oracle = projected_gradient_tf(&grid, &kind, &v_ext, n_particles, tf_dim);
        let l1: f64 = sol.density.iter().zip(&oracle).map(|(a, b)| (a - b).abs()).sum::<f64>() * grid.spacing();
        tf_err = tf_err.max(l1);
    }
    ok &= tf_err <= 1e-4;
    details.push(format!("Thomas-Fermi L1 {tf_err:.2e}"));

    // Free transport of a band-limited profile.
    let grid = Grid::new(1, 32, 2.0 * PI, 1.0).map_err(|e| e.to_string())?;
    let vel = VelocityGrid::new(32, 0.25).map_err(|e| e.to_string())?;
    let profile = |x: f64, v: f64| (1.0 + 0.5 * (x - 0.3).cos() + 0.2 * (2.0 * x).sin()) * (-v * v).exp();
    let w0 = PhaseSpaceDensity::from_fn(grid, vel, profile).map_err(|e| e.to_string())?;
    let t = 0.7;
    let state = evolve_vlasov(&w0, &Potential::zero(&grid), t, &VlasovOptions::new(0.01)).map_err(|e| e.to_string())?;
    let exact = PhaseSpaceDensity::from_fn(grid, vel, |x, v| profile(x - 2.0 * v * t, v)).map_err(|e| e.to_string())?;
    let transport = exact
        .values()
        .iter()
        .zip(state.density.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    ok &= transport <= 1e-9;
    details.push(format!("free transport {transport:.2e}"));

    ensure(ok, details.join(", "))
}

/// Minimize the discrete Thomas-Fermi energy by projected gradient descent on
/// `{ρ ≥ 0, Σρ Δx = N}`, with the pair sum evaluated directly.
fn projected_gradient_tf(grid: &Grid, kind: &PotentialKind, v_ext: &[f64], n_particles: f64, tf_dim: usize) -> Vec<f64> {
    let n = grid.size();
    let dx = grid.spacing();
    let xs = grid.axis_points();
    let ball = match tf_dim {
        1 => 2.0,
        2 => PI,
        _ => 4.0 * PI / 3.0,
    };
    let c1 = grid.epsilon().powi(2) * 4.0 * PI * PI * f64::powf(ball, -2.0 / tf_dim as f64);
    assert!((c1 / grid.epsilon().powi(2) - tf_constant(tf_dim)).abs() < 1e-12);
    let pair: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| kind.eval(&[xs[i] - xs[j]], grid.length()).unwrap()).collect())
        .collect();
    let gradient = |rho: &[f64]| -> Vec<f64> {
        (0..n)
            .map(|i| {
                let conv: f64 = pair[i].iter().zip(rho).map(|(v, r)| v * r).sum::<f64>() * dx;
                v_ext[i] + c1 * rho[i].max(0.0).powf(2.0 / tf_dim as f64) + conv / n_particles
            })
            .collect()
    };
    // Euclidean projection onto the scaled simplex.
    let project = |y: &[f64]| -> Vec<f64> {
        let total = n_particles / dx;
        let mut sorted = y.to_vec();
        sorted.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut acc = 0.0;
        let mut theta = 0.0;
        for (k, s) in sorted.iter().enumerate() {
            acc += s;
            let candidate = (acc - total) / (k + 1) as f64;
            if s - candidate > 0.0 {
                theta = candidate;
            }
        }
        y.iter().map(|v| (v - theta).max(0.0)).collect()
    };
    let mut rho = vec![n_particles / grid.length(); n];
    let step = 0.02;
    for _ in 0..200_000 {
        let g = gradient(&rho);
        let y: Vec<f64> = rho.iter().zip(&g).map(|(r, gi)| r - step * gi).collect();
        let next = project(&y);
        let moved = next.iter().zip(&rho).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        rho = next;
        if moved < 1e-13 {
            break;
        }
    }
    rho
}

type Criterion = (&'static str, fn() -> Outcome, Duration);

fn main() {
    let criteria: [Criterion; 10] = [
        ("CAR exactness", car_exactness, Duration::from_secs(1)),
        ("Araki-Wyss implementor", araki_wyss, Duration::from_secs(30)),
        ("Wick rule and wedge powers", wick_and_wedge, Duration::from_secs(60)),
        ("fluctuation generator", generator_finite_difference, Duration::from_secs(120)),
        ("HF integrator", hf_integrator, Duration::from_secs(60)),
        ("mean-field convergence trend", convergence_trend, Duration::from_secs(600)),
        ("fluctuation growth", fluctuation_growth, Duration::from_secs(300)),
        ("semiclassical propagation", semiclassical_propagation, Duration::from_secs(300)),
        ("Vlasov limit", vlasov_limit, Duration::from_secs(600)),
        ("oracle equivalences", oracle_equivalences, Duration::from_secs(120)),
    ];
    let mut failures = 0;
    for (i, (name, run, budget)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let elapsed = start.elapsed();
        let (passed, detail) = match outcome {
            Ok(d) => (elapsed <= *budget, d),
            Err(d) => (false, d),
        };
        if !passed {
            failures += 1;
        }
        println!(
            "[{:>2}/10] {} {name}: {detail} ({:.2} s, budget {} s)",
            i + 1,
            if passed { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            budget.as_secs()
        );
    }
    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
