//! Experiment orchestration.

use std::time::{SystemTime, UNIX_EPOCH};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};

use super::checkpoint::DensityCheckpoint;
use super::config::{ExperimentConfig, ExperimentKind, XiChoice};
use super::fit::{doubling_violations, fit_double_exponential, fit_exponential_envelope};
use super::report::{Artifact, Check, Metadata, Report, RunInfo, SweepPoint, Table};
use crate::equilibrium::{
    fermi_dirac_density, solve_thomas_fermi, thermal_density, weyl_quantize, wigner_transform, FermiDiracParams,
    PhaseSpaceDensity, VelocityGrid,
};
use crate::error::{Error, Result};
use crate::fock::{
    bogoliubov_implementor, build_liouvillian, normalize, number_moments, reduced_densities, FockSpace,
    ManyBodyPropagator, ModeSpace,
};
use crate::grid::{kinetic_matrix, Grid, OneBodyOperator, Potential, PotentialKind};
use crate::hf::{evolve_hf, HfModel, HfOptions, SemiclassicalProbe};
use crate::linalg::{self, c, eigh, CMat, C64};
use crate::phase_space::{evolve_vlasov, phase_space_distance, VlasovOptions};
use crate::states::{default_probes, make_density_clamped, semiclassical_report, DensityMatrix};

/// Initial data on a grid for one sweep point.
#[derive(Debug, Clone)]
pub struct GridInitialState {
    pub grid: Grid,
    pub potential: Potential,
    pub omega: DensityMatrix,
    /// Fermi-Dirac phase-space density and its chemical potential, in one
    /// dimension.
    pub phase: Option<(PhaseSpaceDensity, f64)>,
}

fn external_samples(points: impl Iterator<Item = Vec<f64>>, length: f64, ext: Option<&PotentialKind>) -> Result<Vec<f64>> {
    match ext {
        None => Ok(points.map(|_| 0.0).collect()),
        Some(kind) => points.map(|x| kind.eval(&x, length)).collect(),
    }
}

/// Thomas-Fermi profile, Fermi-Dirac density and its Weyl quantization in one
/// dimension; the Fermi-Dirac state of `-ε²Δ + V_ext` otherwise.
pub fn grid_initial_state(cfg: &ExperimentConfig, n_particles: f64, epsilon: f64) -> Result<GridInitialState> {
    let gc = cfg
        .grid
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("experiment has no grid".into()))?;
    let grid = Grid::new(gc.dim, gc.n, gc.length, epsilon)?;
    let potential = Potential::new(cfg.potential.clone(), &grid)?;
    let trap = external_samples((0..grid.size()).map(|i| grid.point(i)), gc.length, cfg.external.as_ref())?;
    let th = &cfg.thermal;
    if gc.dim == 1 {
        let tf = solve_thomas_fermi(&grid, &trap, &potential, n_particles, th.tf_dim)?;
        let params = FermiDiracParams::semiclassical(th.temperature, epsilon, th.tf_dim);
        let expo = 1.0 / th.tf_dim as f64;
        let reach = tf
            .density
            .iter()
            .map(|&r| (params.coupling * r.max(0.0).powf(2.0 * expo)).sqrt())
            .fold(0.0, f64::max);
        let v_max = th.v_max.unwrap_or(4.0 * th.temperature.sqrt() + reach);
        let velocities = VelocityGrid::covering(&grid, v_max, th.oversample)?;
        let (m, mu) = fermi_dirac_density(&tf.density, &params, &grid, &velocities, Some(n_particles))?;
        let omega = weyl_quantize(&m, &grid, n_particles)?;
        Ok(GridInitialState {
            grid,
            potential,
            omega,
            phase: Some((m, mu)),
        })
    } else {
        let mut h = kinetic_matrix(&grid);
        for (i, v) in trap.iter().enumerate() {
            h[(i, i)] += c(*v);
        }
        let (omega, _) = thermal_density(&h, th.temperature, n_particles)?;
        let omega = make_density_clamped(OneBodyOperator::new(grid, omega)?, n_particles)?;
        Ok(GridInitialState {
            grid,
            potential,
            omega,
            phase: None,
        })
    }
}

/// Few-mode model for one sweep point.
#[derive(Debug, Clone)]
pub struct ModeSetup {
    pub modes: ModeSpace,
    pub model: HfModel,
    pub omega0: CMat,
    pub space: FockSpace,
}

pub fn mode_setup(cfg: &ExperimentConfig, n_particles: f64, epsilon: f64) -> Result<ModeSetup> {
    let fc = cfg
        .fock
        .as_ref()
        .ok_or_else(|| Error::InvalidArgument("experiment has no fock section".into()))?;
    let modes = ModeSpace::new(fc.d, fc.length, epsilon)?;
    let model = modes.hf_model(&cfg.potential, n_particles, cfg.exchange)?;
    let trap = external_samples(modes.positions().into_iter().map(|x| vec![x]), fc.length, cfg.external.as_ref())?;
    let mut h = modes.kinetic();
    for (i, v) in trap.iter().enumerate() {
        h[(i, i)] += c(*v);
    }
    let (omega0, _) = thermal_density(&h, cfg.thermal.temperature, n_particles)?;
    Ok(ModeSetup {
        modes,
        model,
        omega0,
        space: FockSpace::new(fc.d, true)?,
    })
}

/// The configured initial fluctuation vector.
pub fn initial_xi(space: &FockSpace, choice: XiChoice, seed: u64) -> Vec<C64> {
    let dim = space.dimension();
    match choice {
        XiChoice::Vacuum => space.vacuum(),
        XiChoice::Excitation => {
            let mut v = vec![C64::new(0.0, 0.0); dim];
            v[1] = c(1.0);
            v
        }
        XiChoice::Random { cutoff } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut v: Vec<C64> = (0..dim)
                .map(|b| {
                    let (re, im) = (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
                    if (b as u32).count_ones() as usize <= cutoff {
                        C64::new(re, im)
                    } else {
                        C64::new(0.0, 0.0)
                    }
                })
                .collect();
            normalize(&mut v);
            v
        }
    }
}

fn trace_norm(a: &CMat) -> f64 {
    eigh(a).0.iter().map(|x| x.abs()).sum()
}

fn annotate<T>(n: f64, eps: f64, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Sweep {
        point: format!("N = {n}, epsilon = {eps}"),
        source: Box::new(e),
    })
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Partial results of one kind.
struct Outcome {
    tables: Vec<Table>,
    summary: Value,
    checks: Vec<Check>,
    warnings: Vec<String>,
    artifacts: Vec<Artifact>,
}

/// Run an experiment. Sweep points run in parallel on the current rayon pool;
/// results are assembled in sweep order, so output does not depend on the
/// thread count.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let started = unix_now();
    let outcome = match cfg.kind {
        ExperimentKind::Hf => run_hf(cfg)?,
        ExperimentKind::VlasovCompare => run_vlasov_compare(cfg)?,
        ExperimentKind::Convergence => run_convergence(cfg)?,
        ExperimentKind::Fluctuation => run_fluctuation(cfg)?,
        ExperimentKind::Diagnose => run_diagnose(cfg)?,
    };
    let hash = cfg.hash();
    let report = Report {
        metadata: Metadata {
            config_hash: hash.clone(),
            kind: cfg.kind.name().to_string(),
            seed: cfg.seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            sweep: cfg
                .sweep()
                .into_iter()
                .map(|(n, e)| SweepPoint {
                    n_particles: n,
                    epsilon: e,
                })
                .collect(),
        },
        tables: outcome.tables,
        summary: outcome.summary,
        checks: outcome.checks,
        warnings: outcome.warnings,
        artifacts: outcome.artifacts,
        run_info: RunInfo {
            config_hash: hash,
            started_unix: started,
            finished_unix: unix_now(),
            threads: rayon::current_num_threads(),
        },
    };
    report.verify_tables()?;
    Ok(report)
}

struct HfPoint {
    log: Vec<Vec<f64>>,
    summary: Value,
    violations: usize,
    spectrum_drift: f64,
    trace_drift: f64,
    energy_drift: f64,
    artifacts: Vec<Artifact>,
    warnings: Vec<String>,
}

fn hf_point(cfg: &ExperimentConfig, idx: usize, n: f64, eps: f64) -> Result<HfPoint> {
    let init = grid_initial_state(cfg, n, eps)?;
    let model = HfModel::on_grid(&init.grid, &init.potential, n, cfg.exchange)?;
    let probe = SemiclassicalProbe {
        grid: init.grid,
        probes: default_probes(&init.grid, cfg.semiclassical_probes),
        n_particles: n,
    };
    let omega0 = init.omega.matrix().clone();
    let opts = HfOptions::new(cfg.time.dt, cfg.time.record_every);
    let state = evolve_hf(&model, &omega0, cfg.time.t_final, &opts, Some(&probe))?;
    let log: Vec<Vec<f64>> = state
        .log
        .iter()
        .map(|r| vec![r.t, r.trace, r.energy, r.eig_min, r.eig_max, r.semiclassical_c])
        .collect();
    let (e0, _) = eigh(&omega0);
    let (e1, _) = eigh(&state.omega);
    let spectrum_drift = e0.iter().zip(&e1).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let first = state.log.first().expect("log has the initial row");
    let last = state.log.last().expect("log has the final row");
    let trace_drift = (last.trace - first.trace).abs();
    let energy_drift = (last.energy - first.energy).abs() / first.energy.abs().max(f64::MIN_POSITIVE);
    let ts: Vec<f64> = state.log.iter().map(|r| r.t).collect();
    let cs: Vec<f64> = state.log.iter().map(|r| r.semiclassical_c).collect();
    let violations = doubling_violations(&ts, &cs, DOUBLING_DELTA, DOUBLING_LOG_TOLERANCE);
    let strict_violations = doubling_violations(&ts, &cs, DOUBLING_DELTA, 0.0);
    let envelope = if ts.len() >= 2 {
        Some(fit_exponential_envelope(&ts, &cs)?)
    } else {
        None
    };
    let clamp = init.omega.clamp_report();
    let mut artifacts = vec![Artifact {
        name: format!("omega_final_{idx}.fsdm"),
        bytes: DensityCheckpoint {
            omega: state.omega.clone(),
            ..DensityCheckpoint::from_density(&init.omega)
        }
        .to_bytes(),
    }];
    if let Some((m, _)) = &init.phase {
        artifacts.push(Artifact {
            name: format!("phase_initial_{idx}.fsps"),
            bytes: m.to_bytes(),
        });
    }
    let summary = json!({
        "n_particles": n,
        "epsilon": eps,
        "mu": init.phase.as_ref().map(|p| p.1),
        "clamp_max_violation": clamp.max_violation,
        "spectrum_drift": spectrum_drift,
        "trace_drift": trace_drift,
        "energy_drift_relative": energy_drift,
        "semiclassical_envelope": envelope,
        "doubling_violations": violations,
        "doubling_violations_without_tolerance": strict_violations,
    });
    Ok(HfPoint {
        log,
        summary,
        violations: violations.len(),
        spectrum_drift,
        trace_drift,
        energy_drift,
        artifacts,
        warnings: clamp.warnings.clone(),
    })
}

fn run_hf(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sweep = cfg.sweep();
    let points: Vec<HfPoint> = sweep
        .par_iter()
        .enumerate()
        .map(|(i, &(n, e))| annotate(n, e, hf_point(cfg, i, n, e)))
        .collect::<Result<_>>()?;
    let mut out = Outcome {
        tables: Vec::new(),
        summary: json!({}),
        checks: Vec::new(),
        warnings: Vec::new(),
        artifacts: Vec::new(),
    };
    let mut summaries = Vec::new();
    for (i, (p, &(n, _))) in points.into_iter().zip(&sweep).enumerate() {
        let mut t = Table::new(
            format!("hf_log_{i}"),
            &["t", "trace", "energy", "eig_min", "eig_max", "semiclassical_C"],
            p.log.len(),
        );
        for r in p.log {
            t.push(r);
        }
        out.tables.push(t);
        out.checks.push(Check::new(
            format!("spectrum_preserved_{i}"),
            p.spectrum_drift <= 1e-8,
            format!("max eigenvalue drift {:.3e}", p.spectrum_drift),
        ));
        out.checks.push(Check::new(
            format!("trace_preserved_{i}"),
            p.trace_drift <= 1e-9 * n,
            format!("trace drift {:.3e}", p.trace_drift),
        ));
        out.checks.push(Check::new(
            format!("energy_conserved_{i}"),
            p.energy_drift <= 1e-6,
            format!("relative energy drift {:.3e}", p.energy_drift),
        ));
        out.checks.push(Check::new(
            format!("no_superexponential_growth_{i}"),
            p.violations == 0,
            format!("{} doubling violations", p.violations),
        ));
        out.warnings.extend(p.warnings.into_iter().map(|w| format!("point {i}: {w}")));
        out.artifacts.extend(p.artifacts);
        summaries.push(p.summary);
    }
    out.summary = json!({ "points": summaries });
    Ok(out)
}

struct VlasovPoint {
    rows: Vec<Vec<f64>>,
    artifacts: Vec<Artifact>,
    warnings: Vec<String>,
    summary: Value,
}

fn vlasov_point(cfg: &ExperimentConfig, idx: usize, n: f64, eps: f64) -> Result<VlasovPoint> {
    let init = grid_initial_state(cfg, n, eps)?;
    let (m, _) = init
        .phase
        .clone()
        .ok_or_else(|| Error::InvalidArgument("vlasov comparison needs a one-dimensional grid".into()))?;
    let model = HfModel::on_grid(&init.grid, &init.potential, n, cfg.exchange)?;
    let mut opts = HfOptions::new(cfg.time.dt, cfg.time.record_every);
    opts.keep_states = true;
    let hf = evolve_hf(&model, init.omega.matrix(), cfg.time.t_final, &opts, None)?;
    let velocities = *m.velocities();
    let mut w = m.clone();
    let mut t_prev = 0.0;
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    let mut last_wigner = None;
    for (t, omega_t) in &hf.trajectory {
        let dt_seg = t - t_prev;
        if dt_seg > 0.0 {
            let steps = (dt_seg / cfg.time.dt - 1e-9).ceil().max(1.0);
            let state = evolve_vlasov(&w, &init.potential, dt_seg, &VlasovOptions::new(dt_seg / steps))?;
            for wmsg in state.warnings {
                if !warnings.contains(&wmsg) {
                    warnings.push(wmsg);
                }
            }
            w = state.density;
        }
        t_prev = *t;
        let wig = wigner_transform(omega_t, &init.grid, &velocities)?;
        let d = phase_space_distance(&wig.density, &w)?;
        rows.push(vec![eps, *t, d.l1, d.l2, d.sup]);
        last_wigner = Some(wig.density);
    }
    let mut artifacts = vec![Artifact {
        name: format!("vlasov_final_{idx}.fsps"),
        bytes: w.to_bytes(),
    }];
    if let Some(wig) = last_wigner {
        artifacts.push(Artifact {
            name: format!("wigner_final_{idx}.fsps"),
            bytes: wig.to_bytes(),
        });
    }
    let last = rows.last().expect("trajectory has the initial state");
    let summary = json!({
        "n_particles": n,
        "epsilon": eps,
        "mass": m.mass(),
        "final_l1": last[2],
        "final_l1_relative": last[2] / m.mass(),
    });
    Ok(VlasovPoint {
        rows,
        artifacts,
        warnings,
        summary,
    })
}

/// Monotone decrease with multiplicative slack.
fn decreasing_with_slack(values: &[f64], slack: f64) -> bool {
    values.windows(2).all(|w| w[1] <= w[0] * (1.0 + slack))
}

fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

fn run_vlasov_compare(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sweep = cfg.sweep();
    let points: Vec<VlasovPoint> = sweep
        .par_iter()
        .enumerate()
        .map(|(i, &(n, e))| annotate(n, e, vlasov_point(cfg, i, n, e)))
        .collect::<Result<_>>()?;
    let per_point = cfg.sample_times().len();
    let mut table = Table::new("vlasov_distance", &["epsilon", "t", "l1", "l2", "sup"], per_point * sweep.len());
    let mut out = Outcome {
        tables: Vec::new(),
        summary: json!({}),
        checks: Vec::new(),
        warnings: Vec::new(),
        artifacts: Vec::new(),
    };
    let mut finals: Vec<(f64, f64)> = Vec::new();
    let mut summaries = Vec::new();
    for (i, p) in points.into_iter().enumerate() {
        let last = p.rows.last().expect("rows");
        finals.push((last[0], last[2]));
        for r in p.rows {
            table.push(r);
        }
        out.warnings.extend(p.warnings.into_iter().map(|w| format!("point {i}: {w}")));
        out.artifacts.extend(p.artifacts);
        summaries.push(p.summary);
    }
    finals.sort_by(|a, b| b.0.total_cmp(&a.0));
    let l1s: Vec<f64> = finals.iter().map(|f| f.1).collect();
    out.checks.push(Check::new(
        "l1_decreases_with_epsilon",
        decreasing_with_slack(&l1s, 0.1),
        format!("final L1 by decreasing epsilon: {l1s:?}"),
    ));
    out.tables.push(table);
    out.summary = json!({ "points": summaries });
    Ok(out)
}

struct ModePoint {
    rows: Vec<Vec<f64>>,
    artifact: Artifact,
}

fn hf_trajectory(cfg: &ExperimentConfig, setup: &ModeSetup) -> Result<Vec<(f64, CMat)>> {
    let mut opts = HfOptions::new(cfg.time.dt, cfg.time.record_every);
    opts.keep_states = true;
    Ok(evolve_hf(&setup.model, &setup.omega0, cfg.time.t_final, &opts, None)?.trajectory)
}

fn mode_artifact(name: String, setup: &ModeSetup, omega: &CMat) -> Artifact {
    Artifact {
        name,
        bytes: DensityCheckpoint {
            dim: 1,
            n: setup.modes.modes(),
            length: setup.modes.length(),
            epsilon: setup.modes.epsilon(),
            n_particles: setup.model.n_particles(),
            omega: omega.clone(),
        }
        .to_bytes(),
    }
}

fn convergence_point(cfg: &ExperimentConfig, idx: usize, n: f64, eps: f64) -> Result<ModePoint> {
    let setup = mode_setup(cfg, n, eps)?;
    let fc = cfg.fock.as_ref().expect("mode experiments have a fock section");
    let traj = hf_trajectory(cfg, &setup)?;
    let liouvillian = build_liouvillian(&setup.space, setup.model.one_body(), setup.model.pair(), n)?;
    let propagator = ManyBodyPropagator::new(&liouvillian)?;
    let xi = initial_xi(&setup.space, fc.xi, cfg.seed);
    let psi0 = bogoliubov_implementor(&setup.space, &setup.omega0)?.apply(&xi);
    let mut rows = Vec::new();
    let mut psi = psi0;
    let mut t_prev = 0.0;
    for (t, omega_t) in &traj {
        psi = propagator.evolve(&psi, t - t_prev, eps)?;
        t_prev = *t;
        let gamma = reduced_densities(&setup.space, &psi, 1)?.gamma;
        let diff = &gamma - omega_t;
        let hs = linalg::frobenius(&diff);
        let tr = trace_norm(&diff);
        rows.push(vec![n, *t, hs, tr, hs / n.sqrt(), tr / n]);
    }
    let artifact = mode_artifact(format!("omega_final_{idx}.fsdm"), &setup, &traj.last().expect("trajectory").1);
    Ok(ModePoint { rows, artifact })
}

fn run_convergence(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sweep = cfg.sweep();
    let points: Vec<ModePoint> = sweep
        .par_iter()
        .enumerate()
        .map(|(i, &(n, e))| annotate(n, e, convergence_point(cfg, i, n, e)))
        .collect::<Result<_>>()?;
    let per_point = cfg.sample_times().len();
    let mut table = Table::new(
        "convergence",
        &["N", "t", "hs_error", "trace_error", "hs_error_over_sqrt_n", "trace_error_over_n"],
        per_point * sweep.len(),
    );
    let mut finals: Vec<Vec<f64>> = Vec::new();
    let mut artifacts = Vec::new();
    for p in points {
        finals.push(p.rows.last().expect("rows").clone());
        for r in p.rows {
            table.push(r);
        }
        artifacts.push(p.artifact);
    }
    finals.sort_by(|a, b| a[0].total_cmp(&b[0]));
    let hs: Vec<f64> = finals.iter().map(|r| r[4]).collect();
    let tr: Vec<f64> = finals.iter().map(|r| r[5]).collect();
    let checks = vec![
        Check::new(
            "hs_error_over_sqrt_n_decreasing",
            strictly_decreasing(&hs),
            format!("final values by increasing N: {hs:?}"),
        ),
        Check::new(
            "trace_error_over_n_decreasing",
            strictly_decreasing(&tr),
            format!("final values by increasing N: {tr:?}"),
        ),
    ];
    let summary = json!({
        "final": finals.iter().map(|r| json!({
            "n_particles": r[0], "t": r[1], "hs_error": r[2], "trace_error": r[3],
            "hs_error_over_sqrt_n": r[4], "trace_error_over_n": r[5],
        })).collect::<Vec<_>>(),
    });
    Ok(Outcome {
        tables: vec![table],
        summary,
        checks,
        warnings: Vec::new(),
        artifacts,
    })
}

fn fluctuation_point(cfg: &ExperimentConfig, idx: usize, n: f64, eps: f64) -> Result<ModePoint> {
    let setup = mode_setup(cfg, n, eps)?;
    let fc = cfg.fock.as_ref().expect("mode experiments have a fock section");
    let traj = hf_trajectory(cfg, &setup)?;
    let liouvillian = build_liouvillian(&setup.space, setup.model.one_body(), setup.model.pair(), n)?;
    let propagator = ManyBodyPropagator::new(&liouvillian)?;
    let xi = initial_xi(&setup.space, fc.xi, cfg.seed);
    let mut psi = bogoliubov_implementor(&setup.space, &setup.omega0)?.apply(&xi);
    let mut rows = Vec::new();
    let mut t_prev = 0.0;
    for (t, omega_t) in &traj {
        psi = propagator.evolve(&psi, t - t_prev, eps)?;
        t_prev = *t;
        let xi_t = bogoliubov_implementor(&setup.space, omega_t)?.apply_adjoint(&psi);
        let mut row = vec![n, *t];
        row.extend((1..=fc.k_max).map(|k| number_moments(&xi_t, k)));
        rows.push(row);
    }
    let artifact = mode_artifact(format!("omega_final_{idx}.fsdm"), &setup, &traj.last().expect("trajectory").1);
    Ok(ModePoint { rows, artifact })
}

/// Largest rate scanned by the envelope fit.
const FIT_C1_MAX: f64 = 20.0;
const DOUBLING_DELTA: f64 = 0.5;
const DOUBLING_LOG_TOLERANCE: f64 = 0.01;

fn run_fluctuation(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sweep = cfg.sweep();
    let fc = cfg.fock.as_ref().expect("mode experiments have a fock section");
    let points: Vec<ModePoint> = sweep
        .par_iter()
        .enumerate()
        .map(|(i, &(n, e))| annotate(n, e, fluctuation_point(cfg, i, n, e)))
        .collect::<Result<_>>()?;
    let mut header = vec!["N".to_string(), "t".to_string()];
    header.extend((1..=fc.k_max).map(|k| format!("moment_{k}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let per_point = cfg.sample_times().len();
    let mut table = Table::new("fluctuation", &header_refs, per_point * sweep.len());
    let mut fits = Vec::new();
    let mut checks = Vec::new();
    let mut artifacts = Vec::new();
    for (i, p) in points.into_iter().enumerate() {
        let n = sweep[i].0;
        let ts: Vec<f64> = p.rows.iter().map(|r| r[1]).collect();
        for k in 1..=fc.k_max as usize {
            let ys: Vec<f64> = p.rows.iter().map(|r| r[1 + k]).collect();
            let finite = ys.iter().all(|y| y.is_finite() && *y >= 1.0 - 1e-9);
            checks.push(Check::new(
                format!("moments_finite_{i}_k{k}"),
                finite,
                format!("largest moment {:.6e}", ys.iter().cloned().fold(0.0, f64::max)),
            ));
            if ts.len() >= 2 && finite {
                let fit = fit_double_exponential(&ts, &ys, FIT_C1_MAX)?;
                checks.push(Check::new(
                    format!("envelope_fit_{i}_k{k}"),
                    fit.max_relative_residual <= 0.05 && fit.k >= 0.0 && fit.c1 >= 0.0 && fit.c2 >= 0.0,
                    format!("ln K {:.4e}, c1 {:.4e}, c2 {:.4e}, residual {:.3e}", fit.log_k, fit.c1, fit.c2, fit.max_relative_residual),
                ));
                fits.push(json!({ "n_particles": n, "k": k, "fit": fit }));
            }
        }
        for r in p.rows {
            table.push(r);
        }
        artifacts.push(p.artifact);
    }
    Ok(Outcome {
        tables: vec![table],
        summary: json!({ "fits": fits }),
        checks,
        warnings: Vec::new(),
        artifacts,
    })
}

fn run_diagnose(cfg: &ExperimentConfig) -> Result<Outcome> {
    let sweep = cfg.sweep();
    let results: Vec<(GridInitialState, crate::states::SemiclassicalReport)> = sweep
        .par_iter()
        .map(|&(n, e)| {
            annotate(n, e, (|| {
                let init = grid_initial_state(cfg, n, e)?;
                let probes = default_probes(&init.grid, cfg.semiclassical_probes);
                let rep = semiclassical_report(&init.omega, &probes)?;
                Ok((init, rep))
            })())
        })
        .collect::<Result<_>>()?;
    let mut table = Table::new(
        "semiclassical",
        &["N", "epsilon", "max_ratio", "grad_ratio_v", "grad_ratio_u", "clamp_max_violation"],
        sweep.len(),
    );
    let mut tables = Vec::new();
    let mut artifacts = Vec::new();
    let mut warnings = Vec::new();
    let mut ratios = Vec::new();
    for (i, ((init, rep), &(n, e))) in results.iter().zip(&sweep).enumerate() {
        let clamp = init.omega.clamp_report();
        table.push(vec![n, e, rep.max_ratio(), rep.grad_ratio_v, rep.grad_ratio_u, clamp.max_violation]);
        ratios.push(rep.max_ratio());
        let dim = init.grid.dim();
        let mut header: Vec<String> = (1..=dim).map(|a| format!("p{a}")).collect();
        header.extend(["comm_v", "comm_u", "ratio_v", "ratio_u"].map(String::from));
        let refs: Vec<&str> = header.iter().map(String::as_str).collect();
        let mut probes = Table::new(format!("semiclassical_probes_{i}"), &refs, rep.rows.len());
        for r in &rep.rows {
            let mut row = r.momentum.clone();
            row.extend([r.comm_v, r.comm_u, r.ratio_v, r.ratio_u]);
            probes.push(row);
        }
        tables.push(probes);
        artifacts.push(Artifact {
            name: format!("omega_initial_{i}.fsdm"),
            bytes: DensityCheckpoint::from_density(&init.omega).to_bytes(),
        });
        warnings.extend(clamp.warnings.iter().map(|w| format!("point {i}: {w}")));
    }
    tables.insert(0, table);
    let spread = ratios.iter().cloned().fold(0.0, f64::max) / ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        tables,
        summary: json!({ "max_ratio_spread": spread, "max_ratios": ratios }),
        checks: Vec::new(),
        warnings,
        artifacts,
    })
}
