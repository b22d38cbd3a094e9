//! Admissible one-body density matrices and their semiclassical diagnostics.

use serde::Serialize;

use crate::csvfmt;
use crate::error::{Error, Result};
use crate::grid::{canonical_operators, Grid, OneBodyOperator};
use crate::linalg::{self, c, eigh, frobenius, hermiticity_defect, max_abs, spectral_apply, CMat, C64};

/// Eigenvalues outside `[-HARD, 1 + HARD]` reject the input.
const HARD_TOLERANCE: f64 = 1e-6;
/// Clamping beyond this magnitude is reported as a warning.
const SILENT_TOLERANCE: f64 = 1e-10;
const MAX_RESCALE_ITERATIONS: usize = 50;

/// What happened to the spectrum while enforcing `0 ≤ ω ≤ 1`, `tr ω = N`.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ClampReport {
    /// Largest distance of an input eigenvalue from `[0, 1]`.
    pub max_violation: f64,
    pub trace_before: f64,
    /// Product of the multiplicative factors applied to the spectrum.
    pub scale: f64,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// A one-body density matrix with `0 ≤ ω ≤ 1` and `tr ω = N`.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    op: OneBodyOperator,
    particle_number: f64,
    eigenvalues: Vec<f64>,
    eigenvectors: CMat,
    clamp: ClampReport,
}

/// Validate and normalize a candidate density matrix.
///
/// Fails if an eigenvalue lies further than `1e-6` outside `[0, 1]`.
pub fn make_density(op: OneBodyOperator, n: f64) -> Result<DensityMatrix> {
    build_density(op, n, true)
}

/// Like [`make_density`] but clamps arbitrarily large spectral violations,
/// recording their size. Used after Weyl quantization.
pub fn make_density_clamped(op: OneBodyOperator, n: f64) -> Result<DensityMatrix> {
    build_density(op, n, false)
}

fn build_density(op: OneBodyOperator, n: f64, strict: bool) -> Result<DensityMatrix> {
    let size = op.grid().size();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::InadmissibleDensity(format!("particle number must be positive, got {n}")));
    }
    if n > size as f64 * (1.0 + 1e-12) {
        return Err(Error::InadmissibleDensity(format!(
            "trace {n} exceeds the rank bound {size}"
        )));
    }
    let scale = max_abs(op.matrix()).max(1.0);
    let defect = hermiticity_defect(op.matrix());
    if defect > 1e-10 * scale {
        return Err(Error::InadmissibleDensity(format!(
            "operator is not Hermitian (defect {defect:.3e})"
        )));
    }
    let (mut values, vectors) = eigh(op.matrix());
    let max_violation = values
        .iter()
        .map(|&x| (-x).max(x - 1.0).max(0.0))
        .fold(0.0, f64::max);
    if strict && max_violation > HARD_TOLERANCE {
        return Err(Error::InadmissibleDensity(format!(
            "eigenvalue outside [0, 1] by {max_violation:.3e}"
        )));
    }
    let trace_before: f64 = values.iter().sum();
    let mut report = ClampReport {
        max_violation,
        trace_before,
        scale: 1.0,
        iterations: 0,
        warnings: Vec::new(),
    };
    if max_violation > SILENT_TOLERANCE {
        report
            .warnings
            .push(format!("spectrum clamped into [0, 1] (violation {max_violation:.3e})"));
    }
    for x in &mut values {
        *x = x.clamp(0.0, 1.0);
    }
    let mut changed = max_violation > 0.0;
    for _ in 0..MAX_RESCALE_ITERATIONS {
        let trace: f64 = values.iter().sum();
        if (trace - n).abs() <= 1e-12 * n {
            break;
        }
        let s = if trace > n {
            n / trace
        } else {
            let saturated = values.iter().filter(|&&x| x >= 1.0).count() as f64;
            let free: f64 = values.iter().filter(|&&x| x < 1.0).sum();
            if free <= 0.0 {
                return Err(Error::InadmissibleDensity(format!(
                    "trace cannot reach {n} by rescaling the spectrum"
                )));
            }
            (n - saturated) / free
        };
        for x in &mut values {
            *x = (*x * s).min(1.0);
        }
        report.scale *= s;
        report.iterations += 1;
        changed = true;
    }
    let trace: f64 = values.iter().sum();
    if (trace - n).abs() > 1e-8 * n {
        return Err(Error::InadmissibleDensity(format!(
            "trace {trace} could not be normalized to {n}"
        )));
    }
    if (report.scale - 1.0).abs() > 1e-8 {
        report.warnings.push(format!(
            "trace rescaled from {trace_before:.12e} to {n} (factor {:.6e})",
            report.scale
        ));
    }
    let grid = *op.grid();
    let op = if changed {
        OneBodyOperator::new(grid, spectral_apply(&values, &vectors, c))?
    } else {
        OneBodyOperator::new(grid, linalg::hermitize(op.matrix()))?
    };
    Ok(DensityMatrix {
        op,
        particle_number: n,
        eigenvalues: values,
        eigenvectors: vectors,
        clamp: report,
    })
}

impl DensityMatrix {
    pub fn op(&self) -> &OneBodyOperator {
        &self.op
    }

    pub fn matrix(&self) -> &CMat {
        self.op.matrix()
    }

    pub fn grid(&self) -> &Grid {
        self.op.grid()
    }

    pub fn particle_number(&self) -> f64 {
        self.particle_number
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Eigenvectors matching [`eigenvalues`](Self::eigenvalues), as columns.
    pub fn eigenvectors(&self) -> &CMat {
        &self.eigenvectors
    }

    pub fn clamp_report(&self) -> &ClampReport {
        &self.clamp
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(self.matrix()).re
    }

    /// Spatial density `ω(x, x)` as a function (not normalized by `N`).
    pub fn diagonal_density(&self) -> Vec<f64> {
        let w = self.grid().cell_volume();
        self.matrix().diagonal().iter().map(|z| z.re / w).collect()
    }
}

/// `u = √(1-ω)` and `v = √ω`.
#[derive(Debug, Clone)]
pub struct SqrtPair {
    pub u: OneBodyOperator,
    pub v: OneBodyOperator,
}

pub fn sqrt_pair(omega: &DensityMatrix) -> SqrtPair {
    let grid = *omega.grid();
    let values = omega.eigenvalues();
    let vectors = omega.eigenvectors();
    let u = spectral_apply(values, vectors, |x| c((1.0 - x).max(0.0).sqrt()));
    let v = spectral_apply(values, vectors, |x| c(x.max(0.0).sqrt()));
    SqrtPair {
        u: OneBodyOperator::new(grid, u).expect("shape matches"),
        v: OneBodyOperator::new(grid, v).expect("shape matches"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OperatorMetrics {
    pub hs_norm: f64,
    pub trace_norm: f64,
    pub op_norm: f64,
    pub trace: C64,
}

pub fn operator_metrics(a: &OneBodyOperator) -> OperatorMetrics {
    matrix_metrics(a.matrix())
}

pub(crate) fn matrix_metrics(m: &CMat) -> OperatorMetrics {
    let sv = linalg::singular_values(m);
    OperatorMetrics {
        hs_norm: frobenius(m),
        trace_norm: sv.iter().sum(),
        op_norm: sv.iter().copied().fold(0.0, f64::max),
        trace: linalg::trace(m),
    }
}

pub fn commutator(a: &OneBodyOperator, b: &OneBodyOperator) -> Result<OneBodyOperator> {
    a.same_grid(b)?;
    OneBodyOperator::new(*a.grid(), linalg::commutator(a.matrix(), b.matrix()))
}

/// Commutator norms at one probe momentum.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub momentum: Vec<f64>,
    pub comm_v: f64,
    pub comm_u: f64,
    pub ratio_v: f64,
    pub ratio_u: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemiclassicalReport {
    pub rows: Vec<ProbeRow>,
    pub grad_v: f64,
    pub grad_u: f64,
    pub grad_ratio_v: f64,
    pub grad_ratio_u: f64,
}

impl SemiclassicalReport {
    /// Largest normalized ratio, the empirical semiclassical constant.
    pub fn max_ratio(&self) -> f64 {
        self.rows
            .iter()
            .flat_map(|r| [r.ratio_v, r.ratio_u])
            .chain([self.grad_ratio_v, self.grad_ratio_u])
            .fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("p,comm_v,comm_u,ratio_v,ratio_u\n");
        for r in &self.rows {
            let p = r
                .momentum
                .iter()
                .map(|&x| csvfmt::num(x))
                .collect::<Vec<_>>()
                .join(";");
            out.push_str(&format!(
                "{p},{}\n",
                csvfmt::row(&[r.comm_v, r.comm_u, r.ratio_v, r.ratio_u])
            ));
        }
        out.push_str(&format!(
            "grad,{}\n",
            csvfmt::row(&[self.grad_v, self.grad_u, self.grad_ratio_v, self.grad_ratio_u])
        ));
        out
    }
}

/// Probe momenta `2πk/L · e_1` for `k = 1..=count`.
pub fn default_probes(grid: &Grid, count: usize) -> Vec<Vec<f64>> {
    let kmax = (grid.n() / 2 - 1).max(1);
    (1..=count.min(kmax))
        .map(|k| {
            let mut p = vec![0.0; grid.dim()];
            p[0] = k as f64 * grid.momentum_unit();
            p
        })
        .collect()
}

/// HS norm of `[A, D]` for diagonal `D`.
fn diagonal_commutator_norm(a: &CMat, d: &[C64]) -> f64 {
    let n = a.nrows();
    let mut s = 0.0;
    for j in 0..n {
        for i in 0..n {
            s += a[(i, j)].norm_sqr() * (d[j] - d[i]).norm_sqr();
        }
    }
    s.sqrt()
}

pub fn semiclassical_report(
    omega: &DensityMatrix,
    probe_momenta: &[Vec<f64>],
) -> Result<SemiclassicalReport> {
    let grid = *omega.grid();
    let eps = grid.epsilon();
    let sqrt_n = omega.particle_number().sqrt();
    let pair = sqrt_pair(omega);
    let mut rows = Vec::with_capacity(probe_momenta.len());
    for p in probe_momenta {
        let k = grid.lattice_mode(p)?;
        let phase = OneBodyOperator::plane_wave_multiplier(grid, &k)?;
        let d: Vec<C64> = phase.matrix().diagonal().iter().copied().collect();
        let comm_v = diagonal_commutator_norm(pair.v.matrix(), &d);
        let comm_u = diagonal_commutator_norm(pair.u.matrix(), &d);
        let pnorm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
        let denom = eps * sqrt_n * (1.0 + pnorm);
        rows.push(ProbeRow {
            momentum: p.clone(),
            comm_v,
            comm_u,
            ratio_v: comm_v / denom,
            ratio_u: comm_u / denom,
        });
    }
    let canon = canonical_operators(&grid);
    let mut gv = 0.0;
    let mut gu = 0.0;
    for grad in &canon.momentum {
        gv += frobenius(&linalg::commutator(pair.v.matrix(), grad.matrix())).powi(2);
        gu += frobenius(&linalg::commutator(pair.u.matrix(), grad.matrix())).powi(2);
    }
    let (grad_v, grad_u) = (gv.sqrt(), gu.sqrt());
    Ok(SemiclassicalReport {
        rows,
        grad_v,
        grad_u,
        grad_ratio_v: grad_v / (eps * sqrt_n),
        grad_ratio_u: grad_u / (eps * sqrt_n),
    })
}
