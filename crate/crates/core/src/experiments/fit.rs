//! Small curve fits used to summarize growth.

use serde::Serialize;

use crate::error::{Error, Result};

/// `y ≈ K exp(c₂ exp(c₁ t))` with `K > 0`, `c₁ > 0`, `c₂ ≥ 0`.
///
/// `K` can underflow when the fit is close to a plain exponential, so the
/// fit is also carried as `log_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleExponentialFit {
    pub k: f64,
    pub log_k: f64,
    pub c1: f64,
    pub c2: f64,
    /// Largest `|fit - y| / y` over the samples.
    pub max_relative_residual: f64,
}

impl DoubleExponentialFit {
    pub fn eval(&self, t: f64) -> f64 {
        (self.log_k + self.c2 * (self.c1 * t).exp()).exp()
    }
}

/// Least squares for `log y = A + B (e^{c₁t} - 1)/c₁` at fixed `c₁ > 0`,
/// with `B ≥ 0`. The basis stays well conditioned as `c₁ → 0`.
fn linear_part(t: &[f64], logy: &[f64], c1: f64) -> (f64, f64, f64) {
    let n = t.len() as f64;
    let b: Vec<f64> = t.iter().map(|&s| (c1 * s).exp_m1() / c1).collect();
    let mb = b.iter().sum::<f64>() / n;
    let my = logy.iter().sum::<f64>() / n;
    let sbb: f64 = b.iter().map(|x| (x - mb).powi(2)).sum();
    let sby: f64 = b.iter().zip(logy).map(|(x, y)| (x - mb) * (y - my)).sum();
    let slope = if sbb > 1e-300 { (sby / sbb).max(0.0) } else { 0.0 };
    let a = my - slope * mb;
    let sse = b.iter().zip(logy).map(|(x, y)| (a + slope * x - y).powi(2)).sum();
    (a, slope, sse)
}

/// Fit the double-exponential envelope to positive samples by a scan over
/// `c₁ ∈ (0, c1_max]` refined by golden-section search.
pub fn fit_double_exponential(t: &[f64], y: &[f64], c1_max: f64) -> Result<DoubleExponentialFit> {
    if t.len() != y.len() || t.len() < 2 {
        return Err(Error::InvalidArgument("fit needs at least two paired samples".into()));
    }
    if y.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("fit needs positive finite samples".into()));
    }
    if !(c1_max > 0.0) {
        return Err(Error::InvalidArgument("c1_max must be positive".into()));
    }
    let logy: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let sse = |c1: f64| linear_part(t, &logy, c1).2;
    let scan = 400;
    let step = c1_max / scan as f64;
    let floor = 1e-3 * step;
    let mut best = (floor, sse(floor));
    for i in 1..=scan {
        let c1 = step * i as f64;
        let s = sse(c1);
        if s < best.1 {
            best = (c1, s);
        }
    }
    let (mut lo, mut hi) = ((best.0 - step).max(floor), (best.0 + step).min(c1_max));
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..100 {
        let m1 = hi - g * (hi - lo);
        let m2 = lo + g * (hi - lo);
        if sse(m1) < sse(m2) {
            hi = m2;
        } else {
            lo = m1;
        }
    }
    let mut c1 = 0.5 * (lo + hi);
    if sse(c1) > best.1 {
        c1 = best.0;
    }
    let (a, slope, _) = linear_part(t, &logy, c1);
    let c2 = slope / c1;
    let log_k = a - c2;
    let mut fit = DoubleExponentialFit {
        k: log_k.exp(),
        log_k,
        c1,
        c2,
        max_relative_residual: 0.0,
    };
    fit.max_relative_residual = t
        .iter()
        .zip(y)
        .map(|(&s, &v)| {
            let r = (fit.eval(s) - v).abs() / v;
            if r.is_nan() {
                f64::INFINITY
            } else {
                r
            }
        })
        .fold(0.0, f64::max);
    Ok(fit)
}

/// Exponential upper envelope `y ≤ K e^{rt}`: least-squares slope of `log y`
/// with the intercept raised until every sample lies below.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentialEnvelope {
    pub k: f64,
    pub rate: f64,
    /// Largest `log(K e^{rt} / y)`, the slack of the envelope.
    pub max_log_gap: f64,
}

pub fn fit_exponential_envelope(t: &[f64], y: &[f64]) -> Result<ExponentialEnvelope> {
    if t.len() != y.len() || t.len() < 2 {
        return Err(Error::InvalidArgument("fit needs at least two paired samples".into()));
    }
    if y.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::InvalidArgument("fit needs positive finite samples".into()));
    }
    let logy: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = t.len() as f64;
    let mt = t.iter().sum::<f64>() / n;
    let my = logy.iter().sum::<f64>() / n;
    let stt: f64 = t.iter().map(|x| (x - mt).powi(2)).sum();
    let sty: f64 = t.iter().zip(&logy).map(|(x, y)| (x - mt) * (y - my)).sum();
    let rate = if stt > 0.0 { sty / stt } else { 0.0 };
    let intercept = t
        .iter()
        .zip(&logy)
        .map(|(x, y)| y - rate * x)
        .fold(f64::NEG_INFINITY, f64::max);
    let max_log_gap = t
        .iter()
        .zip(&logy)
        .map(|(x, y)| intercept + rate * x - y)
        .fold(0.0, f64::max);
    Ok(ExponentialEnvelope {
        k: intercept.exp(),
        rate,
        max_log_gap,
    })
}

/// A sample pair `(t, 2t)` at which `C(2t)/C(t) > (C(t)/C(0))^{1+δ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoublingViolation {
    pub t: f64,
    pub ratio: f64,
    pub bound: f64,
}

/// Check the doubling criterion against super-exponential growth on every
/// pair of samples `(t, 2t)` with `t > 0`. A pair only counts when
/// `log(ratio)` exceeds `log(bound)` by more than `log_tolerance`; a smooth
/// `C` with a quadratic onset breaks the bare inequality at small `t`
/// without growing at all.
pub fn doubling_violations(t: &[f64], c: &[f64], delta: f64, log_tolerance: f64) -> Vec<DoublingViolation> {
    let mut out = Vec::new();
    if t.is_empty() {
        return out;
    }
    let c0 = c[0];
    for (i, &ti) in t.iter().enumerate() {
        if ti <= 0.0 {
            continue;
        }
        let target = 2.0 * ti;
        if let Some(j) = t.iter().position(|&s| (s - target).abs() <= 1e-9 * target.max(1.0)) {
            let ratio = c[j] / c[i];
            let bound = (c[i] / c0).powf(1.0 + delta);
            if ratio.ln() > bound.ln() + log_tolerance {
                out.push(DoublingViolation { t: ti, ratio, bound });
            }
        }
    }
    out
}
