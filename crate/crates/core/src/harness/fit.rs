use serde::Serialize;

use crate::flow::{fit_loglog, FlowTrace};
use crate::{Error, Result};

/// Minimum number of samples in an exponent fit.
pub const MIN_FIT_SAMPLES: usize = 8;

/// Least-squares decay exponent compared against `-(1/2 - kappa^2) / 2`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitReport {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub samples: usize,
    pub t_min: f64,
    pub t_max: f64,
    pub kappa: f64,
    pub reference_exponent: f64,
    pub fit_tol: f64,
    /// One-sided: decay at least as fast as the reference, up to `fit_tol`.
    pub pass: bool,
}

/// `-(1/2 - kappa^2) / 2`.
pub fn reference_exponent(kappa: f64) -> f64 {
    -0.5 * (0.5 - kappa * kappa)
}

/// Fit `log v = p log t + c` on a series spanning at least one decade.
pub fn fit_decay_exponent(t: &[f64], v: &[f64], kappa: f64, fit_tol: f64) -> Result<FitReport> {
    if t.len() != v.len() {
        return Err(Error::invalid("series lengths differ"));
    }
    if t.len() < MIN_FIT_SAMPLES {
        return Err(Error::invalid(format!("{} samples, need at least {MIN_FIT_SAMPLES}", t.len())));
    }
    if v.iter().any(|v| !(*v > 0.0)) || t.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("fit needs positive times and values"));
    }
    let (lo, hi) = t.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &t| (a.min(t), b.max(t)));
    if hi < 10.0 * lo * (1.0 - 1e-9) {
        return Err(Error::invalid(format!("fit window [{lo}, {hi}] spans less than a decade")));
    }
    let f = fit_loglog(t, v)?;
    let reference = reference_exponent(kappa);
    Ok(FitReport {
        exponent: f.exponent,
        intercept: f.intercept,
        residual: f.residual,
        samples: f.samples,
        t_min: f.t_min,
        t_max: f.t_max,
        kappa,
        reference_exponent: reference,
        fit_tol,
        pass: f.exponent <= reference + fit_tol,
    })
}

/// Median of `sqrt(t) |A|` over the snapshots of the last decade.
pub fn measured_kappa(trace: &FlowTrace) -> Result<f64> {
    let t_last = trace.last().t;
    let mut vals: Vec<f64> =
        trace.snapshots.iter().filter(|s| s.t >= t_last / 10.0 && s.t > 0.0).map(|s| s.scaled_sup_a).collect();
    if vals.is_empty() {
        return Err(Error::invalid("no snapshots in the last decade"));
    }
    vals.sort_by(f64::total_cmp);
    let n = vals.len();
    Ok(if n % 2 == 1 { vals[n / 2] } else { 0.5 * (vals[n / 2 - 1] + vals[n / 2]) })
}

/// The `count - 1` times after `t0` of a grid of `count` points from `t0` to
/// `t1` equally spaced in `log t`; the last is exactly `t1`.
pub fn log_times(t0: f64, t1: f64, count: usize) -> Vec<f64> {
    let (a, b) = (t0.ln(), t1.ln());
    let mut out: Vec<f64> = (1..count).map(|k| (a + (b - a) * k as f64 / (count - 1) as f64).exp()).collect();
    if let Some(last) = out.last_mut() {
        *last = t1;
    }
    out
}
