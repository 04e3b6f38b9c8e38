use std::io::Write;

use crate::geometry::{closest_point_deviation, AsCurve, Vec2, DEFAULT_SMALLNESS};
use crate::{Error, Result};

use super::FlowTrace;

/// Default multiple of `h + dt` allowed in the Dini inequality.
pub const DEFAULT_C_DINI: f64 = 1.0;

/// Region of the base curve on which deviations are measured.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Window {
    All,
    /// `|X| <= r`.
    Ball(f64),
    /// `|x| <= r` (first coordinate).
    Slab(f64),
}

impl Window {
    pub fn contains(&self, p: Vec2) -> bool {
        match *self {
            Window::All => true,
            Window::Ball(r) => p.norm() <= r,
            Window::Slab(r) => p.x.abs() <= r,
        }
    }

    /// The same window after dilating space by `factor`.
    pub fn scaled(&self, factor: f64) -> Window {
        match *self {
            Window::All => Window::All,
            Window::Ball(r) => Window::Ball(r * factor),
            Window::Slab(r) => Window::Slab(r * factor),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationConfig {
    pub window: Window,
    pub smallness: f64,
    pub c_dini: f64,
}

impl Default for DeviationConfig {
    fn default() -> Self {
        DeviationConfig { window: Window::All, smallness: DEFAULT_SMALLNESS, c_dini: DEFAULT_C_DINI }
    }
}

/// Deviation of one flow from a reference at a common time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationRow {
    pub t: f64,
    pub v_max: f64,
    pub grad_v: f64,
    pub a_v: f64,
    /// `sup |A|` and `sup |grad A|` of the reference.
    pub sup_a: f64,
    pub sup_grad_a: f64,
    pub flagged: usize,
    /// `(v_max^2(t) - v_max^2(t_prev)) / (t - t_prev)`; absent on the first row.
    pub dini: Option<f64>,
}

impl DeviationRow {
    /// `2 |A|^2 v_max^2`.
    pub fn leading(&self) -> f64 {
        2.0 * self.sup_a * self.sup_a * self.v_max * self.v_max
    }

    /// `|A v| (|A|^2 + |grad A|) v_max^2`, the coefficient of the constant.
    pub fn correction(&self) -> f64 {
        self.a_v * (self.sup_a * self.sup_a + self.sup_grad_a) * self.v_max * self.v_max
    }
}

/// Least-squares fit of `log value = exponent log t + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogLogFit {
    pub exponent: f64,
    pub intercept: f64,
    /// Root-mean-square residual in `log value`.
    pub residual: f64,
    pub samples: usize,
    pub t_min: f64,
    pub t_max: f64,
}

/// Log-log least squares on samples with `t > 0` and `value > 0`.
pub fn fit_loglog(t: &[f64], value: &[f64]) -> Result<LogLogFit> {
    if t.len() != value.len() {
        return Err(Error::invalid("times and values differ in length"));
    }
    if t.len() < 2 {
        return Err(Error::invalid("a fit needs at least two samples"));
    }
    if t.iter().chain(value).any(|x| !(*x > 0.0 && x.is_finite())) {
        return Err(Error::invalid("log-log fit needs positive finite samples"));
    }
    let xs: Vec<f64> = t.iter().map(|t| t.ln()).collect();
    let ys: Vec<f64> = value.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if !(sxx > 0.0) {
        return Err(Error::invalid("fit window has a single time"));
    }
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let exponent = sxy / sxx;
    let intercept = my - exponent * mx;
    let ss: f64 = xs.iter().zip(&ys).map(|(x, y)| (y - intercept - exponent * x).powi(2)).sum();
    Ok(LogLogFit {
        exponent,
        intercept,
        residual: (ss / n).sqrt(),
        samples: xs.len(),
        t_min: t.iter().cloned().fold(f64::INFINITY, f64::min),
        t_max: t.iter().cloned().fold(0.0, f64::max),
    })
}

/// Deviation history of a flow against a reference flow.
#[derive(Debug, Clone)]
pub struct DeviationTrace {
    pub rows: Vec<DeviationRow>,
    /// Tolerance `c_dini (h + dt)` for the Dini inequality.
    pub tolerance: f64,
    /// Smallest `C >= 0` for which every row satisfies
    /// `dini <= leading + C correction + tolerance`; infinite if none does.
    pub fitted_c: f64,
    /// Rows (by index) whose inequality fails for every finite `C`.
    pub violations: Vec<usize>,
    /// Why the trace ended before the last common snapshot.
    pub truncated: Option<String>,
    /// Fit of `v_max / sqrt(t)` against `t` over all rows with positive values.
    pub decay: Option<LogLogFit>,
}

impl DeviationTrace {
    pub fn times(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.t).collect()
    }

    /// `v_max / sqrt(t)`.
    pub fn rescaled(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.v_max / r.t.sqrt()).collect()
    }

    /// `dini - (leading + C correction)` per row, with the fitted `C`.
    pub fn dini_residuals(&self) -> Vec<Option<f64>> {
        let c = if self.fitted_c.is_finite() { self.fitted_c } else { 0.0 };
        self.rows.iter().map(|r| r.dini.map(|d| d - r.leading() - c * r.correction())).collect()
    }

    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,v_max,grad_v,a_v,sup_a,sup_grad_a,flagged,dini,dini_residual")?;
        for (r, res) in self.rows.iter().zip(self.dini_residuals()) {
            let opt = |x: Option<f64>| x.map_or(String::new(), |x| format!("{x:e}"));
            writeln!(
                w,
                "{:e},{:e},{:e},{:e},{:e},{:e},{},{},{}",
                r.t,
                r.v_max,
                r.grad_v,
                r.a_v,
                r.sup_a,
                r.sup_grad_a,
                r.flagged,
                opt(r.dini),
                opt(res)
            )?;
        }
        Ok(())
    }
}

/// Measure `trace` as a normal graph over `reference` at every common
/// snapshot time and check the Dini inequality
/// `D v_max^2 <= {2 |A|^2 + C |A v| (|A|^2 + |grad A|)} v_max^2`
/// with the difference quotient over one snapshot interval.
pub fn deviation_trace(trace: &FlowTrace, reference: &FlowTrace, cfg: &DeviationConfig) -> Result<DeviationTrace> {
    let mut rows: Vec<DeviationRow> = Vec::new();
    let mut truncated = None;
    let mut common = 0;
    let h = reference.snapshots[0].geometry.spacing().max(trace.snapshots[0].geometry.spacing());
    let tolerance = cfg.c_dini * (h + reference.dt.max(trace.dt));
    for s in &trace.snapshots {
        let Some(r) = reference.at(s.t) else { continue };
        common += 1;
        let base = r.geometry.fields()?;
        let dev = closest_point_deviation(&base, &s.geometry.curve_samples(), None)?;
        let field = dev.field.clone().with_smallness(cfg.smallness);
        let grad = field.grad_v();
        let av = field.a_v();
        let grad_a = base.curvature_gradient();
        let keep: Vec<usize> = base
            .interior
            .clone()
            .filter(|i| cfg.window.contains(base.points[*i]) && !dev.flagged.contains(i))
            .collect();
        if keep.is_empty() {
            truncated = Some(format!("no usable nodes in the window at t = {}", s.t));
            break;
        }
        let sup = |f: &dyn Fn(usize) -> f64| keep.iter().fold(0.0_f64, |m, &i| m.max(f(i).abs()));
        let mut row = DeviationRow {
            t: s.t,
            v_max: sup(&|i| field.v[i]),
            grad_v: sup(&|i| grad[i]),
            a_v: sup(&|i| av[i]),
            sup_a: sup(&|i| base.norm_a[i]),
            sup_grad_a: sup(&|i| grad_a[i]),
            flagged: dev.flagged.iter().filter(|i| cfg.window.contains(base.points[**i])).count(),
            dini: None,
        };
        if row.grad_v + row.a_v > cfg.smallness {
            truncated = Some(format!(
                "graph regime lost at t = {}: |grad v| + |A v| = {:.4} exceeds smallness {}",
                s.t,
                row.grad_v + row.a_v,
                cfg.smallness
            ));
            break;
        }
        if let Some(prev) = rows.last() {
            let dt = row.t - prev.t;
            row.dini = Some((row.v_max * row.v_max - prev.v_max * prev.v_max) / dt);
        }
        rows.push(row);
    }
    if common == 0 {
        return Err(Error::invalid("the traces share no snapshot times"));
    }

    let mut fitted_c: f64 = 0.0;
    let mut violations = Vec::new();
    for (k, r) in rows.iter().enumerate() {
        let Some(d) = r.dini else { continue };
        let excess = d - r.leading() - tolerance;
        if excess <= 0.0 {
            continue;
        }
        let q = r.correction();
        if q > 0.0 {
            fitted_c = fitted_c.max(excess / q);
        } else {
            violations.push(k);
        }
    }
    if !violations.is_empty() {
        fitted_c = f64::INFINITY;
    }

    let (ts, ws): (Vec<f64>, Vec<f64>) =
        rows.iter().filter(|r| r.t > 0.0 && r.v_max > 0.0).map(|r| (r.t, r.v_max / r.t.sqrt())).unzip();
    let decay = if ts.len() >= 3 { fit_loglog(&ts, &ws).ok() } else { None };
    Ok(DeviationTrace { rows, tolerance, fitted_c, violations, truncated, decay })
}
