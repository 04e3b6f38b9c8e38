use std::io::Write;

use super::{gaussian_area, GaussianQuery};
use crate::flow::FlowTrace;
use crate::geometry::Vec2;
use crate::{Error, Result};

/// Default allowed increase of `F_{P, t0 - t}` per unit flow time.
pub const DEFAULT_RATE_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonotonicityRow {
    /// Flow time.
    pub t: f64,
    pub value: f64,
    pub truncation_bound: f64,
}

/// `F_{P, t0 - t}(Sigma_t)` along a trace with a non-increase verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicitySeries {
    pub center: Vec2,
    pub t0: f64,
    pub rows: Vec<MonotonicityRow>,
    pub rate_tol: f64,
    /// Largest `(F_k - F_{k-1}) / (t_k - t_{k-1})`, zero for a single row.
    pub max_increase_rate: f64,
    pub non_increasing: bool,
}

impl MonotonicitySeries {
    /// Largest `|F_k - F_0|`.
    pub fn spread(&self) -> f64 {
        let f0 = self.rows[0].value;
        self.rows.iter().fold(0.0, |m, r| m.max((r.value - f0).abs()))
    }

    /// CSV with columns `px,py,t,F,truncation_bound`; `t` is the flow time.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "px,py,t,F,truncation_bound")?;
        for r in &self.rows {
            writeln!(w, "{:e},{:e},{:e},{:e},{:e}", self.center.x, self.center.y, r.t, r.value, r.truncation_bound)?;
        }
        Ok(())
    }
}

/// Evaluate `F_{P, t0 - t}` on every snapshot and test that the series does
/// not increase faster than `rate_tol` per unit time.
pub fn monotonicity_trace(trace: &FlowTrace, center: Vec2, t0: f64, rate_tol: f64) -> Result<MonotonicitySeries> {
    if trace.snapshots.is_empty() {
        return Err(Error::invalid("empty trace"));
    }
    if !(rate_tol >= 0.0) {
        return Err(Error::invalid("rate tolerance must be nonnegative"));
    }
    if let Some(s) = trace.snapshots.iter().find(|s| s.t >= t0) {
        return Err(Error::invalid(format!("snapshot at t = {} is not before t0 = {t0}", s.t)));
    }
    let mut rows = Vec::with_capacity(trace.snapshots.len());
    for s in &trace.snapshots {
        let q = GaussianQuery::new(center, t0 - s.t)?;
        let v = gaussian_area(&s.geometry, &q)?;
        rows.push(MonotonicityRow { t: s.t, value: v.value, truncation_bound: v.truncation_bound });
    }
    let max_increase_rate = rows.windows(2).map(|w| (w[1].value - w[0].value) / (w[1].t - w[0].t)).fold(0.0, f64::max);
    Ok(MonotonicitySeries {
        center,
        t0,
        non_increasing: max_increase_rate <= rate_tol,
        rows,
        rate_tol,
        max_increase_rate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::{run_mcf, FlowConfig, Observers, SnapshotSchedule};
    use crate::geometry::{FarField, Geometry, GraphHypersurface, Grid1D, PolylineCurve, RegularCone};

    #[test]
    fn static_line_is_constant() {
        let grid = Grid1D::symmetric(10.0, 0.1).unwrap();
        let g = GraphHypersurface::from_fn(grid, |_| 0.0, RegularCone::flat(), FarField::Cone, 0.0).unwrap();
        let tr = run_mcf(&Geometry::Graph(g), &FlowConfig::new(0.0, 0.5), &Observers::none()).unwrap();
        let s = monotonicity_trace(&tr, Vec2::new(0.3, 0.0), 1.0, DEFAULT_RATE_TOL).unwrap();
        assert!(s.non_increasing);
        assert!(s.rows.iter().all(|r| (r.value - 1.0).abs() < 1e-6));
        assert!(s.rows.windows(2).all(|w| w[1].value <= w[0].value + 1e-12));
    }

    #[test]
    fn shrinking_circle_is_the_equality_case() {
        let c = PolylineCurve::circle(Vec2::zeros(), 1.0, 512).unwrap();
        let times: Vec<f64> = (1..=9).map(|k| 0.05 * k as f64).collect();
        let mut cfg = FlowConfig::new(0.0, 0.45).with_snapshots(SnapshotSchedule::Times(times));
        cfg.redistribute_every = None;
        let tr = run_mcf(&Geometry::Polyline(c), &cfg, &Observers::none()).unwrap();
        let s = monotonicity_trace(&tr, Vec2::zeros(), 0.5, DEFAULT_RATE_TOL).unwrap();
        let want = (2.0 * std::f64::consts::PI / std::f64::consts::E).sqrt();
        assert!(s.non_increasing, "{}", s.max_increase_rate);
        for r in &s.rows {
            assert!((r.value - want).abs() < 1e-3, "t = {}: {}", r.t, r.value);
        }
    }

    #[test]
    fn late_snapshots_are_rejected() {
        let c = PolylineCurve::circle(Vec2::zeros(), 1.0, 64).unwrap();
        let tr = run_mcf(&Geometry::Polyline(c), &FlowConfig::new(0.0, 0.2), &Observers::none()).unwrap();
        assert!(monotonicity_trace(&tr, Vec2::zeros(), 0.2, DEFAULT_RATE_TOL).is_err());
        assert!(monotonicity_trace(&tr.before(0.1), Vec2::zeros(), 0.2, DEFAULT_RATE_TOL).is_ok());
    }
}
