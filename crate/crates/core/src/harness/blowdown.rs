use serde::Serialize;

use crate::expander::ExpanderSolution;
use crate::flow::FlowTrace;
use crate::geometry::{
    closest_point_deviation, AsCurve, FarField, Geometry, GeometryFields, GraphHypersurface, Grid1D,
};
use crate::{Error, Result};

/// Spacing of the expander samples used as a comparison base.
const BASE_SPACING: f64 = 0.01;

/// Deviation of `Sigma_t / sqrt(t)`, or of a blow-down `Sigma_t / R`, from
/// the expander over `|x| <= window`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaledDeviation {
    pub t: f64,
    pub scale: f64,
    pub v_max: f64,
    /// Base nodes in the window whose normal line missed the target.
    pub flagged: usize,
}

/// Expander sampled as a graph over `[-window - 2, window + 2]`.
pub struct ExpanderBase {
    fields: GeometryFields,
    window: f64,
}

impl ExpanderBase {
    pub fn new(gamma: &ExpanderSolution, window: f64) -> Result<Self> {
        if !(window > 0.0) {
            return Err(Error::invalid("window must be positive"));
        }
        let grid = Grid1D::symmetric(window + 2.0, BASE_SPACING)?;
        let g = GraphHypersurface::from_fn(grid, |x| gamma.eval(x).0, gamma.cone, FarField::Cone, f64::INFINITY)?;
        Ok(ExpanderBase { fields: g.graph_geometry()?, window })
    }

    /// Deviation of `geom` dilated by `1 / scale`.
    pub fn deviation(&self, geom: &Geometry, t: f64, scale: f64) -> Result<ScaledDeviation> {
        let target = geom.scaled(1.0 / scale)?;
        let dev = closest_point_deviation(&self.fields, &target.curve_samples(), None)?;
        let inside = |i: usize| self.fields.points[i].x.abs() <= self.window;
        Ok(ScaledDeviation {
            t,
            scale,
            v_max: dev.sup_v_on(inside),
            flagged: dev.flagged.iter().filter(|i| inside(**i)).count(),
        })
    }
}

/// Rescaled deviations `|Sigma_t / sqrt(t) - Gamma|` for every snapshot.
pub fn rescaled_deviation(trace: &FlowTrace, base: &ExpanderBase) -> Result<Vec<ScaledDeviation>> {
    trace.snapshots.iter().filter(|s| s.t > 0.0).map(|s| base.deviation(&s.geometry, s.t, s.t.sqrt())).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlowdownReport {
    pub rows: Vec<ScaledDeviation>,
    /// Deviations non-increasing in `R`.
    pub decreasing: bool,
    /// Some window node could not be matched at some `R`.
    pub flagged: bool,
}

/// Blow-downs `Sigma_{R^2} / R` compared with the expander on the fixed
/// window; the trace must hold a snapshot at each `t = R^2`.
pub fn compare_blowdown(trace: &FlowTrace, radii: &[f64], base: &ExpanderBase) -> Result<BlowdownReport> {
    if radii.is_empty() {
        return Err(Error::invalid("no blow-down radii"));
    }
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let t = r * r;
        let s = trace.at(t).ok_or_else(|| Error::invalid(format!("no snapshot at t = R^2 = {t} for R = {r}")))?;
        rows.push(base.deviation(&s.geometry, t, r)?);
    }
    let mut order: Vec<&ScaledDeviation> = rows.iter().collect();
    order.sort_by(|a, b| a.scale.total_cmp(&b.scale));
    let decreasing = order.windows(2).all(|w| w[1].v_max <= w[0].v_max);
    let flagged = rows.iter().any(|r| r.flagged > 0);
    Ok(BlowdownReport { rows, decreasing, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expander::{solve_expander_graph1d, ShootingConfig};
    use crate::flow::{run_mcf, FlowConfig, Observers, SnapshotSchedule};
    use crate::geometry::RegularCone;

    fn gamma() -> ExpanderSolution {
        let cfg = ShootingConfig { refinement_check: false, ..ShootingConfig::default() };
        solve_expander_graph1d(RegularCone::symmetric(0.3).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn self_expanding_trace_is_flat_in_r() {
        let g = gamma();
        let h = 0.1;
        let grid = Grid1D::symmetric(20.0, h).unwrap();
        let init = Geometry::Graph(g.graph_at_time(grid, 1.0, 1e-6).unwrap());
        let cfg = FlowConfig::new(1.0, 16.0).with_snapshots(SnapshotSchedule::Times(vec![4.0, 9.0, 16.0]));
        let trace = run_mcf(&init, &cfg, &Observers::none()).unwrap();
        assert!(trace.failure.is_none(), "{:?}", trace.failure);
        let base = ExpanderBase::new(&g, 2.0).unwrap();
        let rep = compare_blowdown(&trace, &[2.0, 3.0, 4.0], &base).unwrap();
        assert!(!rep.flagged);
        for r in &rep.rows {
            assert!(r.v_max < 5.0 * (h * h + trace.dt), "{r:?}");
        }
        assert!(compare_blowdown(&trace, &[5.0], &base).is_err());
    }

    #[test]
    fn exact_expander_has_zero_rescaled_deviation() {
        let g = gamma();
        let base = ExpanderBase::new(&g, 2.0).unwrap();
        for t in [1.0f64, 4.0, 25.0] {
            let grid = Grid1D::symmetric(30.0 * t.sqrt(), 0.05).unwrap();
            let geom = Geometry::Graph(g.graph_at_time(grid, t, 1e-6).unwrap());
            let d = base.deviation(&geom, t, t.sqrt()).unwrap();
            // only the chord error of the sampled target remains
            assert!(d.v_max < 0.05 * 0.05 * g.sup_a / t.sqrt().min(1.0), "{d:?}");
            assert_eq!(d.flagged, 0);
        }
    }
}
