//! Time integration of mean curvature flow and flow-level diagnostics.
//!
//! Graphs evolve by the graphical equation `u_t = u'' / (1 + u'^2)` with
//! pinned ends; polylines evolve by curve shortening with vertices moving by
//! the Menger curvature vector. Both steppers are explicit Euler under a
//! parabolic step limit. [`run_mcf`] drives either one, records snapshots
//! and evaluates observers on them.

mod deviation;
mod evolution;
pub mod io;
mod nmcf;
mod step;

pub use deviation::{
    deviation_trace, fit_loglog, DeviationConfig, DeviationRow, DeviationTrace, LogLogFit, Window, DEFAULT_C_DINI,
};
pub use evolution::{curvature_evolution_residual, CurvatureEvolution};
pub use nmcf::{nmcf_rescale, nmcf_residual, NmcfResidual, Rescaled};
pub use step::{
    graph_dt_limit, polyline_dt_limit, redistribute_arclength, step_graph_mcf, step_polyline_csf, PolylineStepOptions,
    BLOWUP_THRESHOLD, MAX_CFL_SAFETY,
};

use crate::gaussian::{gaussian_area, GaussianQuery};
use crate::geometry::{AsCurve, CurveSamples, FarField, Geometry, Vec2};
use crate::{Error, Result};

/// When to record snapshots.
#[derive(Debug, Clone, PartialEq)]
pub enum SnapshotSchedule {
    /// Every `k` steps, plus the final state.
    Stride(usize),
    /// At these times; steps are shortened to land on them exactly.
    Times(Vec<f64>),
}

/// A shrinking sphere `|X - center| = sqrt(r^2 - 2 n (t - t_origin))`, itself
/// a mean curvature flow of `n`-dimensional spheres.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Barrier {
    pub center: Vec2,
    pub radius: f64,
    pub t_origin: f64,
    /// Dimension of the moving surface (1 for curves).
    pub dim: usize,
}

impl Barrier {
    pub fn new(center: Vec2, radius: f64, t_origin: f64) -> Self {
        Barrier { center, radius, t_origin, dim: 1 }
    }

    /// Radius at time `t`, `None` after extinction.
    pub fn radius_at(&self, t: f64) -> Option<f64> {
        let r2 = self.radius * self.radius - 2.0 * self.dim as f64 * (t - self.t_origin);
        (r2 > 0.0).then(|| r2.sqrt())
    }

    pub fn extinction_time(&self) -> f64 {
        self.t_origin + self.radius * self.radius / (2.0 * self.dim as f64)
    }
}

/// Which side of a barrier a curve starts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BarrierSide {
    Inside,
    Outside,
}

fn ray_distance(center: Vec2, origin: Vec2, dir: Vec2) -> f64 {
    let s = (center - origin).dot(&dir).max(0.0);
    (origin + dir * s - center).norm()
}

fn segment_distance(center: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let l2 = e.norm_squared();
    let s = if l2 > 0.0 { ((center - a).dot(&e) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (a + e * s - center).norm()
}

/// Nearest and farthest distance from `center` to the curve, including tails.
fn distance_range(s: &CurveSamples, center: Vec2) -> (f64, f64) {
    let mut near = f64::INFINITY;
    for (a, b) in s.segments() {
        near = near.min(segment_distance(center, a, b));
    }
    let mut far = s.max_distance(center);
    if let Some(tails) = s.tails {
        for r in tails {
            near = near.min(ray_distance(center, r.origin, r.dir));
        }
        far = f64::INFINITY;
    }
    (near, far)
}

/// Side of the barrier at its origin time, or an error if the curve meets it.
pub fn barrier_side(curve: &impl AsCurve, b: &Barrier) -> Result<BarrierSide> {
    let (near, far) = distance_range(&curve.curve_samples(), b.center);
    if near > b.radius {
        Ok(BarrierSide::Outside)
    } else if far < b.radius {
        Ok(BarrierSide::Inside)
    } else {
        Err(Error::invalid(format!("curve meets the barrier sphere of radius {} at the start", b.radius)))
    }
}

/// Signed clearance from the barrier sphere at time `t`: positive while the
/// curve stays on its starting side.
pub fn barrier_clearance(curve: &impl AsCurve, b: &Barrier, side: BarrierSide, t: f64) -> Option<f64> {
    let r = b.radius_at(t)?;
    let (near, far) = distance_range(&curve.curve_samples(), b.center);
    Some(match side {
        BarrierSide::Outside => near - r,
        BarrierSide::Inside => r - far,
    })
}

/// Step and snapshot parameters.
#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub t_start: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub snapshots: SnapshotSchedule,
    /// Replaces the far-field rule carried by a graph.
    pub far_field: Option<FarField>,
    pub barriers: Vec<Barrier>,
    /// Polylines: redistribute by arc length every `k` steps.
    pub redistribute_every: Option<usize>,
    /// Polylines: run the self-intersection sweep every `k` steps.
    pub intersection_stride: usize,
    /// Polylines: abort below this fraction of the initial minimum edge.
    pub min_edge_fraction: f64,
    pub max_steps: usize,
}

impl FlowConfig {
    pub fn new(t_start: f64, t_end: f64) -> Self {
        FlowConfig {
            t_start,
            t_end,
            cfl_safety: MAX_CFL_SAFETY,
            snapshots: SnapshotSchedule::Stride(100),
            far_field: None,
            barriers: Vec::new(),
            redistribute_every: Some(50),
            intersection_stride: 10,
            min_edge_fraction: 1e-2,
            max_steps: 50_000_000,
        }
    }

    pub fn with_snapshots(mut self, s: SnapshotSchedule) -> Self {
        self.snapshots = s;
        self
    }

    pub fn with_cfl(mut self, cfl_safety: f64) -> Self {
        self.cfl_safety = cfl_safety;
        self
    }

    pub fn with_barrier(mut self, b: Barrier) -> Self {
        self.barriers.push(b);
        self
    }

    pub fn with_far_field(mut self, f: FarField) -> Self {
        self.far_field = Some(f);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t_start >= 0.0 && self.t_end > self.t_start && self.t_end.is_finite()) {
            return Err(Error::invalid(format!("need t_end > t_start >= 0, got [{}, {}]", self.t_start, self.t_end)));
        }
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= MAX_CFL_SAFETY) {
            return Err(Error::invalid(format!("cfl_safety = {} must lie in (0, {MAX_CFL_SAFETY}]", self.cfl_safety)));
        }
        match &self.snapshots {
            SnapshotSchedule::Stride(0) => return Err(Error::invalid("snapshot stride must be positive")),
            SnapshotSchedule::Times(ts) => {
                if ts.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(Error::invalid("snapshot times must be strictly increasing"));
                }
                if ts.iter().any(|t| *t <= self.t_start || *t > self.t_end) {
                    return Err(Error::invalid("snapshot times must lie in (t_start, t_end]"));
                }
            }
            _ => {}
        }
        if self.intersection_stride == 0 {
            return Err(Error::invalid("intersection stride must be positive"));
        }
        if self.redistribute_every == Some(0) {
            return Err(Error::invalid("redistribution interval must be positive"));
        }
        for b in &self.barriers {
            if !(b.radius > 0.0) || b.dim == 0 {
                return Err(Error::invalid("barrier radius and dimension must be positive"));
            }
        }
        Ok(())
    }
}

/// A Gaussian area tracked along a flow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GaussianObserver {
    /// `F_{P,t}` at a fixed scale.
    Fixed { center: Vec2, t: f64 },
    /// `F_{P, t0 - t}` at flow time `t`; undefined once `t >= t0`.
    Backward { center: Vec2, t0: f64 },
}

impl GaussianObserver {
    pub fn label(&self) -> String {
        match self {
            GaussianObserver::Fixed { center, t } => format!("F[{},{};t={}]", center.x, center.y, t),
            GaussianObserver::Backward { center, t0 } => format!("F[{},{};t0={}]", center.x, center.y, t0),
        }
    }

    fn eval(&self, g: &Geometry, time: f64) -> Option<f64> {
        let q = match *self {
            GaussianObserver::Fixed { center, t } => GaussianQuery::new(center, t),
            GaussianObserver::Backward { center, t0 } => GaussianQuery::new(center, t0 - time),
        };
        let q = q.ok()?;
        gaussian_area(g, &q).ok().map(|v| v.value)
    }
}

/// Quantities evaluated at every snapshot.
#[derive(Debug, Clone, Default)]
pub struct Observers {
    pub gaussian: Vec<GaussianObserver>,
}

impl Observers {
    pub fn none() -> Self {
        Observers::default()
    }

    pub fn with_gaussian(mut self, o: GaussianObserver) -> Self {
        self.gaussian.push(o);
        self
    }
}

/// A recorded state of the flow.
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub steps: usize,
    pub geometry: Geometry,
    /// `sup |A|` over interior nodes.
    pub sup_a: f64,
    /// `sqrt(t) sup |A|`.
    pub scaled_sup_a: f64,
    /// `sup |H - X.N / 2t|` (the normal velocity of the rescaled flow, in
    /// unscaled units); zero on exact self-similar expanders.
    pub expander_residual: Option<f64>,
    pub gaussian: Vec<Option<f64>>,
    pub barrier_clearance: Vec<Option<f64>>,
}

/// Snapshots of one run plus the reason it stopped early, if it did.
#[derive(Debug, Clone)]
pub struct FlowTrace {
    pub snapshots: Vec<Snapshot>,
    pub gaussian_labels: Vec<String>,
    pub barriers: Vec<Barrier>,
    /// Nominal step size of the last step taken.
    pub dt: f64,
    pub total_steps: usize,
    pub failure: Option<String>,
}

impl FlowTrace {
    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn last(&self) -> &Snapshot {
        self.snapshots.last().expect("a trace holds at least the initial state")
    }

    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }

    /// Snapshot recorded at `t` (to relative precision `1e-9`).
    pub fn at(&self, t: f64) -> Option<&Snapshot> {
        self.snapshots.iter().find(|s| (s.t - t).abs() <= 1e-9 * t.abs().max(1.0))
    }

    /// The trace restricted to snapshots with `t < t_max`.
    pub fn before(&self, t_max: f64) -> FlowTrace {
        FlowTrace { snapshots: self.snapshots.iter().filter(|s| s.t < t_max).cloned().collect(), ..self.clone_meta() }
    }

    fn clone_meta(&self) -> FlowTrace {
        FlowTrace {
            snapshots: Vec::new(),
            gaussian_labels: self.gaussian_labels.clone(),
            barriers: self.barriers.clone(),
            dt: self.dt,
            total_steps: self.total_steps,
            failure: self.failure.clone(),
        }
    }

    /// Smallest barrier clearance over the whole trace.
    pub fn min_barrier_clearance(&self) -> Option<f64> {
        self.snapshots
            .iter()
            .flat_map(|s| s.barrier_clearance.iter().flatten())
            .fold(None, |m: Option<f64>, &c| Some(m.map_or(c, |m| m.min(c))))
    }
}

fn expander_residual_sup(f: &crate::geometry::GeometryFields, t: f64) -> Option<f64> {
    if t <= 0.0 {
        return None;
    }
    let mut sup: f64 = 0.0;
    for i in f.interior.clone() {
        let r = f.mean_curvature[i] - 0.5 * f.points[i].dot(&f.normal[i]) / t;
        sup = sup.max(r.abs());
    }
    Some(sup)
}

fn observe(
    g: &Geometry,
    t: f64,
    steps: usize,
    observers: &Observers,
    barriers: &[(Barrier, BarrierSide)],
) -> Result<Snapshot> {
    let f = g.fields()?;
    let sup_a = f.sup_norm_a();
    Ok(Snapshot {
        t,
        steps,
        geometry: g.clone(),
        sup_a,
        scaled_sup_a: t.max(0.0).sqrt() * sup_a,
        expander_residual: expander_residual_sup(&f, t),
        gaussian: observers.gaussian.iter().map(|o| o.eval(g, t)).collect(),
        barrier_clearance: barriers.iter().map(|(b, side)| barrier_clearance(g, b, *side, t)).collect(),
    })
}

/// Evolve `initial` from `cfg.t_start` to `cfg.t_end`.
///
/// Invalid configurations are errors. Stepper failures (step-limit
/// violations, blowup, self-intersection, edge collapse) end the run; the
/// trace up to the failure is returned with the reason.
pub fn run_mcf(initial: &Geometry, cfg: &FlowConfig, observers: &Observers) -> Result<FlowTrace> {
    cfg.validate()?;
    let mut state = initial.clone();
    if let (Geometry::Graph(g), Some(f)) = (&mut state, &cfg.far_field) {
        *g = g.clone().with_far_field(f.clone());
    }
    let mut barriers = Vec::with_capacity(cfg.barriers.len());
    for b in &cfg.barriers {
        barriers.push((*b, barrier_side(&state, b)?));
    }
    let poly_opts = match &state {
        Geometry::Polyline(p) => Some(PolylineStepOptions {
            cfl_safety: cfg.cfl_safety,
            min_edge: cfg.min_edge_fraction * p.min_edge_length(),
            check_intersection: true,
        }),
        Geometry::Graph(_) => None,
    };

    let mut trace = FlowTrace {
        snapshots: vec![observe(&state, cfg.t_start, 0, observers, &barriers)?],
        gaussian_labels: observers.gaussian.iter().map(|o| o.label()).collect(),
        barriers: cfg.barriers.clone(),
        dt: 0.0,
        total_steps: 0,
        failure: None,
    };

    let mut t = cfg.t_start;
    let mut steps = 0usize;
    let mut next_time = 0usize;
    let targets: Vec<f64> = match &cfg.snapshots {
        SnapshotSchedule::Times(ts) => ts.clone(),
        SnapshotSchedule::Stride(_) => vec![cfg.t_end],
    };
    while next_time < targets.len() {
        if steps >= cfg.max_steps {
            trace.failure = Some(format!("step budget {} exhausted at t = {t}", cfg.max_steps));
            break;
        }
        let target = targets[next_time];
        let limit = match &state {
            Geometry::Graph(g) => graph_dt_limit(g.grid().h(), cfg.cfl_safety),
            Geometry::Polyline(p) => polyline_dt_limit(p, cfg.cfl_safety),
        };
        let (dt, lands) = if t + limit >= target - 1e-12 * target.abs().max(1.0) {
            ((target - t).min(limit), true)
        } else {
            (limit, false)
        };
        let stepped = match &state {
            Geometry::Graph(g) => step_graph_mcf(g, t, dt, cfg.cfl_safety).map(Geometry::Graph),
            Geometry::Polyline(p) => {
                let mut opts = poly_opts.expect("polyline options");
                opts.check_intersection = (steps + 1).is_multiple_of(cfg.intersection_stride) || lands;
                step_polyline_csf(p, dt, &opts).map(|mut q| {
                    if let Some(k) = cfg.redistribute_every {
                        if (steps + 1).is_multiple_of(k) {
                            q = redistribute_arclength(&q);
                        }
                    }
                    Geometry::Polyline(q)
                })
            }
        };
        let next = match stepped {
            Ok(s) => s,
            Err(e) => {
                trace.failure = Some(match e {
                    Error::Blowup { reason, .. } => Error::Blowup { t, reason }.to_string(),
                    e => format!("stopped at t = {t}: {e}"),
                });
                break;
            }
        };
        state = next;
        steps += 1;
        t = if lands { target } else { t + dt };
        trace.dt = dt;
        let record = match &cfg.snapshots {
            SnapshotSchedule::Stride(k) => steps.is_multiple_of(*k) || lands,
            SnapshotSchedule::Times(_) => lands,
        };
        if lands {
            next_time += 1;
        }
        if record {
            match observe(&state, t, steps, observers, &barriers) {
                Ok(s) => trace.snapshots.push(s),
                Err(e) => {
                    trace.failure = Some(format!("invalid geometry at t = {t}: {e}"));
                    break;
                }
            }
        }
    }
    trace.total_steps = steps;
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{GraphHypersurface, Grid1D, PolylineCurve, RegularCone};

    #[test]
    fn flat_line_trace_is_constant() {
        let grid = Grid1D::symmetric(10.0, 0.2).unwrap();
        let g = GraphHypersurface::from_fn(grid, |_| 0.0, RegularCone::flat(), FarField::Cone, 1e-12).unwrap();
        let cfg = FlowConfig::new(0.0, 1.0).with_snapshots(SnapshotSchedule::Stride(20));
        let obs = Observers::none().with_gaussian(GaussianObserver::Backward { center: Vec2::zeros(), t0: 2.0 });
        let tr = run_mcf(&Geometry::Graph(g), &cfg, &obs).unwrap();
        assert!(tr.completed());
        assert!((tr.last().t - 1.0).abs() < 1e-15);
        for s in &tr.snapshots {
            assert_eq!(s.sup_a, 0.0);
            assert!((s.gaussian[0].unwrap() - 1.0).abs() < 1e-6);
        }
        assert!(tr.times().windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn circle_curvature_follows_exact_solution() {
        let c = PolylineCurve::circle(Vec2::zeros(), 1.0, 256).unwrap();
        let times: Vec<f64> = (1..=49).map(|k| k as f64 * 0.01).collect();
        let cfg = FlowConfig::new(0.0, 0.49).with_snapshots(SnapshotSchedule::Times(times));
        let tr = run_mcf(&Geometry::Polyline(c), &cfg, &Observers::none()).unwrap();
        assert!(tr.completed(), "{:?}", tr.failure);
        for s in &tr.snapshots {
            let want = 1.0 / (1.0 - 2.0 * s.t).sqrt();
            assert!((s.sup_a - want).abs() < 0.01 * want, "t = {}: {} vs {}", s.t, s.sup_a, want);
        }
    }

    #[test]
    fn barrier_clearance_stays_positive() {
        let c = PolylineCurve::circle(Vec2::new(3.0, 0.0), 1.0, 128).unwrap();
        let b = Barrier::new(Vec2::zeros(), 1.5, 0.0);
        let cfg = FlowConfig::new(0.0, 0.45).with_barrier(b).with_snapshots(SnapshotSchedule::Stride(50));
        let tr = run_mcf(&Geometry::Polyline(c), &cfg, &Observers::none()).unwrap();
        assert!(tr.min_barrier_clearance().unwrap() > 0.0);
        assert!(barrier_side(&PolylineCurve::circle(Vec2::zeros(), 1.5, 64).unwrap(), &b).is_err());
    }

    #[test]
    fn invalid_config_is_an_error_but_blowup_is_a_trace() {
        let c = PolylineCurve::circle(Vec2::zeros(), 1.0, 64).unwrap();
        assert!(run_mcf(&Geometry::Polyline(c.clone()), &FlowConfig::new(1.0, 0.5), &Observers::none()).is_err());
        assert!(run_mcf(&Geometry::Polyline(c.clone()), &FlowConfig::new(0.0, 1.0).with_cfl(0.8), &Observers::none())
            .is_err());
        // the circle becomes extinct at t = 1/2
        let tr = run_mcf(&Geometry::Polyline(c), &FlowConfig::new(0.0, 1.0), &Observers::none()).unwrap();
        assert!(!tr.completed());
        assert!(tr.failure.as_ref().unwrap().contains("collapsed"));
        assert!((tr.last().t - 0.5).abs() < 0.01);
    }
}
