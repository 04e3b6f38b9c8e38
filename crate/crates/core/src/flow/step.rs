use crate::geometry::{find_self_intersection, CurveEnds, GraphHypersurface, PolylineCurve, Vec2};
use crate::{Error, Result};

/// Abort threshold for `||A|| h`.
pub const BLOWUP_THRESHOLD: f64 = 0.5;

/// Largest admissible `cfl_safety` for the explicit schemes.
pub const MAX_CFL_SAFETY: f64 = 0.5;

fn check_cfl(dt: f64, cfl_safety: f64, h: f64) -> Result<()> {
    if !(cfl_safety > 0.0 && cfl_safety <= MAX_CFL_SAFETY) {
        return Err(Error::invalid(format!("cfl_safety = {cfl_safety} must lie in (0, {MAX_CFL_SAFETY}]")));
    }
    let limit = cfl_safety * h * h / 2.0;
    if !(dt > 0.0) || dt > limit * (1.0 + 1e-12) {
        return Err(Error::CflViolation { dt, limit });
    }
    Ok(())
}

/// Largest step allowed for a graph on spacing `h`.
pub fn graph_dt_limit(h: f64, cfl_safety: f64) -> f64 {
    cfl_safety * h * h / 2.0
}

/// One explicit Euler step of `u_t = u'' / (1 + u'^2)` from time `t`.
///
/// Interior nodes use central differences of the old state; the two end
/// nodes are reset to the far-field rule at `t + dt`.
pub fn step_graph_mcf(g: &GraphHypersurface, t: f64, dt: f64, cfl_safety: f64) -> Result<GraphHypersurface> {
    let h = g.grid().h();
    check_cfl(dt, cfl_safety, h)?;
    let u = g.heights();
    let n = u.len();
    let mut next = vec![0.0; n];
    let mut sup_a: f64 = 0.0;
    let inv_h2 = 1.0 / (h * h);
    let inv_2h = 0.5 / h;
    for i in 1..n - 1 {
        let p = (u[i + 1] - u[i - 1]) * inv_2h;
        let q = (u[i + 1] - 2.0 * u[i] + u[i - 1]) * inv_h2;
        let g11 = 1.0 + p * p;
        sup_a = sup_a.max(q.abs() / (g11 * g11.sqrt()));
        next[i] = u[i] + dt * q / g11;
    }
    if sup_a * h > BLOWUP_THRESHOLD {
        return Err(Error::Blowup { t, reason: format!("|A| h = {:.3} exceeds {BLOWUP_THRESHOLD}", sup_a * h) });
    }
    let t1 = t + dt;
    next[0] = g.boundary_value(g.grid().x_min(), t1);
    next[n - 1] = g.boundary_value(g.grid().x_max(), t1);
    if let Some(node) = next.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { node });
    }
    Ok(g.with_heights(next))
}

/// Options for the polyline stepper.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolylineStepOptions {
    pub cfl_safety: f64,
    /// Abort when an edge becomes shorter than this.
    pub min_edge: f64,
    /// Run the self-intersection sweep after the step.
    pub check_intersection: bool,
}

/// Largest step allowed for a polyline.
pub fn polyline_dt_limit(c: &PolylineCurve, cfl_safety: f64) -> f64 {
    let e = c.min_edge_length();
    cfl_safety * e * e / 2.0
}

/// One explicit step of curve shortening: each vertex moves by `dt kappa N`.
///
/// End vertices of open curves slide along their rays by the tangential
/// component of the neighbouring velocity, so the tails stay on the same
/// lines.
pub fn step_polyline_csf(c: &PolylineCurve, dt: f64, opts: &PolylineStepOptions) -> Result<PolylineCurve> {
    check_cfl(dt, opts.cfl_safety, c.min_edge_length())?;
    let v = c.vertices();
    let n = v.len();
    let kappa = c.curvature_vectors();
    let mut sup_k: f64 = 0.0;
    for k in &kappa {
        sup_k = sup_k.max(k.norm());
    }
    if sup_k * c.min_edge_length() > BLOWUP_THRESHOLD {
        return Err(Error::Blowup {
            t: f64::NAN,
            reason: format!("|kappa| h = {:.3} exceeds {BLOWUP_THRESHOLD}", sup_k * c.min_edge_length()),
        });
    }
    let mut next: Vec<Vec2> = v.iter().zip(&kappa).map(|(x, k)| x + k * dt).collect();
    if let CurveEnds::Rays { minus, plus } = c.ends() {
        // `minus` points away from the first vertex, `plus` away from the last.
        let slide = |d: Vec2, k: Vec2| d * d.dot(&k);
        next[0] = v[0] + slide(minus, kappa[1]) * dt;
        next[n - 1] = v[n - 1] + slide(plus, kappa[n - 2]) * dt;
    }
    if let Some(node) = next.iter().position(|p| !(p.x.is_finite() && p.y.is_finite())) {
        return Err(Error::NonFinite { node });
    }
    let out = PolylineCurve::from_parts_unchecked(next, c.ends(), c.orientation());
    let e = out.min_edge_length();
    if e < opts.min_edge {
        return Err(Error::Blowup { t: f64::NAN, reason: format!("edge collapsed to {e:e}") });
    }
    if opts.check_intersection {
        if let Some((first, second)) = find_self_intersection(out.vertices(), out.is_closed()) {
            return Err(Error::SelfIntersection { first, second });
        }
    }
    Ok(out)
}

fn catmull_rom(p0: Vec2, p1: Vec2, p2: Vec2, p3: Vec2, s: f64) -> Vec2 {
    let s2 = s * s;
    let s3 = s2 * s;
    (p1 * 2.0 + (p2 - p0) * s + (p0 * 2.0 - p1 * 5.0 + p2 * 4.0 - p3) * s2 + (p1 * 3.0 - p0 - p2 * 3.0 + p3) * s3) * 0.5
}

/// Resample the curve at equal arc length along its Catmull-Rom spline,
/// keeping the vertex count and the end vertices of open curves.
pub fn redistribute_arclength(c: &PolylineCurve) -> PolylineCurve {
    const SUB: usize = 16;
    let v = c.vertices();
    let n = v.len();
    let closed = c.is_closed();
    let get = |i: isize| -> Vec2 {
        if closed {
            v[i.rem_euclid(n as isize) as usize]
        } else if i < 0 {
            v[0] * 2.0 - v[1]
        } else if i as usize >= n {
            v[n - 1] * 2.0 - v[n - 2]
        } else {
            v[i as usize]
        }
    };
    let m = if closed { n } else { n - 1 };
    // Dense samples of the spline with cumulative length.
    let mut pts = Vec::with_capacity(m * SUB + 1);
    for i in 0..m {
        let i = i as isize;
        for j in 0..SUB {
            pts.push(catmull_rom(get(i - 1), get(i), get(i + 1), get(i + 2), j as f64 / SUB as f64));
        }
    }
    pts.push(if closed { v[0] } else { v[n - 1] });
    let mut cum = vec![0.0; pts.len()];
    for k in 1..pts.len() {
        cum[k] = cum[k - 1] + (pts[k] - pts[k - 1]).norm();
    }
    let total = cum[pts.len() - 1];
    let mut out = Vec::with_capacity(n);
    let mut k = 0;
    for i in 0..n {
        let target = total * i as f64 / m as f64;
        while k + 2 < pts.len() && cum[k + 1] < target {
            k += 1;
        }
        let span = cum[k + 1] - cum[k];
        let s = if span > 0.0 { ((target - cum[k]) / span).clamp(0.0, 1.0) } else { 0.0 };
        out.push(pts[k] + (pts[k + 1] - pts[k]) * s);
    }
    if !closed {
        out[0] = v[0];
        out[n - 1] = v[n - 1];
    }
    PolylineCurve::from_parts_unchecked(out, c.ends(), c.orientation())
}
