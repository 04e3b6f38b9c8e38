//! Normal graphs `X + v N` over a base curve and the closed-form relations
//! between base and graph: pulled-back metric, area density, and the inverse
//! map from a nearby curve back to its deviation field.

use super::fields::{CurveSamples, GeometryFields};
use super::polyline::find_self_intersection;
use super::Vec2;
use crate::{Error, Result};

/// Default smallness threshold for `||grad v|| + ||A v||`.
pub const DEFAULT_SMALLNESS: f64 = 0.1;

/// Constant in `density <= 1 + C (|grad v| + |A v|)` for curves.
///
/// In one dimension `density^2 = (1 - A v)^2 + |grad v|^2`, so the bound holds
/// with `C = 1` by the triangle inequality.
pub const DENSITY_CONSTANT: f64 = 1.0;

/// A deviation field `v` on the nodes of a base curve.
#[derive(Debug, Clone)]
pub struct NormalGraphField {
    pub base: GeometryFields,
    pub v: Vec<f64>,
    pub smallness: f64,
}

impl NormalGraphField {
    pub fn new(base: GeometryFields, v: Vec<f64>) -> Result<Self> {
        if v.len() != base.len() {
            return Err(Error::invalid(format!("{} deviation samples for {} base nodes", v.len(), base.len())));
        }
        if let Some(node) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        Ok(NormalGraphField { base, v, smallness: DEFAULT_SMALLNESS })
    }

    pub fn with_smallness(mut self, smallness: f64) -> Self {
        self.smallness = smallness;
        self
    }

    /// Arc-length gradient of `v` along the base.
    pub fn grad_v(&self) -> Vec<f64> {
        self.base.arc_derivative(&self.v)
    }

    /// `|A| |v|` at every node.
    pub fn a_v(&self) -> Vec<f64> {
        self.base.norm_a.iter().zip(&self.v).map(|(a, v)| (a * v).abs()).collect()
    }

    pub fn sup_v(&self) -> f64 {
        self.v.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_grad_v(&self) -> f64 {
        self.grad_v().iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn sup_a_v(&self) -> f64 {
        self.a_v().iter().fold(0.0, |m, v| m.max(*v))
    }

    /// `||grad v||_inf + ||A v||_inf`.
    pub fn regime_measure(&self) -> f64 {
        self.sup_grad_v() + self.sup_a_v()
    }

    pub fn check_regime(&self) -> Result<()> {
        let g = self.sup_grad_v();
        let av = self.sup_a_v();
        if g + av > self.smallness {
            return Err(Error::GraphRegime(format!(
                "||grad v|| + ||A v|| = {g:.4e} + {av:.4e} exceeds smallness {}",
                self.smallness
            )));
        }
        Ok(())
    }
}

/// Embedded samples `X + v N`; rejects self-intersecting results.
pub fn normal_graph_embed(field: &NormalGraphField) -> Result<Vec<Vec2>> {
    let pts: Vec<Vec2> =
        field.base.points.iter().zip(&field.base.normal).zip(&field.v).map(|((x, n), v)| x + n * *v).collect();
    if let Some((first, second)) = find_self_intersection(&pts, field.base.is_closed()) {
        return Err(Error::SelfIntersection { first, second });
    }
    Ok(pts)
}

/// Pulled-back metric `g - 2 A v + A^2 v^2 + dv dv` in the base chart.
pub fn normal_graph_metric(field: &NormalGraphField) -> Result<Vec<f64>> {
    let b = &field.base;
    let dv = super::fields::arc_derivative(&b.param, b.period, &field.v);
    let mut out = Vec::with_capacity(b.len());
    for i in 0..b.len() {
        let (g, a, v) = (b.metric[i], b.second_form[i], field.v[i]);
        let a2 = a * a * b.inv_metric[i];
        let gt = g - 2.0 * a * v + a2 * v * v + dv[i] * dv[i];
        if !(gt > 0.0) {
            return Err(Error::GraphRegime(format!("pulled-back metric {gt:e} is not positive at node {i}")));
        }
        out.push(gt);
    }
    Ok(out)
}

/// Area density of the normal graph relative to the base, checked against
/// `1 + C (|grad v| + |A v|)` node by node.
pub fn radon_nikodym_density(field: &NormalGraphField) -> Result<Vec<f64>> {
    field.check_regime()?;
    let gt = normal_graph_metric(field)?;
    let grad = field.grad_v();
    let av = field.a_v();
    let mut out = Vec::with_capacity(gt.len());
    for i in 0..gt.len() {
        let d = (gt[i] / field.base.metric[i]).sqrt();
        let bound = 1.0 + DENSITY_CONSTANT * (grad[i].abs() + av[i]);
        if d > bound * (1.0 + 1e-12) {
            return Err(Error::Invariant(format!("density {d} exceeds {bound} at node {i}")));
        }
        out.push(d);
    }
    Ok(out)
}

/// Deviation field recovered from a target curve.
#[derive(Debug, Clone)]
pub struct DeviationField {
    pub field: NormalGraphField,
    /// Nodes whose normal line found no, or more than one, intersection.
    pub flagged: Vec<usize>,
    pub reach: f64,
}

impl DeviationField {
    /// `sup |v|` over unflagged nodes in `range`.
    pub fn sup_v_on(&self, keep: impl Fn(usize) -> bool) -> f64 {
        (0..self.field.v.len())
            .filter(|i| keep(*i) && !self.flagged.contains(i))
            .fold(0.0, |m, i| m.max(self.field.v[i].abs()))
    }
}

fn cross(a: Vec2, b: Vec2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// For every base node, intersect the normal line with `target` within the
/// reach and record the signed offset.
///
/// The default reach is `0.5 / ||A_base||`, capped by the base diameter; if
/// more than a tenth of the nodes are flagged the reach is halved (up to four
/// times).
pub fn closest_point_deviation(
    base: &GeometryFields,
    target: &CurveSamples,
    reach: Option<f64>,
) -> Result<DeviationField> {
    if base.is_empty() {
        return Err(Error::invalid("empty base curve"));
    }
    let diam = {
        let (mut lo, mut hi) = (base.points[0], base.points[0]);
        for p in &base.points {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        (hi - lo).norm().max(1e-12)
    };
    let auto = reach.is_none();
    let mut r = reach.unwrap_or_else(|| (0.5 / (base.sup_norm_a() + 1e-12)).min(diam));

    let mut segs: Vec<(Vec2, Vec2)> = target.segments().collect();
    if let Some(tails) = target.tails {
        let len = 4.0 * (diam + target.max_distance(base.points[0]));
        for t in tails {
            segs.push((t.origin, t.origin + t.dir * len));
        }
    }
    let boxes: Vec<(Vec2, Vec2)> = segs.iter().map(|(a, b)| (a.inf(b), a.sup(b))).collect();

    for attempt in 0..5 {
        let mut v = vec![0.0; base.len()];
        let mut flagged = Vec::new();
        for i in 0..base.len() {
            let x = base.points[i];
            let n = base.normal[i];
            let (p, q) = (x - n * r, x + n * r);
            let (lo, hi) = (p.inf(&q), p.sup(&q));
            let mut hits: Vec<f64> = Vec::new();
            for (k, (a, b)) in segs.iter().enumerate() {
                let (blo, bhi) = boxes[k];
                if bhi.x < lo.x || blo.x > hi.x || bhi.y < lo.y || blo.y > hi.y {
                    continue;
                }
                let e = b - a;
                let den = cross(n, e);
                if den.abs() < 1e-14 * e.norm() {
                    continue;
                }
                let ax = a - x;
                let s = cross(ax, e) / den;
                let tau = cross(ax, n) / den;
                if (-1e-10..=1.0 + 1e-10).contains(&tau)
                    && s.abs() <= r
                    && !hits.iter().any(|h| (h - s).abs() <= 1e-9 * (1.0 + s.abs()))
                {
                    hits.push(s);
                }
            }
            match hits.len() {
                1 => v[i] = hits[0],
                0 => flagged.push(i),
                _ => {
                    v[i] = hits.iter().copied().fold(f64::INFINITY, |m, s| if s.abs() < m.abs() { s } else { m });
                    flagged.push(i);
                }
            }
        }
        let storm = flagged.len() * 10 > base.len();
        if !(auto && storm) || attempt == 4 {
            let field = NormalGraphField::new(base.clone(), v)?;
            return Ok(DeviationField { field, flagged, reach: r });
        }
        r *= 0.5;
    }
    unreachable!()
}

#[cfg(test)]
mod tests {
    use super::super::{
        AsCurve, CurveEnds, FarField, GraphHypersurface, Grid1D, Orientation, PolylineCurve, RegularCone,
    };
    use super::*;

    fn flat(n: usize) -> GeometryFields {
        let grid = Grid1D::new(-2.0, 2.0, n).unwrap();
        GraphHypersurface::from_fn(grid, |_| 0.0, RegularCone::flat(), FarField::Cone, 1.0)
            .unwrap()
            .graph_geometry()
            .unwrap()
    }

    fn circle(orientation: Orientation) -> GeometryFields {
        PolylineCurve::circle(Vec2::zeros(), 1.0, 400)
            .unwrap()
            .with_orientation(orientation)
            .polyline_geometry()
            .unwrap()
    }

    #[test]
    fn zero_field_is_identity() {
        let b = circle(Orientation::Outward);
        let f = NormalGraphField::new(b.clone(), vec![0.0; b.len()]).unwrap();
        assert_eq!(normal_graph_embed(&f).unwrap(), b.points);
        assert_eq!(normal_graph_metric(&f).unwrap(), b.metric);
        assert!(radon_nikodym_density(&f).unwrap().iter().all(|d| *d == 1.0));
    }

    #[test]
    fn outward_offset_of_circle() {
        let b = circle(Orientation::Outward);
        let f = NormalGraphField::new(b.clone(), vec![0.1; b.len()]).unwrap();
        for p in normal_graph_embed(&f).unwrap() {
            assert!((p.norm() - 1.1).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_offset_metric_on_circle() {
        // inward normal: A_ij = g_ij for the discrete circle up to O(h^2)
        let c = 0.05;
        let b = circle(Orientation::Inward);
        let f = NormalGraphField::new(b.clone(), vec![c; b.len()]).unwrap();
        let g = normal_graph_metric(&f).unwrap();
        let d = radon_nikodym_density(&f).unwrap();
        for i in 0..b.len() {
            assert!((g[i] - (1.0 - c) * (1.0 - c)).abs() < 1e-4);
            assert!((d[i] - (1.0 - c)).abs() < 1e-4);
        }
        // cross-check with the embedded circle of radius 1 - c
        let emb = normal_graph_embed(&f).unwrap();
        assert!(emb.iter().all(|p| (p.norm() - (1.0 - c)).abs() < 1e-12));
        // outward orientation gives 1 + c
        let b = circle(Orientation::Outward);
        let f = NormalGraphField::new(b.clone(), vec![c; b.len()]).unwrap();
        let d = radon_nikodym_density(&f).unwrap();
        assert!(d.iter().all(|d| (d - (1.0 + c)).abs() < 1e-4));
    }

    #[test]
    fn tilted_line_density() {
        let s = 0.08;
        let b = flat(41);
        let v: Vec<f64> = b.param.iter().map(|x| s * x).collect();
        let f = NormalGraphField::new(b, v).unwrap();
        for g in normal_graph_metric(&f).unwrap() {
            assert!((g - (1.0 + s * s)).abs() < 1e-12);
        }
        for d in radon_nikodym_density(&f).unwrap() {
            assert!((d - (1.0 + s * s).sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn regime_violation_is_named() {
        let b = flat(41);
        let v: Vec<f64> = b.param.iter().map(|x| 0.5 * x).collect();
        let f = NormalGraphField::new(b, v).unwrap();
        match radon_nikodym_density(&f) {
            Err(Error::GraphRegime(msg)) => assert!(msg.contains("smallness")),
            other => panic!("expected regime error, got {other:?}"),
        }
    }

    #[test]
    fn bump_over_flat_line() {
        let b = flat(81);
        let bump = |x: f64| 0.2 * (-4.0 * x * x).exp();
        let f = NormalGraphField::new(b.clone(), b.param.iter().map(|x| bump(*x)).collect()).unwrap();
        let emb = normal_graph_embed(&f).unwrap();
        for p in &emb {
            assert!((p.y - bump(p.x)).abs() < 1e-15);
        }
        let grid = Grid1D::new(-2.0, 2.0, 81).unwrap();
        let target = GraphHypersurface::from_fn(grid, bump, RegularCone::flat(), FarField::Cone, 1.0).unwrap();
        let dev = closest_point_deviation(&b, &target.curve_samples(), None).unwrap();
        assert!(dev.flagged.is_empty());
        for (i, x) in b.param.iter().enumerate() {
            assert!((dev.field.v[i] - bump(*x)).abs() < 1e-12);
        }
    }

    #[test]
    fn self_target_gives_zero() {
        let c = PolylineCurve::circle(Vec2::zeros(), 1.0, 200).unwrap();
        let b = c.polyline_geometry().unwrap();
        let dev = closest_point_deviation(&b, &c.curve_samples(), None).unwrap();
        assert!(dev.flagged.is_empty());
        assert!(dev.field.sup_v() < 1e-12);
    }

    #[test]
    fn round_trip_on_random_smooth_fields() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in [100usize, 200, 400] {
            let b = circle(Orientation::Outward);
            let b = if n == 400 {
                b
            } else {
                PolylineCurve::circle(Vec2::zeros(), 1.0, n).unwrap().polyline_geometry().unwrap()
            };
            let (a1, a2, p) =
                (rng.random_range(-0.03..0.03), rng.random_range(-0.03..0.03), rng.random_range(0.0..6.0));
            let v0: Vec<f64> = (0..b.len())
                .map(|i| {
                    let th = std::f64::consts::TAU * i as f64 / b.len() as f64;
                    a1 * (2.0 * th + p).sin() + a2 * (3.0 * th).cos()
                })
                .collect();
            let f = NormalGraphField::new(b.clone(), v0.clone()).unwrap();
            let emb = normal_graph_embed(&f).unwrap();
            let target = PolylineCurve::new(emb, CurveEnds::Closed).unwrap();
            let dev = closest_point_deviation(&b, &target.curve_samples(), None).unwrap();
            assert!(dev.flagged.is_empty());
            let h = 1.0 / n as f64;
            let err = dev.field.v.iter().zip(&v0).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
            assert!(err <= h * h, "n = {n}, err = {err}");
        }
    }

    #[test]
    fn unreachable_target_is_flagged() {
        let b = flat(21);
        let grid = Grid1D::new(-2.0, 2.0, 21).unwrap();
        let far = GraphHypersurface::from_fn(grid, |_| 5.0, RegularCone::flat(), FarField::Cone, 10.0).unwrap();
        let dev = closest_point_deviation(&b, &far.curve_samples(), Some(1.0)).unwrap();
        assert_eq!(dev.flagged.len(), 21);
    }
}
