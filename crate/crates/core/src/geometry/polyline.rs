use super::fields::{CurveSamples, GeometryFields, NormalConvention, Ray};
use super::{AsCurve, Vec2};
use crate::{Error, Result};

/// Maximum angle between an end edge and its declared ray.
pub const DEFAULT_ANGLE_TOL: f64 = 0.1;

/// How an open polyline continues, or that it is closed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CurveEnds {
    Closed,
    /// Unit directions pointing away from the curve at the first and last
    /// vertex.
    Rays {
        minus: Vec2,
        plus: Vec2,
    },
}

/// Normal orientation of a closed polyline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Orientation {
    #[default]
    Outward,
    Inward,
}

/// An embedded planar polygon.
#[derive(Debug, Clone)]
pub struct PolylineCurve {
    vertices: Vec<Vec2>,
    ends: CurveEnds,
    orientation: Orientation,
}

impl PolylineCurve {
    pub fn new(vertices: Vec<Vec2>, ends: CurveEnds) -> Result<Self> {
        Self::with_tolerance(vertices, ends, DEFAULT_ANGLE_TOL)
    }

    pub fn with_tolerance(vertices: Vec<Vec2>, ends: CurveEnds, angle_tol: f64) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(Error::invalid(format!("polyline needs at least 3 vertices, got {n}")));
        }
        if let Some(i) = vertices.iter().position(|v| !(v.x.is_finite() && v.y.is_finite())) {
            return Err(Error::NonFinite { node: i });
        }
        let closed = matches!(ends, CurveEnds::Closed);
        let m = if closed { n } else { n - 1 };
        for i in 0..m {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::invalid(format!("duplicate consecutive vertices at {i}")));
            }
        }
        let ends = match ends {
            CurveEnds::Closed => CurveEnds::Closed,
            CurveEnds::Rays { minus, plus } => {
                let (minus, plus) = (unit(minus)?, unit(plus)?);
                let first = (vertices[0] - vertices[1]).normalize();
                let last = (vertices[n - 1] - vertices[n - 2]).normalize();
                for (edge, ray, side) in [(first, minus, "first"), (last, plus, "last")] {
                    let angle = edge.dot(&ray).clamp(-1.0, 1.0).acos();
                    if angle > angle_tol {
                        return Err(Error::invalid(format!(
                            "{side} edge is {angle:.3} rad from its ray (tolerance {angle_tol})"
                        )));
                    }
                }
                CurveEnds::Rays { minus, plus }
            }
        };
        if let Some((first, second)) = find_self_intersection(&vertices, closed) {
            return Err(Error::SelfIntersection { first, second });
        }
        Ok(PolylineCurve { vertices, ends, orientation: Orientation::Outward })
    }

    /// Regular `k`-gon inscribed in the circle of radius `r`, counterclockwise.
    pub fn circle(center: Vec2, r: f64, k: usize) -> Result<Self> {
        if !(r > 0.0) {
            return Err(Error::invalid("circle radius must be positive"));
        }
        let vertices = (0..k)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / k as f64;
                center + r * Vec2::new(th.cos(), th.sin())
            })
            .collect();
        Self::new(vertices, CurveEnds::Closed)
    }

    /// Straight segment from `a` to `b` with rays continuing it.
    pub fn segment(a: Vec2, b: Vec2, k: usize) -> Result<Self> {
        let dir = (b - a).normalize();
        let vertices = (0..k).map(|i| a + (b - a) * (i as f64 / (k - 1) as f64)).collect();
        Self::new(vertices, CurveEnds::Rays { minus: -dir, plus: dir })
    }

    pub(crate) fn from_parts_unchecked(vertices: Vec<Vec2>, ends: CurveEnds, orientation: Orientation) -> Self {
        PolylineCurve { vertices, ends, orientation }
    }

    pub fn with_orientation(mut self, orientation: Orientation) -> Self {
        self.orientation = orientation;
        self
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn ends(&self) -> CurveEnds {
        self.ends
    }

    pub fn orientation(&self) -> Orientation {
        self.orientation
    }

    pub fn is_closed(&self) -> bool {
        matches!(self.ends, CurveEnds::Closed)
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn edge_lengths(&self) -> Vec<f64> {
        let n = self.vertices.len();
        let m = if self.is_closed() { n } else { n - 1 };
        (0..m).map(|i| (self.vertices[(i + 1) % n] - self.vertices[i]).norm()).collect()
    }

    pub fn min_edge_length(&self) -> f64 {
        self.edge_lengths().into_iter().fold(f64::INFINITY, f64::min)
    }

    pub fn length(&self) -> f64 {
        self.edge_lengths().iter().sum()
    }

    /// Shoelace area (positive for counterclockwise closed curves).
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| {
                let (a, b) = (self.vertices[i], self.vertices[(i + 1) % n]);
                a.x * b.y - a.y * b.x
            })
            .sum::<f64>()
    }

    pub fn centroid(&self) -> Vec2 {
        self.vertices.iter().sum::<Vec2>() / self.vertices.len() as f64
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("scale factor must be positive"));
        }
        Ok(PolylineCurve { vertices: self.vertices.iter().map(|v| v * factor).collect(), ..self.clone() })
    }

    /// Menger curvature vectors: `kappa N` at interior vertices, zero at the
    /// ends of open curves.
    pub fn curvature_vectors(&self) -> Vec<Vec2> {
        let n = self.vertices.len();
        let v = &self.vertices;
        (0..n)
            .map(|i| {
                if self.is_closed() {
                    menger_curvature(v[(i + n - 1) % n], v[i], v[(i + 1) % n])
                } else if i == 0 || i == n - 1 {
                    Vec2::zeros()
                } else {
                    menger_curvature(v[i - 1], v[i], v[i + 1])
                }
            })
            .collect()
    }

    /// Geometry in the chord-length chart.
    pub fn polyline_geometry(&self) -> Result<GeometryFields> {
        let n = self.vertices.len();
        if n < 3 {
            return Err(Error::invalid("polyline geometry needs at least 3 vertices"));
        }
        let closed = self.is_closed();
        let edges = self.edge_lengths();
        if let Some(i) = edges.iter().position(|e| *e == 0.0) {
            return Err(Error::invalid(format!("duplicate vertices at edge {i}")));
        }
        let kappa = self.curvature_vectors();
        let mut param = Vec::with_capacity(n);
        let mut s = 0.0;
        for i in 0..n {
            param.push(s);
            if i < edges.len() {
                s += edges[i];
            }
        }
        let flip = if closed {
            let ccw = self.signed_area() > 0.0;
            // left normal points inward on a counterclockwise curve
            let outward_is_left = !ccw;
            match self.orientation {
                Orientation::Outward => !outward_is_left,
                Orientation::Inward => outward_is_left,
            }
        } else {
            false
        };
        let v = &self.vertices;
        let normal: Vec<Vec2> = (0..n)
            .map(|i| {
                let (a, b) = if closed {
                    (v[(i + n - 1) % n], v[(i + 1) % n])
                } else {
                    (v[i.saturating_sub(1)], v[(i + 1).min(n - 1)])
                };
                let t = (b - a).normalize();
                let left = Vec2::new(-t.y, t.x);
                if flip {
                    -left
                } else {
                    left
                }
            })
            .collect();
        let h: Vec<f64> = kappa.iter().zip(&normal).map(|(k, nn)| k.dot(nn)).collect();
        let element = (0..n)
            .map(|i| {
                if closed {
                    0.5 * (edges[(i + n - 1) % n] + edges[i])
                } else {
                    let left = if i > 0 { edges[i - 1] } else { 0.0 };
                    let right = if i < n - 1 { edges[i] } else { 0.0 };
                    0.5 * (left + right)
                }
            })
            .collect();
        let convention = match (closed, self.orientation) {
            (false, _) => NormalConvention::Left,
            (true, Orientation::Outward) => NormalConvention::Outward,
            (true, Orientation::Inward) => NormalConvention::Inward,
        };
        Ok(GeometryFields {
            points: self.vertices.clone(),
            param,
            metric: vec![1.0; n],
            inv_metric: vec![1.0; n],
            christoffel: vec![0.0; n],
            second_form: h.clone(),
            norm_a: h.iter().map(|x| x.abs()).collect(),
            mean_curvature: h,
            normal,
            element,
            interior: if closed { 0..n } else { 1..n - 1 },
            period: closed.then_some(s),
            convention,
        })
    }
}

fn unit(v: Vec2) -> Result<Vec2> {
    let n = v.norm();
    if !(n > 0.0 && n.is_finite()) {
        return Err(Error::invalid("ray direction must be a nonzero finite vector"));
    }
    Ok(v / n)
}

impl AsCurve for PolylineCurve {
    fn curve_samples(&self) -> CurveSamples {
        let n = self.vertices.len();
        let tails = match self.ends {
            CurveEnds::Closed => None,
            CurveEnds::Rays { minus, plus } => {
                Some([Ray { origin: self.vertices[0], dir: minus }, Ray { origin: self.vertices[n - 1], dir: plus }])
            }
        };
        let x_monotone = !self.is_closed() && self.vertices.windows(2).all(|w| w[1].x > w[0].x);
        CurveSamples { points: self.vertices.clone(), closed: self.is_closed(), tails, x_monotone }
    }
}

/// Curvature vector of the circle through `a`, `b`, `c`, evaluated at `b`:
/// points to the circumcenter with length `1 / R`; zero for collinear points.
pub fn menger_curvature(a: Vec2, b: Vec2, c: Vec2) -> Vec2 {
    let u = a - b;
    let v = c - b;
    let (uu, vv) = (u.norm_squared(), v.norm_squared());
    let d = 2.0 * (u.x * v.y - u.y * v.x);
    // circumcenter - b = w / d
    let w = Vec2::new(v.y * uu - u.y * vv, u.x * vv - v.x * uu);
    let ww = w.norm_squared();
    if d == 0.0 || ww == 0.0 {
        return Vec2::zeros();
    }
    w * (d / ww)
}

fn orient(a: Vec2, b: Vec2, c: Vec2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Vec2, b: Vec2, p: Vec2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(p1: Vec2, p2: Vec2, q1: Vec2, q2: Vec2) -> bool {
    let d1 = orient(q1, q2, p1);
    let d2 = orient(q1, q2, p2);
    let d3 = orient(p1, p2, q1);
    let d4 = orient(p1, p2, q2);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    (d1 == 0.0 && on_segment(q1, q2, p1))
        || (d2 == 0.0 && on_segment(q1, q2, p2))
        || (d3 == 0.0 && on_segment(p1, p2, q1))
        || (d4 == 0.0 && on_segment(p1, p2, q2))
}

/// First pair of non-adjacent intersecting segments, found with a sweep over
/// segments sorted by their left end.
pub fn find_self_intersection(vertices: &[Vec2], closed: bool) -> Option<(usize, usize)> {
    let n = vertices.len();
    if n < 3 {
        return None;
    }
    let m = if closed { n } else { n - 1 };
    let seg = |i: usize| (vertices[i], vertices[(i + 1) % n]);
    let mut order: Vec<usize> = (0..m).collect();
    let lo = |i: usize| {
        let (a, b) = seg(i);
        a.x.min(b.x)
    };
    let hi = |i: usize| {
        let (a, b) = seg(i);
        a.x.max(b.x)
    };
    order.sort_by(|&i, &j| lo(i).total_cmp(&lo(j)).then(i.cmp(&j)));
    let adjacent = |i: usize, j: usize| {
        let d = i.abs_diff(j);
        d <= 1 || (closed && d == m - 1)
    };
    let mut active: Vec<usize> = Vec::new();
    for &i in &order {
        let x = lo(i);
        active.retain(|&j| hi(j) >= x);
        let (a, b) = seg(i);
        for &j in &active {
            if adjacent(i, j) {
                continue;
            }
            let (c, d) = seg(j);
            if a.y.max(b.y) < c.y.min(d.y) || c.y.max(d.y) < a.y.min(b.y) {
                continue;
            }
            if segments_intersect(a, b, c, d) {
                return Some((i.min(j), i.max(j)));
            }
        }
        active.push(i);
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_curvature_converges() {
        let c = PolylineCurve::circle(Vec2::zeros(), 1.0, 256).unwrap();
        let f = c.polyline_geometry().unwrap();
        for k in &f.norm_a {
            assert!((k - 1.0).abs() < 1e-3);
        }
        // outward normal, curvature vector points inward
        assert!(f.mean_curvature.iter().all(|h| (*h + 1.0).abs() < 1e-3));
        assert_eq!(f.convention, NormalConvention::Outward);
    }

    #[test]
    fn collinear_vertices_have_zero_curvature() {
        let s = PolylineCurve::segment(Vec2::new(-1.0, -1.0), Vec2::new(2.0, 2.0), 7).unwrap();
        let f = s.polyline_geometry().unwrap();
        assert!(f.norm_a.iter().all(|k| k.abs() < 1e-12));
    }

    #[test]
    fn scaled_arc_radius_two() {
        // two opposite arcs of the circle of radius 2, joined into one closed curve
        let mut v = Vec::new();
        for i in 0..40 {
            let th = 0.2 + 2.7 * i as f64 / 39.0;
            v.push(2.0 * Vec2::new(th.cos(), th.sin()));
        }
        for i in 0..40 {
            let th = 0.2 + std::f64::consts::PI + 2.7 * i as f64 / 39.0;
            v.push(2.0 * Vec2::new(th.cos(), th.sin()));
        }
        let c = PolylineCurve::new(v, CurveEnds::Closed).unwrap();
        let f = c.polyline_geometry().unwrap();
        for i in (1..39).chain(41..79) {
            assert!((f.norm_a[i] - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_duplicates_and_crossings() {
        let v = vec![Vec2::new(0.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
        assert!(PolylineCurve::new(v, CurveEnds::Closed).is_err());
        let bowtie = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)];
        assert!(matches!(PolylineCurve::new(bowtie, CurveEnds::Closed), Err(Error::SelfIntersection { .. })));
    }

    #[test]
    fn ray_mismatch_is_rejected() {
        let v = vec![Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(2.0, 0.0)];
        let ends = CurveEnds::Rays { minus: Vec2::new(-1.0, 0.0), plus: Vec2::new(0.0, 1.0) };
        assert!(PolylineCurve::new(v, ends).is_err());
    }

    #[test]
    fn inward_orientation_flips_sign() {
        let c = PolylineCurve::circle(Vec2::zeros(), 1.0, 64).unwrap().with_orientation(Orientation::Inward);
        let f = c.polyline_geometry().unwrap();
        assert!(f.mean_curvature.iter().all(|h| *h > 0.99));
        assert!(f.normal[0].x < -0.99);
    }

    #[test]
    fn sweep_matches_brute_force() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.random_range(4..12);
            let v: Vec<Vec2> = (0..n).map(|_| Vec2::new(rng.random(), rng.random())).collect();
            for closed in [false, true] {
                let fast = find_self_intersection(&v, closed).is_some();
                let m = if closed { n } else { n - 1 };
                let mut slow = false;
                for i in 0..m {
                    for j in i + 1..m {
                        let d = j - i;
                        if d <= 1 || (closed && d == m - 1) {
                            continue;
                        }
                        if segments_intersect(v[i], v[(i + 1) % n], v[j], v[(j + 1) % n]) {
                            slow = true;
                        }
                    }
                }
                assert_eq!(fast, slow);
            }
        }
    }
}
