//! Gaussian areas, entropy lower bounds and monotonicity along flows.
//!
//! For a curve (`n = 1`) the Gaussian area is
//! `F_{P,t} = int (4 pi t)^{-1/2} exp(-|X - P|^2 / 4t) ds`. Stored samples are
//! integrated with the trapezoid rule on each segment; asymptotic rays are
//! integrated in closed form with `erf`.

mod entropy;
mod monotonicity;

pub use entropy::{entropy_lower_bound, lipschitz_entropy_bound, EntropyReport, EntropySearchConfig, SearchRound};
pub use monotonicity::{monotonicity_trace, MonotonicityRow, MonotonicitySeries, DEFAULT_RATE_TOL};

use std::f64::consts::PI;

use crate::geometry::{AsCurve, CurveSamples, Ray, Vec2};
use crate::{Error, Result};

/// Default truncation radius in units of `sqrt(t)`.
pub const DEFAULT_TRUNCATION: f64 = 8.0;

/// Center and scale of a Gaussian area.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianQuery {
    pub center: Vec2,
    pub t: f64,
    /// Multiple of `sqrt(t)` beyond which stored samples are dropped.
    pub truncation: f64,
}

impl GaussianQuery {
    pub fn new(center: Vec2, t: f64) -> Result<Self> {
        Self::with_truncation(center, t, DEFAULT_TRUNCATION)
    }

    pub fn with_truncation(center: Vec2, t: f64, truncation: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::invalid(format!("Gaussian scale t = {t} must be positive")));
        }
        if !(truncation >= DEFAULT_TRUNCATION) {
            return Err(Error::invalid(format!("truncation {truncation} below {DEFAULT_TRUNCATION}")));
        }
        if !(center.x.is_finite() && center.y.is_finite()) {
            return Err(Error::invalid("Gaussian center must be finite"));
        }
        Ok(GaussianQuery { center, t, truncation })
    }

    pub fn radius(&self) -> f64 {
        self.truncation * self.t.sqrt()
    }

    fn weight(&self, x: Vec2) -> f64 {
        (4.0 * PI * self.t).sqrt().recip() * (-(x - self.center).norm_squared() / (4.0 * self.t)).exp()
    }

    /// The same query after dilating space by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        GaussianQuery { center: self.center * factor, t: self.t * factor * factor, truncation: self.truncation }
    }
}

/// A Gaussian area with a rigorous bound on the dropped tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianValue {
    pub value: f64,
    /// Weight at the cutoff times the length of the dropped samples.
    pub truncation_bound: f64,
}

pub fn gaussian_area(curve: &impl AsCurve, q: &GaussianQuery) -> Result<GaussianValue> {
    gaussian_area_samples(&curve.curve_samples(), q)
}

/// `F_{P,t}` restricted to the ball of radius `ball_radius` about `P`.
pub fn localized_gaussian_area(curve: &impl AsCurve, q: &GaussianQuery, ball_radius: f64) -> Result<f64> {
    let s = curve.curve_samples();
    if !(ball_radius >= 0.0) {
        return Err(Error::invalid("ball radius must be nonnegative"));
    }
    check_window(&s, q)?;
    let full = gaussian_area_samples(&s, q)?;
    if ball_radius >= q.radius() {
        return Ok(full.value);
    }
    if ball_radius == 0.0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (a, b) in candidate_segments(&s, q, ball_radius) {
        total += clipped_segment(q, a, b, ball_radius);
    }
    if let Some(tails) = s.tails {
        for ray in tails {
            total += ray_integral(q, &ray, Some(ball_radius));
        }
    }
    Ok(total.min(full.value))
}

pub fn gaussian_area_samples(s: &CurveSamples, q: &GaussianQuery) -> Result<GaussianValue> {
    check_window(s, q)?;
    let r = q.radius();
    let r2 = r * r;
    let mut total = 0.0;
    let mut dropped = 0.0;
    let (lo, hi) = index_window(s, q, r);
    let n = s.points.len();
    let m = if s.closed { n } else { n - 1 };
    for i in 0..m {
        let (a, b) = (s.points[i], s.points[(i + 1) % n]);
        let len = (b - a).norm();
        if i < lo || i >= hi || segment_distance_sq(q.center, a, b) > r2 {
            dropped += len;
            continue;
        }
        total += 0.5 * len * (q.weight(a) + q.weight(b));
    }
    if let Some(tails) = s.tails {
        for ray in tails {
            total += ray_integral(q, &ray, None);
        }
        // Euler-Maclaurin correction where the trapezoid rule meets the exact
        // tails: -(h^2 / 12) (f'(end) - f'(start)) in arc length.
        let ds = |x: Vec2, dir: Vec2| -q.weight(x) * (x - q.center).dot(&dir) / (2.0 * q.t);
        let (first, last) = (s.points[0], s.points[n - 1]);
        let (h0, h1) = ((s.points[1] - first).norm(), (last - s.points[n - 2]).norm());
        total -= h1 * h1 / 12.0 * ds(last, tails[1].dir);
        total += h0 * h0 / 12.0 * ds(first, -tails[0].dir);
    }
    let cutoff = (4.0 * PI * q.t).sqrt().recip() * (-q.truncation * q.truncation / 4.0).exp();
    Ok(GaussianValue { value: total, truncation_bound: cutoff * dropped })
}

fn check_window(s: &CurveSamples, q: &GaussianQuery) -> Result<()> {
    if s.points.len() < 2 {
        return Err(Error::invalid("curve has fewer than two samples"));
    }
    if !s.closed && s.tails.is_none() {
        let r = q.radius();
        let n = s.points.len();
        for end in [s.points[0], s.points[n - 1]] {
            if (end - q.center).norm() < r {
                return Err(Error::WindowTooSmall(format!(
                    "open end at ({:.3}, {:.3}) lies inside the truncation radius {r:.3}",
                    end.x, end.y
                )));
            }
        }
    }
    Ok(())
}

/// Segment index range that can meet the ball of radius `r` (x-monotone
/// samples only; everything otherwise).
fn index_window(s: &CurveSamples, q: &GaussianQuery, r: f64) -> (usize, usize) {
    let n = s.points.len();
    let m = if s.closed { n } else { n - 1 };
    if !s.x_monotone {
        return (0, m);
    }
    let lo = s.points.partition_point(|p| p.x < q.center.x - r).saturating_sub(1);
    let hi = s.points.partition_point(|p| p.x <= q.center.x + r).min(m);
    (lo, hi.max(lo))
}

fn candidate_segments<'a>(s: &'a CurveSamples, q: &GaussianQuery, r: f64) -> impl Iterator<Item = (Vec2, Vec2)> + 'a {
    let (lo, hi) = index_window(s, q, r);
    let n = s.points.len();
    let r2 = r * r;
    let c = q.center;
    (lo..hi)
        .map(move |i| (s.points[i], s.points[(i + 1) % n]))
        .filter(move |(a, b)| segment_distance_sq(c, *a, *b) <= r2)
}

fn segment_distance_sq(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let e = b - a;
    let l2 = e.norm_squared();
    let tau = if l2 > 0.0 { ((p - a).dot(&e) / l2).clamp(0.0, 1.0) } else { 0.0 };
    (a + e * tau - p).norm_squared()
}

/// Parameter interval of `a + tau (b - a)` inside the ball, clipped to [0, 1].
fn clip_to_ball(c: Vec2, a: Vec2, b: Vec2, r: f64) -> Option<(f64, f64)> {
    let e = b - a;
    let f = a - c;
    let (qa, qb, qc) = (e.norm_squared(), 2.0 * f.dot(&e), f.norm_squared() - r * r);
    if qa == 0.0 {
        return None;
    }
    let disc = qb * qb - 4.0 * qa * qc;
    if disc < 0.0 {
        return None;
    }
    let sq = disc.sqrt();
    let t0 = ((-qb - sq) / (2.0 * qa)).max(0.0);
    let t1 = ((-qb + sq) / (2.0 * qa)).min(1.0);
    (t1 > t0).then_some((t0, t1))
}

/// Integral over the part of segment `ab` inside the ball of the linear
/// interpolant of the endpoint weights.
fn clipped_segment(q: &GaussianQuery, a: Vec2, b: Vec2, r: f64) -> f64 {
    let Some((t0, t1)) = clip_to_ball(q.center, a, b, r) else {
        return 0.0;
    };
    let (wa, wb) = (q.weight(a), q.weight(b));
    let len = (b - a).norm();
    let w = |t: f64| wa + (wb - wa) * t;
    0.5 * len * (t1 - t0) * (w(t0) + w(t1))
}

/// Exact Gaussian integral along a ray, optionally restricted to a ball.
fn ray_integral(q: &GaussianQuery, ray: &Ray, ball: Option<f64>) -> f64 {
    let d = ray.origin - q.center;
    let a = ray.dir.dot(&d);
    let perp2 = (d.norm_squared() - a * a).max(0.0);
    let scale = 2.0 * q.t.sqrt();
    let pref = 0.5 * (-perp2 / (4.0 * q.t)).exp();
    match ball {
        None => pref * libm::erfc(a / scale),
        Some(r) => {
            // |origin + s dir - P|^2 = (s + a)^2 + perp2 <= r^2
            let h2 = r * r - perp2;
            if h2 <= 0.0 {
                return 0.0;
            }
            let h = h2.sqrt();
            let lo = (-h).max(a);
            let hi = h;
            if hi <= lo {
                return 0.0;
            }
            pref * (libm::erf(hi / scale) - libm::erf(lo / scale))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FarField, GraphHypersurface, Grid1D, PolylineCurve, RegularCone};
    use proptest::prelude::*;

    fn line(h: f64, half: f64) -> GraphHypersurface {
        let grid = Grid1D::symmetric(half, h).unwrap();
        GraphHypersurface::from_fn(grid, |_| 0.0, RegularCone::flat(), FarField::Cone, 1e-12).unwrap()
    }

    #[test]
    fn flat_line_normalization() {
        let g = line(0.05, 10.0);
        for k in -12..=12 {
            let t = (k as f64 * 0.5).exp();
            for px in [-3.0, 0.0, 2.5] {
                let q = GaussianQuery::new(Vec2::new(px, 0.0), t).unwrap();
                let f = gaussian_area(&g, &q).unwrap();
                assert!((f.value - 1.0).abs() < 1e-6, "t = {t}, F = {}", f.value);
            }
        }
    }

    #[test]
    fn circle_closed_form() {
        let r = 1.3;
        let c = PolylineCurve::circle(Vec2::zeros(), r, 2048).unwrap();
        let t = r * r / 2.0;
        let f = gaussian_area(&c, &GaussianQuery::new(Vec2::zeros(), t).unwrap()).unwrap();
        let want = (2.0 * PI / std::f64::consts::E).sqrt();
        assert!((f.value - want).abs() < 1e-5);
        for t in [0.1, 0.5, 3.0] {
            let f = gaussian_area(&c, &GaussianQuery::new(Vec2::zeros(), t).unwrap()).unwrap();
            let want = r * (PI / t).sqrt() * (-r * r / (4.0 * t)).exp();
            assert!((f.value - want).abs() < 1e-5 * (1.0 + want));
        }
    }

    #[test]
    fn wedge_at_vertex_is_one() {
        for m in [0.3, 1.0, 2.0] {
            let grid = Grid1D::symmetric(5.0, 0.01).unwrap();
            let g = GraphHypersurface::from_fn(
                grid,
                |x| m * x.abs(),
                RegularCone::symmetric(m).unwrap(),
                FarField::Cone,
                1e-9,
            )
            .unwrap();
            for t in [0.01, 1.0, 100.0] {
                let f = gaussian_area(&g, &GaussianQuery::new(Vec2::zeros(), t).unwrap()).unwrap();
                assert!((f.value - 1.0).abs() < 1e-6, "m = {m}, t = {t}: {}", f.value);
            }
        }
    }

    #[test]
    fn rejects_bad_queries_and_small_windows() {
        assert!(GaussianQuery::new(Vec2::zeros(), 0.0).is_err());
        assert!(GaussianQuery::new(Vec2::zeros(), -1.0).is_err());
        let pts = vec![Vec2::new(-1.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0)];
        let s = CurveSamples { points: pts, closed: false, tails: None, x_monotone: true };
        let q = GaussianQuery::new(Vec2::zeros(), 1.0).unwrap();
        assert!(matches!(gaussian_area_samples(&s, &q), Err(Error::WindowTooSmall(_))));
    }

    #[test]
    fn localized_area_limits() {
        let g = line(0.05, 10.0);
        let q = GaussianQuery::new(Vec2::new(0.3, 0.0), 0.7).unwrap();
        let full = localized_gaussian_area(&g, &q, 8.0 * 0.7f64.sqrt()).unwrap();
        assert!((full - 1.0).abs() < 1e-6);
        let tiny = localized_gaussian_area(&g, &q, 1e-6).unwrap();
        assert!(tiny < 1e-6);
        assert_eq!(localized_gaussian_area(&g, &q, 0.0).unwrap(), 0.0);
        // exact value for a line through the center: erf(rho / 2 sqrt t)
        let rho = 1.1;
        let loc = localized_gaussian_area(&g, &q, rho).unwrap();
        assert!((loc - libm::erf(rho / (2.0 * 0.7f64.sqrt()))).abs() < 1e-4);
    }

    #[test]
    fn localized_area_on_tails() {
        // query near the window end so the ball reaches into the analytic ray
        let g = line(0.02, 2.0);
        let q = GaussianQuery::new(Vec2::new(1.5, 0.0), 0.5).unwrap();
        let rho = 1.5;
        let loc = localized_gaussian_area(&g, &q, rho).unwrap();
        assert!((loc - libm::erf(rho / (2.0 * 0.5f64.sqrt()))).abs() < 1e-4);
    }

    #[test]
    fn small_lipschitz_local_graph() {
        // delta-Lipschitz bump graph: localized area stays below sqrt(1 + 4 delta^2)
        let delta: f64 = 0.05;
        let grid = Grid1D::symmetric(10.0, 0.01).unwrap();
        let g = GraphHypersurface::from_fn(
            grid,
            |x| delta * (x.sin() + 0.5 * (2.0 * x).cos()) / 2.0,
            RegularCone::flat(),
            FarField::Cone,
            1.0,
        )
        .unwrap();
        for (px, t) in [(0.0, 0.1), (1.0, 1.0), (-2.0, 0.5)] {
            let q = GaussianQuery::new(Vec2::new(px, 0.0), t).unwrap();
            let v = localized_gaussian_area(&g, &q, 2.0 * t.sqrt()).unwrap();
            assert!(v <= (1.0 + 4.0 * delta * delta).sqrt());
        }
    }

    proptest! {
        #[test]
        fn localized_never_exceeds_full(px in -2.0f64..2.0, py in -1.0f64..1.0, t in 0.05f64..4.0, rho in 0.0f64..20.0) {
            let grid = Grid1D::symmetric(6.0, 0.05).unwrap();
            let g = GraphHypersurface::from_fn(grid, |x| 0.4 * (x * x + 1.0).sqrt(), RegularCone::symmetric(0.4).unwrap(), FarField::Cone, 0.1).unwrap();
            let q = GaussianQuery::new(Vec2::new(px, py), t).unwrap();
            let full = gaussian_area(&g, &q).unwrap().value;
            let loc = localized_gaussian_area(&g, &q, rho).unwrap();
            prop_assert!(loc <= full);
            prop_assert!(loc >= 0.0);
        }

        #[test]
        fn scale_invariance(lam in 0.2f64..5.0, px in -1.0f64..1.0, t in 0.1f64..3.0) {
            let c = PolylineCurve::circle(Vec2::new(0.2, -0.1), 1.0, 300).unwrap();
            let q = GaussianQuery::new(Vec2::new(px, 0.3), t).unwrap();
            let f0 = gaussian_area(&c, &q).unwrap().value;
            let f1 = gaussian_area(&c.scaled(lam).unwrap(), &q.scaled(lam)).unwrap().value;
            prop_assert!((f0 - f1).abs() <= 1e-10 * f0.max(1e-300));
        }
    }
}
