//! Self-expanders `H = X.N / 2` over 1-D cones and rotationally symmetric
//! cones, their residual certification, and the stability quadratic form.
//!
//! For a graph `u` over the line the equation reduces to
//! `u'' = (u - x u') (1 + u'^2) / 2`. Writing `w = u - x u'` gives
//! `w' = -x (1 + u'^2) w / 2`, so `w` decays like a Gaussian and the slope
//! settles exponentially fast; shooting on `u(0)` (and `u'(0)` for
//! asymmetric cones) matches the cone slopes at `x = X_max`.
//!
//! For a rotationally symmetric graph `z = f(r)` over `R^n` the profile
//! equation is `f'' = (1 + f'^2) [(f - r f') / 2 - (n - 1) f' / r]`, regular
//! at the axis with `f''(0) = f(0) / 2n`.

pub mod io;
mod rk45;
mod shooting;
mod stability;

pub use rk45::{integrate, integrate_nodes, Tolerance};
pub use shooting::{
    graph1d_rhs, resampled_rotsym_residual, solve_expander_graph1d, solve_expander_graph1d_all, solve_expander_rotsym,
    ShootingConfig,
};
pub use stability::{mass, quadratic_form, random_bumps, rayleigh_min, Bump, QuadraticFormReport, RayleighReport};

use crate::geometry::{FarField, Geometry, GraphHypersurface, Grid1D, ProfileFn, RegularCone};
use crate::{Error, Result};

/// Which family a solution belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpanderKind {
    /// Graph over the line, sampled on `[-X_max, X_max]`.
    Graph1d,
    /// Profile `z = f(r)` of a rotationally symmetric hypersurface of
    /// dimension `dim`, sampled on `[0, X_max]`.
    Rotsym { dim: usize },
}

/// A sampled self-expander with its certification data.
#[derive(Debug, Clone)]
pub struct ExpanderSolution {
    pub kind: ExpanderKind,
    pub cone: RegularCone,
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
    /// `|H - X.N / 2|` at the samples, with `u''` from differentiating the
    /// sampled `u'` rather than from the equation.
    pub residual: Vec<f64>,
    pub residual_sup: f64,
    pub sup_a: f64,
    /// Slope mismatch at `-X_max` and `X_max` (only the second is used for
    /// profiles), measured against the cone's far-field expansion.
    pub slope_error: [f64; 2],
    /// `(u(0), u'(0))`.
    pub shooting: [f64; 2],
    pub x_max: f64,
    pub tol: f64,
    /// `|u(0; 2 X_max) - u(0; X_max)|`, when checked.
    pub refinement_shift: Option<f64>,
}

fn hermite(x0: f64, x1: f64, u0: f64, u1: f64, d0: f64, d1: f64, x: f64) -> (f64, f64) {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let (s2, s3) = (s * s, s * s * s);
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    let value = h00 * u0 + h10 * h * d0 + h01 * u1 + h11 * h * d1;
    let dh00 = (6.0 * s2 - 6.0 * s) / h;
    let dh10 = 3.0 * s2 - 4.0 * s + 1.0;
    let dh01 = (-6.0 * s2 + 6.0 * s) / h;
    let dh11 = 3.0 * s2 - 2.0 * s;
    let slope = dh00 * u0 + dh10 * d0 + dh01 * u1 + dh11 * d1;
    (value, slope)
}

impl ExpanderSolution {
    /// Height and slope at `x` by cubic Hermite interpolation; linear
    /// continuation beyond the stored window. Profiles are evaluated at `|x|`.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let (q, sign) = match self.kind {
            ExpanderKind::Rotsym { .. } => (x.abs(), x.signum()),
            ExpanderKind::Graph1d => (x, 1.0),
        };
        let n = self.x.len();
        let (first, last) = (self.x[0], self.x[n - 1]);
        let (v, d) = if q <= first {
            (self.u[0] + self.du[0] * (q - first), self.du[0])
        } else if q >= last {
            (self.u[n - 1] + self.du[n - 1] * (q - last), self.du[n - 1])
        } else {
            let i = self.x.partition_point(|&s| s <= q).clamp(1, n - 1) - 1;
            hermite(self.x[i], self.x[i + 1], self.u[i], self.u[i + 1], self.du[i], self.du[i + 1], q)
        };
        (v, d * sign)
    }

    /// `sqrt(t) Gamma(x / sqrt(t))` sampled on `grid`, pinned to the same
    /// self-similar rule at the ends. The end values must lie within
    /// `farfield_tol` of the cone.
    pub fn graph_at_time(&self, grid: Grid1D, t: f64, farfield_tol: f64) -> Result<GraphHypersurface> {
        if !matches!(self.kind, ExpanderKind::Graph1d) {
            return Err(Error::invalid("only 1-D expanders are graphs over the line"));
        }
        if !(t > 0.0) {
            return Err(Error::invalid("time must be positive"));
        }
        let s = t.sqrt();
        let far = FarField::Expander(std::sync::Arc::new(self.clone()));
        GraphHypersurface::from_fn(grid, |x| s * self.value(x / s), self.cone, far, farfield_tol)
    }

    pub fn u0(&self) -> f64 {
        self.shooting[0]
    }

    /// Whether the certification thresholds hold.
    pub fn certified(&self, slope_tol: f64) -> bool {
        self.residual_sup <= self.tol && self.slope_error.iter().all(|e| *e <= slope_tol)
    }
}

impl ProfileFn for ExpanderSolution {
    fn value(&self, x: f64) -> f64 {
        self.eval(x).0
    }

    fn slope(&self, x: f64) -> f64 {
        self.eval(x).1
    }
}

/// Pointwise `|H - X.N / 2|` of a geometry.
#[derive(Debug, Clone)]
pub struct ResidualField {
    pub values: Vec<f64>,
    /// Supremum over interior nodes.
    pub sup: f64,
}

/// Residual of the expander equation for a discrete curve, computed from its
/// finite-difference (graph) or Menger (polyline) geometry.
pub fn expander_residual(g: &Geometry) -> Result<ResidualField> {
    let f = g.fields()?;
    let support = f.support();
    let values: Vec<f64> = f.mean_curvature.iter().zip(&support).map(|(h, s)| (h - 0.5 * s).abs()).collect();
    let sup = values[f.interior.clone()].iter().fold(0.0, |m: f64, v| m.max(*v));
    Ok(ResidualField { values, sup })
}

/// Residual of the expander equation for the rotationally symmetric
/// hypersurface with profile samples `f` on the uniform grid `r` starting at
/// the axis, from second-order central differences. The outermost node is
/// omitted from the supremum.
pub fn rotsym_expander_residual(r: &[f64], f: &[f64], dim: usize) -> Result<ResidualField> {
    let n = r.len();
    if n < 5 || f.len() != n {
        return Err(Error::GridTooSmall { nodes: n.min(f.len()), min: 5 });
    }
    if r[0] != 0.0 {
        return Err(Error::invalid("profile grid must start on the axis"));
    }
    let h = r[1] - r[0];
    let mut values = vec![0.0; n];
    let nn = dim as f64;
    for i in 0..n - 1 {
        // even reflection across the axis
        let fm = if i == 0 { f[1] } else { f[i - 1] };
        let d1 = (f[i + 1] - fm) / (2.0 * h);
        let d2 = (f[i + 1] - 2.0 * f[i] + fm) / (h * h);
        let w = (1.0 + d1 * d1).sqrt();
        let hmean = if i == 0 { nn * d2 } else { d2 / (w * w * w) + (nn - 1.0) * d1 / (r[i] * w) };
        let support = (f[i] - r[i] * d1) / w;
        values[i] = (hmean - 0.5 * support).abs();
    }
    let sup = values[..n - 1].iter().fold(0.0, |m: f64, v| m.max(*v));
    Ok(ResidualField { values, sup })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{PolylineCurve, Vec2};

    #[test]
    fn flat_line_through_origin_has_zero_residual() {
        let grid = Grid1D::symmetric(5.0, 0.1).unwrap();
        let g = GraphHypersurface::from_fn(grid, |_| 0.0, RegularCone::flat(), FarField::Cone, 0.0).unwrap();
        assert_eq!(expander_residual(&Geometry::Graph(g)).unwrap().sup, 0.0);
    }

    #[test]
    fn offset_line_has_residual_half_offset() {
        let grid = Grid1D::symmetric(5.0, 0.1).unwrap();
        let g = GraphHypersurface::from_fn(grid, |_| 0.6, RegularCone::flat(), FarField::Cone, 1.0).unwrap();
        let r = expander_residual(&Geometry::Graph(g)).unwrap();
        let bad: Vec<_> = r.values.iter().enumerate().filter(|(_, v)| (*v - 0.3).abs() >= 1e-12).collect();
        assert!(bad.is_empty(), "{bad:?}");
    }

    #[test]
    fn circle_residual_matches_closed_form() {
        // outward normal: H = -1/R, X.N = R
        let c = PolylineCurve::circle(Vec2::zeros(), 2.0, 512).unwrap();
        let r = expander_residual(&Geometry::Polyline(c)).unwrap();
        assert!((r.sup - 1.5).abs() < 1e-4);
    }

    #[test]
    fn flat_profile_residual() {
        let r: Vec<f64> = (0..50).map(|k| k as f64 * 0.1).collect();
        let res = rotsym_expander_residual(&r, &vec![0.0; 50], 3).unwrap();
        assert_eq!(res.sup, 0.0);
        let res = rotsym_expander_residual(&r, &vec![1.0; 50], 3).unwrap();
        assert!((res.sup - 0.5).abs() < 1e-15);
    }
}
