use std::fmt;
use std::sync::Arc;

use super::fields::{CurveSamples, GeometryFields, NormalConvention, Ray};
use super::{AsCurve, RegularCone, Vec2};
use crate::{Error, Result};

/// Smallest grid the second-order stencils (including one-sided second
/// differences at the ends) can work with.
pub const MIN_NODES: usize = 5;

/// Uniform grid on `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_nodes: usize,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_nodes: usize) -> Result<Self> {
        if n_nodes < MIN_NODES {
            return Err(Error::GridTooSmall { nodes: n_nodes, min: MIN_NODES });
        }
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::invalid(format!("grid bounds [{x_min}, {x_max}] are not increasing")));
        }
        Ok(Grid1D { x_min, x_max, n_nodes })
    }

    /// Symmetric grid `[-half_width, half_width]` with spacing close to `h`
    /// and an odd node count, so that `x = 0` is a node.
    pub fn symmetric(half_width: f64, h: f64) -> Result<Self> {
        if !(h > 0.0 && half_width > 0.0) {
            return Err(Error::invalid("grid spacing and half-width must be positive"));
        }
        let half = (half_width / h).round().max(2.0) as usize;
        Grid1D::new(-half_width, half_width, 2 * half + 1)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn h(&self) -> f64 {
        (self.x_max - self.x_min) / (self.n_nodes - 1) as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        if i + 1 == self.n_nodes {
            self.x_max
        } else {
            self.x_min + i as f64 * self.h()
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.n_nodes).map(|i| self.x(i)).collect()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Grid1D::new(self.x_min * factor, self.x_max * factor, self.n_nodes)
    }
}

/// A profile evaluated on the real line, used for self-similar far fields.
pub trait ProfileFn: Send + Sync + fmt::Debug {
    fn value(&self, x: f64) -> f64;
    fn slope(&self, x: f64) -> f64;
}

/// How the outermost nodes are pinned during evolution.
#[derive(Debug, Clone)]
pub enum FarField {
    /// `u = cone profile` at the ends.
    Cone,
    /// `u(x, t) = sqrt(t) * profile(x / sqrt(t))` at the ends.
    Expander(Arc<dyn ProfileFn>),
}

impl FarField {
    pub fn name(&self) -> &'static str {
        match self {
            FarField::Cone => "dirichlet_cone",
            FarField::Expander(_) => "dirichlet_expander",
        }
    }
}

/// Height function on a uniform grid, asymptotic to a 1-D cone.
#[derive(Debug, Clone)]
pub struct GraphHypersurface {
    grid: Grid1D,
    u: Vec<f64>,
    cone: RegularCone,
    far_field: FarField,
    farfield_tol: f64,
}

impl GraphHypersurface {
    /// Validated constructor. The end values must lie within `farfield_tol`
    /// of the cone profile.
    pub fn new(grid: Grid1D, u: Vec<f64>, cone: RegularCone, far_field: FarField, farfield_tol: f64) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::invalid(format!("{} height samples for a grid of {} nodes", u.len(), grid.len())));
        }
        if let Some(node) = u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        if !matches!(cone, RegularCone::Slopes1d { .. }) {
            return Err(Error::invalid("graphs over the line need a Slopes1d cone"));
        }
        cone.validate()?;
        let g = GraphHypersurface { grid, u, cone, far_field, farfield_tol };
        for i in [0, g.grid.len() - 1] {
            let x = g.grid.x(i);
            let gap = (g.u[i] - cone.profile(x)).abs();
            if gap > farfield_tol {
                return Err(Error::invalid(format!(
                    "end node x = {x} is {gap:e} from the cone (tolerance {farfield_tol:e})"
                )));
            }
        }
        Ok(g)
    }

    /// Graph of `f` over `grid`.
    pub fn from_fn(
        grid: Grid1D,
        f: impl Fn(f64) -> f64,
        cone: RegularCone,
        far_field: FarField,
        farfield_tol: f64,
    ) -> Result<Self> {
        let u = grid.nodes().into_iter().map(f).collect();
        Self::new(grid, u, cone, far_field, farfield_tol)
    }

    /// Same record with new heights; skips the far-field check (used by the
    /// steppers, which pin the ends themselves).
    pub(crate) fn with_heights(&self, u: Vec<f64>) -> Self {
        debug_assert_eq!(u.len(), self.u.len());
        GraphHypersurface { u, ..self.clone() }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn heights(&self) -> &[f64] {
        &self.u
    }

    pub fn cone(&self) -> &RegularCone {
        &self.cone
    }

    pub fn far_field(&self) -> &FarField {
        &self.far_field
    }

    pub fn farfield_tol(&self) -> f64 {
        self.farfield_tol
    }

    pub fn with_far_field(mut self, far_field: FarField) -> Self {
        self.far_field = far_field;
        self
    }

    /// Pinned value at `x` for time `t`; the self-similar rule degenerates to
    /// the cone at `t = 0`.
    pub fn boundary_value(&self, x: f64, t: f64) -> f64 {
        match &self.far_field {
            FarField::Cone => self.cone.profile(x),
            FarField::Expander(_) if t <= 0.0 => self.cone.profile(x),
            FarField::Expander(p) => {
                let s = t.sqrt();
                s * p.value(x / s)
            }
        }
    }

    pub fn points(&self) -> Vec<Vec2> {
        self.grid.nodes().into_iter().zip(&self.u).map(|(x, &u)| Vec2::new(x, u)).collect()
    }

    /// Largest discrete slope, including the cone slopes.
    pub fn lipschitz(&self) -> f64 {
        let h = self.grid.h();
        self.u.windows(2).map(|w| ((w[1] - w[0]) / h).abs()).fold(self.cone.lipschitz(), f64::max)
    }

    /// Dilation about the origin. The far-field rule is kept; callers that
    /// rescale a time-`t` snapshot evaluate it at time `t / factor^2`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid("scale factor must be positive"));
        }
        Ok(GraphHypersurface {
            grid: self.grid.scaled(factor)?,
            u: self.u.iter().map(|u| u * factor).collect(),
            cone: self.cone,
            far_field: self.far_field.clone(),
            farfield_tol: self.farfield_tol * factor,
        })
    }

    /// First and second derivatives by second-order central differences;
    /// one-sided second-order stencils at the two ends.
    pub fn derivatives(&self) -> (Vec<f64>, Vec<f64>) {
        let u = &self.u;
        let n = u.len();
        let h = self.grid.h();
        let mut d1 = vec![0.0; n];
        let mut d2 = vec![0.0; n];
        for i in 1..n - 1 {
            d1[i] = (u[i + 1] - u[i - 1]) / (2.0 * h);
            d2[i] = (u[i + 1] - 2.0 * u[i] + u[i - 1]) / (h * h);
        }
        d1[0] = (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * h);
        d1[n - 1] = (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * h);
        d2[0] = (2.0 * u[0] - 5.0 * u[1] + 4.0 * u[2] - u[3]) / (h * h);
        d2[n - 1] = (2.0 * u[n - 1] - 5.0 * u[n - 2] + 4.0 * u[n - 3] - u[n - 4]) / (h * h);
        (d1, d2)
    }

    /// Metric, Christoffel symbol, second fundamental form, mean curvature and
    /// normal at every node.
    pub fn graph_geometry(&self) -> Result<GeometryFields> {
        let n = self.u.len();
        if n < MIN_NODES {
            return Err(Error::GridTooSmall { nodes: n, min: MIN_NODES });
        }
        if let Some(node) = self.u.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { node });
        }
        let (d1, d2) = self.derivatives();
        Ok(fields_from_jets(&self.grid.nodes(), &self.u, &d1, &d2, self.grid.h()))
    }
}

/// Geometry of the graph of `u` from nodal jets `(u, u', u'')`.
pub(crate) fn fields_from_jets(x: &[f64], u: &[f64], d1: &[f64], d2: &[f64], h: f64) -> GeometryFields {
    let n = x.len();
    let mut f = GeometryFields {
        points: Vec::with_capacity(n),
        param: x.to_vec(),
        metric: Vec::with_capacity(n),
        inv_metric: Vec::with_capacity(n),
        christoffel: Vec::with_capacity(n),
        second_form: Vec::with_capacity(n),
        mean_curvature: Vec::with_capacity(n),
        norm_a: Vec::with_capacity(n),
        normal: Vec::with_capacity(n),
        element: Vec::with_capacity(n),
        interior: 1..n - 1,
        period: None,
        convention: NormalConvention::GraphUp,
    };
    for i in 0..n {
        let (p, q) = (d1[i], d2[i]);
        let g = 1.0 + p * p;
        let w = g.sqrt();
        let a = q / w;
        f.points.push(Vec2::new(x[i], u[i]));
        f.metric.push(g);
        f.inv_metric.push(1.0 / g);
        f.christoffel.push(p * q / g);
        f.second_form.push(a);
        f.mean_curvature.push(a / g);
        f.norm_a.push(a.abs() / g);
        f.normal.push(Vec2::new(-p, 1.0) / w);
        let weight = if i == 0 || i == n - 1 { 0.5 * h } else { h };
        f.element.push(weight * w);
    }
    f
}

impl AsCurve for GraphHypersurface {
    fn curve_samples(&self) -> CurveSamples {
        let points = self.points();
        let n = points.len();
        let (m_minus, m_plus) = match self.cone {
            RegularCone::Slopes1d { m_minus, m_plus } => (m_minus, m_plus),
            RegularCone::Rotsym { .. } => unreachable!("validated at construction"),
        };
        let left = Vec2::new(-1.0, -m_minus).normalize();
        let right = Vec2::new(1.0, m_plus).normalize();
        CurveSamples {
            tails: Some([Ray { origin: points[0], dir: left }, Ray { origin: points[n - 1], dir: right }]),
            points,
            closed: false,
            x_monotone: true,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn graph(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> GraphHypersurface {
        let grid = Grid1D::new(lo, hi, n).unwrap();
        GraphHypersurface::from_fn(grid, f, RegularCone::flat(), FarField::Cone, f64::INFINITY).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(Grid1D::new(0.0, 1.0, 4), Err(Error::GridTooSmall { .. })));
        assert!(Grid1D::new(1.0, 1.0, 10).is_err());
        let g = Grid1D::symmetric(20.0, 0.1).unwrap();
        assert_eq!(g.len(), 401);
        assert_eq!(g.x(200), 0.0);
        assert!((g.h() - 0.1).abs() < 1e-15);
    }

    #[test]
    fn flat_graph_has_zero_curvature() {
        let f = graph(|_| 0.0, -3.0, 3.0, 31).graph_geometry().unwrap();
        assert!(f.second_form.iter().all(|a| *a == 0.0));
        assert!(f.mean_curvature.iter().all(|a| *a == 0.0));
        assert!(f.metric.iter().all(|g| *g == 1.0));
        assert!(f.normal.iter().all(|n| *n == Vec2::new(0.0, 1.0)));
    }

    #[test]
    fn affine_graph_is_flat() {
        let a = 0.7;
        let f = graph(|x| a * x + 2.0, -3.0, 3.0, 31).graph_geometry().unwrap();
        for i in 0..f.len() {
            assert!(f.second_form[i].abs() < 1e-12);
            assert!((f.metric[i] - (1.0 + a * a)).abs() < 1e-12);
        }
    }

    #[test]
    fn parabola_matches_closed_form() {
        // A_11 = u''/sqrt(1+u'^2), H = u''/(1+u'^2)^{3/2}
        let f = graph(|x| 0.5 * x * x, -1.0, 1.0, 201).graph_geometry().unwrap();
        assert!((f.second_form[100] - 1.0).abs() < 1e-10);
        assert!((f.mean_curvature[100] - 1.0).abs() < 1e-10);
        let last = 200;
        assert!((f.second_form[last] - 1.0 / 2f64.sqrt()).abs() < 1e-6);
        assert!((f.mean_curvature[last] - 1.0 / (2.0 * 2f64.sqrt())).abs() < 1e-6);
    }

    #[test]
    fn rejects_non_finite_and_far_field_mismatch() {
        let grid = Grid1D::new(-1.0, 1.0, 11).unwrap();
        let mut u = vec![0.0; 11];
        u[3] = f64::NAN;
        let e = GraphHypersurface::new(grid, u, RegularCone::flat(), FarField::Cone, 1.0);
        assert!(matches!(e, Err(Error::NonFinite { node: 3 })));
        let e = GraphHypersurface::new(grid, vec![1.0; 11], RegularCone::flat(), FarField::Cone, 0.1);
        assert!(e.is_err());
    }

    #[test]
    fn christoffel_closed_form() {
        let f = graph(|x| x.sin(), -2.0, 2.0, 401).graph_geometry().unwrap();
        for i in f.interior.clone() {
            let x = f.param[i];
            let (p, q) = (x.cos(), -x.sin());
            let want = p * q / (1.0 + p * p);
            assert!((f.christoffel[i] - want).abs() < 1e-4);
        }
    }

    proptest! {
        #[test]
        fn scaling_divides_curvature(lam in 0.1f64..10.0, a in -0.5f64..0.5, k in 0.5f64..2.0) {
            let g = graph(|x| a * (k * x).sin(), -3.0, 3.0, 61);
            let f0 = g.graph_geometry().unwrap();
            let f1 = g.scaled(lam).unwrap().graph_geometry().unwrap();
            for i in f0.interior.clone() {
                let want = f0.norm_a[i] / lam;
                prop_assert!((f1.norm_a[i] - want).abs() <= 1e-12 * (1.0 + want.abs()) / lam.min(1.0));
                prop_assert!((f1.normal[i] - f0.normal[i]).norm() <= 1e-12);
            }
        }
    }
}
