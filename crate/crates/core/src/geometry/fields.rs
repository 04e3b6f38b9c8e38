use std::ops::Range;

use super::Vec2;

/// Which unit normal a geometry record uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalConvention {
    /// Graphs: positive last component.
    GraphUp,
    /// Open polylines: tangent rotated by +90 degrees.
    Left,
    /// Closed polylines: pointing out of the bounded region.
    Outward,
    Inward,
}

impl NormalConvention {
    pub fn as_str(self) -> &'static str {
        match self {
            NormalConvention::GraphUp => "up",
            NormalConvention::Left => "left",
            NormalConvention::Outward => "outward",
            NormalConvention::Inward => "inward",
        }
    }
}

/// Pointwise geometry of a sampled curve in its chart.
///
/// For graphs the chart coordinate is `x`; for polylines it is the cumulative
/// chord length, so `metric == 1` and `christoffel == 0` there. Nodes outside
/// `interior` were computed with one-sided stencils (graphs) or sit on an
/// asymptotic ray (open polylines) and are excluded from sup norms.
#[derive(Debug, Clone)]
pub struct GeometryFields {
    pub points: Vec<Vec2>,
    pub param: Vec<f64>,
    pub metric: Vec<f64>,
    pub inv_metric: Vec<f64>,
    pub christoffel: Vec<f64>,
    pub second_form: Vec<f64>,
    pub mean_curvature: Vec<f64>,
    pub norm_a: Vec<f64>,
    pub normal: Vec<Vec2>,
    /// Length carried by each node (trapezoid weights).
    pub element: Vec<f64>,
    pub interior: Range<usize>,
    /// Total chart length for closed curves.
    pub period: Option<f64>,
    pub convention: NormalConvention,
}

impl GeometryFields {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.period.is_some()
    }

    /// `sup |A|` over interior nodes.
    pub fn sup_norm_a(&self) -> f64 {
        self.norm_a[self.interior.clone()].iter().fold(0.0, |m, &a| m.max(a))
    }

    pub fn sup_abs_h(&self) -> f64 {
        self.mean_curvature[self.interior.clone()].iter().fold(0.0, |m, &a| m.max(a.abs()))
    }

    /// `|A|^2` at every node.
    pub fn norm_a_squared(&self) -> Vec<f64> {
        self.norm_a.iter().map(|a| a * a).collect()
    }

    /// Arc-length derivative of a nodal scalar field.
    pub fn arc_derivative(&self, f: &[f64]) -> Vec<f64> {
        let d = arc_derivative(&self.param, self.period, f);
        d.iter().zip(&self.metric).map(|(d, g)| d / g.sqrt()).collect()
    }

    /// Arc-length gradient of the curvature scalar `A_11 g^11`.
    pub fn curvature_gradient(&self) -> Vec<f64> {
        let k: Vec<f64> = self.second_form.iter().zip(&self.inv_metric).map(|(a, gi)| a * gi).collect();
        self.arc_derivative(&k)
    }

    /// `X . N` at every node.
    pub fn support(&self) -> Vec<f64> {
        self.points.iter().zip(&self.normal).map(|(x, n)| x.dot(n)).collect()
    }
}

/// Derivative at `at` of the quadratic through three samples.
pub fn deriv3(xs: [f64; 3], fs: [f64; 3], at: f64) -> f64 {
    let [x0, x1, x2] = xs;
    let [f0, f1, f2] = fs;
    let l0 = ((at - x1) + (at - x2)) / ((x0 - x1) * (x0 - x2));
    let l1 = ((at - x0) + (at - x2)) / ((x1 - x0) * (x1 - x2));
    let l2 = ((at - x0) + (at - x1)) / ((x2 - x0) * (x2 - x1));
    f0 * l0 + f1 * l1 + f2 * l2
}

/// Chart derivative of `f` sampled at nodes `param` (second order, one-sided
/// at the ends of open curves, periodic when `period` is given).
pub fn arc_derivative(param: &[f64], period: Option<f64>, f: &[f64]) -> Vec<f64> {
    let n = param.len();
    assert_eq!(n, f.len());
    if n < 3 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| match period {
            Some(len) => {
                let (im, ip) = ((i + n - 1) % n, (i + 1) % n);
                let mut pm = param[im];
                let mut pp = param[ip];
                if i == 0 {
                    pm -= len;
                }
                if i == n - 1 {
                    pp += len;
                }
                deriv3([pm, param[i], pp], [f[im], f[i], f[ip]], param[i])
            }
            None => {
                let c = i.clamp(1, n - 2);
                deriv3([param[c - 1], param[c], param[c + 1]], [f[c - 1], f[c], f[c + 1]], param[i])
            }
        })
        .collect()
}

/// A half-line `origin + s * dir`, `s >= 0`, with `dir` a unit vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vec2,
    pub dir: Vec2,
}

/// A sampled curve with optional analytic far-field rays, the common input of
/// the Gaussian quadratures and the closest-point deviation search.
#[derive(Debug, Clone)]
pub struct CurveSamples {
    pub points: Vec<Vec2>,
    pub closed: bool,
    /// Rays continuing the curve past its first and last sample.
    pub tails: Option<[Ray; 2]>,
    /// Samples have strictly increasing first coordinate.
    pub x_monotone: bool,
}

impl CurveSamples {
    pub fn segments(&self) -> impl Iterator<Item = (Vec2, Vec2)> + '_ {
        let n = self.points.len();
        let m = if self.closed { n } else { n.saturating_sub(1) };
        (0..m).map(move |i| (self.points[i], self.points[(i + 1) % n]))
    }

    /// `sup |X - P|` over the stored samples.
    pub fn max_distance(&self, p: Vec2) -> f64 {
        self.points.iter().fold(0.0, |m, x| m.max((x - p).norm()))
    }
}
