//! Discrete curves and their pointwise differential geometry.
//!
//! Two carriers are supported: [`GraphHypersurface`], a height function on a
//! uniform grid with a cone-matched far field, and [`PolylineCurve`], an
//! embedded planar polygon (closed, or open with two asymptotic rays). Both
//! produce a [`GeometryFields`] record in their natural chart.
//!
//! Normal conventions: graphs use the upward normal, open polylines the left
//! normal of the traversal direction (which agrees with the graph convention
//! for curves traversed left to right), closed polylines the outward normal
//! unless [`Orientation::Inward`] is requested. The second fundamental form is
//! `A_ij = <d_ij X, N>` and `H = g^ij A_ij`, so the mean curvature vector is
//! `H N` in every case.

mod cone;
mod fields;
mod graph;
pub mod io;
mod normal_graph;
mod polyline;

pub use cone::RegularCone;
pub use fields::{arc_derivative, deriv3, CurveSamples, GeometryFields, NormalConvention, Ray};
pub use graph::{FarField, GraphHypersurface, Grid1D, ProfileFn, MIN_NODES};
pub use normal_graph::{
    closest_point_deviation, normal_graph_embed, normal_graph_metric, radon_nikodym_density, DeviationField,
    NormalGraphField, DEFAULT_SMALLNESS, DENSITY_CONSTANT,
};
pub use polyline::{
    find_self_intersection, menger_curvature, CurveEnds, Orientation, PolylineCurve, DEFAULT_ANGLE_TOL,
};

/// Points and vectors in the plane.
pub type Vec2 = nalgebra::Vector2<f64>;

/// Anything that can be viewed as a sampled planar curve.
pub trait AsCurve {
    fn curve_samples(&self) -> CurveSamples;
}

/// A geometry snapshot of either representation.
#[derive(Debug, Clone)]
pub enum Geometry {
    Graph(GraphHypersurface),
    Polyline(PolylineCurve),
}

impl Geometry {
    pub fn fields(&self) -> crate::Result<GeometryFields> {
        match self {
            Geometry::Graph(g) => g.graph_geometry(),
            Geometry::Polyline(p) => p.polyline_geometry(),
        }
    }

    pub fn points(&self) -> Vec<Vec2> {
        match self {
            Geometry::Graph(g) => g.points(),
            Geometry::Polyline(p) => p.vertices().to_vec(),
        }
    }

    /// Uniform dilation about the origin.
    pub fn scaled(&self, factor: f64) -> crate::Result<Geometry> {
        Ok(match self {
            Geometry::Graph(g) => Geometry::Graph(g.scaled(factor)?),
            Geometry::Polyline(p) => Geometry::Polyline(p.scaled(factor)?),
        })
    }

    /// Characteristic node spacing.
    pub fn spacing(&self) -> f64 {
        match self {
            Geometry::Graph(g) => g.grid().h(),
            Geometry::Polyline(p) => p.min_edge_length(),
        }
    }
}

impl AsCurve for Geometry {
    fn curve_samples(&self) -> CurveSamples {
        match self {
            Geometry::Graph(g) => g.curve_samples(),
            Geometry::Polyline(p) => p.curve_samples(),
        }
    }
}

impl From<GraphHypersurface> for Geometry {
    fn from(g: GraphHypersurface) -> Self {
        Geometry::Graph(g)
    }
}

impl From<PolylineCurve> for Geometry {
    fn from(p: PolylineCurve) -> Self {
        Geometry::Polyline(p)
    }
}
