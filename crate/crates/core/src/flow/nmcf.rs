use crate::geometry::{closest_point_deviation, AsCurve, Geometry};
use crate::{Error, Result};

use super::deviation::Window;

/// A snapshot divided by `sqrt(t)`, in logarithmic time `s = ln t`.
#[derive(Debug, Clone)]
pub struct Rescaled {
    pub geometry: Geometry,
    pub t: f64,
    pub s: f64,
    /// `sup |A|` of the rescaled geometry, equal to `sqrt(t) sup |A|`.
    pub sup_a: f64,
}

/// Rescale a time-`t` snapshot to the normalized flow.
pub fn nmcf_rescale(geometry: &Geometry, t: f64) -> Result<Rescaled> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::invalid(format!("rescaling needs t > 0, got {t}")));
    }
    let g = geometry.scaled(1.0 / t.sqrt())?;
    let sup_a = g.fields()?.sup_norm_a();
    Ok(Rescaled { geometry: g, t, s: t.ln(), sup_a })
}

/// `sup |v / ds - (H - X.N / 2)|` between two rescaled slices.
///
/// Every rescaled mean curvature flow satisfies the normalized equation, so
/// `sup` measures discretization error. Distance from equilibrium is the
/// normalized velocity `sup |H - X.N / 2|`, which vanishes only on expanders.
#[derive(Debug, Clone, PartialEq)]
pub struct NmcfResidual {
    pub sup: f64,
    pub velocity_sup: f64,
    /// Nodes used.
    pub count: usize,
    /// Nodes excluded because the normal search failed.
    pub flagged: usize,
}

/// Residual of the normalized flow equation between slices at `s` and
/// `s + ds`, measured on the nodes of the earlier slice inside `window`.
pub fn nmcf_residual(a: &Rescaled, b: &Rescaled, window: &Window) -> Result<NmcfResidual> {
    let ds = b.s - a.s;
    if !(ds > 0.0) {
        return Err(Error::invalid("slices must be ordered in time"));
    }
    let base = a.geometry.fields()?;
    let dev = closest_point_deviation(&base, &b.geometry.curve_samples(), None)?;
    let support = base.support();
    let mut sup: f64 = 0.0;
    let mut velocity_sup: f64 = 0.0;
    let mut count = 0;
    let mut flagged = 0;
    for i in base.interior.clone() {
        if !window.contains(base.points[i]) {
            continue;
        }
        if dev.flagged.contains(&i) {
            flagged += 1;
            continue;
        }
        let velocity = base.mean_curvature[i] - 0.5 * support[i];
        sup = sup.max((dev.field.v[i] / ds - velocity).abs());
        velocity_sup = velocity_sup.max(velocity.abs());
        count += 1;
    }
    Ok(NmcfResidual { sup, velocity_sup, count, flagged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FarField, GraphHypersurface, Grid1D, PolylineCurve, RegularCone, Vec2};

    #[test]
    fn rescale_identity_and_circle() {
        let c = Geometry::Polyline(PolylineCurve::circle(Vec2::zeros(), 2.0, 128).unwrap());
        let r = nmcf_rescale(&c, 1.0).unwrap();
        assert_eq!(r.s, 0.0);
        for (p, q) in r.geometry.points().iter().zip(c.points()) {
            assert_eq!(*p, q);
        }
        let r = nmcf_rescale(&c, 4.0).unwrap();
        for p in r.geometry.points() {
            assert!((p.norm() - 1.0).abs() < 1e-14);
        }
        assert!((r.sup_a - 1.0).abs() < 1e-3);
        assert!(nmcf_rescale(&c, 0.0).is_err());
    }

    #[test]
    fn flat_line_residual_vanishes() {
        let grid = Grid1D::symmetric(5.0, 0.1).unwrap();
        let g = Geometry::Graph(
            GraphHypersurface::from_fn(grid, |_| 0.0, RegularCone::flat(), FarField::Cone, 1e-12).unwrap(),
        );
        let a = nmcf_rescale(&g, 1.0).unwrap();
        let b = nmcf_rescale(&g, 1.1).unwrap();
        let r = nmcf_residual(&a, &b, &Window::Ball(2.0)).unwrap();
        assert!(r.sup < 1e-12);
        assert!(r.count > 30);
    }

    #[test]
    fn shrinking_circle_solves_the_normalized_flow() {
        // radius sqrt(1 - 2t) rescales to rho = sqrt(1/t - 2) with
        // d rho / ds = -1 / (2 t rho) = H - rho / 2
        let at = |t: f64| {
            let r = (1.0 - 2.0 * t).sqrt();
            nmcf_rescale(&Geometry::Polyline(PolylineCurve::circle(Vec2::zeros(), r, 256).unwrap()), t).unwrap()
        };
        let (a, b) = (at(0.2), at(0.201));
        let r = nmcf_residual(&a, &b, &Window::All).unwrap();
        assert!(r.sup < 0.02, "{}", r.sup);
        assert!(r.velocity_sup > 1.0);
        assert_eq!(r.flagged, 0);
    }
}
