//! Columnar text format for geometry snapshots.
//!
//! ```text
//! # mcflab-geometry kind=graph nodes=401 x_min=-20 x_max=20 h=0.1 cone=-0.3,0.3 normal=up far_field=dirichlet_cone t=1
//! x u H absA
//! -2e1 6e0 0e0 0e0
//! ...
//! ```
//!
//! Polylines use `kind=polyline`, `closed=`, `orientation=` and, for open
//! curves, `ray_minus=dx,dy ray_plus=dx,dy`; their columns are `x y H absA`.
//! Curvature columns are informational; readers rebuild geometry from the
//! coordinates. Expander far fields are written by name and read back as
//! cone far fields.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{CurveEnds, FarField, Geometry, GraphHypersurface, Grid1D, Orientation, PolylineCurve, RegularCone, Vec2};
use crate::{Error, Result};

const MAGIC: &str = "# mcflab-geometry";

pub fn write_geometry<W: Write>(w: &mut W, geom: &Geometry, t: Option<f64>) -> Result<()> {
    let fields = geom.fields()?;
    let time = t.map(|t| format!(" t={t:e}")).unwrap_or_default();
    match geom {
        Geometry::Graph(g) => {
            let grid = g.grid();
            let (m0, m1) = match *g.cone() {
                RegularCone::Slopes1d { m_minus, m_plus } => (m_minus, m_plus),
                RegularCone::Rotsym { .. } => unreachable!(),
            };
            writeln!(
                w,
                "{MAGIC} kind=graph nodes={} x_min={:e} x_max={:e} h={:e} cone={m0:e},{m1:e} normal={} far_field={} farfield_tol={:e}{time}",
                grid.len(),
                grid.x_min(),
                grid.x_max(),
                grid.h(),
                fields.convention.as_str(),
                g.far_field().name(),
                g.farfield_tol(),
            )?;
            writeln!(w, "x u H absA")?;
        }
        Geometry::Polyline(p) => {
            let rays = match p.ends() {
                CurveEnds::Closed => String::new(),
                CurveEnds::Rays { minus, plus } => {
                    format!(" ray_minus={:e},{:e} ray_plus={:e},{:e}", minus.x, minus.y, plus.x, plus.y)
                }
            };
            let orientation = match p.orientation() {
                Orientation::Outward => "outward",
                Orientation::Inward => "inward",
            };
            writeln!(
                w,
                "{MAGIC} kind=polyline nodes={} closed={} orientation={orientation} normal={}{rays}{time}",
                p.len(),
                p.is_closed(),
                fields.convention.as_str(),
            )?;
            writeln!(w, "x y H absA")?;
        }
    }
    for i in 0..fields.len() {
        let p = fields.points[i];
        writeln!(w, "{:e} {:e} {:e} {:e}", p.x, p.y, fields.mean_curvature[i], fields.norm_a[i])?;
    }
    Ok(())
}

fn pair(s: &str) -> Result<(f64, f64)> {
    let (a, b) = s.split_once(',').ok_or_else(|| Error::Parse(format!("expected a pair, got {s:?}")))?;
    Ok((num(a)?, num(b)?))
}

fn num(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
}

/// Read a snapshot written by [`write_geometry`]; returns the recorded time if any.
pub fn read_geometry<R: BufRead>(r: R) -> Result<(Geometry, Option<f64>)> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty geometry file".into()))??;
    let rest = header.strip_prefix(MAGIC).ok_or_else(|| Error::Parse(format!("missing {MAGIC:?} header")))?;
    let meta: BTreeMap<&str, &str> = rest.split_whitespace().filter_map(|kv| kv.split_once('=')).collect();
    let get = |k: &str| meta.get(k).copied().ok_or_else(|| Error::Parse(format!("header lacks {k}")));
    let _columns = lines.next().ok_or_else(|| Error::Parse("missing column line".into()))??;
    let mut pts = Vec::new();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let x = num(it.next().ok_or_else(|| Error::Parse("short row".into()))?)?;
        let y = num(it.next().ok_or_else(|| Error::Parse("short row".into()))?)?;
        pts.push(Vec2::new(x, y));
    }
    let nodes: usize = get("nodes")?.parse().map_err(|e| Error::Parse(format!("nodes: {e}")))?;
    if nodes != pts.len() {
        return Err(Error::Parse(format!("header says {nodes} nodes, found {}", pts.len())));
    }
    let t = meta.get("t").map(|s| num(s)).transpose()?;
    let geom = match get("kind")? {
        "graph" => {
            let grid = Grid1D::new(num(get("x_min")?)?, num(get("x_max")?)?, nodes)?;
            let (m0, m1) = pair(get("cone")?)?;
            let tol = meta.get("farfield_tol").map(|s| num(s)).transpose()?.unwrap_or(f64::INFINITY);
            let u = pts.iter().map(|p| p.y).collect();
            Geometry::Graph(GraphHypersurface::new(grid, u, RegularCone::slopes(m0, m1)?, FarField::Cone, tol)?)
        }
        "polyline" => {
            let ends = if get("closed")? == "true" {
                CurveEnds::Closed
            } else {
                let (a, b) = pair(get("ray_minus")?)?;
                let (c, d) = pair(get("ray_plus")?)?;
                CurveEnds::Rays { minus: Vec2::new(a, b), plus: Vec2::new(c, d) }
            };
            let orientation = match meta.get("orientation").copied() {
                Some("inward") => Orientation::Inward,
                _ => Orientation::Outward,
            };
            Geometry::Polyline(PolylineCurve::new(pts, ends)?.with_orientation(orientation))
        }
        other => return Err(Error::Parse(format!("unknown geometry kind {other:?}"))),
    };
    Ok((geom, t))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_snapshot_round_trip() {
        let grid = Grid1D::symmetric(5.0, 0.1).unwrap();
        let cone = RegularCone::symmetric(0.3).unwrap();
        let g = GraphHypersurface::from_fn(grid, |x| 0.3 * (x * x + 1.0).sqrt(), cone, FarField::Cone, 0.1).unwrap();
        let geom = Geometry::Graph(g);
        let mut buf = Vec::new();
        write_geometry(&mut buf, &geom, Some(2.5)).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# mcflab-geometry kind=graph nodes=101"));
        let (back, t) = read_geometry(&buf[..]).unwrap();
        assert_eq!(t, Some(2.5));
        assert_eq!(back.points(), geom.points());
        let mut again = Vec::new();
        write_geometry(&mut again, &back, t).unwrap();
        assert_eq!(buf, again);
    }

    #[test]
    fn polyline_snapshot_round_trip() {
        let c = PolylineCurve::circle(Vec2::new(0.5, -1.0), 2.0, 33).unwrap();
        let geom = Geometry::Polyline(c);
        let mut buf = Vec::new();
        write_geometry(&mut buf, &geom, None).unwrap();
        let (back, t) = read_geometry(&buf[..]).unwrap();
        assert_eq!(t, None);
        assert_eq!(back.points(), geom.points());
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_geometry("hello\n".as_bytes()).is_err());
        assert!(read_geometry("# mcflab-geometry kind=graph nodes=3\nx u H absA\n1 2 0 0\n".as_bytes()).is_err());
    }
}
