//! Columnar text format for expander solutions.
//!
//! ```text
//! # mcflab-expander kind=graph1d cone=-5e-1,5e-1 nodes=4001 u0=... du0=0e0 residual_sup=... sup_a=... slope_error=...,... x_max=2e1 tol=1e-8
//! x u du residual
//! ...
//! ```
//!
//! Profiles use `kind=rotsym dim=n cone=half_angle,ambient_dim`.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use super::{ExpanderKind, ExpanderSolution};
use crate::geometry::RegularCone;
use crate::{Error, Result};

const MAGIC: &str = "# mcflab-expander";

pub fn write_expander<W: Write>(w: &mut W, s: &ExpanderSolution) -> Result<()> {
    let (kind, cone) = match (s.kind, s.cone) {
        (ExpanderKind::Graph1d, RegularCone::Slopes1d { m_minus, m_plus }) => {
            ("graph1d".to_string(), format!("{m_minus:e},{m_plus:e}"))
        }
        (ExpanderKind::Rotsym { dim }, RegularCone::Rotsym { half_angle, ambient_dim }) => {
            (format!("rotsym dim={dim}"), format!("{half_angle:e},{ambient_dim}"))
        }
        _ => return Err(Error::invalid("solution kind does not match its cone")),
    };
    let shift = s.refinement_shift.map(|r| format!(" refinement_shift={r:e}")).unwrap_or_default();
    writeln!(
        w,
        "{MAGIC} kind={kind} cone={cone} nodes={} u0={:e} du0={:e} residual_sup={:e} sup_a={:e} slope_error={:e},{:e} x_max={:e} tol={:e}{shift}",
        s.x.len(),
        s.shooting[0],
        s.shooting[1],
        s.residual_sup,
        s.sup_a,
        s.slope_error[0],
        s.slope_error[1],
        s.x_max,
        s.tol,
    )?;
    writeln!(w, "x u du residual")?;
    for i in 0..s.x.len() {
        writeln!(w, "{:e} {:e} {:e} {:e}", s.x[i], s.u[i], s.du[i], s.residual[i])?;
    }
    Ok(())
}

fn num(s: &str) -> Result<f64> {
    s.trim().parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")))
}

fn pair(s: &str) -> Result<(&str, &str)> {
    s.split_once(',').ok_or_else(|| Error::Parse(format!("expected a pair, got {s:?}")))
}

pub fn read_expander<R: BufRead>(r: R) -> Result<ExpanderSolution> {
    let mut lines = r.lines();
    let header = lines.next().ok_or_else(|| Error::Parse("empty expander file".into()))??;
    let rest = header.strip_prefix(MAGIC).ok_or_else(|| Error::Parse(format!("missing {MAGIC:?} header")))?;
    let meta: BTreeMap<&str, &str> = rest.split_whitespace().filter_map(|kv| kv.split_once('=')).collect();
    let get = |k: &str| meta.get(k).copied().ok_or_else(|| Error::Parse(format!("header lacks {k}")));
    let int = |k: &str| -> Result<usize> { get(k)?.parse().map_err(|e| Error::Parse(format!("{k}: {e}"))) };
    let (c0, c1) = pair(get("cone")?)?;
    let (kind, cone) = match get("kind")? {
        "graph1d" => (ExpanderKind::Graph1d, RegularCone::slopes(num(c0)?, num(c1)?)?),
        "rotsym" => {
            let ambient = c1.parse().map_err(|e| Error::Parse(format!("ambient_dim: {e}")))?;
            (ExpanderKind::Rotsym { dim: int("dim")? }, RegularCone::rotsym(num(c0)?, ambient)?)
        }
        other => return Err(Error::Parse(format!("unknown expander kind {other:?}"))),
    };
    let _columns = lines.next().ok_or_else(|| Error::Parse("missing column line".into()))??;
    let (mut x, mut u, mut du, mut residual) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split_whitespace().collect();
        if cols.len() != 4 {
            return Err(Error::Parse(format!("expected 4 columns, got {line:?}")));
        }
        x.push(num(cols[0])?);
        u.push(num(cols[1])?);
        du.push(num(cols[2])?);
        residual.push(num(cols[3])?);
    }
    let nodes = int("nodes")?;
    if nodes != x.len() || nodes < 2 {
        return Err(Error::Parse(format!("header says {nodes} nodes, found {}", x.len())));
    }
    let (e0, e1) = pair(get("slope_error")?)?;
    Ok(ExpanderSolution {
        kind,
        cone,
        x,
        u,
        du,
        residual,
        residual_sup: num(get("residual_sup")?)?,
        sup_a: num(get("sup_a")?)?,
        slope_error: [num(e0)?, num(e1)?],
        shooting: [num(get("u0")?)?, num(get("du0")?)?],
        x_max: num(get("x_max")?)?,
        tol: num(get("tol")?)?,
        refinement_shift: meta.get("refinement_shift").map(|s| num(s)).transpose()?,
    })
}
