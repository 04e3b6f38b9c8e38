use crate::geometry::GraphHypersurface;
use crate::{Error, Result};

/// Pointwise residual of `(d_t - Laplacian)|A|^2 + 2|grad A|^2 - 2|A|^4`.
#[derive(Debug, Clone)]
pub struct CurvatureEvolution {
    pub x: Vec<f64>,
    pub residual: Vec<f64>,
    /// `sup |A|^4` over the same nodes, for scale.
    pub scale: f64,
}

impl CurvatureEvolution {
    pub fn sup(&self) -> f64 {
        self.residual.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// Evaluate the evolution identity for `|A|^2` at the middle of three graph
/// states at `t - dt`, `t`, `t + dt`.
///
/// The time derivative at fixed `x` follows points moving vertically, so the
/// tangential part `V_T = u_t u' / W` is removed:
/// `d_t^perp f = f_t - u_t u' f_x / W^2`. Nodes within three cells of an end
/// are omitted.
pub fn curvature_evolution_residual(
    before: &GraphHypersurface,
    now: &GraphHypersurface,
    after: &GraphHypersurface,
    dt: f64,
) -> Result<CurvatureEvolution> {
    let n = now.heights().len();
    if before.heights().len() != n
        || after.heights().len() != n
        || before.grid() != now.grid()
        || after.grid() != now.grid()
    {
        return Err(Error::invalid("states must share a grid"));
    }
    if !(dt > 0.0) {
        return Err(Error::invalid("time step must be positive"));
    }
    if n < 9 {
        return Err(Error::GridTooSmall { nodes: n, min: 9 });
    }
    let h = now.grid().h();
    let k2 = |g: &GraphHypersurface| -> Vec<f64> {
        let (d1, d2) = g.derivatives();
        d1.iter().zip(&d2).map(|(p, q)| q * q / (1.0 + p * p).powi(3)).collect()
    };
    let (d1, d2) = now.derivatives();
    let w: Vec<f64> = d1.iter().map(|p| (1.0 + p * p).sqrt()).collect();
    let kappa: Vec<f64> = d2.iter().zip(&w).map(|(q, w)| q / (w * w * w)).collect();
    let f = k2(now);
    let (fb, fa) = (k2(before), k2(after));
    let dx = |v: &[f64], i: usize| (v[i + 1] - v[i - 1]) / (2.0 * h);

    let mut x = Vec::new();
    let mut residual = Vec::new();
    let mut scale: f64 = 0.0;
    let (ub, ua) = (before.heights(), after.heights());
    // f_s / W on the nodes used by the outer derivative
    let fs: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { 0.0 } else { dx(&f, i) / w[i] }).collect();
    let ks: Vec<f64> = (0..n).map(|i| if i == 0 || i == n - 1 { 0.0 } else { dx(&kappa, i) / w[i] }).collect();
    for i in 3..n - 3 {
        let ut = (ua[i] - ub[i]) / (2.0 * dt);
        let ft = (fa[i] - fb[i]) / (2.0 * dt);
        let fx = dx(&f, i);
        let dperp = ft - ut * d1[i] * fx / (w[i] * w[i]);
        let lap = dx(&fs, i) / w[i];
        let grad_a2 = ks[i] * ks[i];
        let a4 = f[i] * f[i];
        residual.push(dperp - lap + 2.0 * grad_a2 - 2.0 * a4);
        x.push(now.grid().x(i));
        scale = scale.max(a4);
    }
    Ok(CurvatureEvolution { x, residual, scale })
}
