use std::f64::consts::FRAC_PI_2;

use super::rk45::{integrate, integrate_nodes, Tolerance};
use super::{rotsym_expander_residual, ExpanderKind, ExpanderSolution};
use crate::geometry::RegularCone;
use crate::par::{self, Execution};
use crate::{Error, Result};

/// Starting radius of profile integrations, where the axis series is used.
const AXIS_START: f64 = 1e-4;

/// Shooting and certification parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShootingConfig {
    pub x_max: f64,
    /// Residual threshold for certification.
    pub tol: f64,
    pub slope_tol: f64,
    /// Interval and node count of the `u(0)` scan.
    pub scan: (f64, f64, usize),
    pub sample_spacing: f64,
    pub ode: Tolerance,
    /// Re-solve with `2 X_max` and report the shift of `u(0)`.
    pub refinement_check: bool,
    pub exec: Execution,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            x_max: 20.0,
            tol: 1e-8,
            slope_tol: 1e-4,
            scan: (-10.0, 10.0, 401),
            sample_spacing: 0.01,
            ode: Tolerance::default(),
            refinement_check: true,
            exec: Execution::default(),
        }
    }
}

impl ShootingConfig {
    pub fn with_x_max(mut self, x_max: f64) -> Self {
        self.x_max = x_max;
        self
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi, n) = self.scan;
        if !(self.x_max > 0.0 && self.x_max.is_finite()) {
            return Err(Error::invalid("X_max must be positive"));
        }
        if !(hi > lo) || n < 2 {
            return Err(Error::invalid("shooting scan needs an interval and at least two nodes"));
        }
        if !(self.sample_spacing > 0.0 && self.sample_spacing < self.x_max / 4.0) {
            return Err(Error::invalid("sample spacing must be positive and well below X_max"));
        }
        if !(self.tol > 0.0 && self.slope_tol > 0.0) {
            return Err(Error::invalid("tolerances must be positive"));
        }
        Ok(())
    }
}

/// `(u, u')' = (u', (u - x u') (1 + u'^2) / 2)`.
pub fn graph1d_rhs(x: f64, y: &[f64; 2]) -> [f64; 2] {
    let (u, p) = (y[0], y[1]);
    [p, 0.5 * (u - x * p) * (1.0 + p * p)]
}

pub(crate) fn rotsym_rhs(dim: usize) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] {
    let k = dim as f64 - 1.0;
    move |r: f64, y: &[f64; 2]| {
        let (f, p) = (y[0], y[1]);
        [p, (1.0 + p * p) * (0.5 * (f - r * p) - k * p / r)]
    }
}

/// Axis series `f = c + c r^2 / 4n`.
fn axis_state(c: f64, dim: usize, r: f64) -> [f64; 2] {
    let a = c / (4.0 * dim as f64);
    [c + a * r * r, 2.0 * a * r]
}

/// Angle mismatch `atan(slope) - atan(target)`; a slope that blows up counts
/// as vertical with the sign of `blowup_sign`.
fn angle_mismatch(slope: Result<f64>, target: f64, blowup_sign: f64) -> Result<f64> {
    match slope {
        Ok(s) => Ok(s.atan() - target.atan()),
        Err(Error::Blowup { .. }) => Ok(blowup_sign * FRAC_PI_2 - target.atan()),
        Err(e) => Err(e),
    }
}

/// Slope at `r` of the far-field expansion `f = m r + a / r + b / r^3` with
/// `a = (n-1) m` and `b = (n-1) m / (1 + m^2) - (n-1)^2 m / 2`.
fn rotsym_target(m: f64, dim: usize, r: f64) -> f64 {
    let k = dim as f64 - 1.0;
    let a = k * m;
    let b = k * m / (1.0 + m * m) - 0.5 * k * k * m;
    let r2 = r * r;
    m - a / r2 - 3.0 * b / (r2 * r2)
}

/// Roots of `g` on the scan grid: exact zeros and bracketed sign changes,
/// refined by bisection and a safeguarded secant, ordered by position.
fn scan_roots(
    g: &(impl Fn(f64) -> Result<f64> + Sync),
    scan: (f64, f64, usize),
    exec: Execution,
) -> Result<(Vec<f64>, String)> {
    let (lo, hi, n) = scan;
    let nodes: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let values = par::map(exec, &nodes, |&c| g(c));
    let mut vals = Vec::with_capacity(n);
    for v in values {
        vals.push(v?);
    }
    let mut roots = Vec::new();
    for i in 0..n {
        if vals[i] == 0.0 {
            roots.push(nodes[i]);
        }
        if i + 1 < n && vals[i] * vals[i + 1] < 0.0 {
            roots.push(refine_root(g, nodes[i], nodes[i + 1], vals[i], vals[i + 1])?);
        }
    }
    let report = format!(
        "scanned {n} values of u(0) in [{lo}, {hi}]; mismatch range [{:.3e}, {:.3e}]",
        vals.iter().cloned().fold(f64::INFINITY, f64::min),
        vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    );
    Ok((roots, report))
}

fn refine_root(g: &impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, mut ga: f64, mut gb: f64) -> Result<f64> {
    while (b - a).abs() > 1e-8 * (1.0 + a.abs()) {
        let m = 0.5 * (a + b);
        let gm = g(m)?;
        if gm == 0.0 {
            return Ok(m);
        }
        if ga * gm < 0.0 {
            b = m;
            gb = gm;
        } else {
            a = m;
            ga = gm;
        }
    }
    // secant polish, kept inside the bracket
    let (mut x0, mut g0, mut x1, mut g1) = (a, ga, b, gb);
    for _ in 0..60 {
        let mut x2 = x1 - g1 * (x1 - x0) / (g1 - g0);
        if !(x2 > a.min(b) && x2 < a.max(b)) || !x2.is_finite() {
            x2 = 0.5 * (a + b);
        }
        let g2 = g(x2)?;
        if g2 == 0.0 || (x2 - x1).abs() <= 1e-15 * (1.0 + x2.abs()) {
            return Ok(x2);
        }
        if ga * g2 < 0.0 {
            b = x2;
        } else {
            a = x2;
            ga = g2;
        }
        (x0, g0, x1, g1) = (x1, g1, x2, g2);
    }
    Ok(x1)
}

/// Weights of the derivative at `at` of the polynomial through `xs`.
fn lagrange_derivative_weights(xs: &[f64], at: usize) -> Vec<f64> {
    let n = xs.len();
    let xi = xs[at];
    (0..n)
        .map(|j| {
            if j == at {
                (0..n).filter(|&k| k != at).map(|k| 1.0 / (xi - xs[k])).sum()
            } else {
                let num: f64 = (0..n).filter(|&k| k != at && k != j).map(|k| xi - xs[k]).product();
                let den: f64 = (0..n).filter(|&k| k != j).map(|k| xs[j] - xs[k]).product();
                num / den
            }
        })
        .collect()
}

/// Derivative of samples on a uniform grid with 7-point stencils (one-sided
/// near the ends, or reflected oddly across `x[0]` when `odd_at_start`).
fn sample_derivative(x: &[f64], f: &[f64], odd_at_start: bool) -> Vec<f64> {
    let n = x.len();
    let h = x[1] - x[0];
    let offsets: Vec<f64> = (-3..=3).map(|k| k as f64 * h).collect();
    let central = lagrange_derivative_weights(&offsets, 3);
    (0..n)
        .map(|i| {
            if i >= 3 && i + 3 < n {
                (0..7).map(|k| central[k] * f[i + k - 3]).sum()
            } else if odd_at_start && i < 3 {
                (0..7)
                    .map(|k| {
                        let j = i as isize + k as isize - 3;
                        let v = if j < 0 { -f[(-j) as usize] } else { f[j as usize] };
                        central[k] * v
                    })
                    .sum()
            } else {
                let start = if i < 3 { 0 } else { n - 7 };
                let xs: Vec<f64> = (0..7).map(|k| x[start + k]).collect();
                let w = lagrange_derivative_weights(&xs, i - start);
                (0..7).map(|k| w[k] * f[start + k]).sum()
            }
        })
        .collect()
}

fn uniform_nodes(x_max: f64, spacing: f64) -> Vec<f64> {
    let n = (x_max / spacing).round() as usize;
    (0..=n).map(|k| x_max * k as f64 / n as f64).collect()
}

fn terminal_slope_graph(c: f64, p: f64, x_end: f64, ode: &Tolerance) -> Result<f64> {
    integrate(&graph1d_rhs, 0.0, [c, p], x_end, ode).map(|y| y[1])
}

fn terminal_slope_rotsym(c: f64, dim: usize, r_end: f64, ode: &Tolerance) -> Result<f64> {
    let f = rotsym_rhs(dim);
    integrate(&f, AXIS_START, axis_state(c, dim, AXIS_START), r_end, ode).map(|y| y[1])
}

fn symmetric_roots(m: f64, x_max: f64, cfg: &ShootingConfig) -> Result<(Vec<f64>, String)> {
    let g = |c: f64| angle_mismatch(terminal_slope_graph(c, 0.0, x_max, &cfg.ode), m, c.signum());
    scan_roots(&g, cfg.scan, cfg.exec)
}

/// Two-parameter damped Newton on `(u(0), u'(0))` for asymmetric cones.
fn newton_asymmetric(m_minus: f64, m_plus: f64, x_max: f64, start: [f64; 2], ode: &Tolerance) -> Result<[f64; 2]> {
    let eval = |z: [f64; 2]| -> Result<[f64; 2]> {
        let sp = terminal_slope_graph(z[0], z[1], x_max, ode)?;
        let sm = terminal_slope_graph(z[0], z[1], -x_max, ode)?;
        Ok([sp.atan() - m_plus.atan(), sm.atan() - m_minus.atan()])
    };
    let norm = |f: [f64; 2]| f[0].hypot(f[1]);
    let mut z = start;
    let mut f = eval(z)?;
    for _ in 0..100 {
        if norm(f) < 1e-14 {
            return Ok(z);
        }
        let eps = 1e-7;
        let f0 = eval([z[0] + eps, z[1]])?;
        let f1 = eval([z[0], z[1] + eps])?;
        let j = [[(f0[0] - f[0]) / eps, (f1[0] - f[0]) / eps], [(f0[1] - f[1]) / eps, (f1[1] - f[1]) / eps]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if det.abs() < 1e-300 {
            return Err(Error::NotConverged("singular shooting Jacobian".into()));
        }
        let dz = [(j[1][1] * f[0] - j[0][1] * f[1]) / det, (j[0][0] * f[1] - j[1][0] * f[0]) / det];
        let mut lambda = 1.0;
        loop {
            let trial = [z[0] - lambda * dz[0], z[1] - lambda * dz[1]];
            if let Ok(ft) = eval(trial) {
                if norm(ft) < norm(f) {
                    z = trial;
                    f = ft;
                    break;
                }
            }
            lambda *= 0.5;
            if lambda < 1e-6 {
                if norm(f) < 1e-11 {
                    return Ok(z);
                }
                return Err(Error::NotConverged(format!("damped Newton stalled at |F| = {:e}", norm(f))));
            }
        }
        if lambda * dz[0].hypot(dz[1]) < 1e-15 {
            return Ok(z);
        }
    }
    if norm(f) < 1e-11 {
        Ok(z)
    } else {
        Err(Error::NotConverged(format!("Newton did not converge, |F| = {:e}", norm(f))))
    }
}

fn certify(mut s: ExpanderSolution) -> Result<ExpanderSolution> {
    if s.residual_sup > s.tol {
        return Err(Error::NotConverged(format!(
            "expander residual {:e} above tolerance {:e} (u(0) = {})",
            s.residual_sup, s.tol, s.shooting[0]
        )));
    }
    s.residual_sup = s.residual_sup.max(0.0);
    Ok(s)
}

fn sample_graph1d(cone: RegularCone, c: f64, p: f64, cfg: &ShootingConfig) -> Result<ExpanderSolution> {
    let (m_minus, m_plus) = cone.slope_pair().ok_or_else(|| Error::invalid("1-D solver needs a Slopes1d cone"))?;
    let pos = uniform_nodes(cfg.x_max, cfg.sample_spacing);
    let right = integrate_nodes(&graph1d_rhs, &pos, [c, p], &cfg.ode)?;
    let left = if p == 0.0 && m_minus == -m_plus {
        right.iter().map(|y| [y[0], -y[1]]).collect()
    } else {
        let neg: Vec<f64> = pos.iter().map(|x| -x).collect();
        integrate_nodes(&graph1d_rhs, &neg, [c, p], &cfg.ode)?
    };
    let k = pos.len();
    let mut x = Vec::with_capacity(2 * k - 1);
    let mut u = Vec::with_capacity(2 * k - 1);
    let mut du = Vec::with_capacity(2 * k - 1);
    for i in (1..k).rev() {
        x.push(-pos[i]);
        u.push(left[i][0]);
        du.push(left[i][1]);
    }
    for i in 0..k {
        x.push(pos[i]);
        u.push(right[i][0]);
        du.push(right[i][1]);
    }
    let d2 = sample_derivative(&x, &du, false);
    let mut residual = Vec::with_capacity(x.len());
    let mut sup_a: f64 = 0.0;
    for i in 0..x.len() {
        let w = (1.0 + du[i] * du[i]).sqrt();
        let h = d2[i] / (w * w * w);
        residual.push((h - 0.5 * (u[i] - x[i] * du[i]) / w).abs());
        let q = graph1d_rhs(x[i], &[u[i], du[i]])[1];
        sup_a = sup_a.max(q.abs() / (w * w * w));
    }
    let n = x.len();
    let residual_sup = residual.iter().fold(0.0, |m: f64, r| m.max(*r));
    Ok(ExpanderSolution {
        kind: ExpanderKind::Graph1d,
        cone,
        slope_error: [(du[0] - m_minus).abs(), (du[n - 1] - m_plus).abs()],
        x,
        u,
        du,
        residual,
        residual_sup,
        sup_a,
        shooting: [c, p],
        x_max: cfg.x_max,
        tol: cfg.tol,
        refinement_shift: None,
    })
}

/// All expanders over the cone with slopes `(m_minus, m_plus)` found by the
/// shooting scan, ordered by `u(0)`. Uniqueness is never claimed.
pub fn solve_expander_graph1d_all(cone: RegularCone, cfg: &ShootingConfig) -> Result<Vec<ExpanderSolution>> {
    cfg.validate()?;
    let (m_minus, m_plus) = cone.slope_pair().ok_or_else(|| Error::invalid("1-D solver needs a Slopes1d cone"))?;
    cone.validate()?;
    let symmetric = m_minus == -m_plus;
    let mbar = 0.5 * (m_plus - m_minus);
    let (roots, report) = symmetric_roots(mbar, cfg.x_max, cfg)?;
    if roots.is_empty() {
        return Err(Error::NoBracket(report));
    }
    let mut out = Vec::with_capacity(roots.len());
    for c in roots {
        let z = if symmetric {
            [c, 0.0]
        } else {
            newton_asymmetric(m_minus, m_plus, cfg.x_max, [c, 0.5 * (m_plus + m_minus)], &cfg.ode)?
        };
        let mut s = certify(sample_graph1d(cone, z[0], z[1], cfg)?)?;
        if cfg.refinement_check {
            let x2 = 2.0 * cfg.x_max;
            let c2 = if symmetric {
                let g = |c: f64| angle_mismatch(terminal_slope_graph(c, 0.0, x2, &cfg.ode), mbar, c.signum());
                let d = 0.05 * (1.0 + z[0].abs());
                let (a, b) = (z[0] - d, z[0] + d);
                let (ga, gb) = (g(a)?, g(b)?);
                if ga * gb < 0.0 {
                    refine_root(&g, a, b, ga, gb)?
                } else {
                    return Err(Error::NoBracket(format!("no root near u(0) = {} with 2 X_max", z[0])));
                }
            } else {
                newton_asymmetric(m_minus, m_plus, x2, z, &cfg.ode)?[0]
            };
            s.refinement_shift = Some((c2 - z[0]).abs());
        }
        out.push(s);
    }
    out.sort_by(|a, b| a.shooting[0].total_cmp(&b.shooting[0]));
    Ok(out)
}

/// The expander with the smallest `u(0)` among those found; see
/// [`solve_expander_graph1d_all`].
pub fn solve_expander_graph1d(cone: RegularCone, cfg: &ShootingConfig) -> Result<ExpanderSolution> {
    Ok(solve_expander_graph1d_all(cone, cfg)?.remove(0))
}

/// Rotationally symmetric expander asymptotic to the cone of the given
/// half-angle in `R^{ambient_dim}`, by shooting on `f(0)` from the axis.
pub fn solve_expander_rotsym(cone: RegularCone, cfg: &ShootingConfig) -> Result<ExpanderSolution> {
    cfg.validate()?;
    cone.validate()?;
    let RegularCone::Rotsym { half_angle, ambient_dim } = cone else {
        return Err(Error::invalid("rotsym solver needs a Rotsym cone"));
    };
    if ambient_dim < 3 {
        return Err(Error::invalid("rotationally symmetric hypersurfaces need n >= 2"));
    }
    let dim = ambient_dim - 1;
    let m = cone.slope_at(1.0);
    let _ = half_angle;
    let mismatch = |c: f64, r_end: f64| {
        angle_mismatch(terminal_slope_rotsym(c, dim, r_end, &cfg.ode), rotsym_target(m, dim, r_end), c.signum())
    };
    let (roots, report) = scan_roots(&|c| mismatch(c, cfg.x_max), cfg.scan, cfg.exec)?;
    let Some(&c) = roots.first() else {
        return Err(Error::NoBracket(report));
    };

    let r = uniform_nodes(cfg.x_max, cfg.sample_spacing);
    let rhs = rotsym_rhs(dim);
    let mut states = vec![[c, 0.0]];
    let start = axis_state(c, dim, AXIS_START);
    states.push(integrate(&rhs, AXIS_START, start, r[1], &cfg.ode)?);
    let rest = integrate_nodes(&rhs, &r[1..], states[1], &cfg.ode)?;
    states.extend_from_slice(&rest[1..]);
    let u: Vec<f64> = states.iter().map(|y| y[0]).collect();
    let du: Vec<f64> = states.iter().map(|y| y[1]).collect();
    let d2 = sample_derivative(&r, &du, true);
    let nn = dim as f64;
    let mut residual = Vec::with_capacity(r.len());
    let mut sup_a: f64 = 0.0;
    for i in 0..r.len() {
        let w = (1.0 + du[i] * du[i]).sqrt();
        let k1 = d2[i] / (w * w * w);
        let kr = if i == 0 { d2[0] } else { du[i] / (r[i] * w) };
        residual.push((k1 + (nn - 1.0) * kr - 0.5 * (u[i] - r[i] * du[i]) / w).abs());
        sup_a = sup_a.max((k1 * k1 + (nn - 1.0) * kr * kr).sqrt());
    }
    let residual_sup = residual.iter().fold(0.0, |a: f64, b| a.max(*b));
    let n = r.len();
    let mut s = ExpanderSolution {
        kind: ExpanderKind::Rotsym { dim },
        cone,
        slope_error: [0.0, (du[n - 1] - rotsym_target(m, dim, cfg.x_max)).abs()],
        x: r,
        u,
        du,
        residual,
        residual_sup,
        sup_a,
        shooting: [c, 0.0],
        x_max: cfg.x_max,
        tol: cfg.tol,
        refinement_shift: None,
    };
    s = certify(s)?;
    if cfg.refinement_check {
        let x2 = 2.0 * cfg.x_max;
        let g = |c: f64| mismatch(c, x2);
        let d = 0.05 * (1.0 + c.abs());
        let (a, b) = (c - d, c + d);
        let (ga, gb) = (g(a)?, g(b)?);
        if ga * gb < 0.0 {
            s.refinement_shift = Some((refine_root(&g, a, b, ga, gb)? - c).abs());
        }
    }
    Ok(s)
}

/// Second-order discrete residual of a profile resampled on a uniform grid
/// `[0, r_max]` with spacing `h`.
pub fn resampled_rotsym_residual(s: &ExpanderSolution, h: f64, r_max: f64) -> Result<f64> {
    let ExpanderKind::Rotsym { dim } = s.kind else {
        return Err(Error::invalid("not a profile"));
    };
    let n = (r_max / h).round() as usize;
    let r: Vec<f64> = (0..=n).map(|k| k as f64 * h).collect();
    let f: Vec<f64> = r.iter().map(|&x| s.eval(x).0).collect();
    Ok(rotsym_expander_residual(&r, &f, dim)?.sup)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expander::expander_residual;
    use crate::geometry::{FarField, Geometry, GraphHypersurface, Grid1D};

    #[test]
    fn derivative_weights_are_exact_on_polynomials() {
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 0.1).collect();
        let f: Vec<f64> = x.iter().map(|x| x.powi(6) - 2.0 * x.powi(3)).collect();
        let d = sample_derivative(&x, &f, false);
        for (xi, di) in x.iter().zip(&d) {
            assert!((di - (6.0 * xi.powi(5) - 6.0 * xi * xi)).abs() < 1e-9);
        }
        let g: Vec<f64> = x.iter().map(|x| x.powi(5) + x).collect();
        let d = sample_derivative(&x, &g, true);
        for (xi, di) in x.iter().zip(&d) {
            assert!((di - (5.0 * xi.powi(4) + 1.0)).abs() < 1e-9);
        }
    }

    #[test]
    fn flat_cone_gives_flat_expander() {
        let s = solve_expander_graph1d(RegularCone::flat(), &ShootingConfig::default()).unwrap();
        assert!(s.u.iter().all(|u| *u == 0.0));
        assert_eq!(s.residual_sup, 0.0);
    }

    #[test]
    fn symmetric_expander_is_certified() {
        let cfg = ShootingConfig::default();
        let s = solve_expander_graph1d(RegularCone::symmetric(0.5).unwrap(), &cfg).unwrap();
        assert!(s.residual_sup <= 1e-8, "{}", s.residual_sup);
        assert!(s.slope_error[1] <= 1e-4);
        assert!(s.refinement_shift.unwrap() < 1e-6);
        assert_eq!(s.shooting[1], 0.0);
        let n = s.x.len();
        for i in 0..n {
            assert_eq!(s.u[i], s.u[n - 1 - i]);
        }
        // independent check on the discrete geometry of resampled heights
        for h in [0.1, 0.05] {
            let grid = Grid1D::symmetric(10.0, h).unwrap();
            let g = GraphHypersurface::from_fn(grid, |x| s.eval(x).0, s.cone, FarField::Cone, 1e-6).unwrap();
            let r = expander_residual(&Geometry::Graph(g)).unwrap();
            assert!(r.sup <= 5.0 * h * h, "h = {h}: {}", r.sup);
        }
    }

    #[test]
    fn asymmetric_expander_matches_both_slopes() {
        let cone = RegularCone::slopes(-0.2, 0.6).unwrap();
        let cfg = ShootingConfig { refinement_check: false, ..ShootingConfig::default() };
        let s = solve_expander_graph1d(cone, &cfg).unwrap();
        assert!(s.slope_error[0] < 1e-6 && s.slope_error[1] < 1e-6, "{:?}", s.slope_error);
        assert!(s.residual_sup < 1e-8);
    }

    #[test]
    fn rotsym_flat_limit_and_curved_case() {
        let flat = solve_expander_rotsym(
            RegularCone::rotsym(std::f64::consts::FRAC_PI_2, 3).unwrap(),
            &ShootingConfig::default(),
        )
        .unwrap();
        assert!(flat.u.iter().all(|u| *u == 0.0));
        let s = solve_expander_rotsym(RegularCone::rotsym(1.2, 3).unwrap(), &ShootingConfig::default()).unwrap();
        assert!(s.residual_sup <= 1e-8, "{}", s.residual_sup);
        assert!(s.slope_error[1] <= 1e-4, "{:?}", s.slope_error);
        assert!(s.sup_a > 0.0 && s.sup_a < 1.0);
        let disc = resampled_rotsym_residual(&s, 0.05, 10.0).unwrap();
        assert!(disc < 5.0 * 0.05 * 0.05, "{disc}");
    }

    #[test]
    fn frozen_shooting_values() {
        let cfg = ShootingConfig { refinement_check: false, ..ShootingConfig::default() };
        for (m, u0) in [(0.2, 0.224784177113920), (0.5, 0.551262190005676), (1.0, 1.044487991831438)] {
            let all = solve_expander_graph1d_all(RegularCone::symmetric(m).unwrap(), &cfg).unwrap();
            assert_eq!(all.len(), 1);
            assert!((all[0].u0() - u0).abs() < 1e-9, "m = {m}: {}", all[0].u0());
            // |A| peaks on the axis of symmetry, where it equals u''(0) = u(0) / 2
            assert!((all[0].sup_a - 0.5 * all[0].u0()).abs() < 1e-12);
        }
        let s = solve_expander_rotsym(RegularCone::rotsym(1.2, 3).unwrap(), &ShootingConfig::default()).unwrap();
        assert!((s.u0() - 0.684242219950592).abs() < 1e-8, "{}", s.u0());
        assert!((s.sup_a - 0.241916156850500).abs() < 1e-8, "{}", s.sup_a);
        assert!(s.refinement_shift.unwrap() < 1e-6);
    }

    #[test]
    fn flat_case_agrees_between_solvers() {
        let cfg = ShootingConfig::default();
        let a = solve_expander_graph1d(RegularCone::flat(), &cfg).unwrap();
        let b = solve_expander_rotsym(RegularCone::rotsym(std::f64::consts::FRAC_PI_2, 4).unwrap(), &cfg).unwrap();
        assert_eq!(a.u0(), b.u0());
        assert_eq!(a.sup_a, b.sup_a);
    }

    #[test]
    fn wrong_cone_kind_is_rejected() {
        let cfg = ShootingConfig::default();
        assert!(solve_expander_rotsym(RegularCone::flat(), &cfg).is_err());
        assert!(solve_expander_graph1d(RegularCone::rotsym(1.0, 3).unwrap(), &cfg).is_err());
    }
}
