//! Dormand-Prince 5(4) with adaptive steps.

use crate::{Error, Result};

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights (equal to the last row of `A`).
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
/// Fourth-order embedded weights.
const E: [f64; 7] =
    [5179.0 / 57600.0, 0.0, 7571.0 / 16695.0, 393.0 / 640.0, -92097.0 / 339200.0, 187.0 / 2100.0, 1.0 / 40.0];

/// Absolute and relative tolerances plus safety limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
    pub max_steps: usize,
    /// Abort when any component exceeds this magnitude.
    pub blowup: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { atol: 1e-10, rtol: 1e-10, max_steps: 1_000_000, blowup: 1e8 }
    }
}

impl Tolerance {
    pub fn new(atol: f64, rtol: f64) -> Self {
        Tolerance { atol, rtol, ..Tolerance::default() }
    }
}

/// Integrate `y' = f(x, y)` from `x0` to `x1` (either direction).
pub fn integrate<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    x0: f64,
    y0: [f64; N],
    x1: f64,
    tol: &Tolerance,
) -> Result<[f64; N]> {
    let span = x1 - x0;
    if span == 0.0 {
        return Ok(y0);
    }
    let dir = span.signum();
    let mut x = x0;
    let mut y = y0;
    let mut h = dir * (1e-3 * span.abs()).min(1e-2);
    let mut k = [[0.0; N]; 7];
    k[0] = f(x, &y);
    for _ in 0..tol.max_steps {
        if (x1 - x) * dir <= 0.0 {
            return Ok(y);
        }
        if (x + h - x1) * dir > 0.0 {
            h = x1 - x;
        }
        for s in 1..7 {
            let mut ys = y;
            for j in 0..s {
                let a = A[s][j];
                if a != 0.0 {
                    for c in 0..N {
                        ys[c] += h * a * k[j][c];
                    }
                }
            }
            k[s] = f(x + C[s] * h, &ys);
        }
        let mut y5 = y;
        let mut err: f64 = 0.0;
        for c in 0..N {
            let mut d5 = 0.0;
            let mut d4 = 0.0;
            for s in 0..7 {
                d5 += B[s] * k[s][c];
                d4 += E[s] * k[s][c];
            }
            y5[c] = y[c] + h * d5;
            let scale = tol.atol + tol.rtol * y[c].abs().max(y5[c].abs());
            err = err.max((h * (d5 - d4)).abs() / scale);
        }
        if !err.is_finite() || y5.iter().any(|v| !v.is_finite()) {
            h *= 0.25;
            if h.abs() < 1e-14 * (1.0 + x.abs()) {
                return Err(Error::Blowup { t: x, reason: "ODE state became non-finite".into() });
            }
            continue;
        }
        if err <= 1.0 {
            let landed = (x + h - x1) * dir >= 0.0;
            x = if landed { x1 } else { x + h };
            y = y5;
            k[0] = k[6];
            if y.iter().any(|v| v.abs() > tol.blowup) {
                return Err(Error::Blowup { t: x, reason: format!("ODE state exceeded {:e}", tol.blowup) });
            }
            if landed {
                return Ok(y);
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
        if h.abs() < 1e-14 * (1.0 + x.abs()) {
            return Err(Error::NotConverged(format!("step size underflow at x = {x}")));
        }
    }
    Err(Error::NotConverged(format!("more than {} steps", tol.max_steps)))
}

/// Integrate through the increasing or decreasing sequence `nodes`, returning
/// the state at each node (the first node carries `y0`).
pub fn integrate_nodes<const N: usize>(
    f: &impl Fn(f64, &[f64; N]) -> [f64; N],
    nodes: &[f64],
    y0: [f64; N],
    tol: &Tolerance,
) -> Result<Vec<[f64; N]>> {
    let mut out = Vec::with_capacity(nodes.len());
    let mut y = y0;
    out.push(y);
    for w in nodes.windows(2) {
        y = integrate(f, w[0], y, w[1], tol)?;
        out.push(y);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_and_oscillator() {
        let tol = Tolerance::default();
        let y = integrate(&|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 2.0, &tol).unwrap();
        assert!((y[0] - 2f64.exp()).abs() < 1e-8);
        let y = integrate(&|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, &tol).unwrap();
        assert!((y[0] - 10f64.sin()).abs() < 1e-8);
        assert!((y[1] - 10f64.cos()).abs() < 1e-8);
        let back = integrate(&|_, y: &[f64; 2]| [y[1], -y[0]], 10.0, y, 0.0, &tol).unwrap();
        assert!(back[0].abs() < 1e-8 && (back[1] - 1.0).abs() < 1e-8);
    }

    #[test]
    fn blowup_is_reported() {
        // y' = y^2 from y(0) = 1 blows up at x = 1
        let r = integrate(&|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, &Tolerance::default());
        assert!(matches!(r, Err(Error::Blowup { .. })));
    }

    #[test]
    fn node_integration_matches_direct() {
        let f = |_: f64, y: &[f64; 1]| [-2.0 * y[0]];
        let nodes: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let ys = integrate_nodes(&f, &nodes, [1.0], &Tolerance::default()).unwrap();
        for (x, y) in nodes.iter().zip(&ys) {
            assert!((y[0] - (-2.0 * x).exp()).abs() < 1e-9);
        }
    }
}
