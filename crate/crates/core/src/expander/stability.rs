use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::shooting::{graph1d_rhs, rotsym_rhs};
use super::{ExpanderKind, ExpanderSolution};
use crate::par::{self, Execution};
use crate::{Error, Result};

/// Smooth compactly supported bump `a exp(1 / (((x - c) / w)^2 - 1))` on
/// `|x - c| < w`. Its peak value is `a / e`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub center: f64,
    pub width: f64,
    pub amplitude: f64,
}

impl Bump {
    pub fn value(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        self.amplitude * (1.0 / (s * s - 1.0)).exp()
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let q = s * s - 1.0;
        self.value(x) * (-2.0 * s / (q * q)) / self.width
    }

    pub fn second_derivative(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.width;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let q = s * s - 1.0;
        let g1 = -2.0 * s / (q * q);
        let g2 = (6.0 * s * s + 2.0) / (q * q * q);
        self.value(x) * (g1 * g1 + g2) / (self.width * self.width)
    }

    pub fn samples(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&x| self.value(x)).collect()
    }
}

/// `count` bumps drawn from a seeded ChaCha8 stream, each supported in
/// `[lo, hi]`, with widths in `[0.2, 2]` (capped by the window) and
/// amplitudes in `[-1, 1]` bounded away from zero.
pub fn random_bumps(seed: u64, count: usize, lo: f64, hi: f64) -> Result<Vec<Bump>> {
    if !(hi - lo > 0.4) {
        return Err(Error::invalid("bump window must be wider than 0.4"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok((0..count)
        .map(|_| {
            let width = rng.random_range(0.2..=2.0f64.min(0.5 * (hi - lo)));
            let center = rng.random_range(lo + width..=hi - width);
            let magnitude = rng.random_range(0.1..=1.0);
            let amplitude = if rng.random_bool(0.5) { magnitude } else { -magnitude };
            Bump { center, width, amplitude }
        })
        .collect())
}

/// Result of evaluating the stability form on one test function.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticFormReport {
    pub id: usize,
    pub value: f64,
    /// Weighted `L^2` mass of the test function.
    pub mass: f64,
    /// Largest value of `e^{|X|^2/4}` on the support.
    pub weight_bound: f64,
    pub sup_a: f64,
    pub positive: bool,
}

/// Per-node quantities of the base surface used by the form.
struct Base {
    /// Measure density `W e^{|X|^2/4} r^{n-1}` at nodes.
    density: Vec<f64>,
    /// `|A|^2` at nodes.
    a2: Vec<f64>,
    /// Gradient density `e^{|X|^2/4} r^{n-1} / W` at edge midpoints.
    grad_density: Vec<f64>,
    weight: Vec<f64>,
    /// Trapezoid weights.
    tau: Vec<f64>,
}

fn base(sol: &ExpanderSolution) -> Base {
    let x = &sol.x;
    let n = x.len();
    let dim = match sol.kind {
        ExpanderKind::Graph1d => 1,
        ExpanderKind::Rotsym { dim } => dim,
    };
    let radial = |r: f64| if dim == 1 { 1.0 } else { r.abs().powi(dim as i32 - 1) };
    let second = |i: usize| match sol.kind {
        ExpanderKind::Graph1d => graph1d_rhs(x[i], &[sol.u[i], sol.du[i]])[1],
        ExpanderKind::Rotsym { dim } => {
            if x[i] == 0.0 {
                sol.u[0] / (2.0 * dim as f64)
            } else {
                rotsym_rhs(dim)(x[i], &[sol.u[i], sol.du[i]])[1]
            }
        }
    };
    let mut density = Vec::with_capacity(n);
    let mut a2 = Vec::with_capacity(n);
    let mut weight = Vec::with_capacity(n);
    for i in 0..n {
        let w = (1.0 + sol.du[i] * sol.du[i]).sqrt();
        let k1 = second(i) / (w * w * w);
        let kr = match sol.kind {
            ExpanderKind::Graph1d => 0.0,
            ExpanderKind::Rotsym { .. } if x[i] == 0.0 => k1,
            ExpanderKind::Rotsym { .. } => sol.du[i] / (x[i] * w),
        };
        let e = ((x[i] * x[i] + sol.u[i] * sol.u[i]) / 4.0).exp();
        weight.push(e);
        density.push(w * e * radial(x[i]));
        a2.push(k1 * k1 + (dim as f64 - 1.0) * kr * kr);
    }
    let grad_density = (0..n - 1)
        .map(|i| {
            let xm = 0.5 * (x[i] + x[i + 1]);
            let (um, dm) = sol.eval(xm);
            let w = (1.0 + dm * dm).sqrt();
            ((xm * xm + um * um) / 4.0).exp() * radial(xm) / w
        })
        .collect();
    let mut tau = vec![0.0; n];
    for i in 0..n - 1 {
        let h = x[i + 1] - x[i];
        tau[i] += 0.5 * h;
        tau[i + 1] += 0.5 * h;
    }
    Base { density, a2, grad_density, weight, tau }
}

fn check_samples(sol: &ExpanderSolution, v: &[f64]) -> Result<()> {
    let n = sol.x.len();
    if v.len() != n {
        return Err(Error::invalid(format!("test function has {} samples, base has {n}", v.len())));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("test function is not finite"));
    }
    let outer_touch = v[n - 1] != 0.0 || v[n - 2] != 0.0;
    let inner_touch = matches!(sol.kind, ExpanderKind::Graph1d) && (v[0] != 0.0 || v[1] != 0.0);
    if outer_touch || inner_touch {
        return Err(Error::invalid("test function support touches the boundary of the stored window"));
    }
    Ok(())
}

fn bilinear_with(b: &Base, x: &[f64], v: &[f64], w: &[f64]) -> f64 {
    let mut grad = 0.0;
    for i in 0..x.len() - 1 {
        let h = x[i + 1] - x[i];
        grad += (v[i + 1] - v[i]) * (w[i + 1] - w[i]) / h * b.grad_density[i];
    }
    let mut zeroth = 0.0;
    for i in 0..x.len() {
        zeroth += b.tau[i] * (0.5 - b.a2[i]) * v[i] * w[i] * b.density[i];
    }
    grad + zeroth
}

fn mass_with(b: &Base, v: &[f64], w: &[f64]) -> f64 {
    (0..v.len()).map(|i| b.tau[i] * v[i] * w[i] * b.density[i]).sum()
}

/// Weighted `L^2` mass `int v^2 e^{|X|^2/4}` over the expander.
pub fn mass(sol: &ExpanderSolution, v: &[f64]) -> Result<f64> {
    check_samples(sol, v)?;
    let b = base(sol);
    Ok(mass_with(&b, v, v))
}

/// `int [|grad v|^2 + (1/2 - |A|^2) v^2] e^{|X|^2/4}` for samples of `v` at
/// the expander's nodes. Gradients use edge differences with midpoint
/// weights; the zeroth-order term uses trapezoid weights at the nodes.
pub fn quadratic_form(sol: &ExpanderSolution, v: &[f64], id: usize) -> Result<QuadraticFormReport> {
    check_samples(sol, v)?;
    let b = base(sol);
    let value = bilinear_with(&b, &sol.x, v, v);
    let weight_bound = (0..v.len()).filter(|&i| v[i] != 0.0).map(|i| b.weight[i]).fold(0.0, f64::max);
    Ok(QuadraticFormReport {
        id,
        value,
        mass: mass_with(&b, v, v),
        weight_bound,
        sup_a: sol.sup_a,
        positive: value > 0.0,
    })
}

/// Smallest generalized eigenvalue of the form over a finite basis.
#[derive(Debug, Clone)]
pub struct RayleighReport {
    pub min_eigenvalue: f64,
    pub eigenvalues: Vec<f64>,
    pub basis_size: usize,
    pub sup_a: f64,
    /// `1/2 - sup|A|^2`, the pointwise lower bound on the quotient.
    pub lower_bound: f64,
}

/// Rayleigh-Ritz estimate of the bottom of the form relative to the
/// weighted mass, via Cholesky reduction and a symmetric eigensolve.
pub fn rayleigh_min(sol: &ExpanderSolution, basis: &[Vec<f64>], exec: Execution) -> Result<RayleighReport> {
    if basis.is_empty() {
        return Err(Error::invalid("empty basis"));
    }
    for v in basis {
        check_samples(sol, v)?;
    }
    let b = base(sol);
    let k = basis.len();
    let rows = par::map_range(exec, k, |i| {
        (0..k)
            .map(|j| (bilinear_with(&b, &sol.x, &basis[i], &basis[j]), mass_with(&b, &basis[i], &basis[j])))
            .collect::<Vec<_>>()
    });
    let stiff = DMatrix::from_fn(k, k, |i, j| 0.5 * (rows[i][j].0 + rows[j][i].0));
    let m = DMatrix::from_fn(k, k, |i, j| 0.5 * (rows[i][j].1 + rows[j][i].1));
    let chol = m.cholesky().ok_or_else(|| Error::invalid("basis mass matrix is singular"))?;
    let l = chol.l();
    let linv = l.clone().try_inverse().ok_or_else(|| Error::invalid("basis mass matrix is singular"))?;
    let reduced = &linv * stiff * linv.transpose();
    let sym = 0.5 * (&reduced + reduced.transpose());
    let eig = SymmetricEigen::new(sym);
    let mut eigenvalues: Vec<f64> = eig.eigenvalues.iter().cloned().collect();
    eigenvalues.sort_by(f64::total_cmp);
    Ok(RayleighReport {
        min_eigenvalue: eigenvalues[0],
        eigenvalues,
        basis_size: k,
        sup_a: sol.sup_a,
        lower_bound: 0.5 - sol.sup_a * sol.sup_a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expander::{solve_expander_graph1d, ShootingConfig};
    use crate::geometry::RegularCone;
    use proptest::prelude::*;

    fn solve(m: f64) -> ExpanderSolution {
        let cfg = ShootingConfig { refinement_check: false, ..ShootingConfig::default() };
        solve_expander_graph1d(RegularCone::symmetric(m).unwrap(), &cfg).unwrap()
    }

    #[test]
    fn bump_derivatives_match_differences() {
        let b = Bump { center: 0.3, width: 0.8, amplitude: -0.7 };
        let e = 1e-5;
        for x in [-0.3, 0.0, 0.2, 0.5, 0.9] {
            let fd1 = (b.value(x + e) - b.value(x - e)) / (2.0 * e);
            let fd2 = (b.derivative(x + e) - b.derivative(x - e)) / (2.0 * e);
            assert!((fd1 - b.derivative(x)).abs() < 1e-7);
            assert!((fd2 - b.second_derivative(x)).abs() < 1e-6);
        }
        assert!((b.value(0.3) + 0.7 / std::f64::consts::E).abs() < 1e-15);
    }

    #[test]
    fn zero_function_and_flat_base() {
        let flat = solve(0.0);
        let zero = vec![0.0; flat.x.len()];
        assert_eq!(quadratic_form(&flat, &zero, 0).unwrap().value, 0.0);
        for b in random_bumps(3, 20, -5.0, 5.0).unwrap() {
            let q = quadratic_form(&flat, &b.samples(&flat.x), 0).unwrap();
            assert!(q.positive && q.value >= 0.5 * q.mass);
        }
    }

    #[test]
    fn boundary_support_is_rejected() {
        let flat = solve(0.0);
        let b = Bump { center: 20.0, width: 1.0, amplitude: 1.0 };
        assert!(quadratic_form(&flat, &b.samples(&flat.x), 0).is_err());
    }

    #[test]
    fn single_function_quotient_is_exact() {
        let s = solve(0.5);
        let v = Bump { center: 0.4, width: 1.5, amplitude: 1.0 }.samples(&s.x);
        let q = quadratic_form(&s, &v, 0).unwrap();
        let r = rayleigh_min(&s, &[v], Execution::Sequential).unwrap();
        assert!((r.min_eigenvalue - q.value / q.mass).abs() < 1e-12 * (q.value / q.mass).abs().max(1.0));
    }

    #[test]
    fn rayleigh_bound_on_curved_expander() {
        let s = solve(1.0);
        assert!(s.sup_a < std::f64::consts::FRAC_1_SQRT_2);
        let basis: Vec<Vec<f64>> =
            (0..12).map(|k| Bump { center: -3.0 + 0.5 * k as f64, width: 1.0, amplitude: 1.0 }.samples(&s.x)).collect();
        let seq = rayleigh_min(&s, &basis, Execution::Sequential).unwrap();
        let par = rayleigh_min(&s, &basis, Execution::Parallel).unwrap();
        assert_eq!(seq.eigenvalues, par.eigenvalues);
        assert!(seq.min_eigenvalue >= seq.lower_bound - 1e-3);
        let mut dependent = basis.clone();
        dependent.push(basis[0].clone());
        assert!(rayleigh_min(&s, &dependent, Execution::Sequential).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn form_dominates_pointwise_bound(c in -4.0..4.0f64, w in 0.2..2.0f64, a in 0.1..2.0f64) {
            static BASE: std::sync::OnceLock<ExpanderSolution> = std::sync::OnceLock::new();
            let s = BASE.get_or_init(|| solve(0.5));
            let v = Bump { center: c, width: w, amplitude: a }.samples(&s.x);
            let q = quadratic_form(s, &v, 0).unwrap();
            prop_assert!(q.value >= (0.5 - s.sup_a * s.sup_a) * q.mass - 1e-12 * q.mass);
        }
    }
}
