use crate::expander::Bump;
use crate::geometry::{ProfileFn, RegularCone};
use crate::{Error, Result};

/// `max phi` for `phi(s) = exp(1 / (s^2 - 1))`.
pub const PHI_MAX: f64 = 0.367_879_441_171_442_3;
/// `max |phi'|`.
pub const PHI1_MAX: f64 = 0.798_429_751_833_553_4;
/// `max |phi''|`.
pub const PHI2_MAX: f64 = 7.749_704_941_692_77;
/// Fraction of the admissible amplitude actually used.
pub const BOUND_SAFETY: f64 = 0.9;

/// Bump of width `w` centered at `c` whose amplitude satisfies
/// `|v| + |v'| <= delta` and `|v''| <= lambda` with a safety margin.
pub fn bump_from_bounds(center: f64, width: f64, delta: f64, lambda: f64) -> Result<Bump> {
    if !(delta >= 0.0 && lambda >= 0.0 && width > 0.0) {
        return Err(Error::invalid("need delta, lambda >= 0 and a positive width"));
    }
    let by_delta = delta / (PHI_MAX + PHI1_MAX / width);
    let by_lambda = lambda * width * width / PHI2_MAX;
    Ok(Bump { center, width, amplitude: BOUND_SAFETY * by_delta.min(by_lambda) })
}

/// `C^2` smoothing of `|x|`: `(3 + 6 x^2 - x^4) / 8` on `|x| < 1`.
pub fn smoothed_abs(x: f64) -> f64 {
    let a = x.abs();
    if a >= 1.0 {
        a
    } else {
        let x2 = x * x;
        (3.0 + 6.0 * x2 - x2 * x2) / 8.0
    }
}

fn smoothed_abs_slope(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        x.signum()
    } else {
        (12.0 * x - 4.0 * x * x * x) / 8.0
    }
}

/// The cone with its vertex rounded off inside `|x| < 1`.
#[derive(Debug, Clone, Copy)]
pub struct SmoothedCone {
    pub cone: RegularCone,
}

impl SmoothedCone {
    pub fn new(cone: RegularCone) -> Result<Self> {
        cone.slope_pair().ok_or_else(|| Error::invalid("smoothing needs a 1-D cone"))?;
        Ok(SmoothedCone { cone })
    }

    fn parts(&self) -> (f64, f64) {
        let (a, b) = self.cone.slope_pair().unwrap_or((0.0, 0.0));
        (0.5 * (b - a), 0.5 * (b + a))
    }
}

impl ProfileFn for SmoothedCone {
    fn value(&self, x: f64) -> f64 {
        let (even, odd) = self.parts();
        even * smoothed_abs(x) + odd * x
    }

    fn slope(&self, x: f64) -> f64 {
        let (even, odd) = self.parts();
        even * smoothed_abs_slope(x) + odd
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derivative_maxima_match_dense_sampling() {
        let b = Bump { center: 0.0, width: 1.0, amplitude: 1.0 };
        let (mut m0, mut m1, mut m2) = (0.0f64, 0.0f64, 0.0f64);
        for k in 0..=400_000 {
            let s = -1.0 + 2.0 * k as f64 / 400_000.0;
            m0 = m0.max(b.value(s).abs());
            m1 = m1.max(b.derivative(s).abs());
            m2 = m2.max(b.second_derivative(s).abs());
        }
        assert!((m0 - PHI_MAX).abs() < 1e-12);
        assert!(m1 <= PHI1_MAX && PHI1_MAX - m1 < 1e-8);
        assert!(m2 <= PHI2_MAX && PHI2_MAX - m2 < 1e-7);
    }

    #[test]
    fn derived_bump_meets_bounds() {
        for (delta, lambda, w) in [(0.05, 1.0, 1.0), (0.5, 0.1, 2.0), (0.2, 3.0, 0.5)] {
            let b = bump_from_bounds(0.3, w, delta, lambda).unwrap();
            let xs: Vec<f64> = (0..=20_000).map(|k| -3.0 + 6.0 * k as f64 / 20_000.0).collect();
            let s0 = xs.iter().fold(0.0f64, |m, &x| m.max(b.value(x).abs()));
            let s1 = xs.iter().fold(0.0f64, |m, &x| m.max(b.derivative(x).abs()));
            let s2 = xs.iter().fold(0.0f64, |m, &x| m.max(b.second_derivative(x).abs()));
            assert!(s0 + s1 <= delta && s2 <= lambda);
            assert!(s0 + s1 >= 0.8 * delta || s2 >= 0.8 * lambda);
        }
        assert_eq!(bump_from_bounds(0.0, 1.0, 0.0, 1.0).unwrap().amplitude, 0.0);
    }

    #[test]
    fn smoothed_cone_is_c2_and_matches_outside() {
        let s = SmoothedCone::new(RegularCone::slopes(-0.2, 0.6).unwrap()).unwrap();
        for x in [-3.0, -1.0, 1.0, 2.5] {
            assert!((s.value(x) - s.cone.profile(x)).abs() < 1e-15);
        }
        let e = 1e-6;
        for x in [-1.0, 1.0] {
            let left = (s.slope(x - e) - s.slope(x - 2.0 * e)) / e;
            let right = (s.slope(x + 2.0 * e) - s.slope(x + e)) / e;
            assert!((s.slope(x - e) - s.slope(x + e)).abs() < 1e-5);
            assert!((left - right).abs() < 1e-4);
        }
        assert!(SmoothedCone::new(RegularCone::rotsym(1.0, 3).unwrap()).is_err());
    }
}
