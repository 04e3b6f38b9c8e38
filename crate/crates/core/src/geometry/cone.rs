use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// A regular cone: either a wedge over the real line or a rotationally
/// symmetric cone in `R^{n+1}` with its axis along the last coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegularCone {
    /// Graph of `m_minus * x` for `x < 0` and `m_plus * x` for `x >= 0`.
    Slopes1d { m_minus: f64, m_plus: f64 },
    /// Graph of `r * cot(half_angle)` over `R^n`, `n = ambient_dim - 1`.
    Rotsym { half_angle: f64, ambient_dim: usize },
}

impl RegularCone {
    pub fn slopes(m_minus: f64, m_plus: f64) -> Result<Self> {
        let c = RegularCone::Slopes1d { m_minus, m_plus };
        c.validate()?;
        Ok(c)
    }

    /// The symmetric wedge `m |x|`.
    pub fn symmetric(m: f64) -> Result<Self> {
        Self::slopes(-m, m)
    }

    /// `(m_minus, m_plus)` of a 1-D wedge.
    pub fn slope_pair(&self) -> Option<(f64, f64)> {
        match *self {
            RegularCone::Slopes1d { m_minus, m_plus } => Some((m_minus, m_plus)),
            RegularCone::Rotsym { .. } => None,
        }
    }

    pub fn flat() -> Self {
        RegularCone::Slopes1d { m_minus: 0.0, m_plus: 0.0 }
    }

    pub fn rotsym(half_angle: f64, ambient_dim: usize) -> Result<Self> {
        let c = RegularCone::Rotsym { half_angle, ambient_dim };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RegularCone::Slopes1d { m_minus, m_plus } => {
                if !m_minus.is_finite() || !m_plus.is_finite() {
                    return Err(Error::invalid("cone slopes must be finite"));
                }
            }
            RegularCone::Rotsym { half_angle, ambient_dim } => {
                if ambient_dim < 3 {
                    return Err(Error::invalid("rotationally symmetric cones need ambient dimension >= 3"));
                }
                if !(half_angle > 0.0 && half_angle <= std::f64::consts::FRAC_PI_2) {
                    return Err(Error::invalid(format!("half-angle {half_angle} outside (0, pi/2]")));
                }
            }
        }
        Ok(())
    }

    /// Height of the cone over `x` (for rotsym cones `x` is the radius).
    pub fn profile(&self, x: f64) -> f64 {
        match *self {
            RegularCone::Slopes1d { m_minus, m_plus } => {
                if x >= 0.0 {
                    m_plus * x
                } else {
                    m_minus * x
                }
            }
            RegularCone::Rotsym { half_angle, .. } => x.abs() * cot(half_angle),
        }
    }

    /// Asymptotic slope on the side of `x`.
    pub fn slope_at(&self, x: f64) -> f64 {
        match *self {
            RegularCone::Slopes1d { m_minus, m_plus } => {
                if x >= 0.0 {
                    m_plus
                } else {
                    m_minus
                }
            }
            RegularCone::Rotsym { half_angle, .. } => x.signum() * cot(half_angle),
        }
    }

    pub fn lipschitz(&self) -> f64 {
        match *self {
            RegularCone::Slopes1d { m_minus, m_plus } => m_minus.abs().max(m_plus.abs()),
            RegularCone::Rotsym { half_angle, .. } => cot(half_angle).abs(),
        }
    }

    /// Dimension `n` of the hypersurface.
    pub fn dimension(&self) -> usize {
        match *self {
            RegularCone::Slopes1d { .. } => 1,
            RegularCone::Rotsym { ambient_dim, .. } => ambient_dim - 1,
        }
    }

    pub fn is_symmetric(&self) -> bool {
        match *self {
            RegularCone::Slopes1d { m_minus, m_plus } => m_minus == -m_plus,
            RegularCone::Rotsym { .. } => true,
        }
    }
}

fn cot(a: f64) -> f64 {
    // cos(pi/2) is not exactly zero in floating point
    if (a - std::f64::consts::FRAC_PI_2).abs() < 1e-15 {
        0.0
    } else {
        a.cos() / a.sin()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn lipschitz_and_profile() {
        let c = RegularCone::slopes(-0.5, 2.0).unwrap();
        assert_eq!(c.lipschitz(), 2.0);
        assert_eq!(c.profile(-2.0), 1.0);
        assert_eq!(c.profile(3.0), 6.0);
        let r = RegularCone::rotsym(std::f64::consts::FRAC_PI_2, 3).unwrap();
        assert_eq!(r.profile(5.0), 0.0);
    }

    #[test]
    fn rejects_bad_cones() {
        assert!(RegularCone::slopes(f64::INFINITY, 0.0).is_err());
        assert!(RegularCone::rotsym(0.0, 3).is_err());
        assert!(RegularCone::rotsym(1.0, 2).is_err());
    }

    proptest! {
        #[test]
        fn profile_is_homogeneous(m1 in -3.0f64..3.0, m2 in -3.0f64..3.0, x in -50.0f64..50.0, lam in 0.01f64..100.0) {
            let c = RegularCone::slopes(m1, m2).unwrap();
            let lhs = c.profile(lam * x);
            let rhs = lam * c.profile(x);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + rhs.abs()));
        }
    }
}
