use std::io::Write;

use super::{gaussian_area_samples, GaussianQuery, DEFAULT_TRUNCATION};
use crate::geometry::{AsCurve, CurveSamples, Vec2};
use crate::par::{self, Execution};
use crate::{Error, Result};

/// Grid over centers and log-scales, refined around the incumbent.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropySearchConfig {
    pub p_min: Vec2,
    pub p_max: Vec2,
    /// Samples per axis of the center box.
    pub p_steps: [usize; 2],
    pub log_t_min: f64,
    pub log_t_max: f64,
    pub log_t_steps: usize,
    pub refinement_rounds: usize,
    /// Spacing reduction per refinement round.
    pub refinement_factor: usize,
    pub truncation: f64,
}

impl EntropySearchConfig {
    /// Box spanning the stored samples, `log t` in `[-6, 6]`, two rounds of
    /// 4x refinement.
    pub fn spanning(curve: &impl AsCurve) -> Self {
        let pts = curve.curve_samples().points;
        let (mut lo, mut hi) = (pts[0], pts[0]);
        for p in &pts {
            lo = lo.inf(p);
            hi = hi.sup(p);
        }
        EntropySearchConfig {
            p_min: lo,
            p_max: hi,
            p_steps: [21, 21],
            log_t_min: -6.0,
            log_t_max: 6.0,
            log_t_steps: 49,
            refinement_rounds: 2,
            refinement_factor: 4,
            truncation: DEFAULT_TRUNCATION,
        }
    }

    pub fn with_box(mut self, p_min: Vec2, p_max: Vec2) -> Self {
        self.p_min = p_min;
        self.p_max = p_max;
        self
    }

    pub fn with_log_t(mut self, lo: f64, hi: f64, steps: usize) -> Self {
        self.log_t_min = lo;
        self.log_t_max = hi;
        self.log_t_steps = steps;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.p_steps[0] == 0 || self.p_steps[1] == 0 || self.log_t_steps == 0 {
            return Err(Error::invalid("empty entropy search grid"));
        }
        if !(self.log_t_min.is_finite() && self.log_t_max.is_finite() && self.log_t_max >= self.log_t_min) {
            return Err(Error::invalid("log-t range must be finite and ordered"));
        }
        if self.refinement_rounds == 0 {
            return Err(Error::invalid("at least one refinement round is required"));
        }
        if self.refinement_factor < 2 {
            return Err(Error::invalid("refinement factor must be at least 2"));
        }
        if (0..2).any(|k| self.p_max[k] < self.p_min[k]) {
            return Err(Error::invalid("center box bounds are not ordered"));
        }
        Ok(())
    }
}

/// Incumbent after one search round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchRound {
    pub center: Vec2,
    pub t: f64,
    pub value: f64,
    pub truncation_bound: f64,
}

/// A lower bound on the entropy and where it was attained.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub best_value: f64,
    pub arg_p: Vec2,
    pub arg_t: f64,
    /// `sqrt(1 + L^2)` for x-monotone curves with Lipschitz constant `L`.
    pub upper_bound_hint: Option<f64>,
    pub samples: usize,
    /// Best point of the coarse grid and of each refinement round.
    pub rounds: Vec<SearchRound>,
}

impl EntropyReport {
    /// CSV with columns `px,py,t,F,truncation_bound`, one row per round.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "px,py,t,F,truncation_bound")?;
        for r in &self.rounds {
            writeln!(w, "{:e},{:e},{:e},{:e},{:e}", r.center.x, r.center.y, r.t, r.value, r.truncation_bound)?;
        }
        Ok(())
    }
}

/// `sqrt(1 + L^2)`, the entropy bound for an `L`-Lipschitz entire graph.
pub fn lipschitz_entropy_bound(lipschitz: f64) -> Result<f64> {
    if !(lipschitz >= 0.0) {
        return Err(Error::invalid(format!("Lipschitz constant {lipschitz} must be nonnegative")));
    }
    Ok(lipschitz.hypot(1.0))
}

fn lipschitz_of(s: &CurveSamples) -> Option<f64> {
    if !s.x_monotone {
        return None;
    }
    let mut l: f64 = 0.0;
    for w in s.points.windows(2) {
        let d = w[1] - w[0];
        l = l.max((d.y / d.x).abs());
    }
    if let Some(tails) = s.tails {
        for r in tails {
            if r.dir.x == 0.0 {
                return None;
            }
            l = l.max((r.dir.y / r.dir.x).abs());
        }
    }
    Some(l)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn spacing(lo: f64, hi: f64, n: usize) -> f64 {
    if n > 1 {
        (hi - lo) / (n - 1) as f64
    } else {
        0.0
    }
}

/// Maximise `F_{P,t}` over a `(P, log t)` grid with local refinement. The
/// result is a lower bound on the entropy; the supremum over unbounded
/// centers and scales is never claimed.
pub fn entropy_lower_bound(curve: &impl AsCurve, cfg: &EntropySearchConfig, exec: Execution) -> Result<EntropyReport> {
    cfg.validate()?;
    let samples = curve.curve_samples();
    let eval = |p: Vec2, log_t: f64| -> Option<SearchRound> {
        let t = log_t.exp();
        let q = GaussianQuery::with_truncation(p, t, cfg.truncation).ok()?;
        let v = gaussian_area_samples(&samples, &q).ok()?;
        Some(SearchRound { center: p, t, value: v.value, truncation_bound: v.truncation_bound })
    };

    let mut xs = linspace(cfg.p_min.x, cfg.p_max.x, cfg.p_steps[0]);
    let mut ys = linspace(cfg.p_min.y, cfg.p_max.y, cfg.p_steps[1]);
    let mut ls = linspace(cfg.log_t_min, cfg.log_t_max, cfg.log_t_steps);
    let mut dx = spacing(cfg.p_min.x, cfg.p_max.x, cfg.p_steps[0]);
    let mut dy = spacing(cfg.p_min.y, cfg.p_max.y, cfg.p_steps[1]);
    let mut dl = spacing(cfg.log_t_min, cfg.log_t_max, cfg.log_t_steps);

    let mut rounds = Vec::new();
    let mut total = 0;
    let mut best: Option<(SearchRound, f64)> = None;
    for round in 0..=cfg.refinement_rounds {
        let mut points: Vec<(Vec2, f64)> = Vec::with_capacity(xs.len() * ys.len() * ls.len());
        for &x in &xs {
            for &y in &ys {
                points.extend(ls.iter().map(|&l| (Vec2::new(x, y), l)));
            }
        }
        total += points.len();
        let results = par::map(exec, &points, |&(p, l)| eval(p, l));
        let scores: Vec<f64> = results.iter().map(|r| r.map_or(f64::NEG_INFINITY, |r| r.value)).collect();
        if let Some((i, _)) = par::argmax(&scores) {
            let cand = results[i].expect("finite score");
            if best.is_none_or(|(b, _)| cand.value > b.value) {
                best = Some((cand, points[i].1));
            }
        }
        let Some((inc, log_t)) = best else {
            return Err(Error::invalid("no admissible (P, t) in the entropy search grid"));
        };
        rounds.push(inc);
        if round == cfg.refinement_rounds {
            break;
        }
        let k = cfg.refinement_factor;
        let local = |c: f64, d: f64| -> (Vec<f64>, f64) {
            if d == 0.0 {
                return (vec![c], 0.0);
            }
            let nd = d / k as f64;
            ((0..=2 * k).map(|j| c + (j as f64 - k as f64) * nd).collect(), nd)
        };
        (xs, dx) = local(inc.center.x, dx);
        (ys, dy) = local(inc.center.y, dy);
        (ls, dl) = local(log_t, dl);
    }
    let (inc, _) = best.expect("at least one round");
    Ok(EntropyReport {
        best_value: inc.value,
        arg_p: inc.center,
        arg_t: inc.t,
        upper_bound_hint: lipschitz_of(&samples).map(|l| l.hypot(1.0)),
        samples: total,
        rounds,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{FarField, GraphHypersurface, Grid1D, PolylineCurve, RegularCone};

    #[test]
    fn lipschitz_bound_values() {
        assert_eq!(lipschitz_entropy_bound(0.0).unwrap(), 1.0);
        assert!((lipschitz_entropy_bound(1.0).unwrap() - 2f64.sqrt()).abs() < 1e-15);
        assert!((lipschitz_entropy_bound(0.75).unwrap() - 1.25).abs() < 1e-15);
        assert!(lipschitz_entropy_bound(-0.1).is_err());
    }

    #[test]
    fn flat_line_entropy_is_one() {
        let grid = Grid1D::symmetric(30.0, 0.1).unwrap();
        let g = GraphHypersurface::from_fn(grid, |_| 0.0, RegularCone::flat(), FarField::Cone, 1e-12).unwrap();
        let cfg = EntropySearchConfig::spanning(&g)
            .with_box(Vec2::new(-2.0, -0.5), Vec2::new(2.0, 0.5))
            .with_log_t(-3.0, 3.0, 13);
        let r = entropy_lower_bound(&g, &cfg, Execution::Parallel).unwrap();
        assert!((r.best_value - 1.0).abs() < 1e-6);
        assert_eq!(r.upper_bound_hint, Some(1.0));
    }

    #[test]
    fn circle_entropy_and_argmax() {
        let c = PolylineCurve::circle(Vec2::zeros(), 1.0, 512).unwrap();
        let mut cfg = EntropySearchConfig::spanning(&c);
        cfg.p_steps = [11, 11];
        cfg.log_t_steps = 25;
        let r = entropy_lower_bound(&c, &cfg, Execution::Parallel).unwrap();
        let want = (2.0 * std::f64::consts::PI / std::f64::consts::E).sqrt();
        assert!((r.best_value - want).abs() < 1e-4, "{}", r.best_value);
        assert!(r.arg_p.norm() < 0.05);
        assert!((r.arg_t - 0.5).abs() < 0.05);
        assert!(r.upper_bound_hint.is_none());
        // a second resolution agrees
        cfg.p_steps = [21, 21];
        cfg.log_t_steps = 49;
        let r2 = entropy_lower_bound(&c, &cfg, Execution::Sequential).unwrap();
        assert!((r2.best_value - want).abs() < 1e-4);
    }

    #[test]
    fn empty_grid_is_rejected() {
        let c = PolylineCurve::circle(Vec2::zeros(), 1.0, 64).unwrap();
        let mut cfg = EntropySearchConfig::spanning(&c);
        cfg.log_t_steps = 0;
        assert!(entropy_lower_bound(&c, &cfg, Execution::Sequential).is_err());
        cfg.log_t_steps = 3;
        cfg.refinement_rounds = 0;
        assert!(entropy_lower_bound(&c, &cfg, Execution::Sequential).is_err());
    }

    #[test]
    fn csv_has_one_row_per_round() {
        let c = PolylineCurve::circle(Vec2::zeros(), 1.0, 64).unwrap();
        let mut cfg = EntropySearchConfig::spanning(&c);
        cfg.p_steps = [5, 5];
        cfg.log_t_steps = 9;
        let r = entropy_lower_bound(&c, &cfg, Execution::Sequential).unwrap();
        let mut out = Vec::new();
        r.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert_eq!(text.lines().count(), 1 + cfg.refinement_rounds + 1);
        assert!(text.starts_with("px,py,t,F,truncation_bound"));
    }
}
