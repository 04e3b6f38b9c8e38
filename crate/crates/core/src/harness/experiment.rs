use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use super::blowdown::{compare_blowdown, rescaled_deviation, ExpanderBase, ScaledDeviation};
use super::config::{ExperimentConfig, ExperimentKind};
use super::fit::{fit_decay_exponent, log_times, measured_kappa};
use super::perturbation::{bump_from_bounds, SmoothedCone};
use crate::error::StageContext;
use crate::expander::io::write_expander;
use crate::expander::{
    quadratic_form, random_bumps, rayleigh_min, resampled_rotsym_residual, solve_expander_graph1d_all,
    solve_expander_rotsym, Bump, ExpanderKind, ExpanderSolution, ShootingConfig,
};
use crate::flow::io::write_diagnostics;
use crate::flow::{
    deviation_trace, run_mcf, DeviationConfig, FlowConfig, FlowTrace, Observers, SnapshotSchedule, Window,
};
use crate::gaussian::{entropy_lower_bound, lipschitz_entropy_bound, monotonicity_trace, EntropySearchConfig};
use crate::geometry::io::read_geometry;
use crate::geometry::{
    closest_point_deviation, AsCurve, FarField, Geometry, GraphHypersurface, Grid1D, PolylineCurve, ProfileFn,
    RegularCone, Vec2,
};
use crate::par::{self, Execution};
use crate::{Error, Result};

/// One named pass/fail outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

/// Everything an experiment reports; serialized as `verdicts.json`.
#[derive(Debug, Clone, Serialize)]
pub struct ExperimentSummary {
    pub name: String,
    pub kind: ExperimentKind,
    pub out_dir: PathBuf,
    pub verdicts: Vec<Verdict>,
    pub values: BTreeMap<String, f64>,
}

impl ExperimentSummary {
    /// True when at least one verdict was issued and all passed.
    pub fn passed(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.pass)
    }

    pub fn verdict(&self, name: &str) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| v.name == name)
    }
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    dir: PathBuf,
    verbose: bool,
    log: Vec<String>,
    verdicts: Vec<Verdict>,
    values: BTreeMap<String, f64>,
}

impl Run<'_> {
    fn info(&mut self, msg: impl Into<String>) {
        let msg = msg.into();
        if self.verbose {
            eprintln!("[{}] {msg}", self.cfg.name);
        }
        self.log.push(msg);
    }

    fn verdict(&mut self, name: impl Into<String>, pass: bool, detail: impl Into<String>) {
        let v = Verdict { name: name.into(), pass, detail: detail.into() };
        self.info(format!("{} {}: {}", if v.pass { "PASS" } else { "FAIL" }, v.name, v.detail));
        self.verdicts.push(v);
    }

    fn value(&mut self, key: &str, v: f64) {
        self.values.insert(key.into(), v);
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        Ok(BufWriter::new(File::create(self.dir.join(name))?))
    }

    fn write_trace(&self, name: &str, trace: &FlowTrace) -> Result<()> {
        let mut w = self.create(name)?;
        write_diagnostics(&mut w, trace)?;
        w.flush()?;
        Ok(())
    }
}

/// Run the pipeline of `cfg.kind`, writing CSV series, `verdicts.json` and
/// `run.log` into `cfg.out_dir`. Verdict failures are reported in the
/// summary; errors name the failing stage.
pub fn run_experiment(cfg: &ExperimentConfig, verbose: bool) -> Result<ExperimentSummary> {
    cfg.validate().stage("config")?;
    fs::create_dir_all(&cfg.out_dir)?;
    fs::write(cfg.out_dir.join("config.toml"), cfg.to_toml_string()?)?;
    let mut run =
        Run { cfg, dir: cfg.out_dir.clone(), verbose, log: Vec::new(), verdicts: Vec::new(), values: BTreeMap::new() };
    run.info(format!("experiment {} ({}), seed {}", cfg.name, cfg.kind.as_str(), cfg.seed));
    let outcome = match cfg.kind {
        ExperimentKind::SelfSimilarity => self_similarity(&mut run),
        ExperimentKind::ExpanderStability => expander_stability(&mut run),
        ExperimentKind::EntropyMonotonicity => entropy_monotonicity(&mut run),
        ExperimentKind::CurvatureDecay => curvature_decay(&mut run),
        ExperimentKind::ExpanderAtlas => expander_atlas(&mut run),
    };
    if let Err(e) = &outcome {
        run.info(format!("error: {e}"));
    }
    let summary = ExperimentSummary {
        name: cfg.name.clone(),
        kind: cfg.kind,
        out_dir: cfg.out_dir.clone(),
        verdicts: run.verdicts,
        values: run.values,
    };
    let passed = summary.passed();
    let mut log = run.log;
    if outcome.is_ok() {
        log.push(format!("overall: {}", if passed { "PASS" } else { "FAIL" }));
    }
    fs::write(cfg.out_dir.join("run.log"), log.join("\n") + "\n")?;
    fs::write(
        cfg.out_dir.join("verdicts.json"),
        serde_json::to_string_pretty(&summary).map_err(|e| Error::Parse(e.to_string()))?,
    )?;
    outcome.map(|_| summary)
}

fn shooting(cfg: &ExperimentConfig) -> ShootingConfig {
    ShootingConfig {
        x_max: cfg.expander.x_max,
        tol: cfg.expander.tol,
        slope_tol: cfg.expander.slope_tol,
        ..ShootingConfig::default()
    }
}

fn solve_gamma(run: &mut Run) -> Result<ExpanderSolution> {
    let cone = run.cfg.cone.cone()?;
    let mut all = solve_expander_graph1d_all(cone, &shooting(run.cfg)).stage("expander")?;
    if all.len() > 1 {
        let roots: Vec<String> = all.iter().map(|g| format!("{:.9}", g.u0())).collect();
        run.info(format!(
            "{} expanders share the cone, u(0) in [{}]; comparing with the first",
            all.len(),
            roots.join(", ")
        ));
    }
    run.value("expander_roots", all.len() as f64);
    let g = all.remove(0);
    run.info(format!("expander: u(0) = {:.12}, residual {:.3e}, sup|A| = {:.6}", g.u0(), g.residual_sup, g.sup_a));
    run.value("expander_u0", g.u0());
    run.value("expander_sup_a", g.sup_a);
    Ok(g)
}

fn grid(cfg: &ExperimentConfig) -> Result<Grid1D> {
    Grid1D::symmetric(cfg.grid.half_width, cfg.grid.h)
}

/// The configured bump; `(delta, lambda)` take precedence over `amplitude`.
pub fn resolved_bump(cfg: &ExperimentConfig) -> Result<Bump> {
    let i = &cfg.initial;
    match (i.delta, i.lambda) {
        (Some(d), Some(l)) => bump_from_bounds(i.bump_center, i.bump_width, d, l),
        _ => Ok(Bump { center: i.bump_center, width: i.bump_width, amplitude: i.amplitude }),
    }
}

/// Smoothed cone plus bump on the configured grid, or the geometry file.
fn cone_initial(run: &mut Run, far: FarField) -> Result<Geometry> {
    let cfg = run.cfg;
    if let Some(path) = &cfg.initial.geometry_file {
        let (g, _) = read_geometry(BufReader::new(File::open(path)?)).stage("initial data")?;
        run.info(format!("initial data read from {}", path.display()));
        return Ok(match g {
            Geometry::Graph(gr) => Geometry::Graph(gr.with_far_field(far)),
            other => other,
        });
    }
    let cone = cfg.cone.cone()?;
    let smooth = SmoothedCone::new(cone)?;
    let bump = resolved_bump(cfg)?;
    run.info(format!("initial data: smoothed cone plus bump {bump:?}"));
    let g =
        GraphHypersurface::from_fn(grid(cfg)?, |x| smooth.value(x) + bump.value(x), cone, far, cfg.grid.farfield_tol)
            .stage("initial data")?;
    Ok(Geometry::Graph(g))
}

fn flow(run: &mut Run, init: &Geometry, cfg: FlowConfig) -> Result<FlowTrace> {
    let trace = run_mcf(init, &cfg, &Observers::none()).stage("flow")?;
    run.info(format!(
        "flow on [{}, {}]: {} steps of dt = {:.3e}, {} snapshots",
        cfg.t_start,
        cfg.t_end,
        trace.total_steps,
        trace.dt,
        trace.snapshots.len()
    ));
    Ok(trace)
}

fn flow_ok(run: &mut Run, trace: &FlowTrace) -> bool {
    match &trace.failure {
        Some(f) => {
            run.verdict("flow", false, f.clone());
            false
        }
        None => true,
    }
}

fn write_scaled(run: &Run, name: &str, rows: &[ScaledDeviation]) -> Result<()> {
    let mut w = run.create(name)?;
    writeln!(w, "t,scale,v_max,flagged")?;
    for r in rows {
        writeln!(w, "{:e},{:e},{:e},{}", r.t, r.scale, r.v_max, r.flagged)?;
    }
    w.flush()?;
    Ok(())
}

/// Rows of the last decade, in time order, are non-increasing.
fn eventually_non_increasing(t: &[f64], v: &[f64]) -> bool {
    let t_last = t.last().copied().unwrap_or(0.0);
    let tail: Vec<f64> = t.iter().zip(v).filter(|(t, _)| **t >= t_last / 10.0).map(|(_, v)| *v).collect();
    tail.len() >= 2 && tail.windows(2).all(|w| w[1] <= w[0])
}

fn self_similarity(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let f = &cfg.flow;
    let gamma = Arc::new(solve_gamma(run)?);
    let init = cone_initial(run, FarField::Expander(gamma.clone()))?;
    let mut times = log_times(f.t_start, f.t_end, f.snapshots);
    let radii: Vec<f64> = f.blowdown_radii.iter().copied().filter(|r| r * r > f.t_start && r * r <= f.t_end).collect();
    times.extend(radii.iter().map(|r| r * r));
    times.sort_by(f64::total_cmp);
    times.dedup_by(|a, b| (*a - *b).abs() <= 1e-9 * b.abs());
    let fc = FlowConfig::new(f.t_start, f.t_end).with_cfl(f.cfl).with_snapshots(SnapshotSchedule::Times(times));
    let trace = flow(run, &init, fc)?;
    run.write_trace("diagnostics.csv", &trace)?;
    if !flow_ok(run, &trace) {
        return Ok(());
    }
    let base = ExpanderBase::new(&gamma, f.window).stage("deviation")?;
    let rows = rescaled_deviation(&trace, &base).stage("deviation")?;
    write_scaled(run, "rescaled_deviation.csv", &rows)?;
    let t: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let v: Vec<f64> = rows.iter().map(|r| r.v_max).collect();
    let flagged: usize = rows.iter().map(|r| r.flagged).sum();
    run.verdict(
        "eventually_monotone",
        eventually_non_increasing(&t, &v) && flagged == 0,
        format!(
            "rescaled deviation over |x| <= {} non-increasing on the last decade ({flagged} unmatched nodes)",
            f.window
        ),
    );

    if radii.len() >= 2 {
        let rep = compare_blowdown(&trace, &radii, &base).stage("blow-down")?;
        let mut w = run.create("blowdown.csv")?;
        writeln!(w, "R,t,deviation,flagged")?;
        for r in &rep.rows {
            writeln!(w, "{:e},{:e},{:e},{}", r.scale, r.t, r.v_max, r.flagged)?;
        }
        w.flush()?;
        let devs: Vec<String> = rep.rows.iter().map(|r| format!("R={}: {:.3e}", r.scale, r.v_max)).collect();
        run.verdict("blowdown_decreasing", rep.decreasing && !rep.flagged, devs.join(", "));
    }

    let h = init.spacing();
    let last = rows.last().ok_or_else(|| Error::invalid("no rescaled rows"))?;
    let floor = (h * h + trace.dt) / last.t.sqrt();
    run.value("final_deviation", last.v_max);
    run.value("scheme_floor", floor);
    run.verdict(
        "final_deviation",
        last.v_max < 10.0 * floor,
        format!("{:.3e} at t = {} against 10 x floor {:.3e}", last.v_max, last.t, 10.0 * floor),
    );
    if let (Geometry::Graph(g0), Geometry::Graph(g1)) = (&trace.snapshots[0].geometry, &trace.last().geometry) {
        let excess = |g: &GraphHypersurface, t: f64| -> f64 {
            let s = t.sqrt();
            let x = g.grid().nodes();
            let d: Vec<f64> = x.iter().zip(g.heights()).map(|(x, u)| u - s * gamma.eval(x / s).0).collect();
            h * (d.iter().sum::<f64>() - 0.5 * (d[0] + d[d.len() - 1]))
        };
        let m0 = excess(g0, trace.snapshots[0].t);
        let m1 = excess(g1, trace.last().t);
        run.info(format!("area between flow and expander: {m0:.6e} -> {m1:.6e}"));
        run.value("excess_area_start", m0);
        run.value("excess_area_end", m1);
    }
    Ok(())
}

fn expander_stability(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let f = &cfg.flow;
    let gamma = Arc::new(solve_gamma(run)?);
    let reference = gamma.graph_at_time(grid(cfg)?, f.t_start, cfg.grid.farfield_tol).stage("initial data")?;
    let bump = resolved_bump(cfg)?;
    run.info(format!("perturbation {bump:?}"));
    run.value("bump_amplitude", bump.amplitude);
    let x = reference.grid().nodes();
    let heights: Vec<f64> = reference.heights().iter().zip(&x).map(|(u, x)| u + bump.value(*x)).collect();
    let perturbed = GraphHypersurface::new(
        *reference.grid(),
        heights,
        *reference.cone(),
        reference.far_field().clone(),
        cfg.grid.farfield_tol,
    )
    .stage("initial data")?;
    let (reference, perturbed) = (Geometry::Graph(reference), Geometry::Graph(perturbed));

    if let (Some(delta), Some(lambda)) = (cfg.initial.delta, cfg.initial.lambda) {
        let base = reference.fields()?;
        let dev = closest_point_deviation(&base, &perturbed.curve_samples(), None).stage("hypotheses")?;
        let grad = dev.field.grad_v();
        let hess = base.arc_derivative(&grad);
        let keep = |i: &usize| base.interior.contains(i) && !dev.flagged.contains(i);
        let sup = |v: &[f64]| (0..v.len()).filter(keep).fold(0.0f64, |m, i| m.max(v[i].abs()));
        let (s0, s1, s2) = (sup(&dev.field.v), sup(&grad), sup(&hess));
        run.value("initial_v_plus_grad", s0 + s1);
        run.value("initial_hessian", s2);
        run.verdict(
            "hypotheses",
            s0 + s1 <= delta && s2 <= lambda,
            format!("|v| + |grad v| = {:.4e} (delta {delta}), |hess v| = {s2:.4e} (lambda {lambda})", s0 + s1),
        );
    }

    let fc = FlowConfig::new(f.t_start, f.t_end).with_cfl(f.cfl).with_snapshots(SnapshotSchedule::Times(log_times(
        f.t_start,
        f.t_end,
        f.snapshots,
    )));
    let inits = [reference, perturbed];
    let traces = par::map(Execution::Parallel, &inits, |g| run_mcf(g, &fc, &Observers::none()));
    let mut traces = traces.into_iter();
    let ref_trace = traces.next().unwrap_or_else(|| unreachable!()).stage("reference flow")?;
    let pert_trace = traces.next().unwrap_or_else(|| unreachable!()).stage("perturbed flow")?;
    run.info(format!("paired flows: {} steps of dt = {:.3e}", pert_trace.total_steps, pert_trace.dt));
    run.write_trace("reference_diagnostics.csv", &ref_trace)?;
    run.write_trace("perturbed_diagnostics.csv", &pert_trace)?;
    let completed = flow_ok(run, &ref_trace) & flow_ok(run, &pert_trace);

    let dcfg = DeviationConfig { window: Window::All, smallness: f.smallness, c_dini: f.c_dini };
    let dev = deviation_trace(&pert_trace, &ref_trace, &dcfg).stage("deviation")?;
    let mut w = run.create("deviation.csv")?;
    dev.write_csv(&mut w)?;
    w.flush()?;
    if let Some(reason) = &dev.truncated {
        run.verdict("graph_regime", false, format!("trace truncated after {} rows: {reason}", dev.rows.len()));
        return Ok(());
    }
    run.verdict("graph_regime", true, format!("{} rows inside the normal-graph regime", dev.rows.len()));
    if !completed {
        return Ok(());
    }

    let kappa = measured_kappa(&pert_trace)?;
    run.value("kappa", kappa);
    let (t, wv): (Vec<f64>, Vec<f64>) =
        dev.rows.iter().filter(|r| r.t >= f.fit_t_min * (1.0 - 1e-12)).map(|r| (r.t, r.v_max / r.t.sqrt())).unzip();
    match fit_decay_exponent(&t, &wv, kappa, f.fit_tol) {
        Ok(fit) => {
            fs::write(
                run.dir.join("fit.json"),
                serde_json::to_string_pretty(&fit).map_err(|e| Error::Parse(e.to_string()))?,
            )?;
            run.value("decay_exponent", fit.exponent);
            run.value("fit_residual", fit.residual);
            run.verdict(
                "decay_exponent",
                fit.pass,
                format!(
                    "slope {:.4} on [{:.4}, {:.4}] (rms {:.2e}) against {:.4} + {} with kappa = {kappa:.4}",
                    fit.exponent, fit.t_min, fit.t_max, fit.residual, fit.reference_exponent, fit.fit_tol
                ),
            );
        }
        Err(e) => run.verdict("decay_exponent", false, format!("fit rejected: {e}")),
    }

    let margin = dev.rows.iter().filter_map(|r| r.dini.map(|d| d - r.leading())).fold(f64::NEG_INFINITY, f64::max);
    run.value("dini_max_excess", margin);
    run.value("dini_fitted_c", dev.fitted_c);
    run.value("dini_tolerance", dev.tolerance);
    let ok = dev.violations.is_empty() && dev.fitted_c <= f.c_dini_max;
    run.verdict(
        "dini",
        ok,
        format!(
            "fitted C = {:.4e} (cap {}), {} rows without a correction term, tolerance {:.3e}, largest D v^2 - 2|A|^2 v^2 = {margin:.3e}",
            dev.fitted_c,
            f.c_dini_max,
            dev.violations.len(),
            dev.tolerance
        ),
    );
    Ok(())
}

fn entropy_monotonicity(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let en = &cfg.entropy;
    if en.circle {
        let c = PolylineCurve::circle(Vec2::zeros(), 1.0, en.circle_vertices)?;
        let mut fc = FlowConfig::new(0.0, 0.45).with_snapshots(SnapshotSchedule::Stride(100));
        fc.redistribute_every = None;
        let trace = flow(run, &Geometry::Polyline(c), fc)?;
        run.write_trace("diagnostics.csv", &trace)?;
        if !flow_ok(run, &trace) {
            return Ok(());
        }
        let s = monotonicity_trace(&trace, Vec2::zeros(), 0.5, en.rate_tol).stage("monotonicity")?;
        let mut w = run.create("monotonicity_circle.csv")?;
        s.write_csv(&mut w)?;
        w.flush()?;
        let exact = (2.0 * std::f64::consts::PI / std::f64::consts::E).sqrt();
        let off = s.rows.iter().fold(0.0f64, |m, r| m.max((r.value - exact).abs()));
        run.value("circle_spread", s.spread());
        run.value("circle_offset", off);
        run.verdict(
            "circle_constant",
            s.spread() <= 1e-3 && off <= 1e-3,
            format!("spread {:.3e}, largest distance from sqrt(2 pi / e) {off:.3e}", s.spread()),
        );
        return Ok(());
    }

    let f = &cfg.flow;
    let init = cone_initial(run, FarField::Cone)?;
    let n = f.snapshots - 1;
    let times: Vec<f64> = (1..=n).map(|k| f.t_start + (f.t_end - f.t_start) * k as f64 / n as f64).collect();
    let fc = FlowConfig::new(f.t_start, f.t_end).with_cfl(f.cfl).with_snapshots(SnapshotSchedule::Times(times));
    let trace = flow(run, &init, fc)?;
    run.write_trace("diagnostics.csv", &trace)?;
    if !flow_ok(run, &trace) {
        return Ok(());
    }
    for (k, c) in en.centers.iter().enumerate() {
        let sub = trace.before(c[2] - en.min_scale + 1e-12);
        if sub.snapshots.len() < 2 {
            run.verdict(format!("monotone_{k}"), false, "fewer than two snapshots before t0 - min_scale");
            continue;
        }
        let s = monotonicity_trace(&sub, Vec2::new(c[0], c[1]), c[2], en.rate_tol).stage("monotonicity")?;
        let mut w = run.create(&format!("monotonicity_{k}.csv"))?;
        s.write_csv(&mut w)?;
        w.flush()?;
        run.verdict(
            format!("monotone_{k}"),
            s.non_increasing,
            format!(
                "P = ({}, {}), t0 = {}: largest increase rate {:.3e} over {} snapshots (tolerance {})",
                c[0],
                c[1],
                c[2],
                s.max_increase_rate,
                s.rows.len(),
                s.rate_tol
            ),
        );
    }
    // reported only: the small-entropy threshold itself is not constructive
    let cone = cfg.cone.cone()?;
    let bound = lipschitz_entropy_bound(cone.lipschitz())?;
    let search = EntropySearchConfig::spanning(&init).with_box(Vec2::new(-5.0, -2.0), Vec2::new(5.0, 5.0));
    let rep = entropy_lower_bound(&init, &search, Execution::Parallel).stage("entropy")?;
    let mut w = run.create("entropy_search.csv")?;
    rep.write_csv(&mut w)?;
    w.flush()?;
    run.value("initial_entropy_lower_bound", rep.best_value);
    run.value("cone_lipschitz_bound", bound);
    run.info(format!("initial entropy >= {:.6}; Lipschitz bound of the cone {bound:.6}", rep.best_value));
    Ok(())
}

fn curvature_decay(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let f = &cfg.flow;
    let gamma = Arc::new(solve_gamma(run)?);
    let init = cone_initial(run, FarField::Expander(gamma.clone()))?;
    let fc = FlowConfig::new(f.t_start, f.t_end).with_cfl(f.cfl).with_snapshots(SnapshotSchedule::Times(log_times(
        f.t_start,
        f.t_end,
        f.snapshots,
    )));
    let trace = flow(run, &init, fc)?;
    run.write_trace("diagnostics.csv", &trace)?;
    if !flow_ok(run, &trace) {
        return Ok(());
    }
    let kappa = measured_kappa(&trace)?;
    let sup = trace.snapshots.iter().fold(0.0f64, |m, s| m.max(s.scaled_sup_a));
    let t = trace.times();
    let scaled: Vec<f64> = trace.snapshots.iter().map(|s| s.scaled_sup_a).collect();
    let tol = 0.05 * gamma.sup_a;
    run.value("kappa", kappa);
    run.value("sup_scaled_curvature", sup);
    run.verdict("bounded", sup.is_finite(), format!("sup over the run of sqrt(t) |A| = {sup:.6}"));
    run.verdict(
        "plateau",
        (kappa - gamma.sup_a).abs() <= tol,
        format!("median of sqrt(t) |A| over the last decade {kappa:.6} against |A| of the expander {:.6} (tolerance {tol:.2e})", gamma.sup_a),
    );
    run.verdict(
        "eventually_non_increasing",
        eventually_non_increasing(&t, &scaled),
        "sqrt(t) |A| over the last decade",
    );
    Ok(())
}

fn certify(run: &mut Run, s: &ExpanderSolution, label: &str) -> Result<()> {
    let e = &run.cfg.expander;
    let discrete: Vec<(f64, f64)> = [0.1, 0.05]
        .iter()
        .map(|&h| -> Result<(f64, f64)> {
            let r = match s.kind {
                ExpanderKind::Graph1d => {
                    let grid = Grid1D::symmetric(10.0, h)?;
                    let g = GraphHypersurface::from_fn(grid, |x| s.eval(x).0, s.cone, FarField::Cone, f64::INFINITY)?;
                    crate::expander::expander_residual(&Geometry::Graph(g))?.sup
                }
                ExpanderKind::Rotsym { .. } => resampled_rotsym_residual(s, h, 10.0)?,
            };
            Ok((h, r))
        })
        .collect::<Result<_>>()?;
    let disc_ok = discrete.iter().all(|(h, r)| *r <= 5.0 * h * h);
    let shift_ok = s.refinement_shift.is_some_and(|d| d < 1e-6);
    let ok = s.certified(e.slope_tol) && disc_ok && shift_ok;
    run.value(&format!("{label}_u0"), s.u0());
    run.value(&format!("{label}_residual"), s.residual_sup);
    run.value(&format!("{label}_sup_a"), s.sup_a);
    run.verdict(
        format!("certified_{label}"),
        ok,
        format!(
            "u(0) = {:.12}, sample residual {:.2e}, slope errors {:.2e}/{:.2e}, discrete residual {}, X_max doubling shift {}",
            s.u0(),
            s.residual_sup,
            s.slope_error[0],
            s.slope_error[1],
            discrete.iter().map(|(h, r)| format!("{r:.2e} (h = {h})")).collect::<Vec<_>>().join(", "),
            s.refinement_shift.map_or("not computed".into(), |d| format!("{d:.2e}")),
        ),
    );
    Ok(())
}

fn stability_checks(run: &mut Run, s: &ExpanderSolution, label: &str, seed: u64, w: &mut impl Write) -> Result<()> {
    let e = &run.cfg.expander;
    if s.sup_a >= std::f64::consts::FRAC_1_SQRT_2 {
        run.info(format!("{label}: sup|A| = {:.4} >= 1/sqrt(2), positivity not expected", s.sup_a));
        return Ok(());
    }
    let (lo, hi) = match s.kind {
        ExpanderKind::Graph1d => (-4.0, 4.0),
        ExpanderKind::Rotsym { .. } => (0.0, 4.0),
    };
    let bumps = random_bumps(seed, e.random_bumps, lo, hi)?;
    let reports = par::map(Execution::Parallel, &bumps, |b| quadratic_form(s, &b.samples(&s.x), 0));
    let mut positive = 0;
    let mut min_ratio = f64::INFINITY;
    for (k, r) in reports.into_iter().enumerate() {
        let r = r.stage("quadratic form")?;
        let b = bumps[k];
        writeln!(
            w,
            "{label},{k},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{}",
            b.center, b.width, b.amplitude, r.value, r.mass, r.weight_bound, r.sup_a, r.positive
        )?;
        positive += usize::from(r.positive);
        min_ratio = min_ratio.min(r.value / r.mass);
    }
    run.verdict(
        format!("positive_{label}"),
        positive == bumps.len(),
        format!("{positive}/{} random bumps positive, smallest form/mass {min_ratio:.4}", bumps.len()),
    );
    let n = e.basis_size;
    let basis: Vec<Vec<f64>> = (0..n)
        .map(|k| {
            let c = lo + 1.0 + (hi - lo - 2.0) * k as f64 / (n.max(2) - 1) as f64;
            Bump { center: c, width: 1.0, amplitude: 1.0 }.samples(&s.x)
        })
        .collect();
    let rr = rayleigh_min(s, &basis, Execution::Parallel).stage("rayleigh-ritz")?;
    run.value(&format!("{label}_rayleigh_min"), rr.min_eigenvalue);
    run.verdict(
        format!("rayleigh_{label}"),
        rr.min_eigenvalue >= rr.lower_bound - e.rayleigh_tol,
        format!("minimum {:.6} against 1/2 - sup|A|^2 = {:.6} over {n} bumps", rr.min_eigenvalue, rr.lower_bound),
    );
    Ok(())
}

fn expander_atlas(run: &mut Run) -> Result<()> {
    let cfg = run.cfg;
    let sc = shooting(cfg);
    let mut csv = run.create("quadratic_form.csv")?;
    writeln!(csv, "expander,id,center,width,amplitude,value,mass,weight_bound,sup_a,positive")?;
    let mut index = 0u64;
    for &m in &cfg.expander.slopes {
        let all = solve_expander_graph1d_all(RegularCone::symmetric(m)?, &sc).stage("expander")?;
        run.info(format!("slope {m}: {} expander(s) found", all.len()));
        for (k, s) in all.iter().enumerate() {
            let label = if all.len() == 1 { format!("m{m}") } else { format!("m{m}_{k}") };
            let mut w = run.create(&format!("expander_{label}.txt"))?;
            write_expander(&mut w, s)?;
            w.flush()?;
            certify(run, s, &label)?;
            stability_checks(run, s, &label, cfg.seed.wrapping_add(index), &mut csv)?;
            index += 1;
        }
    }
    for &(angle, dim) in &cfg.expander.rotsym {
        let s = solve_expander_rotsym(RegularCone::rotsym(angle, dim)?, &sc).stage("expander")?;
        let label = format!("rotsym_a{angle}_n{dim}");
        let mut w = run.create(&format!("expander_{label}.txt"))?;
        write_expander(&mut w, &s)?;
        w.flush()?;
        certify(run, &s, &label)?;
        stability_checks(run, &s, &label, cfg.seed.wrapping_add(index), &mut csv)?;
        index += 1;
    }
    csv.flush()?;
    Ok(())
}

/// Configs of a sweep: the product of the non-empty lists in `cfg.sweep`,
/// each writing to its own subdirectory of `cfg.out_dir`.
pub fn sweep_configs(cfg: &ExperimentConfig) -> Vec<ExperimentConfig> {
    let s = &cfg.sweep;
    let slopes: Vec<Option<f64>> =
        if s.slopes.is_empty() { vec![None] } else { s.slopes.iter().map(|m| Some(*m)).collect() };
    let seeds: Vec<Option<u64>> =
        if s.seeds.is_empty() { vec![None] } else { s.seeds.iter().map(|m| Some(*m)).collect() };
    let hs: Vec<Option<f64>> =
        if s.resolutions.is_empty() { vec![None] } else { s.resolutions.iter().map(|m| Some(*m)).collect() };
    let mut out = Vec::new();
    for m in &slopes {
        for seed in &seeds {
            for h in &hs {
                let mut c = cfg.clone();
                c.sweep = Default::default();
                let mut tag = Vec::new();
                if let Some(m) = m {
                    c.cone = super::config::ConeConfig::symmetric(*m);
                    c.expander.slopes = vec![*m];
                    tag.push(format!("m{m}"));
                }
                if let Some(seed) = seed {
                    c.seed = *seed;
                    tag.push(format!("s{seed}"));
                }
                if let Some(h) = h {
                    c.grid.h = *h;
                    tag.push(format!("h{h}"));
                }
                let name = if tag.is_empty() { cfg.name.clone() } else { format!("{}_{}", cfg.name, tag.join("_")) };
                c.out_dir = cfg.out_dir.join(&name);
                c.name = name;
                out.push(c);
            }
        }
    }
    out
}

/// Run every config of the sweep as an independent task. A failing run is
/// reported as a summary with an `error` verdict rather than aborting the
/// others. Writes `sweep.csv` into `cfg.out_dir`.
pub fn run_sweep(cfg: &ExperimentConfig, exec: Execution, verbose: bool) -> Result<Vec<ExperimentSummary>> {
    cfg.validate().stage("config")?;
    let configs = sweep_configs(cfg);
    let results = par::map(exec, &configs, |c| run_experiment(c, verbose));
    let summaries: Vec<ExperimentSummary> = results
        .into_iter()
        .zip(&configs)
        .map(|(r, c)| {
            r.unwrap_or_else(|e| ExperimentSummary {
                name: c.name.clone(),
                kind: c.kind,
                out_dir: c.out_dir.clone(),
                verdicts: vec![Verdict { name: "error".into(), pass: false, detail: e.to_string() }],
                values: BTreeMap::new(),
            })
        })
        .collect();
    fs::create_dir_all(&cfg.out_dir)?;
    write_sweep_table(&cfg.out_dir.join("sweep.csv"), &summaries)?;
    Ok(summaries)
}

fn write_sweep_table(path: &Path, summaries: &[ExperimentSummary]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    writeln!(w, "name,kind,passed,verdicts,failed")?;
    for s in summaries {
        let failed: Vec<&str> = s.verdicts.iter().filter(|v| !v.pass).map(|v| v.name.as_str()).collect();
        writeln!(w, "{},{},{},{},{}", s.name, s.kind.as_str(), s.passed(), s.verdicts.len(), failed.join(";"))?;
    }
    w.flush()?;
    Ok(())
}
