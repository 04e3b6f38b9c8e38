use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::flow::MAX_CFL_SAFETY;
use crate::geometry::RegularCone;
use crate::{Error, Result};

/// Which scenario an experiment runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Cone plus bump, rescaled deviation from the expander and blow-downs.
    SelfSimilarity,
    /// Expander flow against a perturbed copy: decay exponent and Dini check.
    ExpanderStability,
    /// Gaussian areas along a flow for several backward centers.
    EntropyMonotonicity,
    /// `sqrt(t) |A|` along a cone flow against the expander's curvature.
    CurvatureDecay,
    /// Solve and certify expanders for a list of slopes, with stability forms.
    ExpanderAtlas,
}

impl ExperimentKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::SelfSimilarity => "self_similarity",
            ExperimentKind::ExpanderStability => "expander_stability",
            ExperimentKind::EntropyMonotonicity => "entropy_monotonicity",
            ExperimentKind::CurvatureDecay => "curvature_decay",
            ExperimentKind::ExpanderAtlas => "expander_atlas",
        }
    }
}

/// Cone slopes `(m_minus, m_plus)`; `slope = m` is shorthand for `(-m, m)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConeConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slope: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_minus: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub m_plus: Option<f64>,
}

impl Default for ConeConfig {
    fn default() -> Self {
        ConeConfig { slope: Some(0.3), m_minus: None, m_plus: None }
    }
}

impl ConeConfig {
    pub fn symmetric(m: f64) -> Self {
        ConeConfig { slope: Some(m), m_minus: None, m_plus: None }
    }

    pub fn cone(&self) -> Result<RegularCone> {
        match (self.slope, self.m_minus, self.m_plus) {
            (Some(m), None, None) => RegularCone::symmetric(m),
            (None, Some(a), Some(b)) => RegularCone::slopes(a, b),
            _ => Err(Error::invalid("cone needs either `slope` or both `m_minus` and `m_plus`")),
        }
    }
}

/// Initial data: a compact bump `a exp(1 / ((x - c)^2 / w^2 - 1))` added to
/// the base. When `delta` and `lambda` are given the amplitude is derived
/// from them and `amplitude` is ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialConfig {
    pub bump_center: f64,
    pub bump_width: f64,
    pub amplitude: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    /// Geometry file replacing the generated initial surface.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub geometry_file: Option<PathBuf>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        InitialConfig {
            bump_center: 0.5,
            bump_width: 1.0,
            amplitude: 0.5,
            delta: None,
            lambda: None,
            geometry_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridConfig {
    pub half_width: f64,
    pub h: f64,
    /// Allowed gap between the end values and the cone.
    pub farfield_tol: f64,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { half_width: 40.0, h: 0.1, farfield_tol: 1e-6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FlowParams {
    pub t_start: f64,
    pub t_end: f64,
    pub cfl: f64,
    /// Number of log-spaced snapshot times.
    pub snapshots: usize,
    /// Rescaled window `|x| <= window` on which deviations are measured.
    pub window: f64,
    pub blowdown_radii: Vec<f64>,
    /// Start of the exponent fit window.
    pub fit_t_min: f64,
    pub fit_tol: f64,
    pub smallness: f64,
    pub c_dini: f64,
    /// Largest fitted Dini constant accepted.
    pub c_dini_max: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            t_start: 1.0,
            t_end: 100.0,
            cfl: MAX_CFL_SAFETY,
            snapshots: 81,
            window: 2.0,
            blowdown_radii: vec![2.0, 4.0, 8.0],
            fit_t_min: 10.0,
            fit_tol: 0.05,
            smallness: 0.1,
            c_dini: 1.0,
            c_dini_max: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExpanderParams {
    pub x_max: f64,
    pub tol: f64,
    pub slope_tol: f64,
    /// Symmetric slopes solved by the atlas.
    pub slopes: Vec<f64>,
    /// Rotationally symmetric cones `(half_angle, ambient_dim)` in the atlas.
    pub rotsym: Vec<(f64, usize)>,
    pub random_bumps: usize,
    pub basis_size: usize,
    pub rayleigh_tol: f64,
}

impl Default for ExpanderParams {
    fn default() -> Self {
        ExpanderParams {
            x_max: 20.0,
            tol: 1e-8,
            slope_tol: 1e-4,
            slopes: vec![0.2, 0.5, 1.0],
            rotsym: vec![(1.2, 3)],
            random_bumps: 100,
            basis_size: 16,
            rayleigh_tol: 1e-3,
        }
    }
}

/// A backward Gaussian center `(px, py, t0)`.
pub type Center = [f64; 3];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EntropyParams {
    /// Run on the unit circle (the self-shrinking equality case) instead of
    /// the cone.
    pub circle: bool,
    pub circle_vertices: usize,
    pub centers: Vec<Center>,
    pub rate_tol: f64,
    /// Only snapshots with `t0 - t >= min_scale` enter a series.
    pub min_scale: f64,
}

impl Default for EntropyParams {
    fn default() -> Self {
        EntropyParams {
            circle: false,
            circle_vertices: 512,
            centers: vec![[0.0, 0.0, 1.0], [0.0, 0.5, 1.5], [1.0, 0.3, 2.0], [-1.5, 0.5, 1.2], [0.5, 1.0, 3.0]],
            rate_tol: 1e-3,
            min_scale: 0.25,
        }
    }
}

/// Parameters varied by `sweep`; each non-empty list multiplies the runs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepParams {
    pub slopes: Vec<f64>,
    pub seeds: Vec<u64>,
    pub resolutions: Vec<f64>,
}

impl SweepParams {
    pub fn is_empty(&self) -> bool {
        self.slopes.is_empty() && self.seeds.is_empty() && self.resolutions.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    #[serde(default = "default_name")]
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub cone: ConeConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub flow: FlowParams,
    #[serde(default)]
    pub expander: ExpanderParams,
    #[serde(default)]
    pub entropy: EntropyParams,
    #[serde(default, skip_serializing_if = "SweepParams::is_empty")]
    pub sweep: SweepParams,
}

fn default_name() -> String {
    "run".into()
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    /// Defaults for `kind`; only the scenario-specific fields differ.
    pub fn new(kind: ExperimentKind) -> Self {
        let mut c = ExperimentConfig {
            kind,
            name: kind.as_str().into(),
            seed: 0,
            out_dir: default_out(),
            cone: ConeConfig::default(),
            initial: InitialConfig::default(),
            grid: GridConfig::default(),
            flow: FlowParams::default(),
            expander: ExpanderParams::default(),
            entropy: EntropyParams::default(),
            sweep: SweepParams::default(),
        };
        match kind {
            ExperimentKind::ExpanderStability => {
                c.initial = InitialConfig {
                    bump_center: 0.5,
                    delta: Some(0.05),
                    lambda: Some(1.0),
                    ..InitialConfig::default()
                };
                c.flow.snapshots = 161;
            }
            ExperimentKind::EntropyMonotonicity => {
                c.grid.half_width = 20.0;
                c.flow.t_start = 0.0;
                c.flow.t_end = 1.0;
                c.flow.snapshots = 41;
            }
            _ => {}
        }
        c
    }

    pub fn from_toml_str(s: &str) -> Result<Self> {
        let c: ExperimentConfig = toml::from_str(s).map_err(|e| Error::Parse(e.to_string()))?;
        Ok(c)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Parse(e.to_string()))
    }

    /// Parse and validate a config file. Relative paths inside it resolve
    /// against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let mut c = Self::from_toml_str(&text)?;
        if let (Some(f), Some(dir)) = (&c.initial.geometry_file, path.parent()) {
            if f.is_relative() {
                c.initial.geometry_file = Some(dir.join(f));
            }
        }
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.cone.cone()?;
        let i = &self.initial;
        if i.delta.is_some_and(|d| !(d >= 0.0)) || i.lambda.is_some_and(|l| !(l >= 0.0)) {
            return Err(Error::invalid("delta and lambda must be nonnegative"));
        }
        if i.delta.is_some() != i.lambda.is_some() {
            return Err(Error::invalid("delta and lambda must be given together"));
        }
        if !(i.bump_width > 0.0) || !i.amplitude.is_finite() || !i.bump_center.is_finite() {
            return Err(Error::invalid("bump width must be positive and its center and amplitude finite"));
        }
        if let Some(f) = &i.geometry_file {
            if !f.exists() {
                return Err(Error::invalid(format!("geometry file {} does not exist", f.display())));
            }
        }
        let g = &self.grid;
        if !(g.h > 0.0 && g.half_width > 10.0 * g.h) || !(g.farfield_tol >= 0.0) {
            return Err(Error::invalid("grid needs h > 0 and a half-width of at least ten cells"));
        }
        if g.half_width < i.bump_center.abs() + i.bump_width {
            return Err(Error::invalid("bump support leaves the grid"));
        }
        let f = &self.flow;
        let needs_positive_start =
            !matches!(self.kind, ExperimentKind::EntropyMonotonicity | ExperimentKind::ExpanderAtlas);
        if !(f.t_end > f.t_start && f.t_start >= 0.0) || (needs_positive_start && !(f.t_start > 0.0)) {
            return Err(Error::invalid("flow window needs t_end > t_start (> 0 for expander-based runs)"));
        }
        if !(f.cfl > 0.0 && f.cfl <= MAX_CFL_SAFETY) {
            return Err(Error::invalid(format!("cfl must lie in (0, {MAX_CFL_SAFETY}]")));
        }
        if f.snapshots < 2 || !(f.window > 0.0) || !(f.smallness > 0.0) || !(f.c_dini >= 0.0) || !(f.fit_tol >= 0.0) {
            return Err(Error::invalid("flow parameters out of range"));
        }
        if f.blowdown_radii.iter().any(|r| !(*r > 0.0)) {
            return Err(Error::invalid("blow-down radii must be positive"));
        }
        let e = &self.expander;
        if !(e.x_max > 0.0 && e.tol > 0.0 && e.slope_tol > 0.0) || e.basis_size == 0 {
            return Err(Error::invalid("expander parameters out of range"));
        }
        for &(a, n) in &e.rotsym {
            RegularCone::rotsym(a, n)?;
        }
        let en = &self.entropy;
        if en.circle_vertices < 16 || !(en.rate_tol >= 0.0) || !(en.min_scale > 0.0) {
            return Err(Error::invalid("entropy parameters out of range"));
        }
        if self.kind == ExperimentKind::EntropyMonotonicity
            && !en.circle
            && en.centers.iter().any(|c| !(c[2] - en.min_scale > f.t_start))
        {
            return Err(Error::invalid("every backward center needs t0 - min_scale after the start of the flow"));
        }
        if self.sweep.resolutions.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::invalid("sweep resolutions must be positive"));
        }
        Ok(())
    }
}
