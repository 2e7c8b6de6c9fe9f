use serde::{Deserialize, Serialize};
use waveguide_spectra::cross_section::{presets, SectionGeometry};
use waveguide_spectra::floquet::{DEFAULT_GAP_TOL, DEFAULT_THETA_COUNT};
use waveguide_spectra::full_waveguide::{DEFAULT_EXTRA_MODES, DEFAULT_FIBER_NODES, DEFAULT_INTERVAL_NODES};
use waveguide_spectra::twist::{TwistSpec, DEFAULT_INTERVAL_POINTS, DEFAULT_PERIODIC_POINTS};

use crate::Failure;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Modes,
    Coupling,
    Potential,
    #[serde(rename = "spectrum-1d")]
    Spectrum1d,
    Bands,
    Gaps,
    GapAsymptotics,
    Converge,
    FiberConverge,
    Persistence,
    Validate,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Modes => "modes",
            Task::Coupling => "coupling",
            Task::Potential => "potential",
            Task::Spectrum1d => "spectrum-1d",
            Task::Bands => "bands",
            Task::Gaps => "gaps",
            Task::GapAsymptotics => "gap-asymptotics",
            Task::Converge => "converge",
            Task::FiberConverge => "fiber-converge",
            Task::Persistence => "persistence",
            Task::Validate => "validate",
        }
    }

    fn needs_twist(self) -> bool {
        !matches!(self, Task::Modes | Task::Coupling)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// A preset name or an explicit shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GeometryConfig {
    Preset(String),
    Explicit(SectionGeometry),
}

impl GeometryConfig {
    pub fn resolve(&self) -> Result<SectionGeometry, Failure> {
        match self {
            GeometryConfig::Preset(name) => presets::by_name(name)
                .ok_or_else(|| Failure::config(format!("unknown geometry preset '{name}'"))),
            GeometryConfig::Explicit(g) => Ok(g.clone()),
        }
    }
}

/// Numeric parameters as written; unset fields take task-dependent defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub n: Option<usize>,
    #[serde(rename = "M")]
    pub cutoff: Option<usize>,
    pub h: Option<f64>,
    pub nodes: Option<usize>,
    pub theta_count: Option<usize>,
    pub theta: Option<f64>,
    pub jmax: Option<usize>,
    pub gap_index: Option<usize>,
    pub epsilon: Option<f64>,
    pub epsilons: Option<Vec<f64>>,
    pub betas: Option<Vec<f64>>,
    pub gammas: Option<Vec<f64>>,
    pub gap_tol: Option<f64>,
    pub borg_tol: Option<f64>,
    pub degeneracy_tol: Option<f64>,
    pub sample_points: Option<usize>,
    pub allow_degenerate: Option<bool>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub task: Option<Task>,
    pub geometry: Option<GeometryConfig>,
    pub twist: Option<TwistSpec>,
    #[serde(default)]
    pub params: Params,
    #[serde(default)]
    pub output: Option<String>,
    #[serde(default)]
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, Failure> {
        serde_json::from_str(text).map_err(|e| Failure::config(format!("configuration: {e}")))
    }
}

/// Every value a run uses, defaults filled in; echoed to the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub task: Task,
    pub geometry: SectionGeometry,
    pub twist: Option<TwistSpec>,
    pub format: Format,
    pub n: usize,
    #[serde(rename = "M")]
    pub cutoff: usize,
    pub h: f64,
    pub nodes: usize,
    pub theta_count: usize,
    pub theta: f64,
    pub jmax: usize,
    pub gap_index: Option<usize>,
    pub epsilon: f64,
    pub epsilons: Vec<f64>,
    pub betas: Vec<f64>,
    pub gammas: Vec<f64>,
    pub gap_tol: f64,
    pub borg_tol: f64,
    pub degeneracy_tol: f64,
    pub sample_points: usize,
    pub allow_degenerate: bool,
}

pub const DEFAULT_H: f64 = 0.02;
pub const DEFAULT_JMAX: usize = 5;
pub const DEFAULT_EPSILON: f64 = 0.1;
pub const DEFAULT_EPSILONS: [f64; 3] = [0.2, 0.1, 0.05];
pub const DEFAULT_BETAS: [f64; 4] = [0.0125, 0.025, 0.05, 0.1];
pub const DEFAULT_GAMMAS: [f64; 4] = [0.4, 0.2, 0.1, 0.05];
pub const DEFAULT_BORG_TOL: f64 = 1e-6;
pub const DEFAULT_DEGENERACY_TOL: f64 = 1e-6;
pub const DEFAULT_SAMPLE_POINTS: usize = 64;
pub const DEFAULT_SWEEP_THETAS: usize = 9;

fn nonempty(name: &str, v: &[f64]) -> Result<(), Failure> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(Failure::config(format!("{name} must be a nonempty list of finite numbers")));
    }
    Ok(())
}

impl RunConfig {
    pub fn resolve(&self) -> Result<Resolved, Failure> {
        let task = self
            .task
            .ok_or_else(|| Failure::config("no task given".to_string()))?;
        let geometry = self
            .geometry
            .as_ref()
            .ok_or_else(|| Failure::config("geometry is required".to_string()))?
            .resolve()?;
        if task.needs_twist() && self.twist.is_none() {
            return Err(Failure::config(format!("task {} needs a twist", task.name())));
        }
        let periodic = matches!(self.twist, Some(TwistSpec::Periodic { .. }));
        match task {
            Task::Spectrum1d | Task::Converge if periodic => {
                return Err(Failure::config(format!("task {} needs an interval twist", task.name())))
            }
            Task::Bands | Task::Gaps | Task::GapAsymptotics | Task::FiberConverge | Task::Persistence
                if !periodic =>
            {
                return Err(Failure::config(format!("task {} needs a periodic twist", task.name())))
            }
            _ => {}
        }
        let p = &self.params;
        let n = p.n.unwrap_or(1);
        let default_nodes = match task {
            Task::Converge => DEFAULT_INTERVAL_NODES,
            Task::FiberConverge | Task::Persistence => DEFAULT_FIBER_NODES,
            _ if periodic => DEFAULT_PERIODIC_POINTS,
            _ => DEFAULT_INTERVAL_POINTS,
        };
        let default_thetas = match task {
            Task::Persistence => DEFAULT_SWEEP_THETAS,
            _ => DEFAULT_THETA_COUNT,
        };
        let r = Resolved {
            task,
            geometry,
            twist: self.twist.clone(),
            format: self.format.unwrap_or_default(),
            n,
            cutoff: p.cutoff.unwrap_or(n + DEFAULT_EXTRA_MODES),
            h: p.h.unwrap_or(DEFAULT_H),
            nodes: p.nodes.unwrap_or(default_nodes),
            theta_count: p.theta_count.unwrap_or(default_thetas),
            theta: p.theta.unwrap_or(0.0),
            jmax: p.jmax.unwrap_or(DEFAULT_JMAX),
            gap_index: p.gap_index,
            epsilon: p.epsilon.unwrap_or(DEFAULT_EPSILON),
            epsilons: p.epsilons.clone().unwrap_or_else(|| DEFAULT_EPSILONS.to_vec()),
            betas: p.betas.clone().unwrap_or_else(|| DEFAULT_BETAS.to_vec()),
            gammas: p.gammas.clone().unwrap_or_else(|| DEFAULT_GAMMAS.to_vec()),
            gap_tol: p.gap_tol.unwrap_or(DEFAULT_GAP_TOL),
            borg_tol: p.borg_tol.unwrap_or(DEFAULT_BORG_TOL),
            degeneracy_tol: p.degeneracy_tol.unwrap_or(DEFAULT_DEGENERACY_TOL),
            sample_points: p.sample_points.unwrap_or(DEFAULT_SAMPLE_POINTS),
            allow_degenerate: p.allow_degenerate.unwrap_or(false),
        };
        r.validate()?;
        Ok(r)
    }
}

impl Resolved {
    fn validate(&self) -> Result<(), Failure> {
        if self.n == 0 || self.cutoff < self.n {
            return Err(Failure::config(format!(
                "need 1 <= n <= M, got n = {}, M = {}",
                self.n, self.cutoff
            )));
        }
        if !(self.h > 0.0) {
            return Err(Failure::config(format!("mesh size {} must be positive", self.h)));
        }
        if self.jmax == 0 || self.sample_points == 0 {
            return Err(Failure::config("jmax and sample_points must be positive".into()));
        }
        for (name, v) in [("gap_tol", self.gap_tol), ("borg_tol", self.borg_tol), ("degeneracy_tol", self.degeneracy_tol)] {
            if !(v >= 0.0) {
                return Err(Failure::config(format!("{name} must be nonnegative")));
            }
        }
        nonempty("epsilons", &self.epsilons)?;
        nonempty("betas", &self.betas)?;
        nonempty("gammas", &self.gammas)?;
        if self.gap_index == Some(0) {
            return Err(Failure::config("gap_index starts at 1".into()));
        }
        Ok(())
    }
}
