//! TOML run configuration.
//!
//! ```toml
//! seed = 7
//!
//! [scenario]
//! name = "gaussian_bump"
//! [scenario.params]
//! amplitude = 1.0
//!
//! [model]
//! gamma = 2.0
//! delta = 0.05
//!
//! [grid]
//! x_min = -5.0
//! x_max = 5.0
//! n_cells = 500
//!
//! [solver]
//! epsilon = 1e-3
//! tau = 1.0
//! cfl = 0.45
//! t_end = 5.0
//!
//! [monitors]
//! enabled = ["mass", "field_bound", "riemann_growth", "uniform_bounds", "entropy"]
//! cadence = 10
//! ```
//!
//! Sections other than `[scenario]` are optional and default to the
//! scenario's settings.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid1D};
use crate::model::{GasModel, PressureConvention};
use crate::monitor::{MonitorKind, MonitorSuite, Tolerances};
use crate::picard::PicardSettings;
use crate::profile::{DeviceProfile, Table};
use crate::relax::{Coupling, StudySetup};
use crate::scenario::{RawData, Scenario, ScenarioKind, ScenarioParams};
use crate::solver::SolverConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub seed: u64,
    pub scenario: ScenarioSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub model: Option<ModelSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub profile: Option<ProfileSection>,
    #[serde(default)]
    pub monitors: MonitorSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub study: Option<StudySection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub picard: Option<PicardSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub name: ScenarioKind,
    #[serde(default)]
    pub params: ScenarioParams,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub gamma: f64,
    pub delta: f64,
    #[serde(default)]
    pub convention: PressureConvention,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub x_min: f64,
    pub x_max: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_cells: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dx: Option<f64>,
    #[serde(default)]
    pub boundary: Boundary,
}

/// Damping and doping read from `(x, value)` tables; paths are relative to
/// the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSection {
    pub a_table: PathBuf,
    pub b_table: PathBuf,
    #[serde(default)]
    pub e_minus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonitorSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub enabled: Option<Vec<MonitorKind>>,
    #[serde(default = "default_cadence")]
    pub cadence: usize,
    #[serde(default)]
    pub tolerances: Tolerances,
}

fn default_cadence() -> usize {
    10
}

impl Default for MonitorSection {
    fn default() -> Self {
        Self {
            enabled: None,
            cadence: default_cadence(),
            tolerances: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StudySection {
    pub taus: Vec<f64>,
    pub coupling: Coupling,
    pub delta_factor: f64,
    pub horizon: f64,
    pub layer_fraction: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub window: Option<[f64; 2]>,
    pub samples: usize,
    pub cfl: f64,
    pub dd_cfl: f64,
    pub zero_tol: f64,
}

impl Default for StudySection {
    fn default() -> Self {
        Self {
            taus: vec![0.2, 0.1, 0.05],
            coupling: Coupling::default(),
            delta_factor: 1.0,
            horizon: 0.5,
            layer_fraction: 0.05,
            window: None,
            samples: 41,
            cfl: 0.45,
            dd_cfl: 0.45,
            zero_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardSection {
    pub t1: f64,
    pub levels: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub min_iter: usize,
}

impl Default for PicardSection {
    fn default() -> Self {
        Self {
            t1: 0.01,
            levels: 20,
            tol: 1e-10,
            max_iter: 40,
            min_iter: 5,
        }
    }
}

impl PicardSection {
    pub fn settings(&self) -> PicardSettings {
        PicardSettings {
            tol: self.tol,
            max_iter: self.max_iter,
            min_iter: self.min_iter,
        }
    }
}

/// A configuration with every default filled in and the profile built.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub scenario: Scenario,
    pub model: GasModel,
    pub grid: Grid1D,
    pub solver: SolverConfig,
    pub profile: DeviceProfile,
    pub raw: RawData,
    pub suite: MonitorSuite,
    pub seed: u64,
}

impl RunConfig {
    pub fn for_scenario(kind: ScenarioKind) -> Self {
        Self {
            seed: 0,
            scenario: ScenarioSection {
                name: kind,
                params: ScenarioParams::default(),
            },
            model: None,
            grid: None,
            solver: None,
            profile: None,
            monitors: MonitorSection::default(),
            study: None,
            picard: None,
        }
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Parse {
            path: origin.to_path_buf(),
            detail: e.to_string(),
        })
    }

    /// Reads a configuration; table paths become absolute.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::parse(&text, path)?;
        let base = path.parent().unwrap_or(Path::new("."));
        if let Some(p) = cfg.profile.as_mut() {
            for t in [&mut p.a_table, &mut p.b_table] {
                if t.is_relative() {
                    *t = base.join(&*t);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run configuration serializes to TOML")
    }

    pub fn resolve(&self) -> Result<Resolved> {
        let scenario = Scenario::with_params(self.scenario.name, self.scenario.params);
        let model = match self.model {
            Some(m) => GasModel::new(m.gamma, m.delta, m.convention)?,
            None => scenario.default_model(),
        };
        let grid = match self.grid {
            Some(g) => match (g.n_cells, g.dx) {
                (Some(n), None) => Grid1D::new(g.x_min, g.x_max, n, g.boundary)?,
                (None, Some(dx)) if dx > 0.0 => Grid1D::with_spacing(g.x_min, g.x_max, dx, g.boundary)?,
                _ => {
                    return Err(Error::Config(
                        "grid needs exactly one of n_cells and a positive dx".into(),
                    ))
                }
            },
            None => scenario.default_grid(),
        };
        let solver = self.solver.unwrap_or_else(|| scenario.default_solver());
        solver.validate()?;
        let profile = match &self.profile {
            Some(p) => {
                DeviceProfile::from_tables(&grid, &Table::load(&p.a_table)?, &Table::load(&p.b_table)?, p.e_minus)?
            }
            None => scenario.profile(&grid)?,
        };
        let raw = scenario.initial_data(&grid)?;
        let enabled = self
            .monitors
            .enabled
            .clone()
            .unwrap_or_else(|| MonitorKind::ALL.to_vec());
        let suite = MonitorSuite::new(enabled, self.monitors.tolerances, self.monitors.cadence)?;
        Ok(Resolved {
            scenario,
            model,
            grid,
            solver,
            profile,
            raw,
            suite,
            seed: self.seed,
        })
    }

    pub fn study_setup(&self) -> Result<StudySetup> {
        let r = self.resolve()?;
        let s = self.study.clone().unwrap_or_default();
        Ok(StudySetup {
            grid: r.grid,
            gamma: r.model.gamma(),
            convention: r.model.convention(),
            raw_rho: r.raw.rho,
            raw_u: r.raw.u,
            a_vals: r.profile.a_vals,
            b_vals: r.profile.b_vals,
            e_minus: r.profile.e_minus,
            taus: s.taus,
            coupling: s.coupling,
            delta_factor: s.delta_factor,
            horizon: s.horizon,
            layer_fraction: s.layer_fraction,
            window: s.window.map(|[a, b]| (a, b)),
            samples: s.samples,
            cfl: s.cfl,
            dd_cfl: s.dd_cfl,
            smoothing_width: r.solver.smoothing_width,
            zero_tol: s.zero_tol,
        })
    }
}
