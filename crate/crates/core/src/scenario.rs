//! The scenario library: initial data, device profiles and default settings
//! for each of the hypothesis sets the solver is exercised against.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Boundary, Grid1D};
use crate::model::{GasModel, PressureConvention};
use crate::profile::DeviceProfile;
use crate::solver::{SolverConfig, SourceVariant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    /// The vacuum offset state `(2 delta, 0)` with no doping.
    VacuumConstant,
    /// Gaussian density bump, zero (or bump-shaped) velocity, `gamma = 2`.
    GaussianBump,
    /// Doping plateau with damping `a = E- - a1 int b`, long horizon.
    DopingRamp,
    /// The Gaussian bump with `gamma = 1`.
    IsothermalBump,
    /// Constant doping with matching density and zero field.
    RelaxationEquilibrium,
}

/// Which theorem's hypotheses a scenario is built to exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LiteratureTag {
    /// Global existence with bounds growing at most linearly in time.
    GlobalExistence,
    /// Time-uniform bounds under monotone damping and doping conditions.
    UniformBounds,
    /// Diffusive relaxation to drift-diffusion.
    RelaxationLimit,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 5] = [
        ScenarioKind::VacuumConstant,
        ScenarioKind::GaussianBump,
        ScenarioKind::DopingRamp,
        ScenarioKind::IsothermalBump,
        ScenarioKind::RelaxationEquilibrium,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::VacuumConstant => "vacuum_constant",
            ScenarioKind::GaussianBump => "gaussian_bump",
            ScenarioKind::DopingRamp => "doping_ramp",
            ScenarioKind::IsothermalBump => "isothermal_bump",
            ScenarioKind::RelaxationEquilibrium => "relaxation_equilibrium",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name)
            .ok_or_else(|| Error::Config(format!("unknown scenario '{name}'")))
    }

    pub fn tag(self) -> LiteratureTag {
        match self {
            ScenarioKind::DopingRamp => LiteratureTag::UniformBounds,
            ScenarioKind::RelaxationEquilibrium => LiteratureTag::RelaxationLimit,
            _ => LiteratureTag::GlobalExistence,
        }
    }

    /// Whether the generated profile is meant to satisfy the time-uniform
    /// bound hypotheses.
    pub fn expects_uniform_hypotheses(self) -> bool {
        self.tag() == LiteratureTag::UniformBounds
    }
}

/// Shape parameters; unset fields take the scenario's defaults.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioParams {
    /// Peak of the excess density bump.
    pub amplitude: Option<f64>,
    /// Gaussian width `w` in `exp(-(x - c)^2 / w^2)`.
    pub width: Option<f64>,
    pub center: Option<f64>,
    /// Peak velocity; the velocity profile has the shape of the bump.
    pub velocity: Option<f64>,
    /// Plateau height of the doping.
    pub doping: Option<f64>,
    pub doping_left: Option<f64>,
    pub doping_right: Option<f64>,
    /// Edge width of the doping plateau.
    pub doping_edge: Option<f64>,
    /// `E-` minus the total doping.
    pub field_margin: Option<f64>,
    /// Slope `a1` in `a = E- - a1 int b`.
    pub a1: Option<f64>,
    /// Field datum `E-` for profiles with constant damping.
    pub e_minus: Option<f64>,
    /// Constant damping `a`.
    pub damping: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub params: ScenarioParams,
}

/// Raw initial data: excess density `rho0 >= 0` and velocity `u0`.
#[derive(Debug, Clone, PartialEq)]
pub struct RawData {
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

fn smooth_plateau(x: f64, left: f64, right: f64, edge: f64) -> f64 {
    0.5 * (((x - left) / edge).tanh() - ((x - right) / edge).tanh())
}

impl Scenario {
    pub fn new(kind: ScenarioKind) -> Self {
        Self {
            kind,
            params: ScenarioParams::default(),
        }
    }

    pub fn with_params(kind: ScenarioKind, params: ScenarioParams) -> Self {
        Self { kind, params }
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    pub fn default_model(&self) -> GasModel {
        let gamma = match self.kind {
            ScenarioKind::IsothermalBump | ScenarioKind::RelaxationEquilibrium => 1.0,
            _ => 2.0,
        };
        GasModel::new(gamma, 0.05, PressureConvention::OneOverGamma).expect("default model parameters are valid")
    }

    pub fn default_grid(&self) -> Grid1D {
        let (lo, hi, n) = match self.kind {
            ScenarioKind::DopingRamp => (-10.0, 30.0, 2000),
            ScenarioKind::RelaxationEquilibrium => (-3.0, 3.0, 300),
            _ => (-5.0, 5.0, 500),
        };
        Grid1D::new(lo, hi, n, Boundary::Outflow).expect("default grid is valid")
    }

    pub fn default_solver(&self) -> SolverConfig {
        let t_end = match self.kind {
            ScenarioKind::DopingRamp => 50.0,
            ScenarioKind::RelaxationEquilibrium => 1.0,
            _ => 5.0,
        };
        SolverConfig {
            epsilon: 1e-3,
            tau: 1.0,
            cfl: 0.45,
            t_end,
            source_variant: if self.kind == ScenarioKind::RelaxationEquilibrium {
                SourceVariant::Relaxation
            } else {
                SourceVariant::Original
            },
            ..Default::default()
        }
    }

    fn bump(&self, x: f64) -> f64 {
        let p = &self.params;
        let c = p.center.unwrap_or(match self.kind {
            ScenarioKind::DopingRamp => 2.0,
            _ => 0.0,
        });
        let w = p.width.unwrap_or(0.5);
        (-(x - c) * (x - c) / (w * w)).exp()
    }

    fn doping(&self, x: f64) -> f64 {
        let p = &self.params;
        p.doping.unwrap_or(0.5)
            * smooth_plateau(
                x,
                p.doping_left.unwrap_or(0.0),
                p.doping_right.unwrap_or(4.0),
                p.doping_edge.unwrap_or(0.5),
            )
    }

    pub fn initial_data(&self, grid: &Grid1D) -> Result<RawData> {
        let xs = grid.centers();
        let p = &self.params;
        let amp = p.amplitude.unwrap_or(1.0);
        let vel = p.velocity.unwrap_or(0.0);
        let (rho, u): (Vec<f64>, Vec<f64>) = match self.kind {
            ScenarioKind::VacuumConstant => (vec![0.0; xs.len()], vec![0.0; xs.len()]),
            ScenarioKind::GaussianBump | ScenarioKind::IsothermalBump => {
                xs.iter().map(|&x| (amp * self.bump(x), vel * self.bump(x))).unzip()
            }
            ScenarioKind::DopingRamp => xs
                .iter()
                .map(|&x| {
                    let amp = p.amplitude.unwrap_or(0.5);
                    (self.doping(x) + amp * self.bump(x), vel * self.bump(x))
                })
                .unzip(),
            ScenarioKind::RelaxationEquilibrium => {
                let b0 = p.doping.unwrap_or(0.5);
                (vec![b0; xs.len()], vec![0.0; xs.len()])
            }
        };
        if rho.iter().any(|r| !(*r >= 0.0)) {
            return Err(Error::Config(format!(
                "scenario {} produced a negative density",
                self.name()
            )));
        }
        Ok(RawData { rho, u })
    }

    pub fn profile(&self, grid: &Grid1D) -> Result<DeviceProfile> {
        let p = &self.params;
        let n = grid.n_cells();
        match self.kind {
            ScenarioKind::DopingRamp => {
                let b: Vec<f64> = grid.centers().iter().map(|&x| self.doping(x)).collect();
                let total: f64 = b.iter().sum::<f64>() * grid.dx();
                let e_minus = total + p.field_margin.unwrap_or(0.5);
                DeviceProfile::with_compatible_damping(grid, b, e_minus, p.a1.unwrap_or(1.0))
            }
            ScenarioKind::RelaxationEquilibrium => {
                DeviceProfile::uniform(grid, p.damping.unwrap_or(1.0), p.doping.unwrap_or(0.5), 0.0)
            }
            _ => DeviceProfile::new(
                grid,
                vec![p.damping.unwrap_or(1.0); n],
                vec![0.0; n],
                p.e_minus.unwrap_or(0.0),
            ),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn declared_hypotheses_match_profiles() {
        for kind in ScenarioKind::ALL {
            let s = Scenario::new(kind);
            let g = s.default_grid();
            let p = s.profile(&g).unwrap();
            assert_eq!(p.theorem2_ok, kind.expects_uniform_hypotheses(), "{}", kind.name());
            let raw = s.initial_data(&g).unwrap();
            assert_eq!(raw.rho.len(), g.n_cells());
        }
    }

    #[test]
    fn doping_ramp_has_unit_ratio() {
        let s = Scenario::new(ScenarioKind::DopingRamp);
        let g = s.default_grid();
        let p = s.profile(&g).unwrap();
        assert!(p.c_vals.iter().all(|c| (c - 1.0).abs() < 1e-12));
        assert!(p.a_min() > 0.0);
    }

    #[test]
    fn names_round_trip() {
        for kind in ScenarioKind::ALL {
            assert_eq!(ScenarioKind::parse(kind.name()).unwrap(), kind);
        }
        assert!(ScenarioKind::parse("nope").is_err());
    }
}
