//! Diffusive relaxation: scaled variables `N(x,s) = rho(x, s/tau)`,
//! `J = m/tau`, `Upsilon = E`, a drift-diffusion reference solver
//!
//! ```text
//! N_s + J_x = 0,   a J = N Upsilon - P(N)_x,   Upsilon_x = N - b
//! ```
//!
//! and the study comparing the two as `tau`, `delta` and `epsilon` go to zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::field_values;
use crate::grid::{Boundary, Grid1D};
use crate::model::{GasModel, PressureConvention};
use crate::monitor::dissipation_integral;
use crate::profile::DeviceProfile;
use crate::solver::{integrate, mollify, prepare_initial, Schedule, SolverConfig, SourceVariant};
use crate::state::HydroState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScaledTrajectory {
    pub s: Vec<f64>,
    pub n: Vec<Vec<f64>>,
    pub j: Vec<Vec<f64>>,
    pub upsilon: Vec<Vec<f64>>,
    pub tau: f64,
    /// Vacuum offset `2 delta` of the hydrodynamic model.
    pub floor: f64,
}

/// Samples a recorded hydrodynamic trajectory at scaled times `s_instants`,
/// using the recorded state nearest to `t = s/tau`.
pub fn rescale(
    trajectory: &[HydroState],
    tau: f64,
    s_instants: &[f64],
    profile: &DeviceProfile,
    grid: &Grid1D,
    model: &GasModel,
) -> Result<ScaledTrajectory> {
    if !(tau > 0.0) {
        return Err(Error::Config(format!("tau must be > 0, got {tau}")));
    }
    let horizon = trajectory.last().map_or(f64::NEG_INFINITY, |s| s.time);
    let slack = 1e-9 * horizon.abs().max(1.0);
    let mut out = ScaledTrajectory {
        s: Vec::with_capacity(s_instants.len()),
        n: Vec::new(),
        j: Vec::new(),
        upsilon: Vec::new(),
        tau,
        floor: model.floor(),
    };
    for &s in s_instants {
        let t = s / tau;
        if t > horizon + slack {
            return Err(Error::Range {
                requested: s,
                horizon: horizon * tau,
            });
        }
        let nearest = trajectory
            .iter()
            .min_by(|a, b| (a.time - t).abs().total_cmp(&(b.time - t).abs()))
            .expect("trajectory is non-empty when the horizon check passes");
        nearest.check_grid(grid)?;
        out.s.push(s);
        out.n.push(nearest.rho.clone());
        out.j.push(nearest.mom.iter().map(|m| m / tau).collect());
        out.upsilon
            .push(field_values(&nearest.rho, profile, grid.dx(), model.floor()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftDiffusionState {
    pub n: Vec<f64>,
    pub upsilon: Vec<f64>,
    /// Cell averages of the face fluxes of the last step.
    pub j: Vec<f64>,
    pub s: f64,
}

impl DriftDiffusionState {
    /// State with the field and flux refreshed from `n`.
    pub fn new(n: Vec<f64>, profile: &DeviceProfile, model: &GasModel, grid: &Grid1D) -> Result<Self> {
        grid.check_len("N", n.len())?;
        profile.check_grid(grid)?;
        if n.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::domain("drift_diffusion", "density must be >= 0"));
        }
        let upsilon = field_values(&n, profile, grid.dx(), 0.0);
        let faces = face_fluxes(&n, &upsilon, profile, model, grid);
        let j = cell_average(&faces);
        Ok(Self { n, upsilon, j, s: 0.0 })
    }
}

fn face_fluxes(n: &[f64], ups: &[f64], profile: &DeviceProfile, model: &GasModel, grid: &Grid1D) -> Vec<f64> {
    let len = n.len();
    let dx = grid.dx();
    let cell = |j: isize| -> usize {
        match grid.boundary() {
            Boundary::Outflow => j.clamp(0, len as isize - 1) as usize,
            Boundary::Periodic => j.rem_euclid(len as isize) as usize,
        }
    };
    let p: Vec<f64> = n.iter().map(|v| model.p(*v)).collect();
    (0..=len as isize)
        .map(|k| {
            let (l, r) = (cell(k - 1), cell(k));
            let nf = 0.5 * (n[l] + n[r]);
            let uf = 0.5 * (ups[l] + ups[r]);
            let af = 0.5 * (profile.a_vals[l] + profile.a_vals[r]);
            (nf * uf - (p[r] - p[l]) / dx) / af
        })
        .collect()
}

fn cell_average(faces: &[f64]) -> Vec<f64> {
    faces.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
}

/// Largest stable scaled time step `cfl dx^2 a_min / (2 max P'(N))`.
pub fn drift_diffusion_dt(
    state: &DriftDiffusionState,
    profile: &DeviceProfile,
    model: &GasModel,
    grid: &Grid1D,
    cfl: f64,
) -> f64 {
    let max_dp = state
        .n
        .iter()
        .map(|v| model.dp(*v))
        .fold(0.0, f64::max)
        .max(f64::MIN_POSITIVE);
    let dx = grid.dx();
    cfl * dx * dx * profile.a_min() / (2.0 * max_dp)
}

/// Number of times a step is retried with half the step size before giving up.
pub const MAX_HALVINGS: u32 = 4;

/// One explicit conservative step of the drift-diffusion system; `model`
/// should be the unperturbed law (`delta = 0`). A step that would make `N`
/// negative is redone as two half steps, at most [`MAX_HALVINGS`] deep.
pub fn drift_diffusion_step(
    state: &DriftDiffusionState,
    profile: &DeviceProfile,
    model: &GasModel,
    grid: &Grid1D,
    dt_s: f64,
) -> Result<DriftDiffusionState> {
    grid.check_len("N", state.n.len())?;
    profile.check_grid(grid)?;
    if profile.a_min() <= 0.0 {
        return Err(Error::Config("drift-diffusion needs a(x) > 0".into()));
    }
    step_with_retry(state, profile, model, grid, dt_s, MAX_HALVINGS)
}

fn step_with_retry(
    state: &DriftDiffusionState,
    profile: &DeviceProfile,
    model: &GasModel,
    grid: &Grid1D,
    dt_s: f64,
    depth: u32,
) -> Result<DriftDiffusionState> {
    match raw_step(state, profile, model, grid, dt_s) {
        Ok(next) => Ok(next),
        Err(Error::Positivity { .. }) if depth > 0 => {
            let half = step_with_retry(state, profile, model, grid, 0.5 * dt_s, depth - 1)?;
            step_with_retry(&half, profile, model, grid, 0.5 * dt_s, depth - 1)
        }
        Err(e) => Err(e),
    }
}

fn raw_step(
    state: &DriftDiffusionState,
    profile: &DeviceProfile,
    model: &GasModel,
    grid: &Grid1D,
    dt_s: f64,
) -> Result<DriftDiffusionState> {
    let dx = grid.dx();
    let faces = face_fluxes(&state.n, &state.upsilon, profile, model, grid);
    let n: Vec<f64> = state
        .n
        .iter()
        .enumerate()
        .map(|(i, v)| v - dt_s / dx * (faces[i + 1] - faces[i]))
        .collect();
    let s = state.s + dt_s;
    if let Some(bad) = n.iter().copied().find(|v| !(*v >= 0.0)) {
        if !bad.is_finite() {
            return Err(Error::Integration {
                time: s,
                detail: "drift-diffusion density is not finite".into(),
            });
        }
        return Err(Error::Positivity {
            time: s,
            min_rho: bad,
            floor: 0.0,
        });
    }
    let upsilon = field_values(&n, profile, dx, 0.0);
    Ok(DriftDiffusionState {
        n,
        upsilon,
        j: cell_average(&faces),
        s,
    })
}

/// Advances to each of `s_instants` (increasing) and returns the densities
/// there.
pub fn drift_diffusion_run(
    initial: &DriftDiffusionState,
    profile: &DeviceProfile,
    model: &GasModel,
    grid: &Grid1D,
    cfl: f64,
    s_instants: &[f64],
) -> Result<Vec<DriftDiffusionState>> {
    let mut state = initial.clone();
    let mut out = Vec::with_capacity(s_instants.len());
    for &target in s_instants {
        while state.s < target - 1e-14 * target.max(1.0) {
            let dt = drift_diffusion_dt(&state, profile, model, grid, cfl).min(target - state.s);
            state = drift_diffusion_step(&state, profile, model, grid, dt)?;
        }
        state.s = target.max(state.s);
        out.push(state.clone());
    }
    Ok(out)
}

/// How the viscosity is tied to `tau` and `delta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Coupling {
    /// `epsilon = factor sqrt(P'(2 delta)) tau^power`.
    Power { factor: f64, power: f64 },
    /// `epsilon` held fixed.
    Constant { epsilon: f64 },
}

impl Default for Coupling {
    fn default() -> Self {
        Coupling::Power {
            factor: 0.1,
            power: 2.0,
        }
    }
}

impl Coupling {
    pub fn epsilon(&self, tau: f64, model: &GasModel) -> f64 {
        match *self {
            Coupling::Power { factor, power } => factor * model.dp(model.floor()).sqrt() * tau.powf(power),
            Coupling::Constant { epsilon } => epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudySetup {
    pub grid: Grid1D,
    pub gamma: f64,
    pub convention: PressureConvention,
    pub raw_rho: Vec<f64>,
    pub raw_u: Vec<f64>,
    pub a_vals: Vec<f64>,
    pub b_vals: Vec<f64>,
    pub e_minus: f64,
    /// Decreasing, each half the previous.
    pub taus: Vec<f64>,
    pub coupling: Coupling,
    /// `delta = delta_factor * tau`.
    pub delta_factor: f64,
    /// Scaled horizon `L`.
    pub horizon: f64,
    /// Initial layer `[0, layer_fraction * L]` left out of the comparison.
    pub layer_fraction: f64,
    /// Spatial comparison window; the whole grid when absent.
    pub window: Option<(f64, f64)>,
    /// Number of scaled sampling times on `[0, L]`.
    pub samples: usize,
    pub cfl: f64,
    pub dd_cfl: f64,
    pub smoothing_width: f64,
    /// Errors at or below this are treated as zero.
    pub zero_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub tau: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub l1_error: f64,
    pub dissipation_integral: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    pub monotone: bool,
    /// Consecutive dissipation integrals differ by less than a factor of two.
    pub dissipation_bounded: bool,
    pub failure: Option<String>,
    /// Excess density `N - 2 delta` at `s = L` per `tau`, for inspection.
    pub final_excess: Vec<Vec<f64>>,
    /// Drift-diffusion density at `s = L`.
    pub reference_final: Vec<f64>,
}

impl StudyTable {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }

    pub fn to_csv(&self) -> String {
        let f = crate::monitor::fmt_f64;
        let mut out = String::from("tau,epsilon,delta,L1_error,dissipation_integral\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                f(r.tau),
                f(r.epsilon),
                f(r.delta),
                f(r.l1_error),
                f(r.dissipation_integral)
            ));
        }
        out
    }
}

impl StudySetup {
    fn validate(&self) -> Result<()> {
        if self.taus.len() < 3 {
            return Err(Error::Config("relaxation study needs at least three tau values".into()));
        }
        for w in self.taus.windows(2) {
            if ((w[1] / w[0]) - 0.5).abs() > 1e-9 {
                return Err(Error::Config("each tau must be half the previous".into()));
            }
        }
        if !(self.horizon > 0.0 && self.samples >= 2 && self.delta_factor > 0.0) {
            return Err(Error::Config(
                "study needs L > 0, delta_factor > 0 and >= 2 samples".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.layer_fraction) {
            return Err(Error::Config("layer_fraction must lie in [0, 1)".into()));
        }
        Ok(())
    }

    pub fn sample_times(&self) -> Vec<f64> {
        let k = self.samples - 1;
        (0..=k).map(|i| self.horizon * i as f64 / k as f64).collect()
    }
}

/// Runs the hydrodynamic model with the relaxation source for every `tau`,
/// rescales, and measures the space-time `L1` distance of the excess density
/// to a drift-diffusion solution on the same grid.
pub fn relaxation_study(setup: &StudySetup) -> Result<StudyTable> {
    setup.validate()?;
    let grid = &setup.grid;
    let profile = DeviceProfile::new(grid, setup.a_vals.clone(), setup.b_vals.clone(), setup.e_minus)?;
    let s_all = setup.sample_times();

    let dd_model = GasModel::unperturbed(setup.gamma, setup.convention)?;
    let n0 = mollify(&setup.raw_rho, setup.smoothing_width, grid)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    let dd0 = DriftDiffusionState::new(n0, &profile, &dd_model, grid)?;
    let reference = drift_diffusion_run(&dd0, &profile, &dd_model, grid, setup.dd_cfl, &s_all)
        .map_err(|e| Error::Study(format!("drift-diffusion reference failed: {e}")))?;

    let dx = grid.dx();
    let centers = grid.centers();
    let (x0, x1) = setup.window.unwrap_or((grid.x_min(), grid.x_max()));
    let s0 = setup.layer_fraction * setup.horizon;

    let mut rows = Vec::with_capacity(setup.taus.len());
    let mut final_excess = Vec::with_capacity(setup.taus.len());
    for &tau in &setup.taus {
        let model = GasModel::new(setup.gamma, setup.delta_factor * tau, setup.convention)?;
        let epsilon = setup.coupling.epsilon(tau, &model);
        let cfg = SolverConfig {
            epsilon,
            tau,
            cfl: setup.cfl,
            t_end: setup.horizon / tau,
            source_variant: SourceVariant::Relaxation,
            smoothing_width: setup.smoothing_width,
            ..Default::default()
        };
        let initial = prepare_initial(&setup.raw_rho, &setup.raw_u, &model, &cfg, grid)?;
        let t_marks: Vec<f64> = s_all.iter().map(|s| s / tau).collect();
        let mut recorded = Vec::with_capacity(s_all.len());
        let run = integrate(
            &initial,
            &profile,
            &model,
            &cfg,
            grid,
            &Schedule::at_times(t_marks[1..].to_vec()),
            |state, _| {
                recorded.push(state.clone());
                Ok(())
            },
        )?;
        if let Some(err) = run.failure {
            return Err(Error::Study(format!("hydrodynamic run at tau = {tau} failed: {err}")));
        }
        let scaled = rescale(&recorded, tau, &s_all, &profile, grid, &model)?;

        let slice_err: Vec<f64> = scaled
            .n
            .iter()
            .zip(&reference)
            .map(|(n, dd)| {
                centers
                    .iter()
                    .zip(n.iter().zip(&dd.n))
                    .filter(|(x, _)| **x >= x0 && **x <= x1)
                    .map(|(_, (n, d))| (n - scaled.floor - d).abs())
                    .sum::<f64>()
                    * dx
            })
            .collect();
        let mut l1 = 0.0;
        for k in 1..s_all.len() {
            if s_all[k - 1] >= s0 - 1e-12 {
                l1 += 0.5 * (s_all[k] - s_all[k - 1]) * (slice_err[k - 1] + slice_err[k]);
            }
        }
        let dissipation = dissipation_integral(&scaled, grid);
        final_excess.push(
            scaled
                .n
                .last()
                .map(|n| n.iter().map(|v| v - scaled.floor).collect())
                .unwrap_or_default(),
        );
        rows.push(StudyRow {
            tau,
            epsilon,
            delta: model.delta(),
            l1_error: l1,
            dissipation_integral: dissipation,
            steps: run.steps,
        });
    }

    let monotone = rows
        .windows(2)
        .all(|w| w[1].l1_error < w[0].l1_error || (w[0].l1_error <= setup.zero_tol && w[1].l1_error <= setup.zero_tol));
    let dissipation_bounded = rows.windows(2).all(|w| {
        let (a, b) = (w[0].dissipation_integral, w[1].dissipation_integral);
        (a <= setup.zero_tol && b <= setup.zero_tol) || (a > 0.0 && b > 0.0 && (b / a) < 2.0 && (a / b) < 2.0)
    });
    let failure = if !monotone {
        Some("L1 error is not strictly decreasing in tau".to_string())
    } else if !dissipation_bounded {
        Some("dissipation integrals vary by a factor of two or more".to_string())
    } else {
        None
    };
    Ok(StudyTable {
        rows,
        monotone,
        dissipation_bounded,
        failure,
        final_excess,
        reference_final: reference.last().map(|r| r.n.clone()).unwrap_or_default(),
    })
}
