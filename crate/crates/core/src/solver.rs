//! Finite-volume integration of the regularized system
//!
//! ```text
//! rho_t + ((rho - 2 delta) u)_x             = eps rho_xx
//! m_t   + (rho u^2 - delta u^2 + P1(rho))_x = eps m_xx + S_field - k(rho) m
//! E_x   = (rho - 2 delta) - b
//! ```
//!
//! with `S_field = rho E, k = a/tau` ([`SourceVariant::Original`]) or
//! `S_field = (rho - 2 delta) E, k = a (rho - 2 delta)/(rho tau)`
//! ([`SourceVariant::Relaxation`]).
//!
//! One step is first order: a local Lax-Friedrichs flux divergence and a
//! centred second difference for the viscosity, both explicit, then the
//! momentum update `m' = -k m + R` is solved exactly over the step with the
//! explicit remainder `R` frozen. The damping therefore puts no restriction on
//! `dt` and the stiff limit `m -> R/k` keeps the pressure gradient.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::field_values;
use crate::grid::{Boundary, Grid1D};
use crate::model::GasModel;
use crate::profile::DeviceProfile;
use crate::state::HydroState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SourceVariant {
    /// `rho E - a rho u / tau`.
    #[default]
    #[serde(rename = "original", alias = "original16")]
    Original,
    /// `(rho - 2 delta) E - a (rho - 2 delta) u / tau`.
    #[serde(rename = "relaxation", alias = "relaxation41")]
    Relaxation,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FluxScheme {
    /// Dissipation speed per face: the larger `|u| + c` of the two neighbours.
    #[default]
    LocalLaxFriedrichs,
    /// One dissipation speed for all faces: the largest `|u| + c` on the grid.
    Rusanov,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    pub epsilon: f64,
    pub tau: f64,
    pub cfl: f64,
    pub t_end: f64,
    #[serde(default)]
    pub source_variant: SourceVariant,
    #[serde(default)]
    pub flux_scheme: FluxScheme,
    /// Standard deviation of the Gaussian mollifier applied to initial data.
    #[serde(default)]
    pub smoothing_width: f64,
}

pub const MAX_CFL: f64 = 0.9;

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-3,
            tau: 1.0,
            cfl: 0.45,
            t_end: 1.0,
            source_variant: SourceVariant::Original,
            flux_scheme: FluxScheme::LocalLaxFriedrichs,
            smoothing_width: 0.0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Config(format!("epsilon must be > 0, got {}", self.epsilon)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be > 0, got {}", self.tau)));
        }
        if !(self.cfl > 0.0 && self.cfl <= MAX_CFL) {
            return Err(Error::Config(format!(
                "cfl must lie in (0, {MAX_CFL}], got {}",
                self.cfl
            )));
        }
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        if !(self.smoothing_width >= 0.0 && self.smoothing_width.is_finite()) {
            return Err(Error::Config("smoothing_width must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepReport {
    pub dt_used: f64,
    pub max_wave_speed: f64,
    pub post_step_min_rho: f64,
    pub source_solve_iterations: u32,
}

/// Physical flux `((rho - 2 delta) u, rho u^2 - delta u^2 + P1(rho))`.
pub fn flux(model: &GasModel, rho: f64, mom: f64) -> Result<(f64, f64)> {
    let floor = model.floor();
    if !(rho >= floor) || !(rho > 0.0) {
        return Err(Error::domain("flux", format!("rho = {rho} below floor {floor}")));
    }
    Ok(flux_unchecked(model, rho, mom))
}

#[inline]
fn flux_unchecked(model: &GasModel, rho: f64, mom: f64) -> (f64, f64) {
    let u = mom / rho;
    let excess = rho - model.floor();
    (excess * u, (rho - model.delta()) * u * u + model.p1(rho))
}

/// Mollified initial data `(raw_rho + 2 delta, raw_u) * G`.
pub fn prepare_initial(
    raw_rho: &[f64],
    raw_u: &[f64],
    model: &GasModel,
    cfg: &SolverConfig,
    grid: &Grid1D,
) -> Result<HydroState> {
    grid.check_len("raw_rho", raw_rho.len())?;
    grid.check_len("raw_u", raw_u.len())?;
    if let Some(i) = raw_rho.iter().position(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(Error::domain(
            "prepare_initial",
            format!("raw density must be finite and >= 0; cell {i} has {}", raw_rho[i]),
        ));
    }
    if raw_u.iter().any(|u| !u.is_finite()) {
        return Err(Error::domain("prepare_initial", "raw velocity is not finite"));
    }
    let rho_s = mollify(raw_rho, cfg.smoothing_width, grid);
    let u_s = mollify(raw_u, cfg.smoothing_width, grid);
    let floor = model.floor();
    let rho: Vec<f64> = rho_s.iter().map(|r| r.max(0.0) + floor).collect();
    let mom = rho.iter().zip(&u_s).map(|(r, u)| r * u).collect();
    HydroState::new(rho, mom, 0.0)
}

/// Discrete Gaussian convolution with weights normalized to sum one,
/// truncated at five standard deviations.
pub fn mollify(values: &[f64], width: f64, grid: &Grid1D) -> Vec<f64> {
    let dx = grid.dx();
    let half = (5.0 * width / dx).ceil() as isize;
    if width <= 0.0 || half == 0 {
        return values.to_vec();
    }
    let weights: Vec<f64> = (-half..=half)
        .map(|k| {
            let x = k as f64 * dx;
            (-0.5 * x * x / (width * width)).exp()
        })
        .collect();
    let total: f64 = weights.iter().sum();
    (0..values.len())
        .map(|i| {
            weights
                .iter()
                .enumerate()
                .map(|(j, w)| w * values[grid.neighbor(i, j as isize - half)])
                .sum::<f64>()
                / total
        })
        .collect()
}

/// `(1 - e^{-z})/z`.
#[inline]
fn phi1(z: f64) -> f64 {
    if z < 1e-8 {
        1.0 - 0.5 * z
    } else {
        -(-z).exp_m1() / z
    }
}

/// Largest `|u| + c` over the state.
pub fn max_wave_speed(state: &HydroState, model: &GasModel) -> f64 {
    state
        .rho
        .iter()
        .zip(&state.mom)
        .map(|(r, m)| (m / r).abs() + model.sound_speed(*r))
        .fold(0.0, f64::max)
}

/// One step with the internally chosen stable `dt`.
pub fn step(
    state: &HydroState,
    profile: &DeviceProfile,
    model: &GasModel,
    cfg: &SolverConfig,
    grid: &Grid1D,
) -> Result<(HydroState, StepReport)> {
    step_capped(state, profile, model, cfg, grid, f64::INFINITY)
}

/// One step with `dt` additionally capped at `dt_cap`.
///
/// The time step is `cfl / (s/dx + 2 eps/dx^2)` with `s` the largest wave
/// speed, which never exceeds `cfl * min(dx/s, dx^2/(2 eps))` and keeps every
/// coefficient of the density update non-negative.
pub fn step_capped(
    state: &HydroState,
    profile: &DeviceProfile,
    model: &GasModel,
    cfg: &SolverConfig,
    grid: &Grid1D,
    dt_cap: f64,
) -> Result<(HydroState, StepReport)> {
    let n = grid.n_cells();
    state.check_grid(grid)?;
    profile.check_grid(grid)?;
    let dx = grid.dx();
    let eps = cfg.epsilon;
    let floor = model.floor();

    let excess: Vec<f64> = state.rho.iter().map(|r| r - floor).collect();
    let mut speed = Vec::with_capacity(n);
    let mut f_mass = Vec::with_capacity(n);
    let mut f_mom = Vec::with_capacity(n);
    for i in 0..n {
        let (rho, m) = (state.rho[i], state.mom[i]);
        let u = m / rho;
        speed.push(u.abs() + model.sound_speed(rho));
        let (f1, f2) = flux_unchecked(model, rho, m);
        f_mass.push(f1);
        f_mom.push(f2);
    }
    let s_max = speed.iter().copied().fold(0.0, f64::max);
    if !s_max.is_finite() {
        return Err(Error::Integration {
            time: state.time,
            detail: "non-finite wave speed".into(),
        });
    }
    let mut dt = cfg.cfl / (s_max / dx + 2.0 * eps / (dx * dx));
    dt = dt.min(dt_cap);
    if !(dt > 0.0) {
        return Err(Error::Integration {
            time: state.time,
            detail: format!("time step collapsed to {dt}"),
        });
    }

    // face k sits between cells k-1 and k; ghosts follow the boundary policy
    let cell = |j: isize| -> usize {
        match grid.boundary() {
            Boundary::Outflow => j.clamp(0, n as isize - 1) as usize,
            Boundary::Periodic => j.rem_euclid(n as isize) as usize,
        }
    };
    let mut g_mass = Vec::with_capacity(n + 1);
    let mut g_mom = Vec::with_capacity(n + 1);
    for k in 0..=n as isize {
        let l = cell(k - 1);
        let r = cell(k);
        let alpha = match cfg.flux_scheme {
            FluxScheme::LocalLaxFriedrichs => speed[l].max(speed[r]),
            FluxScheme::Rusanov => s_max,
        };
        g_mass.push(0.5 * (f_mass[l] + f_mass[r]) - 0.5 * alpha * (excess[r] - excess[l]));
        g_mom.push(0.5 * (f_mom[l] + f_mom[r]) - 0.5 * alpha * (state.mom[r] - state.mom[l]));
    }

    let lam = dt / dx;
    let mu = eps * dt / (dx * dx);
    let mut rho_new = Vec::with_capacity(n);
    for i in 0..n {
        let (il, ir) = (cell(i as isize - 1), cell(i as isize + 1));
        let lap = excess[ir] - 2.0 * excess[i] + excess[il];
        let r_new = excess[i] - lam * (g_mass[i + 1] - g_mass[i]) + mu * lap;
        rho_new.push(floor + r_new);
    }

    let e_vals = field_values(&state.rho, profile, dx, floor);
    let mut mom_new = Vec::with_capacity(n);
    for i in 0..n {
        let (il, ir) = (cell(i as isize - 1), cell(i as isize + 1));
        let m = &state.mom;
        let lap = m[ir] - 2.0 * m[i] + m[il];
        let (s_field, k) = match cfg.source_variant {
            SourceVariant::Original => (state.rho[i] * e_vals[i], profile.a_vals[i] / cfg.tau),
            SourceVariant::Relaxation => {
                let r_new = (rho_new[i] - floor).max(0.0);
                (
                    excess[i] * e_vals[i],
                    profile.a_vals[i] * r_new / (rho_new[i] * cfg.tau),
                )
            }
        };
        let rest = -(g_mom[i + 1] - g_mom[i]) / dx + eps * lap / (dx * dx) + s_field;
        let z = k * dt;
        mom_new.push((-z).exp() * m[i] + dt * phi1(z) * rest);
    }

    let next = HydroState {
        rho: rho_new,
        mom: mom_new,
        time: state.time + dt,
    };
    next.validate(model)?;
    let report = StepReport {
        dt_used: dt,
        max_wave_speed: s_max,
        post_step_min_rho: next.min_rho(),
        source_solve_iterations: 1,
    };
    Ok((next, report))
}

/// When the observer is called during [`integrate`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Schedule {
    /// Every this many steps (in addition to the initial and final states).
    pub every_steps: Option<usize>,
    /// Times the integration lands on exactly; must be increasing.
    pub times: Vec<f64>,
}

impl Schedule {
    pub fn every(steps: usize) -> Self {
        Self {
            every_steps: Some(steps.max(1)),
            times: Vec::new(),
        }
    }

    pub fn at_times(times: Vec<f64>) -> Self {
        Self {
            every_steps: None,
            times,
        }
    }
}

#[derive(Debug)]
pub struct Integration {
    /// Last valid state.
    pub state: HydroState,
    pub steps: usize,
    /// Smallest post-step density over every step taken.
    pub min_rho: f64,
    /// Largest `dt` over every step taken.
    pub max_dt: f64,
    pub failure: Option<Error>,
}

impl Integration {
    pub fn completed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Advances to `cfg.t_end`, calling `observe(state, step_index)` on the
/// initial state, on every scheduled step or time, and on the final state.
/// A step failure stops the integration and is returned in
/// [`Integration::failure`] together with the last valid state.
pub fn integrate<F>(
    initial: &HydroState,
    profile: &DeviceProfile,
    model: &GasModel,
    cfg: &SolverConfig,
    grid: &Grid1D,
    schedule: &Schedule,
    mut observe: F,
) -> Result<Integration>
where
    F: FnMut(&HydroState, usize) -> Result<()>,
{
    cfg.validate()?;
    initial.check_grid(grid)?;
    profile.check_grid(grid)?;
    initial.validate(model)?;

    let t_end = cfg.t_end;
    let mut state = initial.clone();
    observe(&state, 0)?;
    let mut steps = 0usize;
    let mut min_rho = state.min_rho();
    let mut max_dt: f64 = 0.0;
    let t0 = state.time;
    let mut next_mark = schedule.times.iter().copied().filter(|t| *t > t0).peekable();
    let mut last_observed = 0usize;
    let mut failure = None;

    // relative slack for landing on target times
    let snap = 1e-12 * t_end.max(1.0);
    while state.time < t_end - snap {
        let target = next_mark.peek().copied().unwrap_or(t_end).min(t_end);
        let cap = target - state.time;
        match step_capped(&state, profile, model, cfg, grid, cap) {
            Ok((mut next, report)) => {
                steps += 1;
                min_rho = min_rho.min(report.post_step_min_rho);
                max_dt = max_dt.max(report.dt_used);
                let hit_mark = (next.time - target).abs() <= snap;
                if hit_mark {
                    next.time = target;
                    if next_mark.peek().is_some_and(|t| *t <= target + snap) {
                        next_mark.next();
                    }
                }
                state = next;
                let cadence = schedule.every_steps.is_some_and(|k| steps.is_multiple_of(k));
                let is_mark = hit_mark && target < t_end - snap;
                if cadence || is_mark {
                    observe(&state, steps)?;
                    last_observed = steps;
                }
            }
            Err(e @ (Error::Integration { .. } | Error::Positivity { .. })) => {
                failure = Some(e);
                break;
            }
            Err(e) => return Err(e),
        }
    }
    if failure.is_none() && last_observed != steps {
        observe(&state, steps)?;
    }
    Ok(Integration {
        state,
        steps,
        min_rho,
        max_dt,
        failure,
    })
}
