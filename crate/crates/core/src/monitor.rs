//! Runtime checks of the a-priori estimates: mass, field bound, linear growth
//! of the Riemann invariants, time-uniform bounds and the entropy inequality.
//!
//! Every monitor is a pure function of recorded states, so evaluating a saved
//! trajectory reproduces the time series of the original run exactly.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{field_bound, field_values, ElectricField};
use crate::grid::{Boundary, Grid1D};
use crate::model::GasModel;
use crate::profile::DeviceProfile;
use crate::relax::ScaledTrajectory;
use crate::solver::{SolverConfig, SourceVariant};
use crate::state::HydroState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonitorKind {
    Mass,
    FieldBound,
    RiemannGrowth,
    UniformBounds,
    Entropy,
}

impl MonitorKind {
    pub const ALL: [MonitorKind; 5] = [
        MonitorKind::Mass,
        MonitorKind::FieldBound,
        MonitorKind::RiemannGrowth,
        MonitorKind::UniformBounds,
        MonitorKind::Entropy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MonitorKind::Mass => "mass",
            MonitorKind::FieldBound => "field_bound",
            MonitorKind::RiemannGrowth => "riemann_growth",
            MonitorKind::UniformBounds => "uniform_bounds",
            MonitorKind::Entropy => "entropy",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|k| k.name() == name.trim())
            .ok_or_else(|| Error::Config(format!("unknown monitor '{name}'")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    /// Mass may grow by this fraction of the initial mass between samples
    /// (per 1000 steps under periodic boundaries).
    pub mass_rel: f64,
    pub field: f64,
    pub riemann: f64,
    pub plateau: f64,
    /// The constant `C` in the entropy tolerance `C (dx + eps)` times the
    /// magnitude of the integrand.
    pub entropy_c: f64,
    pub entropy_tests: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            mass_rel: 1e-12,
            field: 1e-12,
            riemann: 1e-6,
            plateau: 0.01,
            entropy_c: 1.0,
            entropy_tests: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonitorSuite {
    pub enabled: Vec<MonitorKind>,
    pub tolerances: Tolerances,
    /// Steps between evaluations.
    pub cadence: usize,
}

impl Default for MonitorSuite {
    fn default() -> Self {
        Self {
            enabled: MonitorKind::ALL.to_vec(),
            tolerances: Tolerances::default(),
            cadence: 10,
        }
    }
}

impl MonitorSuite {
    pub fn new(mut enabled: Vec<MonitorKind>, tolerances: Tolerances, cadence: usize) -> Result<Self> {
        enabled.sort();
        enabled.dedup();
        let suite = Self {
            enabled,
            tolerances,
            cadence,
        };
        suite.validate()?;
        Ok(suite)
    }

    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        let all = [t.mass_rel, t.field, t.riemann, t.plateau, t.entropy_c];
        if all.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::Config("monitor tolerances must be > 0".into()));
        }
        if self.cadence == 0 {
            return Err(Error::Config("monitor cadence must be >= 1".into()));
        }
        Ok(())
    }

    pub fn has(&self, kind: MonitorKind) -> bool {
        self.enabled.contains(&kind)
    }
}

/// `sum (rho - 2 delta) dx`.
pub fn monitor_mass(state: &HydroState, grid: &Grid1D, model: &GasModel) -> f64 {
    let floor = model.floor();
    state.rho.iter().map(|r| r - floor).sum::<f64>() * grid.dx()
}

/// `sup |E| / bound`.
pub fn monitor_field_bound(field: &ElectricField) -> f64 {
    field.bound_ratio()
}

/// Largest Riemann invariant `max_x max(z, w)` of a state.
pub fn riemann_max(state: &HydroState, model: &GasModel) -> f64 {
    state
        .rho
        .iter()
        .zip(&state.mom)
        .map(|(r, m)| {
            let h = model.h(*r);
            let u = m / r;
            (h - u).max(h + u)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Slack `M2 + M1 t - max_x max(z, w)` of the linear growth bound.
pub fn monitor_riemann_growth(state: &HydroState, field_bound: f64, initial_bound: f64, model: &GasModel) -> f64 {
    initial_bound + field_bound * state.time - riemann_max(state, model)
}

/// The two time-uniform quantities: `(sup rho, sup |u|)` for `gamma > 1`,
/// `(sup (ln rho + u), sup (ln rho - u))` for `gamma = 1`.
pub fn monitor_uniform_bounds(state: &HydroState, model: &GasModel) -> (f64, f64) {
    let mut a = f64::NEG_INFINITY;
    let mut b = f64::NEG_INFINITY;
    for (r, m) in state.rho.iter().zip(&state.mom) {
        let u = m / r;
        if model.is_isothermal() {
            a = a.max(r.ln() + u);
            b = b.max(r.ln() - u);
        } else {
            a = a.max(*r);
            b = b.max(u.abs());
        }
    }
    (a, b)
}

/// A convex entropy `eta(rho, m)` with flux `q(rho, m)`.
pub trait EntropyPair {
    fn eta(&self, rho: f64, m: f64) -> f64;
    fn flux(&self, rho: f64, m: f64) -> f64;
    fn eta_m(&self, rho: f64, m: f64) -> f64;
    fn is_convex(&self) -> bool;

    /// Hessian in `(rho, m)`; central differences unless overridden.
    fn hessian(&self, rho: f64, m: f64) -> [[f64; 2]; 2] {
        let hr = 1e-4 * rho.abs().max(1e-3);
        let hm = 1e-4 * m.abs().max(1e-3);
        let f = |a: f64, b: f64| self.eta(a, b);
        let e0 = f(rho, m);
        let rr = (f(rho + hr, m) - 2.0 * e0 + f(rho - hr, m)) / (hr * hr);
        let mm = (f(rho, m + hm) - 2.0 * e0 + f(rho, m - hm)) / (hm * hm);
        let rm =
            (f(rho + hr, m + hm) - f(rho + hr, m - hm) - f(rho - hr, m + hm) + f(rho - hr, m - hm)) / (4.0 * hr * hm);
        [[rr, rm], [rm, mm]]
    }
}

/// Mechanical energy `m^2/(2 rho) + rho e(rho)`, `e(rho) = int_{2 delta}^rho P(s)/s^2 ds`,
/// with the flux `m^3/(2 rho^2) + (P/rho + e) m - delta u^3/3 - 2 delta (e + P/rho) u`
/// that makes it an exact entropy pair of the flux-approximate system.
#[derive(Debug, Clone, Copy)]
pub struct MechanicalEnergy {
    model: GasModel,
}

impl MechanicalEnergy {
    pub fn new(model: GasModel) -> Result<Self> {
        if model.delta() == 0.0 && model.is_isothermal() {
            return Err(Error::Config("mechanical energy needs delta > 0 when gamma = 1".into()));
        }
        Ok(Self { model })
    }
}

impl EntropyPair for MechanicalEnergy {
    fn eta(&self, rho: f64, m: f64) -> f64 {
        0.5 * m * m / rho + rho * self.model.energy(rho)
    }

    fn flux(&self, rho: f64, m: f64) -> f64 {
        let u = m / rho;
        let d = self.model.delta();
        let enthalpy = self.model.p(rho) / rho + self.model.energy(rho);
        0.5 * m * u * u + enthalpy * m - d * u * u * u / 3.0 - 2.0 * d * enthalpy * u
    }

    fn eta_m(&self, rho: f64, m: f64) -> f64 {
        m / rho
    }

    fn is_convex(&self) -> bool {
        true
    }

    fn hessian(&self, rho: f64, m: f64) -> [[f64; 2]; 2] {
        let rm = -m / (rho * rho);
        [
            [m * m / (rho * rho * rho) + self.model.dp(rho) / rho, rm],
            [rm, 1.0 / rho],
        ]
    }
}

/// Smallest eigenvalue of the Hessian of `pair` over the given states.
pub fn min_hessian_eigenvalue<P: EntropyPair + ?Sized>(pair: &P, states: &[(f64, f64)]) -> f64 {
    states
        .iter()
        .map(|(r, m)| {
            let [[a, b], [_, d]] = pair.hessian(*r, *m);
            let mean = 0.5 * (a + d);
            let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
            mean - rad
        })
        .fold(f64::INFINITY, f64::min)
}

/// Non-negative smooth bump `amp psi((x - xc)/rx) psi((t - tc)/rt)` with
/// `psi(s) = exp(-1/(1 - s^2))` on `|s| < 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub xc: f64,
    pub rx: f64,
    pub tc: f64,
    pub rt: f64,
    pub amp: f64,
}

fn bump(s: f64) -> (f64, f64) {
    if s.abs() >= 1.0 {
        return (0.0, 0.0);
    }
    let d = 1.0 - s * s;
    let v = (-1.0 / d).exp();
    (v, v * (-2.0 * s / (d * d)))
}

impl TestFunction {
    /// `(phi, phi_x, phi_t)`.
    pub fn eval(&self, x: f64, t: f64) -> (f64, f64, f64) {
        let (px, dpx) = bump((x - self.xc) / self.rx);
        let (pt, dpt) = bump((t - self.tc) / self.rt);
        (
            self.amp * px * pt,
            self.amp * dpx / self.rx * pt,
            self.amp * px * dpt / self.rt,
        )
    }

    /// `(psi((x - xc)/rx), d/dx psi((x - xc)/rx))`.
    pub fn space_factor(&self, x: f64) -> (f64, f64) {
        let (v, d) = bump((x - self.xc) / self.rx);
        (v, d / self.rx)
    }

    /// `d^2/dx^2 psi((x - xc)/rx)`.
    pub fn space_curvature(&self, x: f64) -> f64 {
        let s = (x - self.xc) / self.rx;
        if s.abs() >= 1.0 {
            return 0.0;
        }
        let d = 1.0 - s * s;
        let v = (-1.0 / d).exp();
        v * (4.0 * s * s / d.powi(4) - 2.0 / (d * d) - 8.0 * s * s / d.powi(3)) / (self.rx * self.rx)
    }

    /// `psi((t - tc)/rt)`.
    pub fn time_factor(&self, t: f64) -> f64 {
        bump((t - self.tc) / self.rt).0
    }

    /// `int_a^b psi((t - tc)/rt) dt` by composite Simpson on the part of
    /// `[a, b]` inside the support.
    pub fn time_integral(&self, a: f64, b: f64) -> f64 {
        let lo = a.max(self.tc - self.rt);
        let hi = b.min(self.tc + self.rt);
        if !(hi > lo) {
            return 0.0;
        }
        const PANELS: usize = 64;
        let h = (hi - lo) / PANELS as f64;
        let mut sum = self.time_factor(lo) + self.time_factor(hi);
        for k in 1..PANELS {
            let w = if k % 2 == 1 { 4.0 } else { 2.0 };
            sum += w * self.time_factor(lo + k as f64 * h);
        }
        sum * h / 3.0
    }

    /// Random bumps supported inside `[x_min, x_max] x [t0, t1]`.
    pub fn random_family(n: usize, grid: &Grid1D, t0: f64, t1: f64, seed: u64) -> Vec<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let len = grid.length();
        let span = t1 - t0;
        (0..n)
            .map(|_| {
                let rx = len * rng.gen_range(0.08..0.3);
                let rt = span * rng.gen_range(0.15..0.5);
                Self {
                    xc: rng.gen_range(grid.x_min() + rx..=grid.x_max() - rx),
                    rx,
                    tc: rng.gen_range(t0 + rt..=t1 - rt),
                    rt,
                    amp: rng.gen_range(0.5..2.0),
                }
            })
            .collect()
    }
}

/// Everything a monitor needs to know about the run besides its states.
#[derive(Debug, Clone, Copy)]
pub struct RunContext<'a> {
    pub profile: &'a DeviceProfile,
    pub model: &'a GasModel,
    pub grid: &'a Grid1D,
    pub solver: &'a SolverConfig,
}

/// Discrete `int int eta phi_t + q phi_x + S eta_m phi dx dt` over a recorded
/// trajectory, with `S` the field and damping source of the run. Space
/// integrals use the midpoint rule. In time, each term is the average of its
/// spatial integrals at the two ends of a recording interval times the exact
/// increment (or a fine Simpson integral) of the time factor of `phi`, so the
/// residual of a stationary constant state telescopes to zero however
/// sparsely the trajectory was recorded. Returns the residual and its scale:
/// the same sum over absolute values of the three terms plus
/// `int int eta |phi_xx|`, the size of the viscous term the inequality only
/// holds up to at finite viscosity.
pub fn entropy_residual<P: EntropyPair + ?Sized>(
    trajectory: &[HydroState],
    pair: &P,
    phi: &TestFunction,
    ctx: &RunContext<'_>,
) -> Result<(f64, f64)> {
    if !pair.is_convex() {
        return Err(Error::Config("entropy pair is not convex".into()));
    }
    let grid = ctx.grid;
    let dx = grid.dx();
    let floor = ctx.model.floor();
    let xs = grid.centers();
    // per recorded state: spatial integrals of eta X, q X', S eta_m X
    let mut slices = Vec::with_capacity(trajectory.len());
    for state in trajectory {
        state.check_grid(grid)?;
        let e = field_values(&state.rho, ctx.profile, dx, floor);
        let mut sums = [0.0; 3];
        let mut abs = [0.0; 4];
        for i in 0..xs.len() {
            let (px, dpx) = phi.space_factor(xs[i]);
            if px == 0.0 && dpx == 0.0 {
                continue;
            }
            let (rho, m) = (state.rho[i], state.mom[i]);
            let a = ctx.profile.a_vals[i];
            let source = match ctx.solver.source_variant {
                SourceVariant::Original => rho * e[i] - a * m / ctx.solver.tau,
                SourceVariant::Relaxation => (rho - floor) * (e[i] - a * m / (rho * ctx.solver.tau)),
            };
            let eta = pair.eta(rho, m);
            let terms = [eta * px, pair.flux(rho, m) * dpx, source * pair.eta_m(rho, m) * px];
            for k in 0..3 {
                sums[k] += terms[k];
                abs[k] += terms[k].abs();
            }
            abs[3] += eta.abs() * phi.space_curvature(xs[i]).abs();
        }
        slices.push((state.time, sums.map(|v| v * dx), abs.map(|v| v * dx)));
    }
    let mut residual = 0.0;
    let mut magnitude = 0.0;
    for w in slices.windows(2) {
        let (t0, s0, a0) = &w[0];
        let (t1, s1, a1) = &w[1];
        let d_time = phi.time_factor(*t1) - phi.time_factor(*t0);
        let i_time = phi.time_integral(*t0, *t1);
        let weights = [d_time, i_time, i_time, i_time];
        for k in 0..3 {
            residual += 0.5 * (s0[k] + s1[k]) * weights[k];
        }
        for k in 0..4 {
            magnitude += 0.5 * (a0[k] + a1[k]) * weights[k].abs();
        }
    }
    Ok((residual * phi.amp, magnitude * phi.amp))
}

/// `int_0^L int (N - 2 delta) U^2 dx ds` with `U = J/N`.
pub fn dissipation_integral(traj: &ScaledTrajectory, grid: &Grid1D) -> f64 {
    let dx = grid.dx();
    let slice: Vec<f64> = traj
        .n
        .iter()
        .zip(&traj.j)
        .map(|(n, j)| {
            n.iter()
                .zip(j)
                .map(|(n, j)| (n - traj.floor) * (j / n) * (j / n))
                .sum::<f64>()
                * dx
        })
        .collect();
    traj.s
        .windows(2)
        .zip(slice.windows(2))
        .map(|(s, v)| 0.5 * (s[1] - s[0]) * (v[0] + v[1]))
        .sum()
}

/// One row of the monitor time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub time: f64,
    pub step: usize,
    pub min_rho: f64,
    pub mass: f64,
    pub field_sup: f64,
    pub field_ratio: f64,
    pub riemann_max: f64,
    pub riemann_bound: f64,
    /// `sup rho` (or `sup (ln rho + u)` when isothermal).
    pub uniform_a: f64,
    /// `sup |u|` (or `sup (ln rho - u)` when isothermal).
    pub uniform_b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub monitor: String,
    pub time: f64,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauEntry {
    pub quantity: String,
    pub early_max: f64,
    pub late_max: f64,
    /// `(late - early)/|early|`.
    pub excess: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlateauStat {
    /// False when the profile does not meet the time-uniform hypotheses.
    pub asserted: bool,
    pub entries: Vec<PlateauEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EntropyStat {
    pub tests: Vec<TestFunction>,
    pub residuals: Vec<f64>,
    pub magnitudes: Vec<f64>,
    /// Machine epsilon times the largest magnitude of the family: scales
    /// below this are rounding noise, as for a test function over a region
    /// sitting at the density floor.
    pub scale_floor: f64,
    /// `C (dx + eps)`; residual `i` must be at least
    /// `-tol_factor * (magnitudes[i] + scale_floor)`.
    pub tol_factor: f64,
    /// Smallest `residuals[i] / (magnitudes[i] + scale_floor)`.
    pub worst_normalized: f64,
}

impl EntropyStat {
    pub fn bound(&self, i: usize) -> f64 {
        -self.tol_factor * (self.magnitudes[i] + self.scale_floor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub gamma_is_one: bool,
    pub initial_mass: f64,
    /// Field bound of the initial data, used as `M1`.
    pub field_bound: f64,
    /// `max (z0, w0)` over the initial data, used as `M2`.
    pub riemann_initial: f64,
    pub samples: Vec<Sample>,
    pub plateau: Option<PlateauStat>,
    pub entropy: Option<EntropyStat>,
    pub violations: Vec<Violation>,
}

impl Evaluation {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn max_field_ratio(&self) -> f64 {
        self.samples.iter().map(|s| s.field_ratio).fold(0.0, f64::max)
    }

    pub fn min_riemann_slack(&self) -> f64 {
        self.samples
            .iter()
            .map(|s| s.riemann_bound - s.riemann_max)
            .fold(f64::INFINITY, f64::min)
    }
}

/// Runs the enabled monitors over recorded states (first entry is the initial
/// data). `steps[k]` is the step index at which `states[k]` was recorded.
pub fn evaluate(
    states: &[HydroState],
    steps: &[usize],
    ctx: &RunContext<'_>,
    suite: &MonitorSuite,
    seed: u64,
) -> Result<Evaluation> {
    suite.validate()?;
    let Some(first) = states.first() else {
        return Err(Error::Config("no recorded states to monitor".into()));
    };
    if steps.len() != states.len() {
        return Err(Error::Shape {
            what: "steps",
            got: steps.len(),
            expected: states.len(),
        });
    }
    let (model, grid, profile) = (ctx.model, ctx.grid, ctx.profile);
    let tol = &suite.tolerances;
    let mass0 = monitor_mass(first, grid, model);
    let m1 = field_bound(first, profile, grid, model);
    let m2 = riemann_max(first, model);

    let mut samples = Vec::with_capacity(states.len());
    let mut violations = Vec::new();
    let mut prev_mass = mass0;
    for (state, &step) in states.iter().zip(steps) {
        state.check_grid(grid)?;
        let mass = monitor_mass(state, grid, model);
        let e = field_values(&state.rho, profile, grid.dx(), model.floor());
        let field_sup = e.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let field = ElectricField {
            e_vals: e,
            e_minus: profile.e_minus,
            sup_bound: m1,
        };
        let field_ratio = monitor_field_bound(&field);
        let r_max = riemann_max(state, model);
        let r_bound = m2 + m1 * state.time;
        let (ua, ub) = monitor_uniform_bounds(state, model);
        let t = state.time;

        if suite.has(MonitorKind::Mass) {
            let slack = tol.mass_rel * mass0.abs();
            match grid.boundary() {
                Boundary::Outflow => {
                    if mass > prev_mass + slack {
                        violations.push(violation(MonitorKind::Mass, t, mass, prev_mass + slack));
                    }
                }
                Boundary::Periodic => {
                    let allowed = slack * (1.0 + step as f64 / 1000.0);
                    if (mass - mass0).abs() > allowed {
                        violations.push(violation(MonitorKind::Mass, t, mass, mass0 + allowed));
                    }
                }
            }
        }
        if suite.has(MonitorKind::FieldBound) && field_ratio > 1.0 + tol.field {
            violations.push(violation(MonitorKind::FieldBound, t, field_ratio, 1.0 + tol.field));
        }
        if suite.has(MonitorKind::RiemannGrowth) && r_max > r_bound + tol.riemann {
            violations.push(violation(MonitorKind::RiemannGrowth, t, r_max, r_bound + tol.riemann));
        }
        prev_mass = mass;
        samples.push(Sample {
            time: t,
            step,
            min_rho: state.min_rho(),
            mass,
            field_sup,
            field_ratio,
            riemann_max: r_max,
            riemann_bound: r_bound,
            uniform_a: ua,
            uniform_b: ub,
        });
    }

    let plateau = if suite.has(MonitorKind::UniformBounds) {
        let stat = plateau_stat(&samples, model.is_isothermal(), profile.theorem2_ok);
        if stat.asserted {
            for entry in &stat.entries {
                if !(entry.excess < tol.plateau) {
                    violations.push(Violation {
                        monitor: format!("{}:{}", MonitorKind::UniformBounds.name(), entry.quantity),
                        time: samples.last().map_or(0.0, |s| s.time),
                        value: entry.excess,
                        bound: tol.plateau,
                    });
                }
            }
        }
        Some(stat)
    } else {
        None
    };

    let entropy = if suite.has(MonitorKind::Entropy) && states.len() >= 3 {
        let stat = entropy_stat(states, ctx, tol, seed)?;
        for (i, r) in stat.residuals.iter().enumerate() {
            let bound = stat.bound(i);
            if *r < bound {
                let centre = stat.tests[i].tc;
                violations.push(violation(MonitorKind::Entropy, centre, *r, bound));
            }
        }
        Some(stat)
    } else {
        None
    };

    Ok(Evaluation {
        gamma_is_one: model.is_isothermal(),
        initial_mass: mass0,
        field_bound: m1,
        riemann_initial: m2,
        samples,
        plateau,
        entropy,
        violations,
    })
}

fn violation(kind: MonitorKind, time: f64, value: f64, bound: f64) -> Violation {
    Violation {
        monitor: kind.name().to_string(),
        time,
        value,
        bound,
    }
}

/// Compares the maxima over the second half of the recorded window with the
/// maxima over the first half. The isothermal quantities `sup (ln rho +- u)`
/// are compared through their exponentials so the relative excess is taken
/// of positive numbers.
pub fn plateau_stat(samples: &[Sample], isothermal: bool, asserted: bool) -> PlateauStat {
    let t_end = samples.last().map_or(0.0, |s| s.time);
    let half = 0.5 * t_end;
    let names: [&str; 2] = if isothermal {
        ["ln_rho_plus_u", "ln_rho_minus_u"]
    } else {
        ["rho", "abs_u"]
    };
    let pick = |s: &Sample, k: usize| {
        let v = if k == 0 { s.uniform_a } else { s.uniform_b };
        if isothermal {
            v.exp()
        } else {
            v
        }
    };
    let entries = (0..2)
        .map(|k| {
            let early = samples
                .iter()
                .filter(|s| s.time <= half)
                .map(|s| pick(s, k))
                .fold(f64::NEG_INFINITY, f64::max);
            let late = samples
                .iter()
                .filter(|s| s.time >= half)
                .map(|s| pick(s, k))
                .fold(f64::NEG_INFINITY, f64::max);
            let excess = if early.abs() > 0.0 {
                (late - early) / early.abs()
            } else if late <= 0.0 {
                0.0
            } else {
                f64::INFINITY
            };
            PlateauEntry {
                quantity: names[k].to_string(),
                early_max: early,
                late_max: late,
                excess,
            }
        })
        .collect();
    PlateauStat { asserted, entries }
}

fn entropy_stat(states: &[HydroState], ctx: &RunContext<'_>, tol: &Tolerances, seed: u64) -> Result<EntropyStat> {
    let pair = MechanicalEnergy::new(*ctx.model)?;
    let t0 = states[0].time;
    let t1 = states[states.len() - 1].time;
    let tests = TestFunction::random_family(tol.entropy_tests, ctx.grid, t0, t1, seed);
    let mut residuals = Vec::with_capacity(tests.len());
    let mut magnitudes = Vec::with_capacity(tests.len());
    for phi in &tests {
        let (r, m) = entropy_residual(states, &pair, phi, ctx)?;
        residuals.push(r);
        magnitudes.push(m);
    }
    let tol_factor = tol.entropy_c * (ctx.grid.dx() + ctx.solver.epsilon);
    let scale_floor = f64::EPSILON * magnitudes.iter().fold(0.0f64, |a, m| a.max(*m));
    let worst_normalized = residuals
        .iter()
        .zip(&magnitudes)
        .map(|(r, m)| {
            if m + scale_floor > 0.0 {
                r / (m + scale_floor)
            } else {
                0.0
            }
        })
        .fold(f64::INFINITY, f64::min);
    Ok(EntropyStat {
        tests,
        residuals,
        magnitudes,
        scale_floor,
        tol_factor,
        worst_normalized,
    })
}

/// Formats a float with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

impl Evaluation {
    /// Time series as CSV; only columns of enabled monitors appear.
    pub fn to_csv(&self, suite: &MonitorSuite) -> String {
        let mut out = String::from("time,step,min_rho");
        if suite.has(MonitorKind::Mass) {
            out.push_str(",mass");
        }
        if suite.has(MonitorKind::FieldBound) {
            out.push_str(",field_sup,field_ratio");
        }
        if suite.has(MonitorKind::RiemannGrowth) {
            out.push_str(",riemann_max,riemann_bound");
        }
        if suite.has(MonitorKind::UniformBounds) {
            if self.gamma_is_one {
                out.push_str(",sup_ln_rho_plus_u,sup_ln_rho_minus_u");
            } else {
                out.push_str(",sup_rho,sup_abs_u");
            }
        }
        out.push('\n');
        for s in &self.samples {
            let _ = write!(out, "{},{},{}", fmt_f64(s.time), s.step, fmt_f64(s.min_rho));
            if suite.has(MonitorKind::Mass) {
                let _ = write!(out, ",{}", fmt_f64(s.mass));
            }
            if suite.has(MonitorKind::FieldBound) {
                let _ = write!(out, ",{},{}", fmt_f64(s.field_sup), fmt_f64(s.field_ratio));
            }
            if suite.has(MonitorKind::RiemannGrowth) {
                let _ = write!(out, ",{},{}", fmt_f64(s.riemann_max), fmt_f64(s.riemann_bound));
            }
            if suite.has(MonitorKind::UniformBounds) {
                let _ = write!(out, ",{},{}", fmt_f64(s.uniform_a), fmt_f64(s.uniform_b));
            }
            out.push('\n');
        }
        if let Some(e) = &self.entropy {
            out.push_str("# entropy residuals: index,residual,magnitude\n");
            for (i, (r, m)) in e.residuals.iter().zip(&e.magnitudes).enumerate() {
                let _ = writeln!(out, "# {i},{},{}", fmt_f64(*r), fmt_f64(*m));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::PressureConvention;

    fn model(gamma: f64) -> GasModel {
        GasModel::new(gamma, 0.05, PressureConvention::OneOverGamma).unwrap()
    }

    #[test]
    fn mass_examples() {
        let g = Grid1D::new(-1.0, 2.0, 300, Boundary::Outflow).unwrap();
        let m = model(2.0);
        assert_eq!(monitor_mass(&HydroState::uniform(300, 0.1, 0.0), &g, &m), 0.0);
        let rho = g
            .centers()
            .iter()
            .map(|x| if (0.0..1.0).contains(x) { 1.1 } else { 0.1 })
            .collect();
        let s = HydroState::new(rho, vec![0.0; 300], 0.0).unwrap();
        assert!((monitor_mass(&s, &g, &m) - 1.0).abs() <= g.dx());
    }

    #[test]
    fn field_ratio_of_quiet_states() {
        let g = Grid1D::new(-1.0, 1.0, 20, Boundary::Outflow).unwrap();
        let m = model(2.0);
        let p = DeviceProfile::uniform(&g, 1.0, 0.0, 0.4).unwrap();
        let s = HydroState::uniform(20, 0.1, 0.0);
        let mut f = crate::field::solve_field(&s, &p, &g, &m).unwrap();
        f.sup_bound = 0.8;
        assert_eq!(monitor_field_bound(&f), 0.5);
    }

    #[test]
    fn riemann_slack_at_start_is_nonnegative() {
        let m = model(2.0);
        let s = HydroState::new(vec![0.1, 0.5, 0.9], vec![0.0, 0.2, -0.3], 0.0).unwrap();
        let m2 = riemann_max(&s, &m);
        assert_eq!(monitor_riemann_growth(&s, 3.0, m2, &m), 0.0);
    }

    #[test]
    fn mechanical_energy_is_convex_and_vanishes_at_floor() {
        for gamma in [1.0, 1.4, 2.0, 3.0] {
            let m = model(gamma);
            let pair = MechanicalEnergy::new(m).unwrap();
            assert_eq!(pair.eta(m.floor(), 0.0), 0.0);
            let mut pts = Vec::new();
            for i in 0..50 {
                let rho = m.floor() + 10.0 * i as f64 / 49.0;
                for mom in [-3.0, -0.1, 0.0, 0.5, 4.0] {
                    pts.push((rho.max(m.floor() + 1e-6), mom));
                    assert!(pair.eta(rho.max(m.floor()), mom) >= 0.0);
                }
            }
            assert!(min_hessian_eigenvalue(&pair, &pts) >= -1e-10);
            // analytic and differenced Hessians agree
            struct Fd(MechanicalEnergy);
            impl EntropyPair for Fd {
                fn eta(&self, r: f64, m: f64) -> f64 {
                    self.0.eta(r, m)
                }
                fn flux(&self, r: f64, m: f64) -> f64 {
                    self.0.flux(r, m)
                }
                fn eta_m(&self, r: f64, m: f64) -> f64 {
                    self.0.eta_m(r, m)
                }
                fn is_convex(&self) -> bool {
                    true
                }
            }
            let fd = Fd(pair);
            let (a, b) = (fd.hessian(0.7, 0.3), pair.hessian(0.7, 0.3));
            for i in 0..2 {
                for j in 0..2 {
                    assert!((a[i][j] - b[i][j]).abs() < 1e-5 * (1.0 + b[i][j].abs()));
                }
            }
        }
    }

    #[test]
    fn entropy_flux_satisfies_compatibility() {
        // grad q = grad eta . DF for the flux-approximate flux F
        for gamma in [1.0, 1.4, 2.0, 3.0] {
            let m = model(gamma);
            let pair = MechanicalEnergy::new(m).unwrap();
            for (rho, mom) in [(0.8, 0.3), (0.15, -0.05), (2.5, 1.7)] {
                let h = 1e-6;
                let d = |f: &dyn Fn(f64, f64) -> f64| {
                    (
                        (f(rho + h, mom) - f(rho - h, mom)) / (2.0 * h),
                        (f(rho, mom + h) - f(rho, mom - h)) / (2.0 * h),
                    )
                };
                let f1 = |r: f64, mo: f64| crate::solver::flux(&m, r, mo).unwrap().0;
                let f2 = |r: f64, mo: f64| crate::solver::flux(&m, r, mo).unwrap().1;
                let (a11, a12) = d(&f1);
                let (a21, a22) = d(&f2);
                let (q_r, q_m) = d(&|r, mo| pair.flux(r, mo));
                let (e_r, e_m) = d(&|r, mo| pair.eta(r, mo));
                let scale = 1.0 + q_r.abs() + q_m.abs();
                assert!((q_r - (e_r * a11 + e_m * a21)).abs() < 1e-6 * scale, "gamma {gamma}");
                assert!((q_m - (e_r * a12 + e_m * a22)).abs() < 1e-6 * scale, "gamma {gamma}");
            }
        }
    }

    #[test]
    fn test_functions_are_smooth_bumps() {
        let g = Grid1D::new(-1.0, 1.0, 20, Boundary::Outflow).unwrap();
        let fam = TestFunction::random_family(20, &g, 0.0, 1.0, 7);
        assert_eq!(fam, TestFunction::random_family(20, &g, 0.0, 1.0, 7));
        for phi in fam {
            assert!(phi.xc - phi.rx >= -1.0 && phi.xc + phi.rx <= 1.0);
            assert!(phi.tc - phi.rt >= 0.0 && phi.tc + phi.rt <= 1.0);
            let (x, t, h) = (phi.xc + 0.3 * phi.rx, phi.tc - 0.2 * phi.rt, 1e-6);
            let (_, px, pt) = phi.eval(x, t);
            let dx = (phi.eval(x + h, t).0 - phi.eval(x - h, t).0) / (2.0 * h);
            let dt = (phi.eval(x, t + h).0 - phi.eval(x, t - h).0) / (2.0 * h);
            assert!((px - dx).abs() < 1e-6 * (1.0 + px.abs()));
            assert!((pt - dt).abs() < 1e-6 * (1.0 + pt.abs()));
            assert_eq!(phi.eval(phi.xc + phi.rx, phi.tc).0, 0.0);
        }
    }

    #[test]
    fn entropy_residual_of_constant_state_vanishes() {
        let g = Grid1D::new(0.0, 1.0, 400, Boundary::Periodic).unwrap();
        let m = model(2.0);
        // neutral and undamped so the constant state is an exact solution
        let p = DeviceProfile::uniform(&g, 0.0, 0.4, 0.0).unwrap();
        let cfg = SolverConfig::default();
        let ctx = RunContext {
            profile: &p,
            model: &m,
            grid: &g,
            solver: &cfg,
        };
        let traj: Vec<HydroState> = (0..=1000)
            .map(|k| {
                let mut s = HydroState::uniform(400, 0.5, 0.3);
                s.time = k as f64 * 0.001;
                s
            })
            .collect();
        let pair = MechanicalEnergy::new(m).unwrap();
        for phi in TestFunction::random_family(5, &g, 0.0, 1.0, 1) {
            let (r, mag) = entropy_residual(&traj, &pair, &phi, &ctx).unwrap();
            assert!(r.abs() < 1e-6 * mag, "{r} {mag}");
        }
        let far = TestFunction {
            xc: 5.0,
            rx: 0.1,
            tc: 0.5,
            rt: 0.1,
            amp: 1.0,
        };
        assert_eq!(entropy_residual(&traj, &pair, &far, &ctx).unwrap().0, 0.0);
    }

    #[test]
    fn plateau_of_constant_history_is_zero() {
        let samples: Vec<Sample> = (0..10)
            .map(|k| Sample {
                time: k as f64,
                step: k,
                min_rho: 0.1,
                mass: 1.0,
                field_sup: 0.0,
                field_ratio: 0.0,
                riemann_max: 1.0,
                riemann_bound: 1.0,
                uniform_a: 0.9,
                uniform_b: 0.2,
            })
            .collect();
        let st = plateau_stat(&samples, false, true);
        assert!(st.entries.iter().all(|e| e.excess == 0.0));
        let st = plateau_stat(&samples, true, false);
        assert!(!st.asserted);
    }

    #[test]
    fn suite_rejects_bad_tolerances() {
        let t = Tolerances {
            riemann: 0.0,
            ..Default::default()
        };
        assert!(MonitorSuite::new(vec![MonitorKind::Mass], t, 1).is_err());
        assert!(MonitorSuite::new(vec![], Tolerances::default(), 0).is_err());
        assert_eq!(
            MonitorKind::parse("riemann_growth").unwrap(),
            MonitorKind::RiemannGrowth
        );
    }
}
