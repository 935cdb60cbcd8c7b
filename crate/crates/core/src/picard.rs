//! Short-time solution of the viscous system through its heat-kernel integral
//! representation
//!
//! ```text
//! rho(t) = G(t) * rho0 + int_0^t G_y(t - s) * f(s) ds
//! m(t)   = G(t) * m0   + int_0^t G_y(t - s) * g(s) ds + int_0^t G(t - s) * S(s) ds
//! ```
//!
//! with `f = (rho - 2 delta) u`, `g = rho u^2 - delta u^2 + P1(rho)` and `S`
//! the field and damping source, solved by Picard iteration on a time slab
//! `[0, t1]`.
//!
//! Data are piecewise constant on cells and the outermost cells extend to
//! infinity, so the space integrals are exact: `G` integrates to differences
//! of `erf` and `G_y` to differences of `G` at cell faces. Time integrals use
//! the midpoint rule with the previous iterate averaged between levels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::field_values;
use crate::grid::Grid1D;
use crate::model::GasModel;
use crate::profile::DeviceProfile;
use crate::solver::SourceVariant;
use crate::state::HydroState;

/// Kernel support in standard deviations `sqrt(2 eps t)`.
pub const SUPPORT_SIGMAS: f64 = 8.0;

/// `G(x, t) = exp(-x^2/(4 eps t)) / sqrt(4 pi eps t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeatKernel {
    epsilon: f64,
}

impl HeatKernel {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::Config(format!("kernel diffusion must be > 0, got {epsilon}")));
        }
        Ok(Self { epsilon })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn eval(&self, x: f64, t: f64) -> f64 {
        let d = 4.0 * self.epsilon * t;
        (-x * x / d).exp() / (std::f64::consts::PI * d).sqrt()
    }

    /// `G_x(x, t) = -x/(2 eps t) G`.
    pub fn eval_dx(&self, x: f64, t: f64) -> f64 {
        -x / (2.0 * self.epsilon * t) * self.eval(x, t)
    }

    pub fn sigma(&self, t: f64) -> f64 {
        (2.0 * self.epsilon * t).sqrt()
    }

    /// `int_lo^hi G(x - y, t) dy`; either limit may be infinite.
    pub fn cell_weight(&self, x: f64, lo: f64, hi: f64, t: f64) -> f64 {
        let s = (4.0 * self.epsilon * t).sqrt();
        0.5 * (libm::erf((x - lo) / s) - libm::erf((x - hi) / s))
    }

    /// `int_lo^hi d/dy [G(x - y, t)] dy = G(x - hi, t) - G(x - lo, t)`.
    pub fn flux_weight(&self, x: f64, lo: f64, hi: f64, t: f64) -> f64 {
        let g = |y: f64| if y.is_finite() { self.eval(x - y, t) } else { 0.0 };
        g(hi) - g(lo)
    }

    /// Midpoint sum of `G(x_i, t)` over a grid centred on the origin.
    pub fn discrete_mass(&self, grid: &Grid1D, t: f64) -> f64 {
        let c = 0.5 * (grid.x_min() + grid.x_max());
        grid.centers().iter().map(|x| self.eval(x - c, t)).sum::<f64>() * grid.dx()
    }
}

/// Density and momentum at the levels `t_k = k t1 / levels` of the slab.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardIterate {
    pub times: Vec<f64>,
    pub rho: Vec<Vec<f64>>,
    pub mom: Vec<Vec<f64>>,
    pub index: usize,
}

impl PicardIterate {
    /// The initial data held constant in time.
    pub fn first_guess(initial: &HydroState, t1: f64, levels: usize) -> Self {
        let times: Vec<f64> = (0..=levels).map(|k| t1 * k as f64 / levels as f64).collect();
        Self {
            rho: vec![initial.rho.clone(); times.len()],
            mom: vec![initial.mom.clone(); times.len()],
            times,
            index: 0,
        }
    }

    /// `max_k (|rho_k - rho'_k|_inf + |m_k - m'_k|_inf)`.
    pub fn distance(&self, other: &Self) -> f64 {
        let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        (0..self.times.len())
            .map(|k| sup(&self.rho[k], &other.rho[k]) + sup(&self.mom[k], &other.mom[k]))
            .fold(0.0, f64::max)
    }

    pub fn endpoint(&self) -> HydroState {
        HydroState {
            rho: self.rho.last().cloned().unwrap_or_default(),
            mom: self.mom.last().cloned().unwrap_or_default(),
            time: self.times.last().copied().unwrap_or(0.0),
        }
    }
}

/// Everything fixed during the iteration.
#[derive(Debug, Clone)]
pub struct PicardProblem<'a> {
    pub initial: &'a HydroState,
    pub profile: &'a DeviceProfile,
    pub model: &'a GasModel,
    pub grid: &'a Grid1D,
    pub kernel: HeatKernel,
    pub tau: f64,
    pub variant: SourceVariant,
    pub t1: f64,
    pub levels: usize,
}

impl PicardProblem<'_> {
    /// `max(sup rho0, sup |m0|, int (rho0 - 2 delta))`.
    pub fn data_bound(&self) -> f64 {
        let s = self.initial;
        let mass: f64 = s.excess(self.model).iter().sum::<f64>() * self.grid.dx();
        let sup_m = s.mom.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        s.max_rho().max(sup_m).max(mass)
    }

    fn validate(&self) -> Result<()> {
        self.initial.check_grid(self.grid)?;
        self.profile.check_grid(self.grid)?;
        self.initial.validate(self.model)?;
        if !(self.t1 > 0.0 && self.t1.is_finite()) || self.levels == 0 {
            return Err(Error::Config("picard slab needs t1 > 0 and at least one level".into()));
        }
        if !(self.tau > 0.0) {
            return Err(Error::Config("tau must be > 0".into()));
        }
        Ok(())
    }

    fn faces(&self, j: usize) -> (f64, f64) {
        let n = self.grid.n_cells();
        let dx = self.grid.dx();
        let x0 = self.grid.x_min();
        let lo = if j == 0 { f64::NEG_INFINITY } else { x0 + j as f64 * dx };
        let hi = if j + 1 == n {
            f64::INFINITY
        } else {
            x0 + (j + 1) as f64 * dx
        };
        (lo, hi)
    }

    /// Cells whose kernel weight at lag `t` can matter for target cell `i`.
    fn window(&self, i: usize, t: f64) -> std::ops::Range<usize> {
        let n = self.grid.n_cells();
        let reach = (SUPPORT_SIGMAS * self.kernel.sigma(t) / self.grid.dx()).ceil() as usize + 1;
        i.saturating_sub(reach)..(i + reach + 1).min(n)
    }

    /// `sum_j w_j v_j` with cell weights of `G` at lag `t`.
    fn convolve(&self, values: &[f64], i: usize, t: f64) -> f64 {
        let x = self.grid.center(i);
        self.window(i, t)
            .map(|j| {
                let (lo, hi) = self.faces(j);
                self.kernel.cell_weight(x, lo, hi, t) * values[j]
            })
            .sum()
    }

    /// Same with weights of `d/dy G(x - y)`.
    fn convolve_flux(&self, values: &[f64], i: usize, t: f64) -> f64 {
        let x = self.grid.center(i);
        self.window(i, t)
            .map(|j| {
                let (lo, hi) = self.faces(j);
                self.kernel.flux_weight(x, lo, hi, t) * values[j]
            })
            .sum()
    }
}

/// Fluxes and source of a state: `(f, g, S)`.
fn integrands(rho: &[f64], mom: &[f64], p: &PicardProblem<'_>) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let model = p.model;
    let floor = model.floor();
    let e = field_values(rho, p.profile, p.grid.dx(), floor);
    let n = rho.len();
    let mut f = Vec::with_capacity(n);
    let mut g = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    for i in 0..n {
        let (r, m) = (rho[i], mom[i]);
        let u = m / r;
        let a = p.profile.a_vals[i];
        f.push((r - floor) * u);
        g.push((r - model.delta()) * u * u + model.p1(r));
        s.push(match p.variant {
            SourceVariant::Original => r * e[i] - a * m / p.tau,
            SourceVariant::Relaxation => (r - floor) * (e[i] - a * u / p.tau),
        });
    }
    (f, g, s)
}

/// One Picard iterate. Fails with [`Error::PicardBand`] when the new iterate
/// leaves `delta <= rho <= 2M, |m| <= 2M`.
pub fn picard_step(prev: &PicardIterate, problem: &PicardProblem<'_>) -> Result<PicardIterate> {
    problem.validate()?;
    let levels = prev.times.len();
    if levels != problem.levels + 1 {
        return Err(Error::Shape {
            what: "picard levels",
            got: levels,
            expected: problem.levels + 1,
        });
    }
    let n = problem.grid.n_cells();
    let dt = problem.t1 / problem.levels as f64;
    let floor = problem.model.floor();

    // integrands of the previous iterate at the interval midpoints
    let mids: Vec<(Vec<f64>, Vec<f64>, Vec<f64>)> = (0..problem.levels)
        .map(|k| {
            let rho: Vec<f64> = prev.rho[k]
                .iter()
                .zip(&prev.rho[k + 1])
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            let mom: Vec<f64> = prev.mom[k]
                .iter()
                .zip(&prev.mom[k + 1])
                .map(|(a, b)| 0.5 * (a + b))
                .collect();
            integrands(&rho, &mom, problem)
        })
        .collect();

    let r0 = problem.initial.excess(problem.model);
    let m0 = &problem.initial.mom;
    let mut rho = vec![problem.initial.rho.clone()];
    let mut mom = vec![m0.clone()];
    for level in 1..levels {
        let t = prev.times[level];
        let mut rl = Vec::with_capacity(n);
        let mut ml = Vec::with_capacity(n);
        for i in 0..n {
            let mut r = problem.convolve(&r0, i, t);
            let mut m = problem.convolve(m0, i, t);
            for (k, (f, g, s)) in mids.iter().enumerate().take(level) {
                let lag = t - (k as f64 + 0.5) * dt;
                r += dt * problem.convolve_flux(f, i, lag);
                m += dt * (problem.convolve_flux(g, i, lag) + problem.convolve(s, i, lag));
            }
            rl.push(floor + r);
            ml.push(m);
        }
        rho.push(rl);
        mom.push(ml);
    }
    let next = PicardIterate {
        times: prev.times.clone(),
        rho,
        mom,
        index: prev.index + 1,
    };
    check_band(&next, problem)?;
    Ok(next)
}

fn check_band(it: &PicardIterate, problem: &PicardProblem<'_>) -> Result<()> {
    let bound = 2.0 * problem.data_bound();
    let delta = problem.model.delta();
    for (k, (rho, mom)) in it.rho.iter().zip(&it.mom).enumerate() {
        let rmin = rho.iter().copied().fold(f64::INFINITY, f64::min);
        let rmax = rho.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mmax = mom.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(rmin >= delta && rmax <= bound && mmax <= bound) {
            return Err(Error::PicardBand {
                iteration: it.index,
                detail: format!(
                    "at t = {}: rho in [{rmin}, {rmax}], sup |m| = {mmax}, band [{delta}, {bound}]",
                    it.times[k]
                ),
            });
        }
    }
    Ok(())
}

/// Sup-distances between successive iterates and their ratios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContractionReport {
    /// `d_n` for `n = 1, 2, ...`.
    pub distances: Vec<f64>,
    /// `d_n / d_{n-1}` for `n = 2, 3, ...`.
    pub ratios: Vec<f64>,
    pub converged: bool,
    /// `max(sup rho0, sup |m0|, int (rho0 - 2 delta))`.
    pub data_bound: f64,
    pub t1: f64,
}

impl ContractionReport {
    pub fn max_ratio(&self) -> f64 {
        self.ratios.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let f = crate::monitor::fmt_f64;
        let mut out = String::from("n,sup_distance,ratio\n");
        for (k, d) in self.distances.iter().enumerate() {
            let ratio = if k == 0 { String::new() } else { f(self.ratios[k - 1]) };
            out.push_str(&format!("{},{},{}\n", k + 1, f(*d), ratio));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PicardSettings {
    pub tol: f64,
    pub max_iter: usize,
    /// Keep iterating until at least this many distances are recorded, even
    /// after reaching `tol`, as long as the distance stays above round-off.
    pub min_iter: usize,
}

impl Default for PicardSettings {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: 40,
            min_iter: 1,
        }
    }
}

/// Number of consecutive non-contracting iterates reported as divergence.
pub const DIVERGENCE_RUN: usize = 3;

/// Iterates until the sup-distance falls below `tol`; returns the slab
/// endpoint and the contraction report.
pub fn picard_solve(
    problem: &PicardProblem<'_>,
    settings: &PicardSettings,
) -> Result<(HydroState, PicardIterate, ContractionReport)> {
    problem.validate()?;
    let mut current = PicardIterate::first_guess(problem.initial, problem.t1, problem.levels);
    let mut report = ContractionReport {
        distances: Vec::new(),
        ratios: Vec::new(),
        converged: false,
        data_bound: problem.data_bound(),
        t1: problem.t1,
    };
    let scale = report.data_bound.max(1.0);
    let mut streak = 0;
    for _ in 0..settings.max_iter {
        let next = picard_step(&current, problem)?;
        let d = next.distance(&current);
        if let Some(prev) = report.distances.last().copied() {
            let ratio = if prev > 0.0 { d / prev } else { 0.0 };
            report.ratios.push(ratio);
            streak = if ratio >= 1.0 { streak + 1 } else { 0 };
            if streak >= DIVERGENCE_RUN {
                return Err(Error::PicardDivergence {
                    iteration: next.index,
                    ratio,
                    suggested_t1: 0.5 * problem.t1,
                });
            }
        }
        report.distances.push(d);
        current = next;
        let enough = report.distances.len() >= settings.min_iter;
        if d <= settings.tol && (enough || d <= 1e-14 * scale) {
            report.converged = true;
            break;
        }
    }
    Ok((current.endpoint(), current, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;
    use crate::model::PressureConvention;

    #[test]
    fn kernel_integrates_to_one() {
        let k = HeatKernel::new(0.01).unwrap();
        let g = Grid1D::new(-1.0, 1.0, 400, Boundary::Outflow).unwrap();
        for t in [0.01, 0.05, 0.2, 1.0] {
            assert!((k.discrete_mass(&g, t) - 1.0).abs() < 1e-6, "t = {t}");
        }
        assert!((k.cell_weight(0.3, f64::NEG_INFINITY, f64::INFINITY, 0.1) - 1.0).abs() < 1e-15);
        let h = 1e-6;
        let fd = (k.eval(0.1 + h, 0.2) - k.eval(0.1 - h, 0.2)) / (2.0 * h);
        assert!((k.eval_dx(0.1, 0.2) - fd).abs() < 1e-6);
    }

    fn problem_parts(rho0: Vec<f64>, grid: &Grid1D) -> (HydroState, DeviceProfile, GasModel) {
        let model = GasModel::new(2.0, 0.05, PressureConvention::OneOverGamma).unwrap();
        let n = rho0.len();
        let state = HydroState::new(rho0, vec![0.0; n], 0.0).unwrap();
        let profile = DeviceProfile::uniform(grid, 1.0, 0.0, 0.0).unwrap();
        (state, profile, model)
    }

    #[test]
    fn vacuum_offset_is_a_fixed_point() {
        let g = Grid1D::new(-1.0, 1.0, 40, Boundary::Outflow).unwrap();
        let (s, p, m) = problem_parts(vec![0.1; 40], &g);
        let pr = PicardProblem {
            initial: &s,
            profile: &p,
            model: &m,
            grid: &g,
            kernel: HeatKernel::new(0.01).unwrap(),
            tau: 1.0,
            variant: SourceVariant::Original,
            t1: 0.01,
            levels: 4,
        };
        let it = picard_step(&PicardIterate::first_guess(&s, 0.01, 4), &pr).unwrap();
        for k in 0..=4 {
            assert!(it.rho[k].iter().all(|r| (r - 0.1).abs() < 1e-15));
            assert!(it.mom[k].iter().all(|v| *v == 0.0));
        }
        let (end, _, rep) = picard_solve(&pr, &PicardSettings::default()).unwrap();
        assert!(rep.converged);
        assert_eq!(rep.distances.len(), 1);
        assert_eq!(end.time, 0.01);
    }

    #[test]
    fn first_iterate_density_is_heat_smoothed_data() {
        let g = Grid1D::new(-2.0, 2.0, 80, Boundary::Outflow).unwrap();
        let rho0: Vec<f64> = g.centers().iter().map(|x| 0.1 + (-4.0 * x * x).exp()).collect();
        let (s, p, m) = problem_parts(rho0, &g);
        let kernel = HeatKernel::new(0.01).unwrap();
        let pr = PicardProblem {
            initial: &s,
            profile: &p,
            model: &m,
            grid: &g,
            kernel,
            tau: 1.0,
            variant: SourceVariant::Original,
            t1: 0.02,
            levels: 4,
        };
        let it = picard_step(&PicardIterate::first_guess(&s, 0.02, 4), &pr).unwrap();
        let r0 = s.excess(&m);
        for i in 0..80 {
            let expected = 0.1 + pr.convolve(&r0, i, 0.02);
            assert!((it.rho[4][i] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn large_slab_diverges_or_leaves_band() {
        let g = Grid1D::new(-2.0, 2.0, 40, Boundary::Outflow).unwrap();
        let rho0: Vec<f64> = g.centers().iter().map(|x| 0.1 + 3.0 * (-16.0 * x * x).exp()).collect();
        let (s, p, m) = problem_parts(rho0, &g);
        let pr = PicardProblem {
            initial: &s,
            profile: &p,
            model: &m,
            grid: &g,
            kernel: HeatKernel::new(0.01).unwrap(),
            tau: 1.0,
            variant: SourceVariant::Original,
            t1: 20.0,
            levels: 20,
        };
        let out = picard_solve(&pr, &PicardSettings::default());
        assert!(matches!(
            out,
            Err(Error::PicardDivergence { .. } | Error::PicardBand { .. })
        ));
    }
}
