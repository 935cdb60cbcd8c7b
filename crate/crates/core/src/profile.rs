//! Device data: damping `a(x)`, doping `b(x)`, the field datum `E-` at the
//! left end, and the derived `C(x) = (E- - int_{-inf}^x b) / a(x)`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{cumulative_integral, derivative, Grid1D};
use crate::model::GasModel;
use crate::state::HydroState;

/// Relative tolerance used for the sign conditions on `a'` and `C'`.
pub const HYPOTHESIS_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub a_vals: Vec<f64>,
    pub b_vals: Vec<f64>,
    pub e_minus: f64,
    pub c_vals: Vec<f64>,
    pub theorem2_ok: bool,
}

/// Which of the time-uniform-bound hypotheses a profile satisfies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub ok: bool,
    pub a_min: f64,
    pub a_max: f64,
    pub b_integral: f64,
    /// Human-readable failing conditions, in check order.
    pub violations: Vec<String>,
}

impl HypothesisReport {
    pub fn first_violation(&self) -> Option<&str> {
        self.violations.first().map(String::as_str)
    }
}

impl DeviceProfile {
    pub fn new(grid: &Grid1D, a_vals: Vec<f64>, b_vals: Vec<f64>, e_minus: f64) -> Result<Self> {
        grid.check_len("a(x)", a_vals.len())?;
        grid.check_len("b(x)", b_vals.len())?;
        if let Some(i) = a_vals.iter().position(|a| !(a.is_finite() && *a >= 0.0)) {
            return Err(Error::Config(format!(
                "damping a(x) must be finite and >= 0; cell {i} has {}",
                a_vals[i]
            )));
        }
        if b_vals.iter().any(|b| !b.is_finite()) || !e_minus.is_finite() {
            return Err(Error::Config("doping and E- must be finite".into()));
        }
        let charge = cumulative_integral(&b_vals, grid.dx());
        let c_vals = a_vals
            .iter()
            .zip(&charge)
            .map(|(a, q)| if *a > 0.0 { (e_minus - q) / a } else { f64::NAN })
            .collect();
        let mut profile = Self {
            a_vals,
            b_vals,
            e_minus,
            c_vals,
            theorem2_ok: false,
        };
        profile.theorem2_ok = validate_theorem2(&profile, grid).ok;
        Ok(profile)
    }

    /// `a` constant, `b` constant.
    pub fn uniform(grid: &Grid1D, a: f64, b: f64, e_minus: f64) -> Result<Self> {
        let n = grid.n_cells();
        Self::new(grid, vec![a; n], vec![b; n], e_minus)
    }

    /// Doping `b` given on the grid and `a(x) = E- - a1 int_{-inf}^x b`, the
    /// standard construction that makes `a' <= 0` and `C' >= 0`.
    pub fn with_compatible_damping(grid: &Grid1D, b_vals: Vec<f64>, e_minus: f64, a1: f64) -> Result<Self> {
        grid.check_len("b(x)", b_vals.len())?;
        let charge = cumulative_integral(&b_vals, grid.dx());
        let a_vals = charge.iter().map(|q| e_minus - a1 * q).collect();
        Self::new(grid, a_vals, b_vals, e_minus)
    }

    /// Damping and doping from two-column `(x, value)` tables, linearly
    /// interpolated onto the grid.
    pub fn from_tables(grid: &Grid1D, a_table: &Table, b_table: &Table, e_minus: f64) -> Result<Self> {
        let xs = grid.centers();
        let a = xs.iter().map(|&x| a_table.eval(x)).collect();
        let b = xs.iter().map(|&x| b_table.eval(x)).collect();
        Self::new(grid, a, b, e_minus)
    }

    pub fn a_min(&self) -> f64 {
        self.a_vals.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn b_abs_integral(&self, dx: f64) -> f64 {
        self.b_vals.iter().map(|b| b.abs()).sum::<f64>() * dx
    }

    pub fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        grid.check_len("a(x)", self.a_vals.len())?;
        grid.check_len("b(x)", self.b_vals.len())
    }
}

/// Checks the hypotheses on `a`, `b` and `C` under which the density and
/// velocity bounds are uniform in time.
///
/// If `b <= 0` everywhere the integral condition `int b < E-` is waived.
pub fn validate_theorem2(profile: &DeviceProfile, grid: &Grid1D) -> HypothesisReport {
    let dx = grid.dx();
    let a = &profile.a_vals;
    let b = &profile.b_vals;
    let a_min = a.iter().copied().fold(f64::INFINITY, f64::min);
    let a_max = a.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let b_integral: f64 = b.iter().sum::<f64>() * dx;
    let mut violations = Vec::new();

    if !(a_min > 0.0) {
        violations.push(format!("a0 > 0 violated: min a = {a_min}"));
    }
    let a_scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
    let da = derivative(a, dx);
    let max_da = da.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max_da > HYPOTHESIS_TOL * a_scale {
        violations.push(format!("a' <= 0 violated: max a' = {max_da}"));
    }

    let nonneg = b.iter().all(|v| *v >= 0.0);
    let nonpos = b.iter().all(|v| *v <= 0.0);
    if !nonneg && !nonpos {
        violations.push("b >= 0 violated: doping changes sign".to_string());
    } else if nonneg && !nonpos && b_integral >= profile.e_minus {
        violations.push(format!(
            "int b < E- violated: int b = {b_integral}, E- = {}",
            profile.e_minus
        ));
    }

    if a_min > 0.0 {
        let c = &profile.c_vals;
        let c_scale = c.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
        let dc = derivative(c, dx);
        let min_dc = dc.iter().copied().fold(f64::INFINITY, f64::min);
        if min_dc < -HYPOTHESIS_TOL * c_scale {
            violations.push(format!("C' >= 0 violated: min C' = {min_dc}"));
        }
        if nonneg {
            let lower = (profile.e_minus - b_integral) / a_max;
            let upper = profile.e_minus / a_min;
            let slack = HYPOTHESIS_TOL * c_scale;
            let (c_lo, c_hi) = c.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                (lo.min(*v), hi.max(*v))
            });
            if !(lower > 0.0) || c_lo < lower - slack || c_hi > upper + slack {
                violations.push(format!(
                    "C bracket violated: C in [{c_lo}, {c_hi}], required within [{lower}, {upper}] with positive lower end"
                ));
            }
        }
    }

    HypothesisReport {
        ok: violations.is_empty(),
        a_min,
        a_max,
        b_integral,
        violations,
    }
}

/// Piecewise-linear function read from a two-column text table.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    points: Vec<(f64, f64)>,
}

impl Table {
    pub fn new(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Config("empty table".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self { points })
    }

    /// Whitespace- or comma-separated `(x, value)` rows; `#` starts a comment.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut points = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let cols: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|s| !s.is_empty())
                .collect();
            let parsed: Option<Vec<f64>> = cols.iter().map(|c| c.parse().ok()).collect();
            match parsed.as_deref() {
                Some([x, v]) => points.push((*x, *v)),
                _ => {
                    return Err(Error::Parse {
                        path: origin.to_path_buf(),
                        detail: format!("line {}: expected two numbers, got {raw:?}", lineno + 1),
                    })
                }
            }
        }
        Self::new(points).map_err(|_| Error::Parse {
            path: origin.to_path_buf(),
            detail: "table has no rows".into(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Linear interpolation, constant extrapolation beyond the ends.
    pub fn eval(&self, x: f64) -> f64 {
        let p = &self.points;
        if x <= p[0].0 {
            return p[0].1;
        }
        if x >= p[p.len() - 1].0 {
            return p[p.len() - 1].1;
        }
        let k = p.partition_point(|(xi, _)| *xi <= x);
        let (x0, y0) = p[k - 1];
        let (x1, y1) = p[k];
        if x1 == x0 {
            return y1;
        }
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// `A = Q/a + C` and `B = -(a'/a^2) Q`, with `Q(x) = int_{-inf}^x (rho - 2 delta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AuxFields {
    pub a_field: Vec<f64>,
    pub b_field: Vec<f64>,
    pub cumulative_charge: Vec<f64>,
}

pub fn build_aux_fields(
    state: &HydroState,
    profile: &DeviceProfile,
    grid: &Grid1D,
    model: &GasModel,
) -> Result<AuxFields> {
    state.check_grid(grid)?;
    profile.check_grid(grid)?;
    let dx = grid.dx();
    let q = cumulative_integral(&state.excess(model), dx);
    let da = derivative(&profile.a_vals, dx);
    let a_field = q
        .iter()
        .zip(&profile.a_vals)
        .zip(&profile.c_vals)
        .map(|((q, a), c)| q / a + c)
        .collect();
    let b_field = q
        .iter()
        .zip(&profile.a_vals)
        .zip(&da)
        .map(|((q, a), da)| -da / (a * a) * q)
        .collect();
    Ok(AuxFields {
        a_field,
        b_field,
        cumulative_charge: q,
    })
}
