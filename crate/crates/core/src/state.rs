use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::model::GasModel;

/// Relative slack below the density floor `2 delta` that is still accepted.
pub const FLOOR_TOL: f64 = 1e-12;

/// Density and momentum `m = rho u` on a grid at one time level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HydroState {
    pub rho: Vec<f64>,
    pub mom: Vec<f64>,
    pub time: f64,
}

impl HydroState {
    pub fn new(rho: Vec<f64>, mom: Vec<f64>, time: f64) -> Result<Self> {
        if rho.len() != mom.len() {
            return Err(Error::Shape {
                what: "momentum",
                got: mom.len(),
                expected: rho.len(),
            });
        }
        Ok(Self { rho, mom, time })
    }

    /// The constant state `(rho, rho u)`.
    pub fn uniform(n: usize, rho: f64, u: f64) -> Self {
        Self {
            rho: vec![rho; n],
            mom: vec![rho * u; n],
            time: 0.0,
        }
    }

    pub fn len(&self) -> usize {
        self.rho.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rho.is_empty()
    }

    pub fn velocity(&self) -> Vec<f64> {
        self.rho.iter().zip(&self.mom).map(|(r, m)| m / r).collect()
    }

    pub fn min_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Excess density `rho - 2 delta`.
    pub fn excess(&self, model: &GasModel) -> Vec<f64> {
        let floor = model.floor();
        self.rho.iter().map(|r| r - floor).collect()
    }

    pub fn check_grid(&self, grid: &Grid1D) -> Result<()> {
        grid.check_len("rho", self.rho.len())?;
        grid.check_len("mom", self.mom.len())
    }

    /// Finite entries and `rho >= 2 delta (1 - FLOOR_TOL)`.
    pub fn validate(&self, model: &GasModel) -> Result<()> {
        if let Some(i) = self
            .rho
            .iter()
            .zip(&self.mom)
            .position(|(r, m)| !(r.is_finite() && m.is_finite()))
        {
            return Err(Error::Integration {
                time: self.time,
                detail: format!("non-finite value in cell {i}"),
            });
        }
        let floor = model.floor();
        let min = self.min_rho();
        if min < floor - FLOOR_TOL * model.delta() || !(min > 0.0) {
            return Err(Error::Positivity {
                time: self.time,
                min_rho: min,
                floor,
            });
        }
        Ok(())
    }
}
