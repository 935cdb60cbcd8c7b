use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Boundary {
    /// Zero-gradient extrapolation: ghost cells copy the boundary cell.
    #[default]
    Outflow,
    Periodic,
}

/// Uniform cell-centred grid on a truncated interval `[x_min, x_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_cells: usize,
    boundary: Boundary,
}

pub const MIN_CELLS: usize = 8;

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_cells: usize, boundary: Boundary) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::Config(format!(
                "grid interval [{x_min}, {x_max}] is empty or not finite"
            )));
        }
        if n_cells < MIN_CELLS {
            return Err(Error::Config(format!(
                "grid needs at least {MIN_CELLS} cells, got {n_cells}"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_cells,
            boundary,
        })
    }

    /// Grid over the same interval with a given spacing (rounded to a whole
    /// number of cells).
    pub fn with_spacing(x_min: f64, x_max: f64, dx: f64, boundary: Boundary) -> Result<Self> {
        let n = ((x_max - x_min) / dx).round() as usize;
        Self::new(x_min, x_max, n, boundary)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn dx(&self) -> f64 {
        (self.x_max - self.x_min) / self.n_cells as f64
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    #[inline]
    pub fn center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.n_cells).map(|i| self.center(i)).collect()
    }

    /// Same interval, twice as many cells.
    pub fn refined(&self) -> Self {
        Self {
            n_cells: 2 * self.n_cells,
            ..*self
        }
    }

    pub fn with_boundary(&self, boundary: Boundary) -> Self {
        Self { boundary, ..*self }
    }

    pub(crate) fn check_len(&self, what: &'static str, len: usize) -> Result<()> {
        if len != self.n_cells {
            return Err(Error::Shape {
                what,
                got: len,
                expected: self.n_cells,
            });
        }
        Ok(())
    }

    /// Index of a neighbour `offset` cells away, following the boundary policy.
    #[inline]
    pub(crate) fn neighbor(&self, i: usize, offset: isize) -> usize {
        let n = self.n_cells as isize;
        let j = i as isize + offset;
        match self.boundary {
            Boundary::Outflow => j.clamp(0, n - 1) as usize,
            Boundary::Periodic => j.rem_euclid(n) as usize,
        }
    }
}

/// Running integral `int_{x_min}^{x_i} f dx` at cell centres, with the current
/// cell taking half weight.
pub fn cumulative_integral(values: &[f64], dx: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    for &v in values {
        out.push(acc + 0.5 * v * dx);
        acc += v * dx;
    }
    out
}

/// Centered first differences with one-sided stencils at both ends.
pub fn derivative(values: &[f64], dx: f64) -> Vec<f64> {
    let n = values.len();
    if n < 2 {
        return vec![0.0; n];
    }
    (0..n)
        .map(|i| {
            if i == 0 {
                (values[1] - values[0]) / dx
            } else if i == n - 1 {
                (values[n - 1] - values[n - 2]) / dx
            } else {
                (values[i + 1] - values[i - 1]) / (2.0 * dx)
            }
        })
        .collect()
}

/// Average adjacent pairs of a fine-grid array onto the grid with half as many cells.
pub fn restrict(fine: &[f64]) -> Vec<f64> {
    fine.chunks_exact(2).map(|c| 0.5 * (c[0] + c[1])).collect()
}
