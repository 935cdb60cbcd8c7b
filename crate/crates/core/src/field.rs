//! Electric field from the integrated Poisson constraint
//! `E(x) = E- + int_{-inf}^x ((rho - 2 delta) - b) dx`, anchored at the left
//! end of the truncated domain.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::grid::{cumulative_integral, Grid1D};
use crate::model::GasModel;
use crate::profile::DeviceProfile;
use crate::state::HydroState;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectricField {
    pub e_vals: Vec<f64>,
    pub e_minus: f64,
    /// Uniform bound the field is checked against.
    pub sup_bound: f64,
}

impl ElectricField {
    pub fn sup_abs(&self) -> f64 {
        self.e_vals.iter().fold(0.0f64, |m, e| m.max(e.abs()))
    }

    /// `sup |E| / sup_bound`.
    pub fn bound_ratio(&self) -> f64 {
        if self.sup_bound > 0.0 {
            self.sup_abs() / self.sup_bound
        } else if self.sup_abs() == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    }
}

/// Field at cell centres. `sup_bound` is set to [`field_bound`] of the same
/// state; callers monitoring a run replace it with the bound of the initial data.
pub fn solve_field(
    state: &HydroState,
    profile: &DeviceProfile,
    grid: &Grid1D,
    model: &GasModel,
) -> Result<ElectricField> {
    state.check_grid(grid)?;
    profile.check_grid(grid)?;
    let e_vals = field_values(&state.rho, profile, grid.dx(), model.floor());
    Ok(ElectricField {
        e_vals,
        e_minus: profile.e_minus,
        sup_bound: field_bound(state, profile, grid, model),
    })
}

pub(crate) fn field_values(rho: &[f64], profile: &DeviceProfile, dx: f64, floor: f64) -> Vec<f64> {
    let source: Vec<f64> = rho.iter().zip(&profile.b_vals).map(|(r, b)| (r - floor) - b).collect();
    cumulative_integral(&source, dx)
        .into_iter()
        .map(|q| profile.e_minus + q)
        .collect()
}

/// `|E-| + int |rho - 2 delta| + int |b|`. Bounds `|E|` at every later time
/// as long as the excess mass does not grow.
pub fn field_bound(state: &HydroState, profile: &DeviceProfile, grid: &Grid1D, model: &GasModel) -> f64 {
    let dx = grid.dx();
    let floor = model.floor();
    let mass: f64 = state.rho.iter().map(|r| (r - floor).abs()).sum::<f64>() * dx;
    profile.e_minus.abs() + mass + profile.b_abs_integral(dx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{derivative, Boundary};
    use crate::model::PressureConvention;

    fn setup(n: usize) -> (Grid1D, GasModel) {
        (
            Grid1D::new(-1.0, 2.0, n, Boundary::Outflow).unwrap(),
            GasModel::new(1.0, 0.05, PressureConvention::OneOverGamma).unwrap(),
        )
    }

    #[test]
    fn zero_source_gives_constant_field() {
        let (g, m) = setup(30);
        let p = DeviceProfile::uniform(&g, 1.0, 0.0, 0.5).unwrap();
        let s = HydroState::uniform(30, 0.1, 0.0);
        let f = solve_field(&s, &p, &g, &m).unwrap();
        assert!(f.e_vals.iter().all(|e| *e == 0.5));
        assert_eq!(f.sup_bound, 0.5);
        assert_eq!(f.bound_ratio(), 1.0);
    }

    #[test]
    fn indicator_integrates_to_ramp() {
        let (g, m) = setup(300);
        let p = DeviceProfile::uniform(&g, 1.0, 0.0, 0.0).unwrap();
        let rho = g
            .centers()
            .iter()
            .map(|x| if (0.0..1.0).contains(x) { 1.1 } else { 0.1 })
            .collect();
        let s = HydroState::new(rho, vec![0.0; 300], 0.0).unwrap();
        let f = solve_field(&s, &p, &g, &m).unwrap();
        for (x, e) in g.centers().iter().zip(&f.e_vals) {
            assert!((e - x.clamp(0.0, 1.0)).abs() <= g.dx());
        }
    }

    #[test]
    fn cancellation_gives_datum() {
        let (g, m) = setup(50);
        let b: Vec<f64> = g.centers().iter().map(|x| (-x * x).exp()).collect();
        let rho = b.iter().map(|b| b + 0.1).collect();
        let p = DeviceProfile::new(&g, vec![1.0; 50], b, -0.3).unwrap();
        let s = HydroState::new(rho, vec![0.0; 50], 0.0).unwrap();
        let f = solve_field(&s, &p, &g, &m).unwrap();
        assert!(f.e_vals.iter().all(|e| (e + 0.3).abs() < 1e-15));
    }

    #[test]
    fn bound_is_sum_of_terms() {
        let (g, m) = setup(30);
        let dx = g.dx();
        // excess mass 2, int |b| = 0.5, E- = 1
        let mut rho = vec![0.1; 30];
        rho[10] += 2.0 / dx;
        let mut b = vec![0.0; 30];
        b[20] = -0.5 / dx;
        let p = DeviceProfile::new(&g, vec![1.0; 30], b, 1.0).unwrap();
        let s = HydroState::new(rho, vec![0.0; 30], 0.0).unwrap();
        assert!((field_bound(&s, &p, &g, &m) - 3.5).abs() < 1e-12);
    }

    #[test]
    fn differencing_recovers_source() {
        let (g, m) = setup(400);
        let p = DeviceProfile::uniform(&g, 1.0, 0.0, 0.0).unwrap();
        let rho: Vec<f64> = g.centers().iter().map(|x| 0.1 + (-4.0 * x * x).exp()).collect();
        let s = HydroState::new(rho.clone(), vec![0.0; 400], 0.0).unwrap();
        let f = solve_field(&s, &p, &g, &m).unwrap();
        let de = derivative(&f.e_vals, g.dx());
        let err = (1..399).map(|i| (de[i] - (rho[i] - 0.1)).abs()).fold(0.0, f64::max);
        assert!(err < 10.0 * g.dx() * g.dx(), "{err}");
    }
}
