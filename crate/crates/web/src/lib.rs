//! Browser bindings: an animated solver run, pressure curves and a small
//! relaxation study, exposed through wasm-bindgen.

use semihydro::config::RunConfig;
use semihydro::relax::{relaxation_study, Coupling};
use semihydro::scenario::ScenarioKind;
use semihydro::solver::step_capped;
use semihydro::{
    field_bound, prepare_initial, solve_field, DeviceProfile, GasModel, Grid1D, HydroState, PressureConvention,
    SolverConfig,
};
use wasm_bindgen::prelude::*;

fn js_err(e: impl std::fmt::Display) -> JsError {
    JsError::new(&e.to_string())
}

/// A scenario run that the page advances frame by frame.
#[wasm_bindgen]
pub struct Simulation {
    state: HydroState,
    model: GasModel,
    grid: Grid1D,
    profile: DeviceProfile,
    solver: SolverConfig,
    bound: f64,
    steps: usize,
}

#[wasm_bindgen]
impl Simulation {
    /// Builds the named scenario on `n_cells` cells with viscosity `epsilon`.
    #[wasm_bindgen(constructor)]
    pub fn new(scenario: &str, n_cells: usize, epsilon: f64) -> Result<Simulation, JsError> {
        let kind = ScenarioKind::parse(scenario).map_err(js_err)?;
        let r = RunConfig::for_scenario(kind).resolve().map_err(js_err)?;
        let grid = Grid1D::new(r.grid.x_min(), r.grid.x_max(), n_cells, r.grid.boundary()).map_err(js_err)?;
        let profile = r.scenario.profile(&grid).map_err(js_err)?;
        let raw = r.scenario.initial_data(&grid).map_err(js_err)?;
        let solver = SolverConfig { epsilon, ..r.solver };
        solver.validate().map_err(js_err)?;
        let state = prepare_initial(&raw.rho, &raw.u, &r.model, &solver, &grid).map_err(js_err)?;
        let bound = field_bound(&state, &profile, &grid, &r.model);
        Ok(Simulation {
            state,
            model: r.model,
            grid,
            profile,
            solver,
            bound,
            steps: 0,
        })
    }

    /// Integrates for `duration` more time units; returns the new time.
    pub fn advance(&mut self, duration: f64) -> Result<f64, JsError> {
        let target = self.state.time + duration.max(0.0);
        while self.state.time < target {
            let cap = target - self.state.time;
            let (next, _) =
                step_capped(&self.state, &self.profile, &self.model, &self.solver, &self.grid, cap).map_err(js_err)?;
            self.state = next;
            self.steps += 1;
        }
        Ok(self.state.time)
    }

    pub fn time(&self) -> f64 {
        self.state.time
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn x(&self) -> Vec<f64> {
        self.grid.centers()
    }

    pub fn rho(&self) -> Vec<f64> {
        self.state.rho.clone()
    }

    pub fn velocity(&self) -> Vec<f64> {
        self.state.velocity()
    }

    pub fn field(&self) -> Result<Vec<f64>, JsError> {
        Ok(solve_field(&self.state, &self.profile, &self.grid, &self.model)
            .map_err(js_err)?
            .e_vals)
    }

    /// `sup |E|` over the field bound of the initial data.
    pub fn field_ratio(&self) -> Result<f64, JsError> {
        let f = solve_field(&self.state, &self.profile, &self.grid, &self.model).map_err(js_err)?;
        Ok(f.sup_abs() / self.bound)
    }

    pub fn floor(&self) -> f64 {
        self.model.floor()
    }
}

/// `[rho, P(rho), P1(rho)]` triples, flattened, on `n` points of `[2 delta, rho_max]`.
#[wasm_bindgen]
pub fn pressure_curves(gamma: f64, delta: f64, rho_max: f64, n: usize) -> Result<Vec<f64>, JsError> {
    let model = GasModel::new(gamma, delta, PressureConvention::OneOverGamma).map_err(js_err)?;
    let lo = model.floor();
    if rho_max.is_nan() || rho_max <= lo || n < 2 {
        return Err(JsError::new("need rho_max above 2 delta and at least two points"));
    }
    let mut out = Vec::with_capacity(3 * n);
    for k in 0..n {
        let rho = lo + (rho_max - lo) * k as f64 / (n - 1) as f64;
        out.push(rho);
        out.push(model.pressure(rho).map_err(js_err)?);
        out.push(model.perturbed_pressure(rho).map_err(js_err)?);
    }
    Ok(out)
}

/// Relaxation study on the isothermal bump for `tau0`, `tau0/2`, `tau0/4`
/// on `n_cells` cells. Returns JSON with the table rows, the rescaled excess
/// densities at the horizon and the drift-diffusion reference.
#[wasm_bindgen]
pub fn relaxation_demo(tau0: f64, n_cells: usize, coupling_factor: f64) -> Result<String, JsError> {
    let mut cfg = RunConfig::for_scenario(ScenarioKind::IsothermalBump);
    let r = cfg.resolve().map_err(js_err)?;
    cfg.grid = Some(semihydro::config::GridSection {
        x_min: r.grid.x_min(),
        x_max: r.grid.x_max(),
        n_cells: Some(n_cells),
        dx: None,
        boundary: r.grid.boundary(),
    });
    cfg.study = Some(semihydro::config::StudySection {
        taus: vec![tau0, tau0 / 2.0, tau0 / 4.0],
        coupling: Coupling::Power {
            factor: coupling_factor,
            power: 2.0,
        },
        ..Default::default()
    });
    let setup = cfg.study_setup().map_err(js_err)?;
    let x = setup.grid.centers();
    let table = relaxation_study(&setup).map_err(js_err)?;
    let json = serde_json::json!({
        "x": x,
        "rows": table.rows,
        "monotone": table.monotone,
        "dissipation_bounded": table.dissipation_bounded,
        "final_excess": table.final_excess,
        "reference": table.reference_final,
    });
    Ok(json.to_string())
}
