//! Independent oracles and fixture helpers shared by the integration tests.
#![allow(dead_code)]

use std::path::PathBuf;

use semihydro::config::{GridSection, RunConfig};
use semihydro::PressureConvention;

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson<F: Fn(f64) -> f64>(f: &F, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        (m, fm, (b - a) / 6.0 * (fa + 4.0 * fm + fb))
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse<F: Fn(f64) -> f64>(
        f: &F,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        m: f64,
        fm: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let (lm, flm, left) = simpson(f, a, fa, m, fm);
        let (rm, frm, right) = simpson(f, m, fm, b, fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            return left + right + delta / 15.0;
        }
        recurse(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1)
            + recurse(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1)
    }
    if a == b {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (m, fm, whole) = simpson(f, a, fa, b, fb);
    recurse(f, a, fa, b, fb, m, fm, whole, tol, 50)
}

fn scale(gamma: f64, convention: PressureConvention) -> f64 {
    match convention {
        PressureConvention::OneOverGamma => 1.0,
        PressureConvention::Plain => gamma,
    }
}

/// `P'(t)` written out directly from the pressure law.
pub fn dp_oracle(gamma: f64, convention: PressureConvention, t: f64) -> f64 {
    scale(gamma, convention) * t.powf(gamma - 1.0)
}

/// `int_{2 delta}^{rho} (t - 2 delta)/t P'(t) dt` by quadrature.
pub fn p1_oracle(gamma: f64, delta: f64, convention: PressureConvention, rho: f64) -> f64 {
    let c = 2.0 * delta;
    let f = |t: f64| (t - c) / t * dp_oracle(gamma, convention, t);
    let tol = 1e-15 * (rho - c).max(1e-300) * dp_oracle(gamma, convention, rho).max(1.0);
    adaptive_simpson(&f, c, rho, tol)
}

/// `e(rho) = int_{2 delta}^{rho} P(s)/s^2 ds` by quadrature.
pub fn energy_oracle(gamma: f64, delta: f64, convention: PressureConvention, rho: f64) -> f64 {
    let k = scale(gamma, convention);
    let f = |s: f64| k * s.powf(gamma) / gamma / (s * s);
    adaptive_simpson(&f, 2.0 * delta, rho, 1e-14)
}

pub fn configs_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

pub fn load_config(name: &str) -> RunConfig {
    RunConfig::load(&configs_dir().join(format!("{name}.toml"))).expect("shipped config loads")
}

/// The scenario's domain and boundary with cell size `dx`.
pub fn with_spacing(mut cfg: RunConfig, dx: f64) -> RunConfig {
    let g = cfg.resolve().expect("config resolves").grid;
    cfg.grid = Some(GridSection {
        x_min: g.x_min(),
        x_max: g.x_max(),
        n_cells: None,
        dx: Some(dx),
        boundary: g.boundary(),
    });
    cfg
}

pub fn l1_distance(a: &[f64], b: &[f64], dx: f64) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() * dx
}
