mod common;

use common::{dp_oracle, energy_oracle, p1_oracle};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use semihydro::{GasModel, PressureConvention, RiemannBase};

const GAMMAS: [f64; 4] = [1.0, 1.4, 2.0, 3.0];
const CONVENTIONS: [PressureConvention; 2] = [PressureConvention::OneOverGamma, PressureConvention::Plain];

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

#[test]
fn perturbed_pressure_matches_quadrature() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for convention in CONVENTIONS {
        for gamma in GAMMAS {
            let mut worst = 0.0f64;
            for _ in 0..1000 {
                let delta = 10f64.powf(rng.gen_range(-3.0..-0.5));
                let rho = 2.0 * delta * (1.0 + 10f64.powf(rng.gen_range(-3.0..2.0)));
                let model = GasModel::new(gamma, delta, convention).unwrap();
                let got = model.perturbed_pressure(rho).unwrap();
                worst = worst.max(rel_err(got, p1_oracle(gamma, delta, convention, rho)));
            }
            assert!(
                worst < 1e-9,
                "gamma {gamma} {convention:?}: worst relative error {worst:e}"
            );
        }
    }
}

#[test]
fn isothermal_pressure_is_log_antiderivative() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let delta = 10f64.powf(rng.gen_range(-3.0..-0.5));
        let rho = 2.0 * delta * (1.0 + 10f64.powf(rng.gen_range(-3.0..2.0)));
        let anti = |r: f64| r - 2.0 * delta * r.ln();
        let expected = anti(rho) - anti(2.0 * delta);
        let rounding = 4.0 * f64::EPSILON * (anti(rho).abs() + anti(2.0 * delta).abs());
        for convention in CONVENTIONS {
            let got = GasModel::new(1.0, delta, convention)
                .unwrap()
                .perturbed_pressure(rho)
                .unwrap();
            assert!(
                (got - expected).abs() <= rounding,
                "delta {delta} rho {rho}: {got} vs {expected}"
            );
        }
    }
}

#[test]
fn pressure_below_floor_is_a_domain_error() {
    let m = GasModel::new(2.0, 0.1, PressureConvention::OneOverGamma).unwrap();
    assert!(m.perturbed_pressure(0.1).is_err());
    assert!(m.perturbed_pressure(f64::NAN).is_err());
    assert_eq!(m.perturbed_pressure(0.2).unwrap(), 0.0);
}

#[test]
fn energy_integral_matches_quadrature() {
    for convention in CONVENTIONS {
        for gamma in GAMMAS {
            let m = GasModel::new(gamma, 0.05, convention).unwrap();
            for rho in [0.1, 0.100001, 0.5, 1.0, 3.7, 20.0] {
                let got = m.energy_integral(rho).unwrap();
                let want = energy_oracle(gamma, 0.05, convention, rho);
                assert!(
                    (got - want).abs() <= 1e-10 * want.abs().max(1e-12),
                    "gamma {gamma} rho {rho}: {got} vs {want}"
                );
            }
        }
    }
}

fn model_strategy() -> impl Strategy<Value = (GasModel, f64)> {
    (0usize..4, 0usize..2, -3.0f64..-0.5, -4.0f64..1.5).prop_map(|(g, c, ld, lr)| {
        let delta = 10f64.powf(ld);
        let model = GasModel::new(GAMMAS[g], delta, CONVENTIONS[c]).unwrap();
        (model, 2.0 * delta * (1.0 + 10f64.powf(lr)))
    })
}

proptest! {
    #[test]
    fn perturbed_pressure_is_nonnegative_and_increasing((model, rho) in model_strategy()) {
        let p = model.perturbed_pressure(rho).unwrap();
        let p2 = model.perturbed_pressure(rho * 1.01).unwrap();
        prop_assert!(p >= 0.0);
        prop_assert!(p2 > p);
    }

    #[test]
    fn perturbed_pressure_derivative((model, rho) in model_strategy()) {
        let h = 1e-6 * rho;
        let lo = (rho - h).max(model.floor());
        let num = (model.perturbed_pressure(rho + h).unwrap() - model.perturbed_pressure(lo).unwrap()) / (rho + h - lo);
        let exact = (rho - model.floor()) / rho * dp_oracle(model.gamma(), model.convention(), rho);
        prop_assert!((num - exact).abs() <= 1e-5 * exact.abs().max(1e-9));
    }

    #[test]
    fn eigenvalues_straddle_velocity((model, rho) in model_strategy(), u in -3.0f64..3.0) {
        let (l1, l2) = model.eigenvalues(rho, rho * u).unwrap();
        prop_assert!(l1 <= u + 1e-12 && u <= l2 + 1e-12);
        prop_assert!((l2 - u - (u - l1)).abs() <= 1e-9 * (1.0 + (l2 - l1).abs()));
    }

    #[test]
    fn riemann_invariants_recover_velocity((model, rho) in model_strategy(), u in -3.0f64..3.0) {
        let base = model.riemann_base();
        let (z, w) = model.riemann_invariants(rho, rho * u, base).unwrap();
        prop_assert!(((w - z) / 2.0 - u).abs() <= 1e-9 * (1.0 + u.abs()));
        if base == RiemannBase::Log {
            prop_assert!(((w + z) / 2.0 - rho.ln()).abs() <= 1e-12 * (1.0 + rho.ln().abs()));
        }
    }
}
