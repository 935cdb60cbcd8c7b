//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL line
//! with the measured figures; the process fails if any criterion fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{l1_distance, load_config, p1_oracle, with_spacing};
use semihydro::config::{ModelSection, RunConfig};
use semihydro::grid::restrict;
use semihydro::harness::{cmd_solve, picard_cross_check, run_resolved, RunRecord, SolveOptions};
use semihydro::monitor::monitor_mass;
use semihydro::relax::{drift_diffusion_run, relaxation_study, DriftDiffusionState};
use semihydro::scenario::ScenarioKind;
use semihydro::solver::{integrate, Schedule};
use semihydro::{prepare_initial, Boundary, DeviceProfile, GasModel, Grid1D, PressureConvention};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(ok: bool, detail: String) -> Check {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run(cfg: &RunConfig) -> (RunRecord, Duration) {
    let start = Instant::now();
    let r = cfg.resolve().expect("config resolves");
    let rec = run_resolved(&r).expect("run completes");
    (rec, start.elapsed())
}

fn library() -> Vec<RunConfig> {
    ScenarioKind::ALL.iter().map(|k| load_config(k.name())).collect()
}

fn positivity() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for dx in [1.0 / 50.0, 1.0 / 100.0] {
        for cfg in library() {
            let cfg = with_spacing(cfg, dx);
            let delta = cfg.resolve().unwrap().model.delta();
            let (rec, took) = run(&cfg);
            let floor = 2.0 * delta;
            let pass = rec.failure.is_none() && rec.min_rho >= floor - 1e-12 * delta && took.as_secs() <= 120;
            ok &= pass;
            lines.push(format!(
                "{}@dx={dx}: min rho - 2 delta = {:.3e} in {:.1}s",
                cfg.scenario.name.name(),
                rec.min_rho - floor,
                took.as_secs_f64()
            ));
        }
    }
    ensure(ok, lines.join("; "))
}

fn mass() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for cfg in library() {
        let (rec, _) = run(&cfg);
        let m: Vec<f64> = rec.evaluation.samples.iter().map(|s| s.mass).collect();
        let scale = m[0].abs().max(1e-300);
        let worst = m
            .windows(2)
            .map(|w| (w[1] - w[0]) / scale)
            .fold(f64::NEG_INFINITY, f64::max);
        ok &= worst <= 1e-12;
        lines.push(format!(
            "{}: max relative increase {:.2e}",
            cfg.scenario.name.name(),
            worst
        ));
    }
    let mut cfg = load_config("gaussian_bump");
    let mut grid = cfg.grid.unwrap();
    grid.boundary = Boundary::Periodic;
    cfg.grid = Some(grid);
    let r = cfg.resolve().unwrap();
    let initial = prepare_initial(&r.raw.rho, &r.raw.u, &r.model, &r.solver, &r.grid).unwrap();
    let m0 = monitor_mass(&initial, &r.grid, &r.model);
    let mut worst = 0.0f64;
    let out = integrate(
        &initial,
        &r.profile,
        &r.model,
        &r.solver,
        &r.grid,
        &Schedule::every(1),
        |s, k| {
            if k > 0 {
                let drift = (monitor_mass(s, &r.grid, &r.model) - m0).abs() / m0;
                worst = worst.max(drift / (k as f64 / 1000.0).max(1.0));
            }
            Ok(())
        },
    )
    .unwrap();
    ok &= out.failure.is_none() && worst <= 1e-12;
    lines.push(format!(
        "periodic bump: {} steps, drift per 1000 steps {:.2e}",
        out.steps, worst
    ));
    ensure(ok, lines.join("; "))
}

fn field_bound() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for cfg in library() {
        let (rec, _) = run(&cfg);
        let ratio = rec.evaluation.max_field_ratio();
        ok &= ratio <= 1.0 + 1e-12;
        lines.push(format!("{}: margin {:.3e}", cfg.scenario.name.name(), 1.0 - ratio));
    }
    ensure(ok, lines.join("; "))
}

fn perturbed_pressure() -> Check {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for gamma in [1.0, 1.4, 2.0, 3.0] {
        for _ in 0..1000 {
            let delta = 10f64.powf(rng.gen_range(-3.0..-0.5));
            let rho = 2.0 * delta * (1.0 + 10f64.powf(rng.gen_range(-3.0..2.0)));
            let conv = PressureConvention::OneOverGamma;
            let got = GasModel::new(gamma, delta, conv)
                .unwrap()
                .perturbed_pressure(rho)
                .unwrap();
            let want = p1_oracle(gamma, delta, conv, rho);
            worst = worst.max((got - want).abs() / want);
        }
    }
    let mut iso_worst = 0.0f64;
    for _ in 0..1000 {
        let delta = 10f64.powf(rng.gen_range(-3.0..-0.5));
        let rho = 2.0 * delta * (1.0 + 10f64.powf(rng.gen_range(-3.0..2.0)));
        let anti = |r: f64| r - 2.0 * delta * r.ln();
        let got = GasModel::new(1.0, delta, PressureConvention::OneOverGamma)
            .unwrap()
            .perturbed_pressure(rho)
            .unwrap();
        let rounding = f64::EPSILON * (anti(rho).abs() + anti(2.0 * delta).abs());
        iso_worst = iso_worst.max((got - (anti(rho) - anti(2.0 * delta))).abs() / rounding);
    }
    ensure(
        worst < 1e-9 && iso_worst <= 4.0,
        format!(
            "P = rho^gamma/gamma: max relative error {worst:.2e}; gamma = 1 log form within {iso_worst:.2} ulp-scale"
        ),
    )
}

fn riemann_growth() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for kind in ScenarioKind::ALL
        .iter()
        .filter(|k| k.tag() == semihydro::scenario::LiteratureTag::GlobalExistence)
    {
        let cfg = load_config(kind.name());
        let (rec, _) = run(&cfg);
        let t_end = rec.states.last().unwrap().time;
        let slack = rec.evaluation.min_riemann_slack();
        ok &= slack >= -1e-6 && (t_end - 5.0).abs() < 1e-9;
        lines.push(format!("{} to t = {t_end}: min slack {slack:.3e}", kind.name()));
    }
    ensure(ok, lines.join("; "))
}

fn uniform_bounds() -> Check {
    let mut lines = Vec::new();
    let mut ok = true;
    for gamma in [2.0, 1.0] {
        let mut cfg = load_config("doping_ramp");
        cfg.model = Some(ModelSection {
            gamma,
            delta: 0.05,
            convention: PressureConvention::OneOverGamma,
        });
        let (rec, took) = run(&cfg);
        let t_end = rec.states.last().unwrap().time;
        let plateau = rec.evaluation.plateau.expect("plateau recorded");
        ok &= plateau.asserted && (t_end - 50.0).abs() < 1e-9 && took.as_secs() <= 600;
        for e in &plateau.entries {
            ok &= e.excess < 0.01;
            lines.push(format!("gamma={gamma} {}: excess {:.3e}", e.quantity, e.excess));
        }
    }
    ensure(ok, lines.join("; "))
}

fn entropy() -> Check {
    let cfg = load_config("shock_bump");
    let (rec, _) = run(&cfg);
    let stat = rec.evaluation.entropy.expect("entropy recorded");
    let failing = (0..stat.residuals.len())
        .filter(|&i| stat.residuals[i] < stat.bound(i))
        .count();
    ensure(
        stat.residuals.len() == 20 && failing == 0,
        format!(
            "{} test functions, {failing} below -C(dx+eps) scale, worst normalized {:.3e} vs -{:.3e}",
            stat.residuals.len(),
            stat.worst_normalized,
            stat.tol_factor
        ),
    )
}

fn picard() -> Check {
    let cfg = load_config("picard_bump");
    let section = cfg.picard.unwrap_or_default();
    let r = cfg.resolve().unwrap();
    let rep = picard_cross_check(&r, &section).expect("picard converges");
    ensure(
        rep.passed && rep.contraction.distances.len() >= 5 && rep.contraction.max_ratio() < 1.0,
        format!(
            "{} iterates, max ratio {:.3e}, distance {:.3e} <= {:.3e}",
            rep.contraction.distances.len(),
            rep.contraction.max_ratio(),
            rep.hydro_distance,
            rep.tolerance
        ),
    )
}

fn relaxation() -> Check {
    let start = Instant::now();
    let setup = load_config("relax_bump").study_setup().unwrap();
    let table = relaxation_study(&setup).expect("study runs");
    let took = start.elapsed();
    let errs: Vec<String> = table.rows.iter().map(|r| format!("{:.3e}", r.l1_error)).collect();
    let diss: Vec<String> = table
        .rows
        .iter()
        .map(|r| format!("{:.3e}", r.dissipation_integral))
        .collect();
    ensure(
        table.rows.len() == 3 && table.monotone && table.dissipation_bounded && took.as_secs() <= 900,
        format!(
            "L1 errors [{}], dissipation [{}] in {:.1}s",
            errs.join(", "),
            diss.join(", "),
            took.as_secs_f64()
        ),
    )
}

fn self_convergence() -> Check {
    let base = load_config("gaussian_bump");
    let mut finals = Vec::new();
    for dx in [0.04, 0.02, 0.01, 0.005] {
        let mut cfg = with_spacing(base.clone(), dx);
        let mut solver = cfg.resolve().unwrap().solver;
        solver.t_end = 0.3;
        cfg.solver = Some(solver);
        let r = cfg.resolve().unwrap();
        let initial = prepare_initial(&r.raw.rho, &r.raw.u, &r.model, &r.solver, &r.grid).unwrap();
        let out = integrate(
            &initial,
            &r.profile,
            &r.model,
            &r.solver,
            &r.grid,
            &Schedule::default(),
            |_, _| Ok(()),
        )
        .unwrap();
        finals.push((r.grid.dx(), out.state.rho));
    }
    let diffs: Vec<f64> = finals
        .windows(2)
        .map(|w| l1_distance(&w[0].1, &restrict(&w[1].1), w[0].0))
        .collect();
    let hydro_ratios: Vec<f64> = diffs.windows(2).map(|d| d[0] / d[1]).collect();

    let model = GasModel::unperturbed(1.0, PressureConvention::OneOverGamma).unwrap();
    let mut dd = Vec::new();
    for n in [60, 120, 240, 480] {
        let g = Grid1D::new(-3.0, 3.0, n, Boundary::Outflow).unwrap();
        let b: Vec<f64> = g.centers().iter().map(|x| 0.5 * (-x * x).exp()).collect();
        let p = DeviceProfile::new(&g, vec![1.0; n], b, 0.0).unwrap();
        let n0: Vec<f64> = g.centers().iter().map(|x| (-2.0 * (x - 0.5).powi(2)).exp()).collect();
        let s0 = DriftDiffusionState::new(n0, &p, &model, &g).unwrap();
        let states = drift_diffusion_run(&s0, &p, &model, &g, 0.45, &[0.0, 0.2]).unwrap();
        dd.push((g.dx(), states.last().unwrap().n.clone()));
    }
    let dd_diffs: Vec<f64> = dd
        .windows(2)
        .map(|w| l1_distance(&w[0].1, &restrict(&w[1].1), w[0].0))
        .collect();
    let orders: Vec<f64> = dd_diffs.windows(2).map(|d| (d[0] / d[1]).log2()).collect();
    ensure(
        hydro_ratios.iter().all(|r| *r >= 1.8) && orders.iter().all(|o| *o >= 1.0),
        format!(
            "hydro differences {:?} (ratios {:?}); drift-diffusion orders {:?}",
            diffs.iter().map(|d| format!("{d:.3e}")).collect::<Vec<_>>(),
            hydro_ratios.iter().map(|r| format!("{r:.2}")).collect::<Vec<_>>(),
            orders.iter().map(|o| format!("{o:.2}")).collect::<Vec<_>>()
        ),
    )
}

fn determinism() -> Check {
    let tmp = tempfile::tempdir().unwrap();
    let config = common::configs_dir().join("gaussian_bump.toml");
    let opts = SolveOptions::default();
    let mut bytes = Vec::new();
    for k in 0..2 {
        let dir = tmp.path().join(format!("run{k}"));
        cmd_solve(&config, &dir, &opts).expect("solve succeeds");
        let mut files = vec![
            dir.join("report.json"),
            dir.join("monitors.csv"),
            dir.join("violations.json"),
        ];
        let mut snaps: Vec<_> = std::fs::read_dir(dir.join("snapshots"))
            .unwrap()
            .map(|e| e.unwrap().path())
            .collect();
        snaps.sort();
        files.extend(snaps);
        bytes.push(files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>());
    }
    ensure(
        bytes[0] == bytes[1],
        format!("{} files compared between two runs", bytes[0].len()),
    )
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("positivity", positivity),
        ("mass", mass),
        ("field-bound", field_bound),
        ("perturbed-pressure", perturbed_pressure),
        ("riemann-growth", riemann_growth),
        ("uniform-bounds", uniform_bounds),
        ("entropy", entropy),
        ("picard", picard),
        ("relaxation", relaxation),
        ("self-convergence", self_convergence),
        ("determinism", determinism),
    ];
    let only: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.iter().any(|o| name.contains(o.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {:2} {name} ({secs:.1}s): {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:2} {name} ({secs:.1}s): {detail}", k + 1);
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
