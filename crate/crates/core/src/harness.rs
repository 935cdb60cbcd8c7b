//! Command implementations behind the `semihydro` binary.
//!
//! Exit codes: 0 when every check passes, 1 when a check or the solver
//! fails, 2 for usage, configuration and I/O errors.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::config::{PicardSection, Resolved, RunConfig};
use crate::error::{Error, Result};
use crate::grid::restrict;
use crate::io::{format_columns, format_snapshot, parse_snapshot, read_text, write_json, write_text};
use crate::monitor::{evaluate, Evaluation, MonitorKind, RunContext, Violation};
use crate::picard::{picard_solve, ContractionReport, HeatKernel, PicardProblem};
use crate::profile::{validate_theorem2, DeviceProfile, HypothesisReport};
use crate::relax::{relaxation_study, StudyTable};
use crate::scenario::LiteratureTag;
use crate::solver::{integrate, prepare_initial, Schedule, SolverConfig};
use crate::state::HydroState;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

impl Outcome {
    pub fn from_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }

    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 1,
        }
    }
}

/// 2 for problems with the input, 1 for failures of the computation.
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::Parse { .. } | Error::Io { .. } | Error::Shape { .. } | Error::Range { .. } => 2,
        _ => 1,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    pub time: f64,
    pub message: String,
}

/// States recorded during a run together with their monitor evaluation.
#[derive(Debug, Clone)]
pub struct RunRecord {
    pub states: Vec<HydroState>,
    pub steps: Vec<usize>,
    pub total_steps: usize,
    pub min_rho: f64,
    pub max_dt: f64,
    pub failure: Option<FailureRecord>,
    pub evaluation: Evaluation,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.failure.is_none() && self.evaluation.passed()
    }
}

fn failure_time(err: &Error) -> f64 {
    match err {
        Error::Positivity { time, .. } | Error::Integration { time, .. } => *time,
        _ => f64::NAN,
    }
}

/// Integrates a resolved configuration, recording a state every
/// `suite.cadence` steps, and evaluates the monitors on the recording.
pub fn run_resolved(r: &Resolved) -> Result<RunRecord> {
    let initial = prepare_initial(&r.raw.rho, &r.raw.u, &r.model, &r.solver, &r.grid)?;
    let mut states = Vec::new();
    let mut steps = Vec::new();
    let run = integrate(
        &initial,
        &r.profile,
        &r.model,
        &r.solver,
        &r.grid,
        &Schedule::every(r.suite.cadence),
        |s, k| {
            states.push(s.clone());
            steps.push(k);
            Ok(())
        },
    )?;
    let failure = run.failure.as_ref().map(|e| FailureRecord {
        time: failure_time(e),
        message: e.to_string(),
    });
    if steps.last() != Some(&run.steps) {
        states.push(run.state.clone());
        steps.push(run.steps);
    }
    let ctx = RunContext {
        profile: &r.profile,
        model: &r.model,
        grid: &r.grid,
        solver: &r.solver,
    };
    let mut evaluation = evaluate(&states, &steps, &ctx, &r.suite, r.seed)?;
    if let Some(f) = &failure {
        evaluation.violations.push(Violation {
            monitor: "solver".into(),
            time: f.time,
            value: run.state.min_rho(),
            bound: r.model.floor(),
        });
    }
    Ok(RunRecord {
        states,
        steps,
        total_steps: run.steps,
        min_rho: run.min_rho,
        max_dt: run.max_dt,
        failure,
        evaluation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub scenario: String,
    pub tag: LiteratureTag,
    pub config: RunConfig,
    pub hypotheses: HypothesisReport,
    pub completed: bool,
    pub failure: Option<FailureRecord>,
    pub steps: usize,
    pub min_rho: f64,
    pub max_dt: f64,
    /// `1 - max_t sup |E| / bound`.
    pub field_margin: f64,
    pub riemann_min_slack: f64,
    pub evaluation: Evaluation,
    pub snapshots: Vec<String>,
    pub monitors_csv: String,
    pub violations: Vec<Violation>,
}

#[derive(Debug, Clone, Default)]
pub struct SolveOptions {
    pub monitors: Option<Vec<MonitorKind>>,
    pub seed: Option<u64>,
}

pub const CONFIG_FILE: &str = "config.toml";
pub const REPORT_FILE: &str = "report.json";
pub const MONITOR_FILE: &str = "monitors.csv";
pub const VIOLATIONS_FILE: &str = "violations.json";
pub const TIMING_FILE: &str = "timing.json";
pub const SNAPSHOT_DIR: &str = "snapshots";

fn snapshot_name(k: usize) -> String {
    format!("{SNAPSHOT_DIR}/snap_{k:06}.dat")
}

#[derive(Debug, Clone, Serialize)]
struct Timing {
    wall_seconds: f64,
}

/// Runs a configuration and writes the configuration echo, snapshots,
/// monitor time series, violations and report into `out_dir`.
pub fn cmd_solve(config_path: &Path, out_dir: &Path, opts: &SolveOptions) -> Result<(Outcome, RunReport)> {
    let started = Instant::now();
    let mut cfg = RunConfig::load(config_path)?;
    if let Some(m) = &opts.monitors {
        cfg.monitors.enabled = Some(m.clone());
    }
    if let Some(seed) = opts.seed {
        cfg.seed = seed;
    }
    let resolved = cfg.resolve()?;
    let record = run_resolved(&resolved)?;

    write_text(&out_dir.join(CONFIG_FILE), &cfg.to_toml())?;
    let label = format!(
        "scenario={} epsilon={} tau={} cfl={} variant={:?}",
        resolved.scenario.name(),
        resolved.solver.epsilon,
        resolved.solver.tau,
        resolved.solver.cfl,
        resolved.solver.source_variant
    );
    let snap_dir = out_dir.join(SNAPSHOT_DIR);
    if snap_dir.exists() {
        std::fs::remove_dir_all(&snap_dir).map_err(|e| Error::io(&snap_dir, e))?;
    }
    let mut snapshots = Vec::with_capacity(record.states.len());
    for (k, (state, step)) in record.states.iter().zip(&record.steps).enumerate() {
        let name = snapshot_name(k);
        let text = format_snapshot(state, *step, &label, &resolved.model, &resolved.profile, &resolved.grid);
        write_text(&out_dir.join(&name), &text)?;
        snapshots.push(name);
    }
    write_text(&out_dir.join(MONITOR_FILE), &record.evaluation.to_csv(&resolved.suite))?;
    write_json(&out_dir.join(VIOLATIONS_FILE), &record.evaluation.violations)?;

    let report = RunReport {
        scenario: resolved.scenario.name().to_string(),
        tag: resolved.scenario.kind.tag(),
        config: cfg,
        hypotheses: validate_theorem2(&resolved.profile, &resolved.grid),
        completed: record.failure.is_none(),
        failure: record.failure.clone(),
        steps: record.total_steps,
        min_rho: record.min_rho,
        max_dt: record.max_dt,
        field_margin: 1.0 - record.evaluation.max_field_ratio(),
        riemann_min_slack: record.evaluation.min_riemann_slack(),
        violations: record.evaluation.violations.clone(),
        evaluation: record.evaluation.clone(),
        snapshots,
        monitors_csv: MONITOR_FILE.into(),
    };
    write_json(&out_dir.join(REPORT_FILE), &report)?;
    write_json(
        &out_dir.join(TIMING_FILE),
        &Timing {
            wall_seconds: started.elapsed().as_secs_f64(),
        },
    )?;
    Ok((Outcome::from_pass(record.passed()), report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mismatch {
    pub line: usize,
    pub expected: String,
    pub found: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub identical: bool,
    pub snapshots: usize,
    pub first_mismatch: Option<Mismatch>,
    pub violations: Vec<Violation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub picard: Option<PicardReport>,
}

pub const VERIFY_FILE: &str = "verify.json";

/// Re-evaluates the monitors from the snapshots of a run directory and
/// compares the time series byte for byte with the recorded one. With
/// `picard` set, also cross-checks the solver against the Picard iteration.
pub fn cmd_verify(run_dir: &Path, picard: bool) -> Result<(Outcome, VerifyReport)> {
    let cfg = RunConfig::load(&run_dir.join(CONFIG_FILE))?;
    let r = cfg.resolve()?;
    let snap_dir = run_dir.join(SNAPSHOT_DIR);
    let mut files: Vec<PathBuf> = std::fs::read_dir(&snap_dir)
        .map_err(|e| Error::io(&snap_dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "dat"))
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::io(
            &snap_dir,
            std::io::Error::new(std::io::ErrorKind::NotFound, "no snapshots"),
        ));
    }
    let mut states = Vec::with_capacity(files.len());
    let mut steps = Vec::with_capacity(files.len());
    for f in &files {
        let (s, k) = parse_snapshot(&read_text(f)?, f)?;
        states.push(s);
        steps.push(k);
    }
    let ctx = RunContext {
        profile: &r.profile,
        model: &r.model,
        grid: &r.grid,
        solver: &r.solver,
    };
    let evaluation = evaluate(&states, &steps, &ctx, &r.suite, r.seed)?;
    let fresh = evaluation.to_csv(&r.suite);
    let recorded = read_text(&run_dir.join(MONITOR_FILE))?;
    let first_mismatch = if fresh == recorded {
        None
    } else {
        let mut a = recorded.lines();
        let mut b = fresh.lines();
        let mut line = 1;
        loop {
            match (a.next(), b.next()) {
                (Some(x), Some(y)) if x == y => line += 1,
                (x, y) => {
                    break Some(Mismatch {
                        line,
                        expected: x.unwrap_or("<end of file>").to_string(),
                        found: y.unwrap_or("<end of file>").to_string(),
                    })
                }
            }
        }
    };
    let picard = if picard {
        Some(picard_cross_check(&r, &cfg.picard.unwrap_or_default())?)
    } else {
        None
    };
    let report = VerifyReport {
        identical: first_mismatch.is_none(),
        snapshots: files.len(),
        first_mismatch,
        violations: evaluation.violations,
        picard,
    };
    write_json(&run_dir.join(VERIFY_FILE), &report)?;
    let pass = report.identical && report.picard.as_ref().is_none_or(|p| p.passed);
    Ok((Outcome::from_pass(pass), report))
}

pub const RELAX_TABLE_FILE: &str = "relax_table.csv";
pub const RELAX_MANIFEST_FILE: &str = "relax_manifest.json";
pub const RELAX_FIELDS_FILE: &str = "relax_fields.csv";

#[derive(Debug, Clone, Serialize)]
struct StudyManifest<'a> {
    scenario: &'a str,
    gamma: f64,
    grid: crate::grid::Grid1D,
    study: &'a crate::config::StudySection,
    passed: bool,
    monotone: bool,
    dissipation_bounded: bool,
    failure: &'a Option<String>,
    rows: &'a [crate::relax::StudyRow],
}

/// Runs the relaxation study of a configuration and writes its table and
/// manifest; the final fields are saved when the study fails.
pub fn cmd_relax(config_path: &Path, out_dir: &Path) -> Result<(Outcome, StudyTable)> {
    let cfg = RunConfig::load(config_path)?;
    let setup = cfg.study_setup()?;
    let table = relaxation_study(&setup)?;
    write_text(&out_dir.join(RELAX_TABLE_FILE), &table.to_csv())?;
    let study = cfg.study.clone().unwrap_or_default();
    write_json(
        &out_dir.join(RELAX_MANIFEST_FILE),
        &StudyManifest {
            scenario: cfg.scenario.name.name(),
            gamma: setup.gamma,
            grid: setup.grid,
            study: &study,
            passed: table.passed(),
            monotone: table.monotone,
            dissipation_bounded: table.dissipation_bounded,
            failure: &table.failure,
            rows: &table.rows,
        },
    )?;
    if !table.passed() {
        let names: Vec<String> = table.rows.iter().map(|r| format!("excess_tau_{}", r.tau)).collect();
        let mut cols: Vec<(&str, &[f64])> = vec![("reference", &table.reference_final)];
        for (name, col) in names.iter().zip(&table.final_excess) {
            cols.push((name.as_str(), col));
        }
        write_text(
            &out_dir.join(RELAX_FIELDS_FILE),
            &format_columns(&setup.grid.centers(), &cols),
        )?;
    }
    Ok((Outcome::from_pass(table.passed()), table))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PicardReport {
    pub t1: f64,
    pub contraction: ContractionReport,
    /// `|rho_P - rho_H|_inf + |m_P - m_H|_inf` at `t1`.
    pub hydro_distance: f64,
    /// `5 (dx + dt) max(1, data bound)`.
    pub tolerance: f64,
    pub passed: bool,
}

pub const CONTRACTION_FILE: &str = "contraction.csv";
pub const PICARD_FILE: &str = "picard.json";

/// Minimum number of recorded iterates for a contraction measurement.
pub const MIN_PICARD_ITERATES: usize = 5;

/// Picard iteration on `[0, t1]` compared with the solver run on the grid
/// refined once and averaged back.
pub fn picard_cross_check(r: &Resolved, section: &PicardSection) -> Result<PicardReport> {
    let initial = prepare_initial(&r.raw.rho, &r.raw.u, &r.model, &r.solver, &r.grid)?;
    let problem = PicardProblem {
        initial: &initial,
        profile: &r.profile,
        model: &r.model,
        grid: &r.grid,
        kernel: HeatKernel::new(r.solver.epsilon)?,
        tau: r.solver.tau,
        variant: r.solver.source_variant,
        t1: section.t1,
        levels: section.levels,
    };
    let (end, _, contraction) = picard_solve(&problem, &section.settings())?;

    let fine_grid = r.grid.refined();
    let raw = r.scenario.initial_data(&fine_grid)?;
    let fine_a: Vec<f64> = r.profile.a_vals.iter().flat_map(|v| [*v, *v]).collect();
    let fine_b: Vec<f64> = r.profile.b_vals.iter().flat_map(|v| [*v, *v]).collect();
    let fine_profile = DeviceProfile::new(&fine_grid, fine_a, fine_b, r.profile.e_minus)?;
    let cfg = SolverConfig {
        t_end: section.t1,
        ..r.solver
    };
    let fine0 = prepare_initial(&raw.rho, &raw.u, &r.model, &cfg, &fine_grid)?;
    let run = integrate(
        &fine0,
        &fine_profile,
        &r.model,
        &cfg,
        &fine_grid,
        &Schedule::default(),
        |_, _| Ok(()),
    )?;
    if let Some(e) = run.failure {
        return Err(e);
    }
    let rho_h = restrict(&run.state.rho);
    let mom_h = restrict(&run.state.mom);
    let sup = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    let hydro_distance = sup(&end.rho, &rho_h) + sup(&end.mom, &mom_h);
    let dt = section.t1 / section.levels as f64;
    let tolerance = 5.0 * (r.grid.dx() + dt) * contraction.data_bound.max(1.0);
    let passed = contraction.converged
        && contraction.distances.len() >= MIN_PICARD_ITERATES
        && contraction.max_ratio() < 1.0
        && hydro_distance <= tolerance;
    Ok(PicardReport {
        t1: section.t1,
        contraction,
        hydro_distance,
        tolerance,
        passed,
    })
}

/// Runs the Picard cross-check of a configuration and writes the contraction
/// table.
pub fn cmd_picard(config_path: &Path, out_dir: &Path) -> Result<(Outcome, PicardReport)> {
    let cfg = RunConfig::load(config_path)?;
    let r = cfg.resolve()?;
    let report = picard_cross_check(&r, &cfg.picard.unwrap_or_default())?;
    write_text(&out_dir.join(CONTRACTION_FILE), &report.contraction.to_csv())?;
    write_json(&out_dir.join(PICARD_FILE), &report)?;
    Ok((Outcome::from_pass(report.passed), report))
}
