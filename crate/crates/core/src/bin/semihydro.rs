use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use semihydro::harness::{cmd_picard, cmd_relax, cmd_solve, cmd_verify, exit_code_for, Outcome, SolveOptions};
use semihydro::monitor::MonitorKind;

#[derive(Parser)]
#[command(name = "semihydro", version, about = "Flux-approximate Euler-Poisson device solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario with monitors and write snapshots and reports.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "run")]
        out_dir: PathBuf,
        /// Comma-separated monitor names overriding the configuration.
        #[arg(long, value_delimiter = ',')]
        monitors: Option<Vec<String>>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run the relaxation-limit study.
    Relax {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "relax")]
        out_dir: PathBuf,
    },
    /// Re-evaluate the monitors of a run directory from its snapshots.
    Verify {
        /// Run directory written by `solve`.
        #[arg(long)]
        out_dir: PathBuf,
        /// Also cross-check the solver against the Picard iteration.
        #[arg(long)]
        picard: bool,
    },
    /// Picard iteration on a short slab and its cross-check with the solver.
    Picard {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "picard")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Solve {
            config,
            out_dir,
            monitors,
            seed,
        } => {
            let monitors = match monitors
                .map(|names| {
                    names
                        .iter()
                        .map(|n| MonitorKind::parse(n))
                        .collect::<Result<Vec<_>, _>>()
                })
                .transpose()
            {
                Ok(m) => m,
                Err(e) => {
                    eprintln!("error: {e}");
                    return ExitCode::from(2);
                }
            };
            cmd_solve(&config, &out_dir, &SolveOptions { monitors, seed }).map(|(outcome, report)| {
                println!(
                    "{}: {} steps, completed = {}, violations = {}, field margin = {:.6e}",
                    report.scenario,
                    report.steps,
                    report.completed,
                    report.violations.len(),
                    report.field_margin
                );
                for v in &report.violations {
                    println!(
                        "  violation {} at t = {:.6e}: {:.16e} > {:.16e}",
                        v.monitor, v.time, v.value, v.bound
                    );
                }
                outcome
            })
        }
        Command::Relax { config, out_dir } => cmd_relax(&config, &out_dir).map(|(outcome, table)| {
            print!("{}", table.to_csv());
            if let Some(f) = &table.failure {
                println!("study failed: {f}");
            }
            outcome
        }),
        Command::Verify { out_dir, picard } => cmd_verify(&out_dir, picard).map(|(outcome, report)| {
            match &report.first_mismatch {
                None => println!("monitors reproduced from {} snapshots", report.snapshots),
                Some(m) => println!(
                    "monitor mismatch at line {}:\n  recorded: {}\n  computed: {}",
                    m.line, m.expected, m.found
                ),
            }
            if let Some(p) = &report.picard {
                println!(
                    "picard: max ratio {:.6e}, distance to solver {:.6e} (tolerance {:.6e})",
                    p.contraction.max_ratio(),
                    p.hydro_distance,
                    p.tolerance
                );
            }
            outcome
        }),
        Command::Picard { config, out_dir } => cmd_picard(&config, &out_dir).map(|(outcome, report)| {
            print!("{}", report.contraction.to_csv());
            println!(
                "distance to solver {:.6e} (tolerance {:.6e})",
                report.hydro_distance, report.tolerance
            );
            outcome
        }),
    };
    match result {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e) as u8)
        }
    }
}
