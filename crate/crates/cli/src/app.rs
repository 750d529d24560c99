//! The `ris-linksim` command line.

use std::ffi::OsString;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use linksim_core::analysis::{db_to_linear, linear_to_db, sep_mpsk_at, sep_upper_bound};
use linksim_core::montecarlo::{default_workers, run_ber_with_workers, run_rate_with_workers};
use linksim_core::Error;
use serde_json::json;

use crate::presets::{run_preset, PresetError, RunConfig, BER_COLUMNS, PRESETS};
use crate::scenario::{parse_scenario, ExperimentKind, Scenario};
use crate::table::{Cell, ResultTable, RunOutput};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_SCENARIO: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "ris-linksim", version, about = "Link-level simulation of RIS-assisted wireless links")]
struct Cli {
    /// Seed for every random stream (default: the scenario's seed, else 1).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for tables and the manifest.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Worker threads for Monte Carlo runs; never changes the results.
    #[arg(long, global = true, env = "RIS_LINKSIM_WORKERS", value_parser = clap::value_parser!(u32).range(1..))]
    workers: Option<u32>,
    /// Output table format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run the experiment described by a scenario file.
    Run { scenario: PathBuf },
    /// Run a built-in figure or table preset.
    Preset { name: String },
    /// Check a scenario file without running it.
    Validate { scenario: PathBuf },
    /// List the built-in presets.
    ListPresets,
}

/// Failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn new(code: i32, message: impl Into<String>) -> Self {
        Failure {
            code,
            message: message.into(),
        }
    }
}

fn numeric_or_scenario(e: &Error) -> i32 {
    match e {
        Error::Quadrature { .. } | Error::NumericDomain(_) | Error::DegenerateFit(_) => EXIT_NUMERIC,
        _ => EXIT_SCENARIO,
    }
}

/// Runs the command line with process streams; returns the exit code.
pub fn cli_main<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    cli_main_with(args, &mut io::stdout().lock(), &mut io::stderr().lock())
}

pub fn cli_main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                EXIT_USAGE
            } else {
                let _ = write!(out, "{text}");
                EXIT_OK
            };
        }
    };
    match dispatch(&cli, out) {
        Ok(()) => EXIT_OK,
        Err(f) => {
            let _ = writeln!(err, "ris-linksim: {}", f.message);
            f.code
        }
    }
}

fn dispatch(cli: &Cli, out: &mut dyn Write) -> Result<(), Failure> {
    let workers = cli.workers.map_or_else(default_workers, |w| w as usize);
    match &cli.command {
        Command::ListPresets => {
            for p in &PRESETS {
                let _ = writeln!(out, "{:<8} {}", p.name, p.summary);
            }
            Ok(())
        }
        Command::Validate { scenario } => {
            let s = load(scenario)?;
            let _ = writeln!(out, "{}: ok (scenario hash {})", scenario.display(), s.hash());
            Ok(())
        }
        Command::Preset { name } => {
            let seed = cli.seed.unwrap_or(DEFAULT_SEED);
            let started = Instant::now();
            let output = run_preset(name, RunConfig { seed, workers }).map_err(|e| match e {
                PresetError::Unknown(_) => Failure::new(EXIT_USAGE, e.to_string()),
                PresetError::Core(e) => Failure::new(EXIT_NUMERIC, format!("preset {name}: {e}")),
            })?;
            emit(&output, &cli.out, started, out)
        }
        Command::Run { scenario } => {
            let s = load(scenario)?;
            let seed = cli.seed.or(s.experiment.seed).unwrap_or(DEFAULT_SEED);
            let stem = scenario
                .file_stem()
                .map_or_else(|| "scenario".to_owned(), |s| s.to_string_lossy().into_owned());
            let started = Instant::now();
            let output = run_scenario(&s, &stem, seed, workers)
                .map_err(|e| Failure::new(numeric_or_scenario(&e), format!("{}: {e}", scenario.display())))?;
            emit(&output, &cli.out, started, out)
        }
    }
}

fn load(path: &Path) -> Result<Scenario, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::new(EXIT_SCENARIO, format!("cannot read {}: {e}", path.display())))?;
    parse_scenario(&text).map_err(|errors| {
        let lines: Vec<String> = errors.0.iter().map(|d| format!("{}:{d}", path.display())).collect();
        Failure::new(EXIT_SCENARIO, format!("invalid scenario\n{}", lines.join("\n")))
    })
}

fn emit(output: &RunOutput, dir: &Path, started: Instant, out: &mut dyn Write) -> Result<(), Failure> {
    let runtime = started.elapsed().as_secs_f64();
    let written = output.write(dir, runtime).map_err(|e| {
        Failure::new(EXIT_USAGE, format!("cannot write to {}: {e}", dir.display()))
    })?;
    for path in written {
        let _ = writeln!(out, "{}", path.display());
    }
    Ok(())
}

/// Executes a parsed scenario into tables named after `stem`.
pub fn run_scenario(s: &Scenario, stem: &str, seed: u64, workers: usize) -> Result<RunOutput, Error> {
    let table = match s.experiment.kind {
        ExperimentKind::Ber => {
            let curve = run_ber_with_workers(&s.trial_plan(seed)?, workers)?;
            let mut t = ResultTable::new(format!("{stem}_ber"), &BER_COLUMNS);
            for e in curve {
                t.push(vec![
                    e.snr_db.into(),
                    e.trials.into(),
                    e.bits.into(),
                    e.errors.into(),
                    e.ber.into(),
                    e.ci95_low.into(),
                    e.ci95_high.into(),
                ]);
            }
            t
        }
        ExperimentKind::Rate => {
            let plan = s.rate_plan(seed)?;
            let candidates = plan.points[0].1.candidate_count();
            let points = run_rate_with_workers(&plan, workers)?;
            let mut cols = vec!["parameter".to_owned(), "rate_bps_hz".into(), "mean_snr_db".into()];
            cols.extend((1..=candidates).map(|k| format!("fixed_{k}_rate_bps_hz")));
            let col_refs: Vec<&str> = cols.iter().map(String::as_str).collect();
            let mut t = ResultTable::new(format!("{stem}_rate"), &col_refs);
            for p in points {
                let mut row: Vec<Cell> = vec![p.parameter.into(), p.mean_rate.into(), linear_to_db(p.mean_snr).into()];
                row.extend(p.per_candidate_rate.iter().map(|&r| Cell::from(r)));
                t.push(row);
            }
            t
        }
        ExperimentKind::Sep => {
            let model = s.clt_model()?;
            let order = s.modulation()?.order();
            let cols: &[&str] = if order == 2 {
                &["snr_db", "sep", "sep_upper_bound"]
            } else {
                &["snr_db", "sep"]
            };
            let mut t = ResultTable::new(format!("{stem}_sep"), cols);
            for db in s.snr_grid_db() {
                let rho = db_to_linear(db);
                let mut row: Vec<Cell> = vec![db.into(), sep_mpsk_at(&model, order, rho)?.into()];
                if order == 2 {
                    row.push(sep_upper_bound(&model, rho)?.into());
                }
                t.push(row);
            }
            t
        }
    };
    Ok(RunOutput {
        name: stem.to_owned(),
        seed,
        scenario_hash: s.hash(),
        parameters: json!({ "scenario": s.serialize() }),
        tables: vec![table],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = cli_main_with(
            std::iter::once("ris-linksim").chain(args.iter().copied()),
            &mut out,
            &mut err,
        );
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn lists_every_preset() {
        let (code, out, _) = run(&["list-presets"]);
        assert_eq!(code, EXIT_OK);
        assert_eq!(out.lines().count(), PRESETS.len());
    }

    #[test]
    fn unknown_subcommand_is_a_usage_error() {
        let (code, _, err) = run(&["frobnicate"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("Usage"), "{err}");
    }

    #[test]
    fn zero_workers_is_a_usage_error() {
        let (code, _, _) = run(&["list-presets", "--workers", "0"]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn help_exits_cleanly() {
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("preset"));
    }
}
