//! Command-line front end for dipolekit.

pub mod config;
pub mod report;

mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use config::{validate_config, Command, Overrides};

pub const EXIT_OK: i32 = 0;
pub const EXIT_COMPARE_MISMATCH: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "dipolekit", version, about = "Spectral-stability screening of defect emitters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Sub,
}

#[derive(Debug, Subcommand)]
pub enum Sub {
    /// Berry-phase dipoles, dipole differences and Born charges.
    Polarization(CommonArgs),
    /// Radiative lifetime from (ħω, I) or from a model spectrum.
    Lifetime(CommonArgs),
    /// Stability and brightness verdicts.
    Criteria(CommonArgs),
    /// Dipoles and transition dipoles of cube-file grids.
    Density(CommonArgs),
    /// Berry phase against the open-cluster reference.
    OracleCheck(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub output_dir: Option<PathBuf>,
    /// k-point grid, e.g. 64x1x1.
    #[arg(long)]
    pub kgrid: Option<String>,
    /// Stability threshold on |Δp_tot|, e·Å.
    #[arg(long, allow_negative_numbers = true)]
    pub threshold_dp: Option<f64>,
    /// Lorentzian broadening (HWHM), eV.
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Reference report to diff against.
    #[arg(long)]
    pub compare: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CliError {
    Library(dipolekit::Error),
}

impl From<dipolekit::Error> for CliError {
    fn from(e: dipolekit::Error) -> Self {
        CliError::Library(e)
    }
}

impl CliError {
    fn exit_code(&self) -> i32 {
        let CliError::Library(e) = self;
        if e.is_numerical() {
            EXIT_NUMERICAL
        } else {
            EXIT_VALIDATION
        }
    }

    fn describe(&self) -> String {
        let CliError::Library(e) = self;
        format!("{} failed with {}: {e}", e.module(), e.kind())
    }
}

/// Runs one invocation and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    let (command, args) = match cli.command {
        Sub::Polarization(a) => (Command::Polarization, a),
        Sub::Lifetime(a) => (Command::Lifetime, a),
        Sub::Criteria(a) => (Command::Criteria, a),
        Sub::Density(a) => (Command::Density, a),
        Sub::OracleCheck(a) => (Command::OracleCheck, a),
    };
    let overrides = Overrides {
        output_dir: args.output_dir.clone(),
        kgrid: args.kgrid.clone(),
        threshold_dp: args.threshold_dp,
        gamma: args.gamma,
    };
    let validated = match validate_config(&args.config, command, &overrides) {
        Ok(v) => v,
        Err(errors) => {
            eprintln!("dipolekit: configuration '{}' is invalid:", args.config.display());
            for e in &errors {
                eprintln!("  - {e}");
            }
            return EXIT_VALIDATION;
        }
    };
    let cfg = validated.config;
    if let Err(e) = std::fs::create_dir_all(&cfg.output_dir) {
        eprintln!("dipolekit: cannot create output directory '{}': {e}", cfg.output_dir.display());
        return EXIT_VALIDATION;
    }
    let outcome = match commands::run(&cfg) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("dipolekit: {}", e.describe());
            return e.exit_code();
        }
    };
    let mut warnings = validated.warnings;
    warnings.extend(outcome.warnings);
    for w in &warnings {
        eprintln!("dipolekit: warning: {w}");
    }
    let report = report::build(command.name(), outcome.inputs, outcome.results, &warnings);
    let path = cfg.output_dir.join("report.json");
    if let Err(e) = report::write(&report, &path) {
        eprintln!("dipolekit: cannot write '{}': {e}", path.display());
        return EXIT_VALIDATION;
    }
    if let Some(msg) = outcome.failed_check {
        eprintln!("dipolekit: oracle check failed: {msg}");
        return EXIT_NUMERICAL;
    }
    if let Some(reference) = &args.compare {
        let expected: serde_json::Value = match std::fs::read_to_string(reference)
            .map_err(|e| e.to_string())
            .and_then(|t| serde_json::from_str(&t).map_err(|e| e.to_string()))
        {
            Ok(v) => v,
            Err(e) => {
                eprintln!("dipolekit: cannot read reference report '{}': {e}", reference.display());
                return EXIT_VALIDATION;
            }
        };
        let diffs = report::compare(&report, &expected);
        if !diffs.is_empty() {
            eprintln!("dipolekit: report differs from '{}':", reference.display());
            for d in &diffs {
                eprintln!("  {d}");
            }
            return EXIT_COMPARE_MISMATCH;
        }
    }
    EXIT_OK
}
