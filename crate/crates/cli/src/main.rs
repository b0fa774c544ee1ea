//! Command-line front end: configuration loading, experiment orchestration,
//! and result persistence.

mod config;
mod error;
mod manifest;
mod output;
mod run;
mod validate;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;
use run::{execute, RunContext};

#[derive(Parser)]
#[command(
    name = "syndyn",
    version,
    about = "Syndrome-subspace dynamics for stabilizer-encoded adiabatic evolution"
)]
struct Cli {
    /// Path to the JSON run configuration.
    #[arg(long, global = true, env = "SYNDYN_CONFIG")]
    config: Option<PathBuf>,

    /// Output directory; runs land in <out>/<config-hash-prefix>/.
    #[arg(long, global = true, default_value = "runs", env = "SYNDYN_OUT")]
    out: PathBuf,

    /// Random seed recorded in the manifest (used by sampling modes).
    #[arg(long, global = true, env = "SYNDYN_SEED")]
    seed: Option<u64>,

    /// Worker threads for scan grids (0 = all cores).
    #[arg(long, global = true, default_value_t = 0, env = "SYNDYN_THREADS")]
    threads: usize,

    /// Output format: csv or csv+svg.
    #[arg(long, global = true, default_value = "csv", env = "SYNDYN_FORMAT")]
    format: String,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in code registry.
    Codes,
    /// Build and export a syndrome transition graph.
    Graph,
    /// Emit finite-time and second-Markov transition-rate curves.
    Rates,
    /// Integrate the two-level codespace leakage dynamics.
    Suppress,
    /// Integrate the correctable-subspace master equation.
    Correct,
    /// Scan lumped-chain mean hitting times.
    Stability,
    /// Dry-run a configuration: schema checks plus physics advisories.
    Validate,
}

impl Command {
    fn mode_name(&self) -> &'static str {
        match self {
            Command::Codes => "codes",
            Command::Graph => "graph",
            Command::Rates => "rates",
            Command::Suppress => "suppress",
            Command::Correct => "correct",
            Command::Stability => "stability",
            Command::Validate => "validate",
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{}", e.record());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn load_config(cli: &Cli) -> Result<(String, RunConfig), CliError> {
    let path = cli.config.as_ref().ok_or_else(|| {
        CliError::Schema("no configuration given; pass --config PATH".into())
    })?;
    let text = fs::read_to_string(path)?;
    let parsed = config::parse(&text).map_err(CliError::schema)?;
    Ok((text, parsed))
}

fn dispatch(cli: &Cli) -> Result<ExitCode, CliError> {
    if cli.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.threads)
            .build_global()
            .map_err(CliError::numerical)?;
    }
    let emit_svg = match cli.format.as_str() {
        "csv" => false,
        "csv+svg" => true,
        other => {
            return Err(CliError::Schema(format!(
                "unknown format {other:?} (expected csv or csv+svg)"
            )))
        }
    };

    match &cli.command {
        Command::Codes => {
            // listing works standalone; with a config it also persists a run
            print!("{}", run::codes_table());
            if cli.config.is_some() {
                let (text, parsed) = load_config(cli)?;
                expect_mode(&parsed, "codes")?;
                persist_run(cli, &text, &parsed, emit_svg)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Validate => {
            let path = cli.config.as_ref().ok_or_else(|| {
                CliError::Schema("no configuration given; pass --config PATH".into())
            })?;
            let text = fs::read_to_string(path)?;
            let report = match config::parse(&text) {
                Ok(parsed) => validate::validate(&parsed),
                Err(e) => {
                    let mut r = validate::Report::default();
                    r.findings.push(validate::Finding {
                        severity: validate::Severity::Error,
                        message: format!("schema: {e}"),
                    });
                    r
                }
            };
            print!("{}", report.render());
            Ok(ExitCode::SUCCESS)
        }
        command => {
            let (text, parsed) = load_config(cli)?;
            expect_mode(&parsed, command.mode_name())?;
            persist_run(cli, &text, &parsed, emit_svg)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn expect_mode(parsed: &RunConfig, expected: &str) -> Result<(), CliError> {
    if parsed.mode_name() != expected {
        return Err(CliError::Schema(format!(
            "config has mode {:?} but the {expected:?} subcommand was invoked",
            parsed.mode_name()
        )));
    }
    Ok(())
}

fn persist_run(
    cli: &Cli,
    config_text: &str,
    parsed: &RunConfig,
    emit_svg: bool,
) -> Result<(), CliError> {
    let hash = manifest::config_hash(config_text);
    let run_dir = cli.out.join(manifest::run_dir_name(&hash));
    let ctx = RunContext {
        run_dir: run_dir.clone(),
        emit_svg,
    };
    let files = execute(parsed, &ctx)?;
    manifest::write_manifest(&run_dir, parsed.mode_name(), config_text, cli.seed, &files)?;
    println!("{}", run_dir.display());
    for f in &files {
        println!("  {f}");
    }
    Ok(())
}
