//! `critlab`: command-line front end to the spectral solvers, both
//! evolution engines, the threshold search and the mode fit.
//!
//! Every invocation creates a fresh run directory under `--out` holding the
//! artifacts and a `manifest.json`. Exit codes: 0 success, 1 i/o error,
//! 2 invalid configuration, 3 engine error, 4 undecided or inconclusive.
//! Engine payloads for 3 and 4 go to stderr as JSON.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Value};

use commands::CliError;
use config::*;
use output::RunDir;

#[derive(Parser)]
#[command(name = "critlab", version, about = "Self-similar blowup of the radial cubic wave equation")]
struct Cli {
    /// Parent directory of run directories.
    #[arg(long, global = true, default_value = "runs")]
    out: PathBuf,
    /// JSON config (or an earlier manifest.json); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Eigenvalues of the linearized operator by Frobenius shooting.
    SpectrumShoot(ShootFlags),
    /// Eigenvalues by continued fraction (finite d or "inf").
    SpectrumCf(CfFlags),
    /// Self-similar-coordinate evolution of a/cosh(y) data.
    EvolveSs(SsFlags),
    /// Evolution in physical coordinates.
    EvolvePhys(PhysFlags),
    /// Bisection for the critical amplitude.
    Bisect(BisectFlags),
    /// Fit the late-time mode expansion to an evolve-ss or bisect run.
    Fit(FitFlags),
    /// Plot-ready CSV from earlier runs.
    ExportPlotData(ExportFlags),
}

fn empty() -> Map<String, Value> {
    Map::new()
}

fn struct_defaults<T: Default + Serialize>() -> Map<String, Value> {
    match serde_json::to_value(T::default()).expect("serializable") {
        Value::Object(m) => m,
        _ => unreachable!(),
    }
}

fn execute<C, F>(
    cli: &Cli,
    name: &str,
    defaults: Map<String, Value>,
    flags: &F,
    own_keys: Option<&[&str]>,
    body: impl FnOnce(&C, &mut RunDir) -> Result<(), CliError>,
) -> Result<PathBuf, CliError>
where
    C: DeserializeOwned + Serialize,
    F: Serialize,
{
    let file = match &cli.config {
        Some(p) => load_file(p, name)?,
        None => Map::new(),
    };
    let cfg: C = resolve(defaults, file, flags, own_keys)?;
    let mut dir = RunDir::create(&cli.out, name)?;
    if let Err(e) = body(&cfg, &mut dir) {
        // keep the directory for provenance, with the failure recorded
        let _ = dir.json("error.json", &error_payload(&e));
        return Err(e);
    }
    let echo = serde_json::to_value(&cfg).expect("config serializes");
    Ok(dir.finish(&echo)?)
}

fn error_payload(e: &CliError) -> Value {
    match e {
        CliError::Engine { message, payload } | CliError::Inconclusive { message, payload } => {
            serde_json::json!({"error": message, "payload": payload})
        }
        other => serde_json::json!({"error": other.to_string()}),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::SpectrumShoot(f) => {
            execute::<ShootConfig, _>(&cli, "spectrum-shoot", struct_defaults::<ShootConfig>(), f, None, commands::spectrum_shoot)
        }
        Cmd::SpectrumCf(f) => execute::<CfConfig, _>(&cli, "spectrum-cf", struct_defaults::<CfConfig>(), f, None, commands::spectrum_cf),
        Cmd::EvolveSs(f) => execute::<SsConfig, _>(&cli, "evolve-ss", ss_defaults(), f, Some(SS_KEYS), commands::evolve_ss),
        Cmd::EvolvePhys(f) => execute::<PhysConfig, _>(&cli, "evolve-phys", phys_defaults(), f, None, commands::evolve_phys_cmd),
        Cmd::Bisect(f) => execute::<BisectConfig, _>(&cli, "bisect", bisect_defaults(), f, Some(BISECT_KEYS), commands::bisect),
        Cmd::Fit(f) => execute::<FitConfig, _>(&cli, "fit", empty(), f, None, commands::fit),
        Cmd::ExportPlotData(f) => execute::<ExportConfig, _>(&cli, "export-plot-data", empty(), f, None, commands::export_plot_data),
    };
    match result {
        Ok(path) => {
            println!("{}", path.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            match &e {
                CliError::Engine { .. } | CliError::Inconclusive { .. } => eprintln!("{}", error_payload(&e)),
                other => eprintln!("error: {other}"),
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
