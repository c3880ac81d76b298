//! Command-line entry points: `regime`, `run`, `sweep`, `presets`.

use chemotax::config::{load_config, set_param, ConfigFile};
use chemotax::error::Error;
use chemotax::output::write_run_outputs;
use chemotax::params::RegimeReport;
use chemotax::presets::{preset_config, preset_list};
use chemotax::stepper::run_simulation;
use chemotax::sweep::{combinations, run_sweep};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "chemotax",
    about = "Finite-volume simulator and regime analyzer for attraction-repulsion \
             chemotaxis with gradient damping",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Source {
    /// Configuration file (flat key = value sections).
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in scenario preset (see `chemotax presets`).
    #[arg(long)]
    preset: Option<String>,
    /// Override a config entry, e.g. --override params.gamma=1.4
    /// (repeatable).
    #[arg(long = "override", value_name = "SECTION.KEY=VALUE")]
    overrides: Vec<String>,
}

impl Source {
    fn load(&self) -> Result<ConfigFile, Error> {
        match (&self.config, &self.preset) {
            (Some(path), None) => load_config(path, &self.overrides),
            (None, Some(name)) => preset_config(name, &self.overrides),
            _ => Err(Error::ConfigMsg(
                "exactly one of --config or --preset is required".into(),
            )),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate the boundedness regime; exit 0 when the damping
    /// condition holds, 2 when it does not.
    Regime {
        #[command(flatten)]
        source: Source,
    },
    /// Run one simulation and write series.csv, snapshots, verdict.txt,
    /// maxu.svg and config.echo into the output directory.
    Run {
        #[command(flatten)]
        source: Source,
        /// Output directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the Cartesian product of the [sweep] axes; one subdirectory
    /// per run plus sweep.csv and an overlay plot.
    Sweep {
        #[command(flatten)]
        source: Source,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads for independent runs.
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// List built-in presets.
    Presets,
}

fn regime_for(cfg: &ConfigFile, values: &[(String, String)]) -> Result<RegimeReport, Error> {
    let mut params = cfg.run.params;
    for (key, value) in values {
        set_param(&mut params, key, value)?;
    }
    params.validate()?;
    let mesh = cfg.run.mesh.build()?;
    let u0 = cfg.run.u0.evaluate(&mesh);
    Ok(RegimeReport::evaluate(
        &params,
        Some(u0.mass(&mesh)),
        Some(mesh.domain_volume()),
    ))
}

fn cmd_regime(source: &Source) -> Result<u8, Error> {
    let cfg = source.load()?;
    if cfg.sweep_axes.is_empty() {
        let report = regime_for(&cfg, &[])?;
        print!("{}", report.to_key_value_block());
        return Ok(if report.gamma_ok { 0 } else { 2 });
    }
    // One CSV row per parameter set for sweep configurations.
    let combos = combinations(&cfg.sweep_axes);
    let axis_names: Vec<&str> = cfg.sweep_axes.iter().map(|(n, _)| n.as_str()).collect();
    println!("{},{}", axis_names.join(","), RegimeReport::csv_header());
    let mut all_ok = true;
    for combo in &combos {
        let report = regime_for(&cfg, combo)?;
        let values: Vec<&str> = combo.iter().map(|(_, v)| v.as_str()).collect();
        println!("{},{}", values.join(","), report.csv_row());
        all_ok &= report.gamma_ok;
    }
    Ok(if all_ok { 0 } else { 2 })
}

fn cmd_run(source: &Source, out: &PathBuf) -> Result<u8, Error> {
    let cfg = source.load()?;
    if !cfg.sweep_axes.is_empty() {
        return Err(Error::ConfigMsg(
            "this configuration declares sweep axes; use `chemotax sweep`".into(),
        ));
    }
    let output = run_simulation(&cfg.run)?;
    let verdict = write_run_outputs(out, &cfg, &output)?;
    println!("{}", output.mesh.summary());
    println!("termination = {:?}", output.termination);
    print!("{}", verdict.to_key_value_block(&cfg.run.detector));
    println!("outputs written to {}", out.display());
    // A completed run exits 0 regardless of the verdict: the science is
    // in verdict.txt.
    Ok(0)
}

fn cmd_sweep(source: &Source, out: &PathBuf, workers: usize) -> Result<u8, Error> {
    let cfg = source.load()?;
    let rows = run_sweep(&cfg, out, workers)?;
    for row in &rows {
        let verdict = row
            .verdict
            .as_ref()
            .map(|v| {
                format!(
                    "blew_up={} peak={:.3e} t_max={}",
                    v.blew_up,
                    v.peak_value,
                    v.t_max_estimate.map_or("none".into(), |t| format!("{t:.3e}"))
                )
            })
            .unwrap_or_else(|| row.status.clone());
        println!("[{:03}] {} -> {}", row.index, row.label, verdict);
    }
    println!("sweep outputs written to {}", out.display());
    Ok(0)
}

fn cmd_presets() -> Result<u8, Error> {
    for (name, desc) in preset_list() {
        println!("{name:12} {desc}");
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Regime { source } => cmd_regime(source),
        Command::Run { source, out } => cmd_run(source, out),
        Command::Sweep { source, out, workers } => cmd_sweep(source, out, *workers),
        Command::Presets => cmd_presets(),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn preset_sources_load_and_echo() {
        let source = Source {
            config: None,
            preset: Some("equilibrium".into()),
            overrides: vec![],
        };
        let cfg = source.load().unwrap();
        assert!(!chemotax::config::config_echo(&cfg).is_empty());
    }
}
