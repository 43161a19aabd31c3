//! `nmbloch`: runs the Bloch hierarchy, the exact-bath oracle and Monte Carlo
//! ensembles from a JSON config and writes CSV data with JSON manifests.
//!
//! Exit status: 0 on success, 1 on numerical failure, 2 on usage errors.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod output;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::json;

use config::{Method, Mode, Overrides, RunConfig};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o failure: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) | CliError::Io(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "nmbloch", version, about = "Non-Markovian Bloch equations for the spin-boson model")]
struct Cli {
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: config "output", else ./output).
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Hierarchy order N.
    #[arg(long)]
    order: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long = "t-max")]
    t_max: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long = "n-traj")]
    n_traj: Option<usize>,
    /// Suppress progress messages.
    #[arg(long)]
    quiet: bool,
}

fn load(cli: &Cli) -> Result<(RunConfig, String), CliError> {
    let text = std::fs::read_to_string(&cli.config)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", cli.config.display())))?;
    let mut cfg = RunConfig::from_json(&text)?;
    cfg.apply(&Overrides {
        mode: cli.mode,
        order: cli.order,
        dt: cli.dt,
        t_max: cli.t_max,
        seed: cli.seed,
        n_traj: cli.n_traj,
        output: cli.output.clone(),
    });
    cfg.validate()?;
    let run_id = cfg.run_id.clone().unwrap_or_else(|| {
        cli.config
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "run".into())
    });
    Ok((cfg, run_id))
}

fn say(quiet: bool, msg: impl AsRef<str>) {
    if !quiet {
        eprintln!("{}", msg.as_ref());
    }
}

fn single(cfg: &RunConfig, run_id: &str, method: Method, quiet: bool) -> Result<(), CliError> {
    let r = run::run_method(cfg, method)?;
    let dir = cfg.output_dir();
    let (csv, _) = output::write_series(&dir, run_id, cfg, &r)?;
    say(quiet, format!("{}: wrote {} ({:.2}s)", method.name(), dir.join(csv).display(), r.seconds));
    Ok(())
}

fn sweep(cfg: &RunConfig, run_id: &str, quiet: bool) -> Result<(), CliError> {
    let axis = cfg.sweep.as_ref().expect("validated sweep");
    let entries = cfg.sweep_entries()?;
    let results = run::run_sweep(&entries, axis.method);
    let dir = cfg.output_dir().join(run_id);
    let mut listed = Vec::new();
    let mut failure = None;
    for ((label, entry_cfg), result) in entries.iter().zip(results) {
        match result {
            Ok(r) => {
                let (csv, manifest) = output::write_series(&dir, label, entry_cfg, &r)?;
                say(quiet, format!("{label}: wrote {} ({:.2}s)", dir.join(&csv).display(), r.seconds));
                listed.push(json!({"label": label, "csv": csv, "manifest": manifest}));
            }
            Err(e) => {
                failure = Some((label.clone(), e));
                break;
            }
        }
    }
    let index = json!({
        "artifact": "nmbloch",
        "version": output::ARTIFACT_VERSION,
        "run_id": run_id,
        "param": axis.param.name(),
        "hold": axis.hold,
        "method": axis.method,
        "complete": failure.is_none(),
        "entries": listed,
        "failed": failure.as_ref().map(|(label, e)| json!({"label": label, "error": e.to_string()})),
    });
    output::write_json(&dir.join("index.json"), &index)?;
    match failure {
        Some((label, e)) => Err(match e {
            CliError::Usage(m) => CliError::Usage(format!("{label}: {m}")),
            CliError::Numerical(m) => CliError::Numerical(format!("{label}: {m}")),
            CliError::Io(m) => CliError::Io(m),
        }),
        None => Ok(()),
    }
}

fn compare(cfg: &RunConfig, run_id: &str, quiet: bool) -> Result<(), CliError> {
    let start = Instant::now();
    let methods = cfg.compare.clone().unwrap_or_default().methods;
    let results = methods
        .iter()
        .map(|&m| run::run_method(cfg, m))
        .collect::<Result<Vec<_>, _>>()?;
    let d = run::deltas(&results)?;
    let dir = cfg.output_dir().join(run_id);
    for r in &results {
        let (csv, _) = output::write_series(&dir, r.method.name(), cfg, r)?;
        say(quiet, format!("{}: wrote {} ({:.2}s)", r.method.name(), dir.join(csv).display(), r.seconds));
    }
    output::write_text(&dir.join("deltas.csv"), &output::deltas_csv(&d))?;
    let seconds = start.elapsed().as_secs_f64();
    output::write_json(
        &dir.join("deltas.manifest.json"),
        &output::deltas_manifest(cfg, "deltas.csv", &d, seconds),
    )?;
    for (m, s) in d.others.iter().zip(&d.sup) {
        say(
            quiet,
            format!("sup |{} - {}|: sx {:.3e} sy {:.3e} sz {:.3e}", m.name(), d.reference.name(), s[0], s[1], s[2]),
        );
    }
    Ok(())
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let (cfg, run_id) = load(cli)?;
    match cfg.mode {
        Mode::Bloch => single(&cfg, &run_id, Method::Bloch, cli.quiet),
        Mode::Oracle => single(&cfg, &run_id, Method::Oracle, cli.quiet),
        Mode::Mc => single(&cfg, &run_id, Method::Mc, cli.quiet),
        Mode::Sweep => sweep(&cfg, &run_id, cli.quiet),
        Mode::Compare => compare(&cfg, &run_id, cli.quiet),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nmbloch: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
