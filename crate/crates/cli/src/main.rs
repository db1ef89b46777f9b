//! `fmo-sim`: run cataloged or configured exciton-transfer scenarios.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use fmo_core::io::{parse_config, resolve_scenario, write_run};
use fmo_core::model::Generator;
use fmo_core::scenarios::{catalog, run_scenario, Overrides, RunOutput};

/// Environment variable bounding the worker threads used for sweeps.
const THREADS_VAR: &str = "FMO_THREADS";

#[derive(Parser)]
#[command(
    name = "fmo-sim",
    version,
    about = "Open-system exciton transfer and entanglement in chromophore networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a catalog scenario or a configuration file.
    Run {
        /// Catalog name or path to a TOML configuration.
        target: String,
        /// Output directory [default: results/<scenario>].
        #[arg(long)]
        out: Option<PathBuf>,
        /// Integrator step in ps.
        #[arg(long)]
        dt: Option<f64>,
        /// Final time in ps.
        #[arg(long = "t-end")]
        t_end: Option<f64>,
        /// Single bath scaling f (replaces an f sweep).
        #[arg(long, conflicts_with = "f_sweep")]
        f: Option<f64>,
        /// Comma-separated f values to sweep.
        #[arg(long = "f-sweep", value_delimiter = ',')]
        f_sweep: Option<Vec<f64>>,
        /// Reject unknown configuration keys.
        #[arg(long)]
        strict: bool,
    },
    /// Print the scenario catalog.
    List,
    /// Parse a configuration and check the model without running it.
    Validate {
        config: PathBuf,
        #[arg(long)]
        strict: bool,
    },
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var(THREADS_VAR) {
        let n: usize = v
            .parse()
            .with_context(|| format!("{THREADS_VAR} must be a positive integer, got `{v}`"))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the sweep thread pool")?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::List => {
            for s in catalog() {
                let sweep = match &s.sweep {
                    Some(sw) => format!(" [sweep {} x{}]", sw.parameter, sw.values.len()),
                    None => String::new(),
                };
                println!("{:<26} {}{}", s.name, s.description, sweep);
            }
        }
        Command::Validate { config, strict } => {
            let s = parse_config(&config, strict)?;
            let point = match s.sweep_values() {
                Some(v) => s.at(v[0])?,
                None => s.clone(),
            };
            let gen = Generator::build(&point.model)?;
            println!(
                "{}: ok ({} sites, layout {} of dimension {}, digest {})",
                s.name,
                s.model.network.n_sites(),
                gen.layout(),
                gen.dim(),
                &s.digest()[..16]
            );
        }
        Command::Run {
            target,
            out,
            dt,
            t_end,
            f,
            f_sweep,
            strict,
        } => {
            configure_threads()?;
            let base = resolve_scenario(&target, strict)?;
            let scenario = base.with_overrides(&Overrides {
                dt,
                t_end,
                f,
                f_sweep,
            })?;
            let out = out.unwrap_or_else(|| PathBuf::from("results").join(&scenario.name));
            let start = Instant::now();
            let output = run_scenario(&scenario)?;
            let elapsed = start.elapsed();
            let files = write_run(&scenario, &output, elapsed, &out)?;
            for tr in output.trajectories() {
                if let Some(p) = tr.sink_population.last() {
                    let label = match &output {
                        RunOutput::Sweep(s) => {
                            let i = s
                                .trajectories
                                .iter()
                                .position(|t| std::ptr::eq(t, tr))
                                .unwrap_or(0);
                            format!("{} = {:.4}", s.parameter, s.values[i])
                        }
                        RunOutput::Single(_) => "run".into(),
                    };
                    println!(
                        "{label}: p_sink({:.3} ps) = {p:.6}",
                        tr.times.last().copied().unwrap_or(0.0)
                    );
                }
            }
            println!(
                "{}: wrote {} files to {} in {:.1} s",
                scenario.name,
                files.len(),
                out.display(),
                elapsed.as_secs_f64()
            );
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
