//! Scenario runner CLI.
//!
//! Exit codes: 0 clean, 2 invariant violation, 3 configuration error,
//! 4 singularity abort in a generator-path run.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qfiflow::config::{parse_config, with_param, ScenarioConfig};
use qfiflow::runner::{emit_fig2_panels, run_scenario, RunError};

#[derive(Parser)]
#[command(name = "qfiflow", version, about = "QFI flow scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario from a config file.
    Run {
        config_path: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Override time.dt from the config.
        #[arg(long)]
        dt: Option<f64>,
        /// Override time.t_max from the config.
        #[arg(long, value_name = "T_MAX")]
        t_max: Option<f64>,
    },
    /// Write the four regime data panels (flow and rate, weak and strong).
    Fig2 {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, value_name = "T_MAX", default_value_t = 10.0)]
        t_max: f64,
    },
    /// Run one scenario per value of a swept parameter.
    Sweep {
        config_path: PathBuf,
        #[arg(long)]
        param: String,
        /// Comma-separated parameter values.
        #[arg(long, value_delimiter = ',')]
        values: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long, value_name = "T_MAX")]
        t_max: Option<f64>,
    },
}

fn load_config(path: &Path, dt: Option<f64>, t_max: Option<f64>) -> Result<ScenarioConfig, i32> {
    let text = fs::read_to_string(path).map_err(|e| {
        eprintln!("error: cannot read {}: {e}", path.display());
        3
    })?;
    let mut cfg = parse_config(&text).map_err(|e| {
        eprintln!("error: {e}");
        3
    })?;
    if let Some(dt) = dt {
        cfg.dt = dt;
    }
    if let Some(t_max) = t_max {
        cfg.t_max = t_max;
    }
    // Overrides must leave the config valid.
    parse_config(&qfiflow::config::emit_config(&cfg)).map_err(|e| {
        eprintln!("error: {e}");
        3
    })
}

fn write_file(path: &Path, contents: &str) -> Result<(), i32> {
    fs::write(path, contents).map_err(|e| {
        eprintln!("error: cannot write {}: {e}", path.display());
        2
    })
}

fn execute_run(cfg: &ScenarioConfig, out_dir: &Path) -> Result<(), i32> {
    fs::create_dir_all(out_dir).map_err(|e| {
        eprintln!("error: cannot create {}: {e}", out_dir.display());
        2
    })?;
    let report = run_scenario(cfg).map_err(|e: RunError| {
        eprintln!("error: {e}");
        e.exit_code()
    })?;
    write_file(&out_dir.join("run.csv"), &report.to_csv(cfg))?;
    write_file(&out_dir.join("witness.txt"), &report.summary_text())?;
    if report.rows_omitted > 0 {
        eprintln!(
            "note: {} guard-band row(s) omitted near rate singularities",
            report.rows_omitted
        );
    }
    Ok(())
}

fn run() -> Result<(), i32> {
    match Cli::parse().command {
        Command::Run {
            config_path,
            out,
            dt,
            t_max,
        } => {
            let cfg = load_config(&config_path, dt, t_max)?;
            execute_run(&cfg, &out)
        }
        Command::Fig2 { out, dt, t_max } => {
            fs::create_dir_all(&out).map_err(|e| {
                eprintln!("error: cannot create {}: {e}", out.display());
                2
            })?;
            let panels = emit_fig2_panels(t_max, dt).map_err(|e| {
                eprintln!("error: {e}");
                e.exit_code()
            })?;
            for panel in &panels {
                write_file(&out.join(format!("{}.csv", panel.name)), &panel.to_csv())?;
                if panel.rows_omitted > 0 {
                    eprintln!(
                        "note: {}: {} guard-band row(s) omitted",
                        panel.name, panel.rows_omitted
                    );
                }
            }
            Ok(())
        }
        Command::Sweep {
            config_path,
            param,
            values,
            out,
            dt,
            t_max,
        } => {
            if values.is_empty() {
                eprintln!("error: --values must be nonempty");
                return Err(3);
            }
            let base = load_config(&config_path, dt, t_max)?;
            let mut entries = Vec::new();
            for &v in &values {
                let cfg = with_param(&base, &param, v).map_err(|e| {
                    eprintln!("error: {e}");
                    3
                })?;
                entries.push((v, cfg));
            }
            // Runs are independent; execute concurrently, write sequentially.
            let results: Vec<Result<_, RunError>> = std::thread::scope(|scope| {
                let handles: Vec<_> = entries
                    .iter()
                    .map(|(_, cfg)| scope.spawn(move || run_scenario(cfg)))
                    .collect();
                handles.into_iter().map(|h| h.join().unwrap()).collect()
            });
            for ((v, cfg), result) in entries.iter().zip(results) {
                let report = result.map_err(|e| {
                    eprintln!("error: {param} = {v}: {e}");
                    e.exit_code()
                })?;
                let dir = out.join(format!("{}_{}", param.replace('.', "_"), v));
                fs::create_dir_all(&dir).map_err(|e| {
                    eprintln!("error: cannot create {}: {e}", dir.display());
                    2
                })?;
                write_file(&dir.join("run.csv"), &report.to_csv(cfg))?;
                write_file(&dir.join("witness.txt"), &report.summary_text())?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(code) => ExitCode::from(code as u8),
    }
}
