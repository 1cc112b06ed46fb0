//! Batch scenario runner for the station-keeping simulator.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use astrokeep::harness::{
    compute_metrics, emit_compare_summary, emit_outputs, load_history_dir, metrics_to_text,
    MetricsReport, Scenario,
};
use astrokeep::{compare_modes, run_constellation};

#[derive(Parser)]
#[command(
    name = "astrokeep",
    about = "Station-keeping simulator with in-flight gravity identification",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario and write time series plus metrics.
    Run {
        /// Scenario file (TOML).
        scenario: PathBuf,
        /// Output directory (default: ASTROKEEP_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Override the scenario seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Run a scenario in two controller modes with identical seeds and
    /// emit side-by-side metrics.
    Compare {
        scenario: PathBuf,
        /// Comma-separated modes; only `learning,nonlearning` is supported.
        #[arg(long, default_value = "learning,nonlearning")]
        modes: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Recompute metrics from an emitted run directory.
    Metrics {
        /// Directory produced by `run`.
        history_dir: PathBuf,
    },
    /// Parse and validate a scenario file without running it.
    Validate { scenario: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn default_out() -> PathBuf {
    std::env::var_os("ASTROKEEP_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("out"))
}

fn load_with_seed(path: &Path, seed: Option<u64>) -> astrokeep::Result<Scenario> {
    let mut scenario = Scenario::load(path)?;
    if let Some(s) = seed {
        scenario.seed = s;
    }
    Ok(scenario)
}

fn run_reports(
    scenario: &Scenario,
    output: &astrokeep::RunOutput,
) -> astrokeep::Result<Vec<MetricsReport>> {
    output
        .histories
        .iter()
        .map(|h| compute_metrics(h, scenario, &scenario.asteroid.gravity))
        .collect()
}

fn dispatch(cli: Cli) -> astrokeep::Result<()> {
    match cli.command {
        Command::Run { scenario, out, seed } => {
            let scenario = load_with_seed(&scenario, seed)?;
            let out = out.unwrap_or_else(default_out);
            let output = run_constellation(&scenario)?;
            let reports = run_reports(&scenario, &output)?;
            emit_outputs(&out, &scenario, &output.histories, &reports)?;
            for r in &reports {
                print!("{}", metrics_to_text(r));
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Compare {
            scenario,
            modes,
            out,
            seed,
        } => {
            let requested: Vec<&str> = modes.split(',').map(|m| m.trim()).collect();
            if requested != ["learning", "nonlearning"] {
                return Err(astrokeep::Error::invalid(
                    "compare supports exactly --modes learning,nonlearning",
                ));
            }
            let scenario = load_with_seed(&scenario, seed)?;
            let out = out.unwrap_or_else(default_out);
            let (learning, fixed) = compare_modes(&scenario)?;

            let mut learning_scenario = scenario.clone();
            learning_scenario.control.learning = true;
            let mut fixed_scenario = scenario;
            fixed_scenario.control.learning = false;
            let reports_l = run_reports(&learning_scenario, &learning)?;
            let reports_f = run_reports(&fixed_scenario, &fixed)?;

            emit_outputs(
                &out.join("learning"),
                &learning_scenario,
                &learning.histories,
                &reports_l,
            )?;
            emit_outputs(
                &out.join("nonlearning"),
                &fixed_scenario,
                &fixed.histories,
                &reports_f,
            )?;
            emit_compare_summary(&out, "learning", &reports_l, "nonlearning", &reports_f)?;
            for (l, f) in reports_l.iter().zip(reports_f.iter()) {
                println!(
                    "sat{}: delta_r_mean learning {:.3} m vs nonlearning {:.3} m; fuel {:.4} vs {:.4} kg",
                    l.satellite, l.delta_r_mean_m, f.delta_r_mean_m, l.fuel_kg, f.fuel_kg
                );
            }
            println!("wrote {}", out.display());
            Ok(())
        }
        Command::Metrics { history_dir } => {
            let (scenario, histories) = load_history_dir(&history_dir)?;
            for history in &histories {
                let report = compute_metrics(history, &scenario, &scenario.asteroid.gravity)?;
                print!("{}", metrics_to_text(&report));
            }
            Ok(())
        }
        Command::Validate { scenario } => {
            let s = Scenario::load(&scenario)?;
            println!(
                "ok: {} ({} satellite(s), {:.1} h, truth degree {})",
                s.name,
                s.satellites.len(),
                s.duration_s / 3600.0,
                s.asteroid.gravity.degree
            );
            Ok(())
        }
    }
}
