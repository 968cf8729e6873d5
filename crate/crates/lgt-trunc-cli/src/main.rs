use clap::{Parser, Subcommand};
use lgt_trunc_cli::{
    compare, compare_csv, presets, run, sweep, sweep_summary_csv, CliError, RunConfig,
    SweepConfig, OUT_DIR_ENV,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(
    name = "lgt-trunc",
    version,
    about = "Truncation-error experiments for electric-basis lattice gauge theory"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one preset (optionally from a JSON config with overrides).
    Run {
        /// Preset name; see `presets` for the list.
        #[arg(long, conflicts_with = "config")]
        preset: Option<String>,
        /// JSON config file (schema-validated, unknown keys rejected).
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory (default: $LGT_TRUNC_OUT or ./out).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Trotter / propagation step override.
        #[arg(long)]
        dt: Option<f64>,
        /// Evolution horizon override.
        #[arg(long)]
        t_max: Option<f64>,
        /// Bond-dimension cap override for MPS presets.
        #[arg(long)]
        chi: Option<usize>,
        /// Relative discarded-weight budget override for MPS presets.
        #[arg(long)]
        trunc_tol: Option<f64>,
    },
    /// Run a Cartesian parameter sweep from a JSON config.
    Sweep {
        /// JSON sweep config: { "base": <run config>, "grid": {...}, "workers": n }.
        #[arg(long)]
        config: PathBuf,
        /// Worker-pool size override.
        #[arg(long)]
        workers: Option<usize>,
        /// Output directory override.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare a bounds CSV against a measurement CSV row by row.
    Compare {
        bounds: PathBuf,
        measurements: PathBuf,
        /// Directory to write compare.csv into (default: stdout only).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// List available presets.
    Presets,
}

fn read_to_string(path: &PathBuf) -> Result<String, CliError> {
    std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = dispatch(cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run { preset, config, out, dt, t_max, chi, trunc_tol } => {
            let mut cfg = match (preset, config) {
                (Some(p), None) => RunConfig::new(&p),
                (None, Some(path)) => serde_json::from_str::<RunConfig>(&read_to_string(&path)?)
                    .map_err(|e| CliError::Validation(format!("bad config: {e}")))?,
                _ => {
                    return Err(CliError::Validation(
                        "exactly one of --preset or --config is required".into(),
                    ))
                }
            };
            if out.is_some() {
                cfg.out_dir = out;
            }
            cfg.dt = dt.or(cfg.dt);
            cfg.t_max = t_max.or(cfg.t_max);
            cfg.chi = chi.or(cfg.chi);
            cfg.trunc_tol = trunc_tol.or(cfg.trunc_tol);
            let dir = run(&cfg)?;
            println!("wrote {}", dir.display());
            Ok(())
        }
        Command::Sweep { config, workers, out } => {
            let mut cfg = serde_json::from_str::<SweepConfig>(&read_to_string(&config)?)
                .map_err(|e| CliError::Validation(format!("bad sweep config: {e}")))?;
            if workers.is_some() {
                cfg.workers = workers;
            }
            if out.is_some() {
                cfg.base.out_dir = out;
            }
            let rows = sweep(&cfg)?;
            let summary = sweep_summary_csv(&cfg, &rows);
            let dir = cfg.base.resolved_out_dir();
            std::fs::create_dir_all(&dir)
                .map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", dir.display())))?;
            let path = dir.join("sweep_summary.csv");
            std::fs::write(&path, &summary)
                .map_err(|e| CliError::Numerical(format!("cannot write summary: {e}")))?;
            let failures = rows.iter().filter(|r| r.status.is_err()).count();
            println!("wrote {} ({} points, {} failed)", path.display(), rows.len(), failures);
            Ok(())
        }
        Command::Compare { bounds, measurements, out } => {
            let rows = compare(&read_to_string(&bounds)?, &read_to_string(&measurements)?)?;
            let csv = compare_csv(&rows);
            print!("{csv}");
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)
                    .map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", dir.display())))?;
                std::fs::write(dir.join("compare.csv"), &csv)
                    .map_err(|e| CliError::Numerical(format!("cannot write verdict: {e}")))?;
            }
            let failures = rows.iter().filter(|r| !r.pass).count();
            if failures > 0 {
                return Err(CliError::ComparisonFailed(failures));
            }
            Ok(())
        }
        Command::Presets => {
            for name in presets::PRESET_NAMES {
                println!("{name}");
            }
            println!("(default output dir: ${OUT_DIR_ENV} or ./out)");
            Ok(())
        }
    }
}
