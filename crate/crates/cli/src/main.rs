use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lidar_deploy::scene::RoadSceneParams;
use lidar_deploy_cli::config::{Mode, Overrides, RunConfig};
use lidar_deploy_cli::{commands, CliError};

/// Simulate, score and optimize roadside LiDAR mounts.
#[derive(Parser)]
#[command(name = "lidar-deploy", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write one labeled point cloud per frame plus a manifest.
    Simulate(RunArgs),
    /// Write per-vehicle VGOP and entropy rows plus a summary.
    Evaluate(RunArgs),
    /// Search the mount and compare it with the 2 m, untilted baseline.
    Optimize(RunArgs),
    /// Summarize the exports already in an output directory.
    Report {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic multi-lane road scenario as canonical CSV.
    Scene {
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        vehicles: Option<usize>,
        #[arg(long)]
        frame_count: Option<usize>,
        #[arg(long)]
        lanes: Option<usize>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Built-in preset name (rs16, rs32, rs80) or preset file.
    #[arg(long)]
    preset: Option<String>,
    /// Use every n-th frame.
    #[arg(long)]
    frames: Option<usize>,
}

impl RunArgs {
    fn load(&self, mode: Mode) -> Result<RunConfig, CliError> {
        let overrides = Overrides {
            seed: self.seed,
            out: self.out.clone(),
            preset: self.preset.clone(),
            frames: self.frames,
        };
        RunConfig::load(&self.config, &overrides, mode)
    }
}

fn run(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Simulate(args) => {
            let s = commands::simulate(&args.load(Mode::Fixed)?)?;
            Ok(format!("simulated {} frames, {} points", s.frames, s.points))
        }
        Command::Evaluate(args) => {
            let s = commands::evaluate(&args.load(Mode::Fixed)?)?;
            Ok(format!(
                "{} vehicles, proxy recall {:.4}, mean entropy {:.4}, min entropy {:.4}",
                s.vehicles, s.proxy_recall, s.mean_entropy, s.min_entropy
            ))
        }
        Command::Optimize(args) => {
            let s = commands::optimize(&args.load(Mode::Search)?)?;
            Ok(format!(
                "best {:.3} m, tilt {:.3} deg: fitness {:.4} (baseline {:.4}), proxy recall {:.4} (baseline {:.4})",
                s.best.position.z,
                s.best.tilt_x_deg(),
                s.best_fitness,
                s.baseline_fitness,
                s.best_recall,
                s.baseline_recall
            ))
        }
        Command::Report { config, out } => {
            let dir = commands::report_dir(config.as_deref(), out.as_deref())?;
            commands::report(&dir)
        }
        Command::Scene {
            out,
            seed,
            vehicles,
            frame_count,
            lanes,
        } => {
            let d = RoadSceneParams::default();
            let params = RoadSceneParams {
                seed: seed.unwrap_or(d.seed),
                vehicles_per_frame: vehicles.unwrap_or(d.vehicles_per_frame),
                frames: frame_count.unwrap_or(d.frames),
                lanes: lanes.unwrap_or(d.lanes),
                ..d
            };
            let path = commands::scene(&params, &out)?;
            Ok(format!("wrote {}", path.display()))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(message) => {
            println!("{message}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
