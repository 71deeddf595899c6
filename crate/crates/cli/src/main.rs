use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use pwillmore_cli::{mesh_info, regularize_file, run_flow, CliError, ConfigLayer};
use pwillmore_core::{RegularizeConfig, RegularizeMode};

#[derive(Parser)]
#[command(name = "pwillmore", version, about = "Constrained p-Willmore flow of triangle meshes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the flow; flags override values from the config file.
    Run(RunArgs),
    /// Apply one conformal-penalty regularization to a mesh.
    Regularize {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// linear or nonlinear
        #[arg(long, default_value = "nonlinear")]
        reg: RegularizeMode,
        #[arg(long, default_value_t = 1e-5)]
        epsilon: f64,
    },
    /// Print mesh diagnostics.
    Info {
        #[arg(long)]
        input: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Flat `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    input: Option<PathBuf>,
    #[arg(long)]
    p: Option<u32>,
    #[arg(long)]
    tau0: Option<f64>,
    #[arg(long)]
    scale: Option<f64>,
    #[arg(long)]
    tau_max: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    fix_area: bool,
    #[arg(long)]
    fix_volume: bool,
    /// off, linear or nonlinear
    #[arg(long)]
    reg: Option<RegularizeMode>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Output directory for snapshots.
    #[arg(long)]
    out: Option<PathBuf>,
    /// CSV log path.
    #[arg(long)]
    log: Option<PathBuf>,
    #[arg(long)]
    snapshot_every: Option<usize>,
}

impl RunArgs {
    fn layer(&self) -> ConfigLayer {
        ConfigLayer {
            input: self.input.clone(),
            output_dir: self.out.clone(),
            p: self.p,
            steps: self.steps,
            tau0: self.tau0,
            scale_s: self.scale,
            tau_max: self.tau_max,
            fix_area: self.fix_area.then_some(true),
            fix_volume: self.fix_volume.then_some(true),
            reg_mode: self.reg,
            epsilon: self.epsilon,
            snapshot_every: self.snapshot_every,
            log_path: self.log.clone(),
            ..Default::default()
        }
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let file = match &args.config {
                Some(path) => ConfigLayer::from_file(path)?,
                None => ConfigLayer::default(),
            };
            let cfg = file.overlay(args.layer()).resolve()?;
            let records = run_flow(&cfg)?;
            if let Some(last) = records.last() {
                println!(
                    "completed {} steps: t = {}, energy = {}, log {}",
                    last.step,
                    last.t,
                    last.energy,
                    cfg.log_path.display()
                );
            }
        }
        Command::Regularize { input, out, reg, epsilon } => {
            if reg == RegularizeMode::Off {
                return Err(CliError::Config("regularize needs --reg linear or nonlinear".into()));
            }
            let cfg = RegularizeConfig {
                mode: reg,
                epsilon,
                ..Default::default()
            };
            cfg.validate()?;
            let s = regularize_file(&input, &out, &cfg)?;
            println!(
                "conformal distortion {} -> {}, min face quality {} -> {}, max displacement {}, accepted {}",
                s.cd_before, s.cd_after, s.quality_before, s.quality_after, s.max_displacement, s.accepted
            );
        }
        Command::Info { input } => println!("{}", mesh_info(&input)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
