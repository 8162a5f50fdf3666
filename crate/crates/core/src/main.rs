use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use dycore::driver::advection::{run_advection, AdvectionCase, AdvectionSetup, InitialShape};
use dycore::driver::{run, ExperimentConfig, RunOptions};
use dycore::mesh::{average_grid_spacing, CubedSphereMesh, VerticalMeshSpec};
use dycore::{DycoreError, PhysicalConstants};

/// Semi-implicit mixed finite-element / finite-volume dynamical core on a cubed sphere.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by an INI file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Final step index (overrides the config).
        #[arg(long)]
        steps: Option<usize>,
        /// Output directory (overrides the config).
        #[arg(long)]
        output: Option<PathBuf>,
        /// Write a checkpoint here at the end of the run.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Continue from this checkpoint.
        #[arg(long)]
        restart: Option<PathBuf>,
        /// Also write CSV slices of the gridded output.
        #[arg(long)]
        csv: bool,
    },
    /// Scalar advection test on a flat shell.
    Transport {
        #[arg(long, default_value = "solid-body")]
        case: String,
        #[arg(long, default_value_t = 24)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        layers: usize,
        /// Time step in seconds; defaults to one 12-day period over `steps`.
        #[arg(long)]
        dt: Option<f64>,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 2)]
        degree: usize,
        #[arg(long)]
        monotone: bool,
        /// Use the advective form (not conservative) instead of advective-then-flux.
        #[arg(long)]
        advective: bool,
        /// Slotted cylinder instead of cosine bells.
        #[arg(long)]
        cylinder: bool,
    },
    /// Print mesh statistics.
    MeshInfo {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 10)]
        layers: usize,
    },
}

fn exit_code(e: &DycoreError) -> u8 {
    match e {
        DycoreError::Config(_)
        | DycoreError::InvalidResolution(_)
        | DycoreError::PanelIndex(_)
        | DycoreError::DegenerateColumn { .. }
        | DycoreError::Checkpoint(_)
        | DycoreError::Io(_) => 2,
        _ => 3,
    }
}

fn configure_threads() -> Result<(), DycoreError> {
    if let Ok(v) = std::env::var("DYCORE_NUM_THREADS") {
        let n: usize = v.parse().map_err(|_| DycoreError::Config(format!("DYCORE_NUM_THREADS must be an integer, got '{v}'")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| DycoreError::Config(e.to_string()))?;
    }
    Ok(())
}

fn execute(cli: Cli) -> Result<(), DycoreError> {
    configure_threads()?;
    match cli.command {
        Command::Run { config, steps, output, checkpoint, restart, csv } => {
            let text = std::fs::read_to_string(&config)?;
            let mut cfg = ExperimentConfig::parse(&text)?;
            cfg.output.csv |= csv;
            let opts = RunOptions { steps, output, checkpoint, restart, echo: true };
            let summary = run(&cfg, &opts)?;
            eprintln!("finished at step {}", summary.step);
        }
        Command::Transport { case, n, layers, dt, steps, degree, monotone, advective, cylinder } => {
            let case: AdvectionCase = case.parse()?;
            let mut setup = AdvectionSetup::new(case, n);
            setup.layers = layers;
            setup.dt = dt;
            if let Some(s) = steps {
                setup.steps = s;
            }
            setup.transport.degree = degree;
            setup.transport.monotone = monotone;
            setup.advective = advective;
            if cylinder {
                setup.shape = InitialShape::SlottedCylinder;
            }
            let r = run_advection(&setup)?;
            println!("steps {} dt {:.3} s max horizontal Courant {:.3}", setup.steps, r.dt, r.courant);
            println!("l2 {:.6e} linf {:.6e}", r.l2, r.linf);
            println!("relative mass change {:.3e}", r.mass_change);
            println!("range [{:.6e}, {:.6e}] initial [{:.6e}, {:.6e}]", r.range.0, r.range.1, r.initial_range.0, r.initial_range.1);
        }
        Command::MeshInfo { n, layers } => {
            let c = PhysicalConstants::default();
            let mesh = CubedSphereMesh::flat(n, c.radius, VerticalMeshSpec::uniform(1.0e4, layers))?;
            println!("{}", mesh.summary());
            println!("average grid spacing {:.1} km", average_grid_spacing(n, c.radius) / 1000.0);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
