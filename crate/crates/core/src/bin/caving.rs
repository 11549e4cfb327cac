use std::path::{Path, PathBuf};
use std::process::ExitCode;

use caving_damage::config::Config;
use caving_damage::evolution::StepRecord;
use caving_damage::mesh::BoundaryTag;
use caving_damage::output::{checkpoint_path, trace_csv, trace_row, write_step, write_trace_csv, Checkpoint, TRACE_HEADER};
use caving_damage::{DamageModel, Result};
use clap::{Args, Parser, Subcommand};

/// Gradient-damage simulation of a rock mass above an advancing cavity.
///
/// Set RUST_LOG (e.g. `debug`) for more detail.
#[derive(Parser)]
#[command(version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full evolution and write snapshots, checkpoints and a trace.
    Run {
        /// Configuration file (flat TOML)
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Compute one step, resuming from the checkpoint of the previous one.
    Step {
        /// Configuration file (flat TOML)
        config: PathBuf,
        /// Step to compute; needs the checkpoint of step t-1 unless t = 0
        #[arg(long = "t")]
        t: usize,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Validate the configuration and print mesh statistics without solving.
    Check {
        /// Configuration file (flat TOML)
        config: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
}

/// Command-line values take precedence over the configuration file.
#[derive(Args)]
struct Overrides {
    /// isotropic, shear or shear-compression
    #[arg(long)]
    model: Option<DamageModel>,
    /// Dissipated energy density of full damage (J/m³)
    #[arg(long)]
    w1: Option<f64>,
    /// Compression weight of the shear-compression criterion
    #[arg(long)]
    kappa: Option<f64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Overrides {
    fn apply(self, cfg: &mut Config) -> Result<()> {
        if let Some(m) = self.model {
            log::info!("--model {m} overrides config value {}", cfg.model);
            cfg.model = m;
        }
        if let Some(w1) = self.w1 {
            log::info!("--w1 {w1} overrides config value {}", cfg.w1);
            cfg.w1 = w1;
        }
        if let Some(k) = self.kappa {
            log::info!("--kappa {k} overrides config value {}", cfg.kappa);
            cfg.kappa = k;
        }
        if let Some(out) = self.out {
            log::info!("--out {} overrides config value {}", out.display(), cfg.output_dir.display());
            cfg.output_dir = out;
        }
        cfg.validate()
    }
}

fn load(path: &Path, overrides: Overrides) -> Result<Config> {
    let mut cfg = Config::load(path)?;
    overrides.apply(&mut cfg)?;
    Ok(cfg)
}

fn prepare_output(cfg: &Config) -> Result<()> {
    let dir = &cfg.output_dir;
    std::fs::create_dir_all(dir).map_err(|e| caving_damage::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    cfg.save(dir.join("config.toml"))
}

fn run(cfg: &Config) -> Result<()> {
    prepare_output(cfg)?;
    let sim = cfg.simulation()?;
    let dir = cfg.output_dir.clone();
    let traj = sim.run_with(cfg.final_step, |rec: &StepRecord| write_step(&dir, rec, sim.model))?;
    write_trace_csv(&traj.steps, dir.join("trace.csv"))?;
    print!("{}", trace_csv(&traj.steps));
    Ok(())
}

fn step(cfg: &Config, t: usize) -> Result<()> {
    prepare_output(cfg)?;
    let sim = cfg.simulation()?;
    let rec = if t == 0 {
        sim.first_step()?
    } else {
        let prev = Checkpoint::load(checkpoint_path(&cfg.output_dir, t - 1))?.restore(&sim)?;
        sim.next_step(&prev)?
    };
    write_step(&cfg.output_dir, &rec, sim.model)?;
    println!("{TRACE_HEADER}\n{}", trace_row(&rec));
    Ok(())
}

fn check(cfg: &Config) -> Result<()> {
    cfg.warn_resolution();
    let sim = cfg.simulation()?;
    let last = sim.mesh_at(cfg.final_step)?;
    let [nx, ny] = sim.mesh.cells();
    println!("model: {}", cfg.model);
    println!("cells: {nx} x {ny}");
    println!("nodes: {}", sim.mesh.node_count());
    println!("elements: {}", sim.mesh.element_count());
    println!(
        "active elements at step {}: {} (nodes {})",
        cfg.final_step,
        last.active_element_count(),
        last.active_nodes().iter().filter(|&&a| a).count()
    );
    let counts = last.edge_counts();
    for tag in [BoundaryTag::Lat, BoundaryTag::Up, BoundaryTag::Down, BoundaryTag::Cav] {
        println!("{tag:?} edges: {}", counts.get(&tag).copied().unwrap_or(0));
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, overrides } => load(&config, overrides).and_then(|c| run(&c)),
        Command::Step { config, t, overrides } => load(&config, overrides).and_then(|c| step(&c, t)),
        Command::Check { config, overrides } => load(&config, overrides).and_then(|c| check(&c)),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
