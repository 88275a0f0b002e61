use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use log::{error, info};

use vemmd::harness::{export_fields, rows_to_csv, run_convergence, ExportFormat};
use vemmd::mesh::{generate, quality, MeshFamily};
use vemmd::problems::by_name;
use vemmd::solver::{Simulation, SimulationConfig};
use vemmd::{Result, VemError};

#[derive(Parser)]
#[command(name = "vemmd", version, about = "Virtual element miscible displacement solver")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Error table over successive refinements of a manufactured problem.
    Convergence {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        family: MeshFamily,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// CSV destination; stdout when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Time-dependent run with field snapshots.
    Simulate {
        #[arg(long)]
        problem: String,
        #[arg(long)]
        family: Option<MeshFamily>,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long)]
        tau: f64,
        /// Final time; defaults to the problem's own.
        #[arg(long)]
        final_time: Option<f64>,
        /// Comma-separated output times.
        #[arg(long, value_delimiter = ',')]
        snapshots: Vec<f64>,
        #[arg(long, default_value = "results")]
        out_dir: PathBuf,
        #[arg(long, default_value = "vtk")]
        format: ExportFormat,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Generate a unit-square mesh and write it as JSON.
    Mesh {
        #[arg(long)]
        family: MeshFamily,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn write(path: &PathBuf, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|source| VemError::Io { path: path.clone(), source })
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Convergence { problem, family, levels, seed, out } => {
            let spec = by_name(&problem)?;
            spec.check();
            let rows = run_convergence(&spec, family, levels, seed)?;
            let csv = rows_to_csv(&rows);
            match out {
                Some(p) => write(&p, &csv)?,
                None => print!("{csv}"),
            }
        }
        Command::Simulate { problem, family, n, tau, final_time, snapshots, out_dir, format, seed } => {
            let spec = by_name(&problem)?;
            spec.check();
            let family = family.unwrap_or(spec.default_family);
            let mesh = spec.mesh(family, n, seed)?;
            let t_end = final_time.unwrap_or(spec.final_time);
            let mut config = SimulationConfig::new(tau, t_end);
            config.final_time = snapshots.iter().copied().fold(t_end, f64::max);
            std::fs::create_dir_all(&out_dir).map_err(|source| VemError::Io { path: out_dir.clone(), source })?;
            let mut sim = Simulation::new(mesh, spec, config)?;
            let mut pending: Vec<f64> = snapshots;
            pending.sort_by(f64::total_cmp);
            loop {
                let t = sim.state().t;
                while let Some(&s) = pending.first() {
                    if (s - t).abs() > 0.5 * tau {
                        break;
                    }
                    pending.remove(0);
                    let path = out_dir.join(format!("{problem}_{family}_n{n}_t{s}.{}", format.extension()));
                    export_fields(&sim.mesh, &sim.projectors, sim.state(), &path, format)?;
                    info!("wrote {}", path.display());
                }
                if sim.is_finished() {
                    break;
                }
                sim.step()?;
            }
            let d = sim.diagnostics();
            let worst = |f: fn(&vemmd::solver::StepDiagnostics) -> f64| {
                d.iter().map(f).filter(|v| v.is_finite()).fold(0.0, f64::max)
            };
            info!(
                "max residuals: darcy {:e}, transport {:e}; max conservation defect {:e}",
                worst(|s| s.darcy_residual),
                worst(|s| s.transport_residual),
                worst(|s| s.conservation_defect)
            );
        }
        Command::Mesh { family, n, seed, out } => {
            let mesh = generate(family, n, seed)?;
            let q = quality(&mesh);
            info!(
                "{family} n={n}: {} cells, h = {:.6}, min edge ratio {:.4}, max edges {}, {} cells not star-shaped about the centroid",
                mesh.num_cells(),
                mesh.h(),
                q.min_edge_ratio,
                q.n_edges_max,
                q.star_shaped_wrt_centroid.iter().filter(|s| !**s).count()
            );
            mesh.write_json(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            let mut src = std::error::Error::source(&e);
            while let Some(s) = src {
                error!("  caused by: {s}");
                src = s.source();
            }
            ExitCode::FAILURE
        }
    }
}
