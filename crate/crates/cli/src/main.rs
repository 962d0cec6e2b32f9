use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use vem_cli::commands::{
    run_converge, run_cook, run_mesh, run_patch, run_solve, run_stabsweep, RunOptions,
    DEFAULT_ALPHA0,
};
use vem_cli::problems::{ConvergenceTest, PatchTest};
use vem_core::meshgen::MeshFamily;
use vem_core::SolverMode;

#[derive(Parser)]
#[command(name = "vem", version, about = "Virtual element solver for plane-strain elasticity")]
struct Cli {
    /// Directory for results.csv, VTK files and run.log.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Seed for randomized mesh families.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Linear solver: direct or cg.
    #[arg(long, global = true, default_value = "direct")]
    solver: SolverMode,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Constant-stress patch test on the fixed five-cell meshes.
    Patch {
        #[arg(long, default_value = "1a")]
        test: PatchTest,
        #[arg(short, long, default_value_t = 1)]
        k: usize,
    },
    /// Error norms and rates on a sequence of refined meshes.
    Converge {
        #[arg(long, default_value = "2b")]
        test: ConvergenceTest,
        #[arg(long = "mesh", default_value = "squares")]
        family: MeshFamily,
        #[arg(short, long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
        /// Cells per side on the coarsest level.
        #[arg(long, default_value_t = 8)]
        coarsest: usize,
    },
    /// Sensitivity of the polynomial benchmark to the stabilization factor.
    Stabsweep {
        #[arg(long = "mesh", default_value = "squares")]
        family: MeshFamily,
        #[arg(short, long, default_value_t = 2)]
        k: usize,
        #[arg(short, long, default_value_t = 16)]
        n: usize,
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_ALPHA0)]
        alpha0: Vec<f64>,
    },
    /// Cook's membrane tip displacement with Richardson extrapolation.
    Cook {
        #[arg(long = "mesh", default_value = "quads")]
        family: MeshFamily,
        #[arg(short, long, default_value_t = 2)]
        k: usize,
        #[arg(long, default_value_t = 5)]
        levels: usize,
        #[arg(long, default_value_t = 4)]
        coarsest: usize,
    },
    /// Solve a problem described by a TOML config on a JSON mesh.
    Solve {
        #[arg(long)]
        mesh: PathBuf,
        /// Problem description in TOML.
        #[arg(long)]
        problem: PathBuf,
    },
    /// Generate a mesh and write it as JSON.
    Mesh {
        #[arg(long = "mesh", default_value = "squares")]
        family: MeshFamily,
        #[arg(short, long, default_value_t = 8)]
        n: usize,
        /// Mesh the Cook membrane instead of the unit square.
        #[arg(long)]
        cook: bool,
        #[arg(long)]
        output: PathBuf,
    },
}

fn init_logging(out: &std::path::Path) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let file = File::create(out.join("run.log")).context("creating run.log")?;
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .target(env_logger::Target::Pipe(Box::new(file)))
        .format(|buf, record| writeln!(buf, "[{}] {}", record.level(), record.args()))
        .try_init()?;
    Ok(())
}

fn run(cli: Cli) -> Result<bool> {
    init_logging(&cli.out)?;
    let opts = RunOptions {
        solver: cli.solver,
        seed: cli.seed,
    };
    let out = Some(cli.out.as_path());
    match cli.command {
        Command::Patch { test, k } => {
            let r = run_patch(test, k, &opts, out)?;
            let verdict = if r.passed() { "PASS" } else { "FAIL" };
            println!(
                "patch {} k={k}: ndofs={} max relative stress deviation {:.3e} [{verdict}] ({:.2}s)",
                test.name(),
                r.ndofs,
                r.max_rel_deviation,
                r.seconds
            );
            Ok(r.passed())
        }
        Command::Converge { test, family, k, levels, coarsest } => {
            let r = run_converge(test, family, k, levels, coarsest, &opts, out)?;
            println!("{:>5} {:>5} {:>12} {:>8} {:>12} {:>12}", "level", "n", "h", "ndofs", "D1", "D2");
            for row in &r.rows {
                println!(
                    "{:>5} {:>5} {:>12.5e} {:>8} {:>12.5e} {:>12.5e}",
                    row.level, row.n, row.h, row.ndofs, row.d1, row.d2
                );
            }
            println!("slope D1 {:.3}, slope D2 {:.3} ({:.2}s)", r.slope_d1, r.slope_d2, r.seconds);
            Ok(true)
        }
        Command::Stabsweep { family, k, n, alpha0 } => {
            let r = run_stabsweep(family, k, n, &alpha0, &opts, out)?;
            for row in &r.rows {
                println!("alpha0 {:>8} tau {:>8} D1 {:.5e}", row.alpha0, row.tau, row.d1);
            }
            println!("max/min D1 = {:.3} ({:.2}s)", r.ratio, r.seconds);
            Ok(true)
        }
        Command::Cook { family, k, levels, coarsest } => {
            let r = run_cook(family, k, levels, coarsest, &opts, out)?;
            for row in &r.rows {
                println!(
                    "level {} n={} h={:.4e} ndofs={} vA={:.8}",
                    row.level, row.n, row.h, row.ndofs, row.v_a
                );
            }
            match r.extrapolation {
                Some(ex) => println!("extrapolated vA={:.8} (order {:.3})", ex.limit, ex.order),
                None => println!("no extrapolation: need three monotone levels"),
            }
            println!("({:.2}s)", r.seconds);
            Ok(true)
        }
        Command::Solve { mesh, problem } => {
            let r = run_solve(&mesh, &problem, out)?;
            let umax = r
                .vertex_displacements
                .iter()
                .map(|u| u[0].hypot(u[1]))
                .fold(0.0, f64::max);
            println!("ndofs={} max |u| at vertices {umax:.6e}", r.ndofs);
            if let Some((d1, d2)) = r.errors {
                println!("D1={d1:.5e} D2={d2:.5e}");
            }
            Ok(true)
        }
        Command::Mesh { family, n, cook, output } => {
            let m = run_mesh(family, n, opts.seed, cook, &output)?;
            println!("{} cells, {} vertices -> {}", m.num_cells(), m.num_vertices(), output.display());
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
