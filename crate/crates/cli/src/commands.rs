//! The benchmark commands. Each returns a report and, given an output
//! directory, writes `results.csv` and one VTK file per level.

use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use log::info;
use rayon::prelude::*;
use vem_core::meshgen::{patch_mesh_1a, patch_mesh_1b, Domain, GeneratorSpec, MeshFamily};
use vem_core::postproc::{edge_trace, error_d1, error_d2, export_csv, export_vtk, sample_stress};
use vem_core::{
    BoundaryConditions, Discretization, Mesh, Point2, Solution, SolverMode, StabilizationConfig,
};

use crate::analysis::{loglog_slope, richardson, Extrapolation};
use crate::config::SolveConfig;
use crate::problems::{
    cook, ConvergenceTest, PatchTest, ProblemSpec, COOK_POINT_A, COOK_TRACTION, PATCH_SHEAR,
    PATCH_TENSION,
};

/// Settings shared by all commands.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub solver: SolverMode,
    pub seed: u64,
}

/// Side of a mesh's bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

/// Predicate selecting points on one side of the bounding box of `mesh`.
pub fn on_side(mesh: &Mesh, side: Side) -> impl Fn(Point2) -> bool + Send + Sync + 'static {
    let (lo, hi) = mesh.bounding_box();
    let tol = 1e-9 * lo.dist(hi);
    move |p: Point2| match side {
        Side::Left => (p.x - lo.x).abs() <= tol,
        Side::Right => (p.x - hi.x).abs() <= tol,
        Side::Bottom => (p.y - lo.y).abs() <= tol,
        Side::Top => (p.y - hi.y).abs() <= tol,
    }
}

/// Assembles and solves `problem` on `mesh`.
pub fn solve_problem(
    mesh: Mesh,
    k: usize,
    problem: &ProblemSpec,
    bcs: &BoundaryConditions,
    tau: f64,
    solver: SolverMode,
) -> Result<(Discretization, Solution)> {
    problem.check_boundary_data(&mesh, bcs)?;
    let disc = Discretization::new(mesh, k, problem.material, StabilizationConfig::new(tau)?)?;
    let body = problem.body.clone();
    let sol = match &body {
        Some(b) => disc.solve(Some(&|p| b(p)), bcs, solver)?,
        None => disc.solve(None, bcs, solver)?,
    };
    Ok((disc, sol))
}

/// Dirichlet data from the exact solution on the whole boundary.
pub fn exact_dirichlet(problem: &ProblemSpec) -> Result<BoundaryConditions> {
    let Some(exact) = problem.exact.clone() else {
        bail!("problem {} has no exact solution to impose", problem.name);
    };
    Ok(BoundaryConditions::new().dirichlet(
        |_| true,
        [true, true],
        move |p| (exact.displacement)(p),
    ))
}

/// Discrete errors `(D1, D2)` against the exact solution of `problem`.
pub fn errors(disc: &Discretization, sol: &Solution, problem: &ProblemSpec) -> Result<(f64, f64)> {
    let Some(exact) = &problem.exact else {
        bail!("problem {} has no exact solution", problem.name);
    };
    let d1 = error_d1(disc, sol, |p| (exact.strain)(p));
    let d2 = error_d2(disc, sol, |p| (exact.displacement)(p), Some(|p| (exact.gradient)(p)));
    Ok((d1, d2))
}

fn write_csv(out: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join("results.csv");
    export_csv(&path, header, &rows).with_context(|| format!("writing {}", path.display()))
}

fn write_vtk(out: &Path, level: usize, disc: &Discretization, sol: &Solution) -> Result<()> {
    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let path = out.join(format!("solution_{level}.vtk"));
    export_vtk(disc, sol, &path).with_context(|| format!("writing {}", path.display()))
}

// ---------------------------------------------------------------- patch

pub const PATCH_HEADER: [&str; 4] = ["test", "k", "ndofs", "max_rel_deviation"];

#[derive(Debug, Clone)]
pub struct PatchReport {
    pub test: PatchTest,
    pub k: usize,
    pub ndofs: usize,
    /// `max |σ_h - σ| / max |σ|` over the sampling grid.
    pub max_rel_deviation: f64,
    pub seconds: f64,
}

impl PatchReport {
    pub fn passed(&self) -> bool {
        self.max_rel_deviation <= 1e-9
    }
}

/// Boundary conditions of the two patch tests on the unit square.
pub fn patch_bcs(test: PatchTest, mesh: &Mesh) -> BoundaryConditions {
    match test {
        PatchTest::Tension => BoundaryConditions::new()
            .dirichlet(on_side(mesh, Side::Left), [true, false], |_| [0.0, 0.0])
            .pin(Point2::new(0.0, 0.0), [false, true], [0.0, 0.0])
            .neumann(on_side(mesh, Side::Right), |_| [PATCH_TENSION, 0.0]),
        PatchTest::Shear => {
            let t = PATCH_SHEAR;
            BoundaryConditions::new()
                .neumann(on_side(mesh, Side::Right), move |_| [0.0, t])
                .neumann(on_side(mesh, Side::Left), move |_| [0.0, -t])
                .neumann(on_side(mesh, Side::Top), move |_| [t, 0.0])
                .neumann(on_side(mesh, Side::Bottom), move |_| [-t, 0.0])
                .pin(Point2::new(0.0, 0.0), [true, true], [0.0, 0.0])
                .pin(Point2::new(1.0, 0.0), [false, true], [0.0, 0.0])
        }
    }
}

pub fn run_patch(test: PatchTest, k: usize, opts: &RunOptions, out: Option<&Path>) -> Result<PatchReport> {
    let start = Instant::now();
    let mesh = match test {
        PatchTest::Tension => patch_mesh_1a()?,
        PatchTest::Shear => patch_mesh_1b()?,
    };
    let problem = test.problem()?;
    let bcs = patch_bcs(test, &mesh);
    let (disc, sol) = solve_problem(mesh, k, &problem, &bcs, 0.5, opts.solver)?;
    let grid: Vec<Point2> = (0..100)
        .flat_map(|j| (0..100).map(move |i| Point2::new(i as f64 / 99.0, j as f64 / 99.0)))
        .collect();
    let exact = test.stress();
    let scale = exact.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    let dev = sample_stress(&disc, &sol, &grid)
        .iter()
        .flat_map(|s| (0..3).map(move |t| (s[t] - exact[t]).abs()))
        .fold(0.0f64, f64::max)
        / scale;
    let report = PatchReport {
        test,
        k,
        ndofs: disc.dofs.num_dofs(),
        max_rel_deviation: dev,
        seconds: start.elapsed().as_secs_f64(),
    };
    info!(
        "patch {} k={k}: ndofs={} max relative stress deviation {dev:.3e}",
        test.name(),
        report.ndofs
    );
    if let Some(out) = out {
        write_csv(
            out,
            &PATCH_HEADER,
            vec![vec![test.name().into(), k.to_string(), report.ndofs.to_string(), dev.to_string()]],
        )?;
        write_vtk(out, 0, &disc, &sol)?;
    }
    Ok(report)
}

// ------------------------------------------------------------- converge

pub const CONVERGE_HEADER: [&str; 5] = ["level", "h", "ndofs", "D1", "D2"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelRow {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub ndofs: usize,
    pub d1: f64,
    pub d2: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergeReport {
    pub test: ConvergenceTest,
    pub family: MeshFamily,
    pub k: usize,
    pub rows: Vec<LevelRow>,
    pub slope_d1: f64,
    pub slope_d2: f64,
    pub seconds: f64,
}

/// Test 2a or 2b on `levels` meshes with `coarsest * 2^l` cells per side.
pub fn run_converge(
    test: ConvergenceTest,
    family: MeshFamily,
    k: usize,
    levels: usize,
    coarsest: usize,
    opts: &RunOptions,
    out: Option<&Path>,
) -> Result<ConvergeReport> {
    if levels == 0 {
        bail!("at least one level is required");
    }
    let start = Instant::now();
    let problem = test.problem()?;
    let rows: Vec<LevelRow> = (0..levels)
        .into_par_iter()
        .map(|level| -> Result<LevelRow> {
            let n = coarsest << level;
            let mesh = GeneratorSpec::new(family, n).with_seed(opts.seed).generate()?;
            let h = mesh.max_diameter();
            let bcs = exact_dirichlet(&problem)?;
            let (disc, sol) = solve_problem(mesh, k, &problem, &bcs, 0.5, opts.solver)?;
            let (d1, d2) = errors(&disc, &sol, &problem)?;
            info!(
                "converge {} {family} k={k} level {level}: n={n} h={h:.4e} ndofs={} D1={d1:.4e} D2={d2:.4e}",
                test.name(),
                disc.dofs.num_dofs()
            );
            if let Some(out) = out {
                write_vtk(out, level, &disc, &sol)?;
            }
            Ok(LevelRow {
                level,
                n,
                h,
                ndofs: disc.dofs.num_dofs(),
                d1,
                d2,
            })
        })
        .collect::<Result<_>>()?;
    let (slope_d1, slope_d2) = if rows.len() >= 2 {
        let h: Vec<f64> = rows.iter().map(|r| r.h).collect();
        let d1: Vec<f64> = rows.iter().map(|r| r.d1).collect();
        let d2: Vec<f64> = rows.iter().map(|r| r.d2).collect();
        (loglog_slope(&h, &d1), loglog_slope(&h, &d2))
    } else {
        (f64::NAN, f64::NAN)
    };
    info!("converge {} {family} k={k}: slope D1 {slope_d1:.3}, slope D2 {slope_d2:.3}", test.name());
    if let Some(out) = out {
        let table = rows
            .iter()
            .map(|r| {
                vec![
                    r.level.to_string(),
                    r.h.to_string(),
                    r.ndofs.to_string(),
                    r.d1.to_string(),
                    r.d2.to_string(),
                ]
            })
            .collect();
        write_csv(out, &CONVERGE_HEADER, table)?;
    }
    Ok(ConvergeReport {
        test,
        family,
        k,
        rows,
        slope_d1,
        slope_d2,
        seconds: start.elapsed().as_secs_f64(),
    })
}

// ----------------------------------------------------------- stabsweep

pub const STABSWEEP_HEADER: [&str; 3] = ["alpha0", "tau", "D1"];
pub const DEFAULT_ALPHA0: [f64; 5] = [1e-2, 1e-1, 1.0, 1e1, 1e2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub alpha0: f64,
    pub tau: f64,
    pub d1: f64,
}

#[derive(Debug, Clone)]
pub struct SweepReport {
    pub family: MeshFamily,
    pub k: usize,
    pub n: usize,
    pub rows: Vec<SweepRow>,
    /// `max D1 / min D1`.
    pub ratio: f64,
    pub seconds: f64,
}

/// Test 2a with `τ = α₀ / 2` for every `α₀`.
pub fn run_stabsweep(
    family: MeshFamily,
    k: usize,
    n: usize,
    alpha0: &[f64],
    opts: &RunOptions,
    out: Option<&Path>,
) -> Result<SweepReport> {
    if alpha0.is_empty() || alpha0.iter().any(|a| !(*a > 0.0)) {
        bail!("alpha0 values must be positive");
    }
    let start = Instant::now();
    let problem = ConvergenceTest::Polynomial.problem()?;
    let mesh = GeneratorSpec::new(family, n).with_seed(opts.seed).generate()?;
    let rows: Vec<SweepRow> = alpha0
        .par_iter()
        .map(|&a| -> Result<SweepRow> {
            let tau = a / 2.0;
            let bcs = exact_dirichlet(&problem)?;
            let (disc, sol) = solve_problem(mesh.clone(), k, &problem, &bcs, tau, opts.solver)?;
            let d1 = errors(&disc, &sol, &problem)?.0;
            info!("stabsweep {family} k={k} n={n}: alpha0={a} D1={d1:.4e}");
            Ok(SweepRow { alpha0: a, tau, d1 })
        })
        .collect::<Result<_>>()?;
    let max = rows.iter().map(|r| r.d1).fold(0.0, f64::max);
    let min = rows.iter().map(|r| r.d1).fold(f64::INFINITY, f64::min);
    let ratio = max / min;
    info!("stabsweep {family} k={k}: max/min D1 = {ratio:.3}");
    if let Some(out) = out {
        let table = rows
            .iter()
            .map(|r| vec![r.alpha0.to_string(), r.tau.to_string(), r.d1.to_string()])
            .collect();
        write_csv(out, &STABSWEEP_HEADER, table)?;
    }
    Ok(SweepReport {
        family,
        k,
        n,
        rows,
        ratio,
        seconds: start.elapsed().as_secs_f64(),
    })
}

// ---------------------------------------------------------------- cook

pub const COOK_HEADER: [&str; 4] = ["level", "h", "ndofs", "vA"];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CookRow {
    pub level: usize,
    pub n: usize,
    pub h: f64,
    pub ndofs: usize,
    pub v_a: f64,
    /// Distance from point A to the nearest boundary vertex.
    pub vertex_distance: f64,
}

#[derive(Debug, Clone)]
pub struct CookReport {
    pub family: MeshFamily,
    pub k: usize,
    pub rows: Vec<CookRow>,
    /// From the three finest levels.
    pub extrapolation: Option<Extrapolation>,
    pub seconds: f64,
}

impl CookReport {
    pub fn is_monotone_increasing(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].v_a > w[0].v_a)
    }
}

/// Clamped left edge, uniform vertical traction on the right edge.
pub fn cook_bcs(mesh: &Mesh) -> BoundaryConditions {
    BoundaryConditions::new()
        .dirichlet(on_side(mesh, Side::Left), [true, true], |_| [0.0, 0.0])
        .neumann(on_side(mesh, Side::Right), |_| [0.0, COOK_TRACTION])
}

/// Vertical displacement of the discrete trace at `p`, which must lie on
/// the boundary.
pub fn boundary_displacement(disc: &Discretization, sol: &Solution, p: Point2) -> Result<[f64; 2]> {
    let mesh = &disc.mesh;
    let (lo, hi) = mesh.bounding_box();
    let tol = 1e-9 * lo.dist(hi);
    for (e, edge) in mesh.boundary_edges() {
        let (a, b) = (mesh.vertex(edge.vertices[0]), mesh.vertex(edge.vertices[1]));
        let len2 = (b.x - a.x).powi(2) + (b.y - a.y).powi(2);
        let s = ((p.x - a.x) * (b.x - a.x) + (p.y - a.y) * (b.y - a.y)) / len2;
        if (0.0..=1.0).contains(&s) && a.lerp(b, s).dist(p) <= tol {
            return Ok(edge_trace(disc, sol, e, s));
        }
    }
    bail!("point ({}, {}) is not on the mesh boundary", p.x, p.y)
}

fn nearest_boundary_vertex_distance(mesh: &Mesh, p: Point2) -> f64 {
    mesh.boundary_edges()
        .flat_map(|(_, e)| e.vertices)
        .map(|v| mesh.vertex(v).dist(p))
        .fold(f64::INFINITY, f64::min)
}

pub fn run_cook(
    family: MeshFamily,
    k: usize,
    levels: usize,
    coarsest: usize,
    opts: &RunOptions,
    out: Option<&Path>,
) -> Result<CookReport> {
    if levels == 0 {
        bail!("at least one level is required");
    }
    let start = Instant::now();
    let problem = cook()?;
    let rows: Vec<CookRow> = (0..levels)
        .into_par_iter()
        .map(|level| -> Result<CookRow> {
            let n = coarsest << level;
            let mesh = GeneratorSpec::new(family, n)
                .with_seed(opts.seed)
                .on(Domain::Cook)
                .generate()?;
            let h = mesh.max_diameter();
            let vertex_distance = nearest_boundary_vertex_distance(&mesh, COOK_POINT_A);
            let bcs = cook_bcs(&mesh);
            let (disc, sol) = solve_problem(mesh, k, &problem, &bcs, 0.5, opts.solver)?;
            let v_a = boundary_displacement(&disc, &sol, COOK_POINT_A)?[1];
            info!(
                "cook {family} k={k} level {level}: n={n} h={h:.4e} ndofs={} vA={v_a:.8} (nearest vertex at {vertex_distance:.3e})",
                disc.dofs.num_dofs()
            );
            if let Some(out) = out {
                write_vtk(out, level, &disc, &sol)?;
            }
            Ok(CookRow {
                level,
                n,
                h,
                ndofs: disc.dofs.num_dofs(),
                v_a,
                vertex_distance,
            })
        })
        .collect::<Result<_>>()?;
    let extrapolation = if rows.len() >= 3 {
        let t = &rows[rows.len() - 3..];
        richardson([t[0].h, t[1].h, t[2].h], [t[0].v_a, t[1].v_a, t[2].v_a])
    } else {
        None
    };
    match extrapolation {
        Some(ex) => info!("cook {family} k={k}: extrapolated vA={:.8} (order {:.3})", ex.limit, ex.order),
        None => info!("cook {family} k={k}: no Richardson extrapolation"),
    }
    if let Some(out) = out {
        let table = rows
            .iter()
            .map(|r| vec![r.level.to_string(), r.h.to_string(), r.ndofs.to_string(), r.v_a.to_string()])
            .collect();
        write_csv(out, &COOK_HEADER, table)?;
    }
    Ok(CookReport {
        family,
        k,
        rows,
        extrapolation,
        seconds: start.elapsed().as_secs_f64(),
    })
}

// --------------------------------------------------------------- solve

pub const SOLVE_HEADER: [&str; 5] = ["vertex", "x", "y", "ux", "uy"];

#[derive(Debug, Clone)]
pub struct SolveReport {
    pub ndofs: usize,
    pub vertex_displacements: Vec<[f64; 2]>,
    /// `(D1, D2)` when the load has a known exact solution.
    pub errors: Option<(f64, f64)>,
    pub relative_residual: f64,
    pub seconds: f64,
}

/// Solves the problem described by a TOML config on a JSON mesh.
pub fn run_solve(mesh_file: &Path, config_file: &Path, out: Option<&Path>) -> Result<SolveReport> {
    let start = Instant::now();
    let mesh = vem_core::mesh::load_mesh(mesh_file)
        .with_context(|| format!("loading mesh {}", mesh_file.display()))?;
    let cfg = SolveConfig::load(config_file)?;
    let problem = cfg.problem()?;
    let bcs = cfg.boundary_conditions(&mesh, &problem)?;
    let (disc, sol) = solve_problem(mesh, cfg.k, &problem, &bcs, cfg.tau, cfg.solver_mode()?)?;
    let errors = match problem.exact {
        Some(_) => Some(errors(&disc, &sol, &problem)?),
        None => None,
    };
    let vertex_displacements: Vec<[f64; 2]> =
        (0..disc.mesh.num_vertices()).map(|v| sol.vertex_displacement(v)).collect();
    info!(
        "solve k={} ndofs={} relative residual {:.3e}",
        cfg.k,
        disc.dofs.num_dofs(),
        sol.diagnostics.relative_residual
    );
    if let Some((d1, d2)) = errors {
        info!("solve: D1={d1:.4e} D2={d2:.4e}");
    }
    if let Some(out) = out {
        let table = vertex_displacements
            .iter()
            .enumerate()
            .map(|(i, u)| {
                let p = disc.mesh.vertex(i);
                vec![i.to_string(), p.x.to_string(), p.y.to_string(), u[0].to_string(), u[1].to_string()]
            })
            .collect();
        write_csv(out, &SOLVE_HEADER, table)?;
        write_vtk(out, 0, &disc, &sol)?;
    }
    Ok(SolveReport {
        ndofs: disc.dofs.num_dofs(),
        vertex_displacements,
        errors,
        relative_residual: sol.diagnostics.relative_residual,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Writes a generated unit-square mesh as JSON.
pub fn run_mesh(family: MeshFamily, n: usize, seed: u64, cook_domain: bool, path: &Path) -> Result<Mesh> {
    let mut spec = GeneratorSpec::new(family, n).with_seed(seed);
    if cook_domain {
        spec = spec.on(Domain::Cook);
    }
    let mesh = spec.generate()?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    vem_core::mesh::save_mesh(&mesh, path).with_context(|| format!("writing {}", path.display()))?;
    info!("mesh {family} n={n}: {} cells, {} vertices", mesh.num_cells(), mesh.num_vertices());
    Ok(mesh)
}
