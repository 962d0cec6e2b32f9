//! Projected strain and stress recovery, error norms and file output.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DVector, Vector3};
use rayon::prelude::*;

use crate::assembly::{Discretization, Solution};
use crate::error::{Result, VemError};
use crate::mesh::Point2;
use crate::polybasis::{gauss_legendre, gauss_lobatto, polygon_quadrature};

/// Error measures of one solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorReport {
    pub d1: f64,
    pub d2: f64,
    pub h: f64,
    pub ndofs: usize,
}

/// Strain-polynomial coefficients `Πm · dofs` of cell `c`.
pub fn strain_coefficients(sol: &Solution, c: usize) -> DVector<f64> {
    &sol.projectors[c] * DVector::from_vec(sol.cell_values(c))
}

/// Projected Voigt strain of cell `c` at `p`.
pub fn strain_at(disc: &Discretization, sol: &Solution, c: usize, p: Point2) -> [f64; 3] {
    let coeffs = strain_coefficients(sol, c);
    eval_strain(disc, c, &coeffs, p)
}

fn eval_strain(disc: &Discretization, c: usize, coeffs: &DVector<f64>, p: Point2) -> [f64; 3] {
    let (xi, eta) = disc.geometries[c].scaled_coords(p);
    let e = disc.kernel.basis.eval(xi, eta) * coeffs;
    [e[0], e[1], e[2]]
}

pub fn stress_at(disc: &Discretization, sol: &Solution, c: usize, p: Point2) -> [f64; 3] {
    let e = strain_at(disc, sol, c, p);
    let s = disc.constitutive.at(p) * Vector3::new(e[0], e[1], e[2]);
    [s[0], s[1], s[2]]
}

/// Stress at arbitrary points, each evaluated in the first cell containing it.
pub fn sample_stress(disc: &Discretization, sol: &Solution, points: &[Point2]) -> Vec<[f64; 3]> {
    let coeffs: Vec<DVector<f64>> = (0..disc.mesh.num_cells())
        .map(|c| strain_coefficients(sol, c))
        .collect();
    points
        .par_iter()
        .map(|&p| {
            let c = disc
                .mesh
                .locate(p)
                .unwrap_or_else(|| disc.mesh.nearest_cell(p));
            let e = eval_strain(disc, c, &coeffs[c], p);
            let s = disc.constitutive.at(p) * Vector3::new(e[0], e[1], e[2]);
            [s[0], s[1], s[2]]
        })
        .collect()
}

/// Area average of the projected stress in every cell.
pub fn element_average_stress(disc: &Discretization, sol: &Solution) -> Vec<[f64; 3]> {
    let degree = 2 * disc.order();
    (0..disc.mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let geom = &disc.geometries[c];
            let coeffs = strain_coefficients(sol, c);
            let mut acc = [0.0; 3];
            for (p, w) in polygon_quadrature(&geom.vertices, degree) {
                let e = eval_strain(disc, c, &coeffs, p);
                let s = disc.constitutive.at(p) * Vector3::new(e[0], e[1], e[2]);
                for t in 0..3 {
                    acc[t] += w * s[t];
                }
            }
            acc.map(|v| v / geom.area)
        })
        .collect()
}

/// Energy-type error `sqrt(Σ_E ∫_E |ε_ex - N^P Πm u|^2)`.
pub fn error_d1<F>(disc: &Discretization, sol: &Solution, exact_strain: F) -> f64
where
    F: Fn(Point2) -> [f64; 3] + Sync,
{
    error_d1_with_degree(disc, sol, exact_strain, 2 * disc.order() + 2)
}

pub fn error_d1_with_degree<F>(
    disc: &Discretization,
    sol: &Solution,
    exact_strain: F,
    degree: usize,
) -> f64
where
    F: Fn(Point2) -> [f64; 3] + Sync,
{
    let parts: Vec<f64> = (0..disc.mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let coeffs = strain_coefficients(sol, c);
            polygon_quadrature(&disc.geometries[c].vertices, degree)
                .into_iter()
                .map(|(p, w)| {
                    let eh = eval_strain(disc, c, &coeffs, p);
                    let ex = exact_strain(p);
                    w * (0..3).map(|t| (ex[t] - eh[t]).powi(2)).sum::<f64>()
                })
                .sum()
        })
        .collect();
    parts.iter().sum::<f64>().max(0.0).sqrt()
}

/// Displacement of the discrete solution on edge `e` at parameter `s ∈ [0, 1]`
/// measured from the lower to the higher vertex id.
pub fn edge_trace(disc: &Discretization, sol: &Solution, e: usize, s: f64) -> [f64; 2] {
    let (vals, _) = trace_and_slope(disc, sol, e, s);
    vals
}

fn trace_and_slope(disc: &Discretization, sol: &Solution, e: usize, s: f64) -> ([f64; 2], [f64; 2]) {
    let k = disc.order();
    let nodes = disc.dofs.edge_nodes(&disc.mesh, e);
    let t = 2.0 * s - 1.0;
    let gl = gauss_lobatto(k + 1);
    let mut val = [0.0; 2];
    let mut der = [0.0; 2];
    for (i, &node) in nodes.iter().enumerate() {
        let (li, dli) = lagrange(&gl.nodes, i, t);
        for comp in 0..2 {
            let u = sol.values[2 * node + comp];
            val[comp] += li * u;
            // d/ds = 2 d/dt
            der[comp] += 2.0 * dli * u;
        }
    }
    (val, der)
}

/// Lagrange basis polynomial `i` through `nodes` and its derivative at `t`.
fn lagrange(nodes: &[f64], i: usize, t: f64) -> (f64, f64) {
    let mut value = 1.0;
    let mut deriv = 0.0;
    for (j, &xj) in nodes.iter().enumerate() {
        if j == i {
            continue;
        }
        let denom = nodes[i] - xj;
        deriv = deriv * (t - xj) / denom + value / denom;
        value *= (t - xj) / denom;
    }
    (value, deriv)
}

/// Skeleton error `sqrt(Σ_f h_f ∫_f |∂(u_ex - u_h)/∂t|^2)`.
///
/// `exact_gradient` returns `[[du/dx, du/dy], [dv/dx, dv/dy]]`; without it the
/// tangential derivative is taken by central differences.
pub fn error_d2<U, G>(
    disc: &Discretization,
    sol: &Solution,
    exact_displacement: U,
    exact_gradient: Option<G>,
) -> f64
where
    U: Fn(Point2) -> [f64; 2] + Sync,
    G: Fn(Point2) -> [[f64; 2]; 2] + Sync,
{
    let (x, w) = gauss_legendre(8);
    let parts: Vec<f64> = (0..disc.mesh.num_edges())
        .into_par_iter()
        .map(|e| {
            let [lo, hi] = disc.mesh.edges()[e].vertices;
            let (a, b) = (disc.mesh.vertex(lo), disc.mesh.vertex(hi));
            let len = a.dist(b);
            let tan = [(b.x - a.x) / len, (b.y - a.y) / len];
            let mut acc = 0.0;
            for (xq, wq) in x.iter().zip(&w) {
                let s = 0.5 * (xq + 1.0);
                let p = a.lerp(b, s);
                let (_, slope) = trace_and_slope(disc, sol, e, s);
                let exact = match &exact_gradient {
                    Some(g) => {
                        let g = g(p);
                        [
                            g[0][0] * tan[0] + g[0][1] * tan[1],
                            g[1][0] * tan[0] + g[1][1] * tan[1],
                        ]
                    }
                    None => {
                        let step = 1e-6 * len;
                        let pp = Point2::new(p.x + step * tan[0], p.y + step * tan[1]);
                        let pm = Point2::new(p.x - step * tan[0], p.y - step * tan[1]);
                        let (up, um) = (exact_displacement(pp), exact_displacement(pm));
                        [(up[0] - um[0]) / (2.0 * step), (up[1] - um[1]) / (2.0 * step)]
                    }
                };
                let dh = [slope[0] / len, slope[1] / len];
                let diff = (exact[0] - dh[0]).powi(2) + (exact[1] - dh[1]).powi(2);
                acc += 0.5 * len * wq * diff;
            }
            len * acc
        })
        .collect();
    parts.iter().sum::<f64>().sqrt()
}

/// Legacy VTK polygon data: vertex displacements and cell-average stress.
pub fn vtk_string(disc: &Discretization, sol: &Solution) -> String {
    let mesh = &disc.mesh;
    let mut out = String::new();
    out.push_str("# vtk DataFile Version 3.0\nvirtual element solution\nASCII\nDATASET POLYDATA\n");
    let _ = writeln!(out, "POINTS {} double", mesh.num_vertices());
    for p in mesh.vertices() {
        let _ = writeln!(out, "{} {} 0", p.x, p.y);
    }
    let size: usize = mesh.cells().iter().map(|c| c.len() + 1).sum();
    let _ = writeln!(out, "POLYGONS {} {}", mesh.num_cells(), size);
    for cell in mesh.cells() {
        out.push_str(&cell.len().to_string());
        for v in &cell.vertex_ids {
            let _ = write!(out, " {v}");
        }
        out.push('\n');
    }
    let _ = writeln!(out, "POINT_DATA {}", mesh.num_vertices());
    out.push_str("VECTORS displacement double\n");
    for v in 0..mesh.num_vertices() {
        let [u, w] = sol.vertex_displacement(v);
        let _ = writeln!(out, "{u} {w} 0");
    }
    let stress = element_average_stress(disc, sol);
    let _ = writeln!(out, "CELL_DATA {}", mesh.num_cells());
    for (t, name) in ["sigma_xx", "sigma_yy", "sigma_xy"].iter().enumerate() {
        let _ = writeln!(out, "SCALARS {name} double 1\nLOOKUP_TABLE default");
        for s in &stress {
            let _ = writeln!(out, "{}", s[t]);
        }
    }
    out
}

pub fn export_vtk(disc: &Discretization, sol: &Solution, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, vtk_string(disc, sol))?;
    Ok(())
}

/// Writes a header and rows of already formatted fields.
pub fn export_csv(path: impl AsRef<Path>, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(csv_error)?;
    writer.write_record(header).map_err(csv_error)?;
    for row in rows {
        if row.len() != header.len() {
            return Err(VemError::Usage(format!(
                "csv row has {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        writer.write_record(row).map_err(csv_error)?;
    }
    writer.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> VemError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => VemError::Io(io),
        other => VemError::Usage(format!("csv output failed: {other:?}")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lagrange_partition_of_unity() {
        let gl = gauss_lobatto(5);
        for &t in &[-0.9, -0.2, 0.35, 1.0] {
            let (s, ds): (f64, f64) = (0..5)
                .map(|i| lagrange(&gl.nodes, i, t))
                .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
            assert!((s - 1.0).abs() < 1e-14);
            assert!(ds.abs() < 1e-12);
        }
    }

    #[test]
    fn lagrange_derivative_of_quadratic() {
        let nodes = [-1.0, 0.0, 1.0];
        // interpolate t^2, derivative 2t
        let vals = [1.0, 0.0, 1.0];
        let t = 0.3;
        let d: f64 = (0..3).map(|i| vals[i] * lagrange(&nodes, i, t).1).sum();
        assert!((d - 0.6).abs() < 1e-14);
    }
}
