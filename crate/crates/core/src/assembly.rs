//! Global numbering, assembly, boundary conditions and the linear solve.

use std::fmt;
use std::sync::Arc;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::element::{
    dof_layout, neumann_edge, Constitutive, ElementKernel, ElementMatrices, StabilizationConfig,
};
use crate::error::{Result, VemError};
use crate::mesh::{ElementGeometry, Mesh, Point2};

/// Global node numbering: vertices, then interior edge nodes ordered from the
/// lower to the higher vertex id of each edge, then per-cell moments.
#[derive(Debug, Clone)]
pub struct GlobalDofMap {
    pub order: usize,
    pub num_vertices: usize,
    pub num_edges: usize,
    pub num_cells: usize,
    cell_nodes: Vec<Vec<usize>>,
}

pub fn number_dofs(mesh: &Mesh, k: usize) -> GlobalDofMap {
    let nv = mesh.num_vertices();
    let ne = mesh.num_edges();
    let r = k * (k - 1) / 2;
    let cell_nodes = mesh
        .cells()
        .iter()
        .enumerate()
        .map(|(c, cell)| {
            let m = cell.len();
            let layout = dof_layout(k, m);
            let mut nodes = vec![0; layout.num_nodes()];
            nodes[..m].copy_from_slice(&cell.vertex_ids);
            for (e, &edge) in mesh.cell_edges(c).iter().enumerate() {
                let (a, b) = cell.edge_vertices(e);
                for j in 0..k - 1 {
                    let along = if a < b { j } else { k - 2 - j };
                    nodes[layout.edge_node(e, j)] = nv + edge * (k - 1) + along;
                }
            }
            for j in 0..r {
                nodes[layout.moment(j)] = nv + ne * (k - 1) + c * r + j;
            }
            nodes
        })
        .collect();
    GlobalDofMap {
        order: k,
        num_vertices: nv,
        num_edges: ne,
        num_cells: mesh.num_cells(),
        cell_nodes,
    }
}

impl GlobalDofMap {
    pub fn num_nodes(&self) -> usize {
        let k = self.order;
        self.num_vertices + self.num_edges * (k - 1) + self.num_cells * k * (k - 1) / 2
    }

    pub fn num_dofs(&self) -> usize {
        2 * self.num_nodes()
    }

    /// Global node of every local node of cell `c`.
    pub fn cell_nodes(&self, c: usize) -> &[usize] {
        &self.cell_nodes[c]
    }

    /// Global dof of every local dof of cell `c`.
    pub fn cell_dofs(&self, c: usize) -> Vec<usize> {
        self.cell_nodes[c]
            .iter()
            .flat_map(|&n| [2 * n, 2 * n + 1])
            .collect()
    }

    /// Global nodes along edge `e` from its lower to its higher vertex id.
    pub fn edge_nodes(&self, mesh: &Mesh, e: usize) -> Vec<usize> {
        let k = self.order;
        let [lo, hi] = mesh.edges()[e].vertices;
        let mut nodes = vec![lo];
        nodes.extend((0..k - 1).map(|j| self.num_vertices + e * (k - 1) + j));
        nodes.push(hi);
        nodes
    }

    /// Physical position of a boundary-type node; `None` for moments.
    pub fn node_position(&self, mesh: &Mesh, node: usize) -> Option<Point2> {
        let k = self.order;
        if node < self.num_vertices {
            return Some(mesh.vertex(node));
        }
        let i = node - self.num_vertices;
        if i >= self.num_edges * (k - 1) {
            return None;
        }
        let (e, j) = (i / (k - 1), i % (k - 1));
        let [lo, hi] = mesh.edges()[e].vertices;
        let t = crate::polybasis::gauss_lobatto(k + 1).interior_nodes()[j];
        Some(mesh.vertex(lo).lerp(mesh.vertex(hi), 0.5 * (t + 1.0)))
    }
}

pub type PointPredicate = Arc<dyn Fn(Point2) -> bool + Send + Sync>;
pub type VectorField = Arc<dyn Fn(Point2) -> [f64; 2] + Send + Sync>;

/// Prescribed displacement on the boundary edges whose midpoint satisfies
/// `on`, for the components selected by `components`.
#[derive(Clone)]
pub struct Dirichlet {
    pub on: PointPredicate,
    pub components: [bool; 2],
    pub value: VectorField,
}

/// Traction on the boundary edges whose midpoint satisfies `on`.
#[derive(Clone)]
pub struct Neumann {
    pub on: PointPredicate,
    pub traction: VectorField,
}

/// Constraint on the mesh vertex nearest to `point`.
#[derive(Debug, Clone, Copy)]
pub struct PointConstraint {
    pub point: Point2,
    pub components: [bool; 2],
    pub value: [f64; 2],
}

#[derive(Clone, Default)]
pub struct BoundaryConditions {
    pub dirichlet: Vec<Dirichlet>,
    pub neumann: Vec<Neumann>,
    pub pins: Vec<PointConstraint>,
}

impl fmt::Debug for BoundaryConditions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BoundaryConditions")
            .field("dirichlet", &self.dirichlet.len())
            .field("neumann", &self.neumann.len())
            .field("pins", &self.pins)
            .finish()
    }
}

impl BoundaryConditions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn dirichlet(
        mut self,
        on: impl Fn(Point2) -> bool + Send + Sync + 'static,
        components: [bool; 2],
        value: impl Fn(Point2) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.dirichlet.push(Dirichlet {
            on: Arc::new(on),
            components,
            value: Arc::new(value),
        });
        self
    }

    pub fn neumann(
        mut self,
        on: impl Fn(Point2) -> bool + Send + Sync + 'static,
        traction: impl Fn(Point2) -> [f64; 2] + Send + Sync + 'static,
    ) -> Self {
        self.neumann.push(Neumann {
            on: Arc::new(on),
            traction: Arc::new(traction),
        });
        self
    }

    pub fn pin(mut self, point: Point2, components: [bool; 2], value: [f64; 2]) -> Self {
        self.pins.push(PointConstraint {
            point,
            components,
            value,
        });
        self
    }
}

/// Compressed sparse row matrix with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub values: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates in the
    /// order they appear.
    pub fn from_triplets(nrows: usize, ncols: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let mut counts = vec![0usize; nrows + 1];
        for &(i, _, _) in triplets {
            counts[i + 1] += 1;
        }
        for i in 0..nrows {
            counts[i + 1] += counts[i];
        }
        let mut next = counts.clone();
        let mut cols = vec![0usize; triplets.len()];
        let mut vals = vec![0.0; triplets.len()];
        for &(i, j, v) in triplets {
            cols[next[i]] = j;
            vals[next[i]] = v;
            next[i] += 1;
        }
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values = Vec::with_capacity(triplets.len());
        let mut order: Vec<usize> = Vec::new();
        for i in 0..nrows {
            let (s, e) = (counts[i], counts[i + 1]);
            order.clear();
            order.extend(s..e);
            // stable sort keeps the summation order of duplicates fixed
            order.sort_by_key(|&p| cols[p]);
            for &p in &order {
                if col_idx.len() > row_ptr[i] && *col_idx.last().unwrap() == cols[p] {
                    *values.last_mut().unwrap() += vals[p];
                } else {
                    col_idx.push(cols[p]);
                    values.push(vals[p]);
                }
            }
            row_ptr[i + 1] = col_idx.len();
        }
        Self {
            nrows,
            ncols,
            row_ptr,
            col_idx,
            values,
        }
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.col_idx[s..e]
            .iter()
            .copied()
            .zip(self.values[s..e].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (s, e) = (self.row_ptr[i], self.row_ptr[i + 1]);
        match self.col_idx[s..e].binary_search(&j) {
            Ok(p) => self.values[s + p],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.nrows)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows).map(|i| self.get(i, i)).collect()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut a = DMatrix::zeros(self.nrows, self.ncols);
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                a[(i, j)] = v;
            }
        }
        a
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.nrows {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverMode {
    #[default]
    Direct,
    ConjugateGradient,
}

impl std::str::FromStr for SolverMode {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(SolverMode::Direct),
            "cg" => Ok(SolverMode::ConjugateGradient),
            other => Err(VemError::Config(format!(
                "unknown solver '{other}', expected 'direct' or 'cg'"
            ))),
        }
    }
}

/// A mesh prepared for a given method order and material.
#[derive(Debug, Clone)]
pub struct Discretization {
    pub mesh: Mesh,
    pub kernel: ElementKernel,
    pub geometries: Vec<ElementGeometry>,
    pub dofs: GlobalDofMap,
    pub constitutive: Constitutive,
    pub stabilization: StabilizationConfig,
}

/// Global stiffness and load before constraints.
#[derive(Debug, Clone)]
pub struct AssembledSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub elements: Vec<ElementMatrices>,
}

/// Known dof values from Dirichlet data and pins.
#[derive(Debug, Clone, Default)]
pub struct Constraints {
    pub values: Vec<Option<f64>>,
}

impl Constraints {
    pub fn count(&self) -> usize {
        self.values.iter().filter(|v| v.is_some()).count()
    }
}

/// System restricted to the free dofs.
#[derive(Debug, Clone)]
pub struct ConstrainedSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub free: Vec<usize>,
    pub full: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveDiagnostics {
    pub mode: SolverMode,
    pub free_dofs: usize,
    pub constrained_dofs: usize,
    pub nnz: usize,
    pub iterations: usize,
    pub relative_residual: f64,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub values: Vec<f64>,
    pub dofs: GlobalDofMap,
    pub diagnostics: SolveDiagnostics,
    /// Strain projector of every element.
    pub projectors: Vec<DMatrix<f64>>,
}

impl Solution {
    pub fn cell_values(&self, c: usize) -> Vec<f64> {
        self.dofs
            .cell_dofs(c)
            .into_iter()
            .map(|d| self.values[d])
            .collect()
    }

    pub fn vertex_displacement(&self, v: usize) -> [f64; 2] {
        [self.values[2 * v], self.values[2 * v + 1]]
    }
}

impl Discretization {
    pub fn new(
        mesh: Mesh,
        k: usize,
        constitutive: impl Into<Constitutive>,
        stabilization: StabilizationConfig,
    ) -> Result<Self> {
        if k == 0 {
            return Err(VemError::Config("method order k must be at least 1".into()));
        }
        StabilizationConfig::new(stabilization.tau)?;
        let geometries = mesh.geometries()?;
        let dofs = number_dofs(&mesh, k);
        Ok(Self {
            kernel: ElementKernel::new(k),
            mesh,
            geometries,
            dofs,
            constitutive: constitutive.into(),
            stabilization,
        })
    }

    pub fn order(&self) -> usize {
        self.kernel.order
    }

    pub fn element_matrices(&self) -> Result<Vec<ElementMatrices>> {
        self.geometries
            .par_iter()
            .map(|g| self.kernel.build(g, &self.constitutive, self.stabilization))
            .collect()
    }

    /// Assembles the stiffness, body load and tractions.
    pub fn assemble(
        &self,
        body: Option<&(dyn Fn(Point2) -> [f64; 2] + Sync)>,
        bcs: &BoundaryConditions,
    ) -> Result<AssembledSystem> {
        let elements = self.element_matrices()?;
        let loads: Vec<Vec<f64>> = match body {
            Some(b) => self
                .geometries
                .par_iter()
                .map(|g| self.kernel.load(g, b).map(|v| v.as_slice().to_vec()))
                .collect::<Result<_>>()?,
            None => Vec::new(),
        };
        let n = self.dofs.num_dofs();
        let mut triplets = Vec::with_capacity(elements.iter().map(|e| e.k.len()).sum());
        let mut rhs = vec![0.0; n];
        for (c, el) in elements.iter().enumerate() {
            let map = self.dofs.cell_dofs(c);
            for (a, &ga) in map.iter().enumerate() {
                for (b, &gb) in map.iter().enumerate() {
                    triplets.push((ga, gb, el.k[(a, b)]));
                }
            }
            if let Some(f) = loads.get(c) {
                for (a, &ga) in map.iter().enumerate() {
                    rhs[ga] += f[a];
                }
            }
        }
        self.add_tractions(bcs, &mut rhs);
        Ok(AssembledSystem {
            matrix: CsrMatrix::from_triplets(n, n, &triplets),
            rhs,
            elements,
        })
    }

    fn add_tractions(&self, bcs: &BoundaryConditions, rhs: &mut [f64]) {
        let k = self.order();
        for (e, edge) in self.mesh.boundary_edges() {
            let [lo, hi] = edge.vertices;
            let (a, b) = (self.mesh.vertex(lo), self.mesh.vertex(hi));
            let mid = a.lerp(b, 0.5);
            let nodes = self.dofs.edge_nodes(&self.mesh, e);
            for nm in bcs.neumann.iter().filter(|nm| (nm.on)(mid)) {
                let f = neumann_edge(k, a, b, |p| (nm.traction)(p));
                for (node, v) in nodes.iter().zip(&f) {
                    rhs[2 * node] += v[0];
                    rhs[2 * node + 1] += v[1];
                }
            }
        }
    }

    /// Interpolated Dirichlet values and pins.
    pub fn constraints(&self, bcs: &BoundaryConditions) -> Result<Constraints> {
        let mut values = vec![None; self.dofs.num_dofs()];
        for (e, edge) in self.mesh.boundary_edges() {
            let [lo, hi] = edge.vertices;
            let mid = self.mesh.vertex(lo).lerp(self.mesh.vertex(hi), 0.5);
            for dc in bcs.dirichlet.iter().filter(|dc| (dc.on)(mid)) {
                for node in self.dofs.edge_nodes(&self.mesh, e) {
                    let p = self.dofs.node_position(&self.mesh, node).unwrap();
                    let g = (dc.value)(p);
                    for comp in 0..2 {
                        if dc.components[comp] {
                            values[2 * node + comp] = Some(g[comp]);
                        }
                    }
                }
            }
        }
        let scale = self.mesh.max_diameter();
        for pin in &bcs.pins {
            let v = self.mesh.nearest_vertex(pin.point);
            if self.mesh.vertex(v).dist(pin.point) > 1e-8 * scale {
                return Err(VemError::Config(format!(
                    "no mesh vertex at pinned point ({}, {})",
                    pin.point.x, pin.point.y
                )));
            }
            for comp in 0..2 {
                if pin.components[comp] {
                    values[2 * v + comp] = Some(pin.value[comp]);
                }
            }
        }
        Ok(Constraints { values })
    }

    /// Full pipeline: assemble, constrain, solve.
    pub fn solve(
        &self,
        body: Option<&(dyn Fn(Point2) -> [f64; 2] + Sync)>,
        bcs: &BoundaryConditions,
        mode: SolverMode,
    ) -> Result<Solution> {
        let system = self.assemble(body, bcs)?;
        let constraints = self.constraints(bcs)?;
        if constraints.count() == 0 {
            // rigid motions are left free
            return Err(VemError::SingularSystem { pivot: 0 });
        }
        let constrained = apply_dirichlet(&system, &constraints);
        let (values, mut diagnostics) = solve(&constrained, mode)?;
        diagnostics.constrained_dofs = constraints.count();
        Ok(Solution {
            values,
            dofs: self.dofs.clone(),
            diagnostics,
            projectors: system.elements.into_iter().map(|e| e.pi).collect(),
        })
    }
}

/// Eliminates the constrained dofs symmetrically, moving their columns to
/// the right-hand side.
pub fn apply_dirichlet(system: &AssembledSystem, constraints: &Constraints) -> ConstrainedSystem {
    let n = system.rhs.len();
    let mut reduced = vec![usize::MAX; n];
    let mut free = Vec::new();
    let mut full = vec![0.0; n];
    for i in 0..n {
        match constraints.values[i] {
            Some(v) => full[i] = v,
            None => {
                reduced[i] = free.len();
                free.push(i);
            }
        }
    }
    let mut triplets = Vec::new();
    let mut rhs = Vec::with_capacity(free.len());
    for (ri, &i) in free.iter().enumerate() {
        let mut b = system.rhs[i];
        for (j, v) in system.matrix.row(i) {
            if reduced[j] == usize::MAX {
                b -= v * full[j];
            } else {
                triplets.push((ri, reduced[j], v));
            }
        }
        rhs.push(b);
    }
    ConstrainedSystem {
        matrix: CsrMatrix::from_triplets(free.len(), free.len(), &triplets),
        rhs,
        free,
        full,
    }
}

/// Solves the constrained system; returns the full dof vector.
pub fn solve(system: &ConstrainedSystem, mode: SolverMode) -> Result<(Vec<f64>, SolveDiagnostics)> {
    let n = system.rhs.len();
    let (x, iterations) = if n == 0 {
        (Vec::new(), 0)
    } else {
        match mode {
            SolverMode::Direct => (solve_direct(&system.matrix, &system.rhs)?, 0),
            SolverMode::ConjugateGradient => {
                solve_pcg(&system.matrix, &system.rhs, 1e-10, 20 * n + 100)?
            }
        }
    };
    let residual = relative_residual(&system.matrix, &x, &system.rhs);
    if !residual.is_finite() || residual > 1e-6 {
        return Err(VemError::SingularSystem { pivot: 0 });
    }
    let mut full = system.full.clone();
    for (ri, &i) in system.free.iter().enumerate() {
        full[i] = x[ri];
    }
    Ok((
        full,
        SolveDiagnostics {
            mode,
            free_dofs: n,
            constrained_dofs: system.full.len() - n,
            nnz: system.matrix.nnz(),
            iterations,
            relative_residual: residual,
        },
    ))
}

pub fn relative_residual(a: &CsrMatrix, x: &[f64], b: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    let ax = a.mul_vec(x);
    let num: f64 = ax.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum();
    let den: f64 = b.iter().map(|v| v * v).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Sparse Cholesky factorization of the lower triangle.
pub fn solve_direct(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    let n = a.nrows;
    let mut entries = Vec::with_capacity(a.nnz() / 2 + n);
    let mut min_diag = f64::INFINITY;
    let mut max_diag = 0.0f64;
    for i in 0..n {
        for (j, v) in a.row(i) {
            if j <= i {
                entries.push(Triplet::new(i, j, v));
            }
            if j == i {
                min_diag = min_diag.min(v);
                max_diag = max_diag.max(v);
            }
        }
    }
    if !(min_diag > 0.0) {
        let pivot = (0..n).find(|&i| !(a.get(i, i) > 0.0)).unwrap_or(0);
        return Err(VemError::SingularSystem { pivot });
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &entries)
        .map_err(|e| VemError::Config(format!("sparse matrix construction failed: {e:?}")))?;
    let llt = mat.sp_cholesky(Side::Lower).map_err(|e| match e {
        faer::sparse::linalg::LltError::Numeric(
            faer::linalg::cholesky::llt::factor::LltError::NonPositivePivot { index },
        ) => VemError::SingularSystem { pivot: index },
        other => VemError::Config(format!("sparse factorization failed: {other:?}")),
    })?;
    let mut rhs = Mat::from_fn(n, 1, |i, _| b[i]);
    llt.solve_in_place(rhs.as_mut());
    Ok((0..n).map(|i| rhs[(i, 0)]).collect())
}

/// Jacobi-preconditioned conjugate gradients.
pub fn solve_pcg(
    a: &CsrMatrix,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<(Vec<f64>, usize)> {
    let n = a.nrows;
    let dinv: Vec<f64> = a
        .diagonal()
        .iter()
        .enumerate()
        .map(|(i, &d)| {
            if d > 0.0 {
                Ok(1.0 / d)
            } else {
                Err(VemError::SingularSystem { pivot: i })
            }
        })
        .collect::<Result<_>>()?;
    let dot = |u: &[f64], v: &[f64]| -> f64 { u.iter().zip(v).map(|(p, q)| p * q).sum() };
    let bnorm = dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return Ok((x, 0));
    }
    let mut r = b.to_vec();
    let mut z: Vec<f64> = r.iter().zip(&dinv).map(|(r, d)| r * d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    for it in 1..=max_iter {
        let ap = a.mul_vec(&p);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(VemError::SingularSystem { pivot: it });
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let res = dot(&r, &r).sqrt() / bnorm;
        if res <= tol {
            return Ok((x, it));
        }
        for i in 0..n {
            z[i] = r[i] * dinv[i];
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(VemError::NotConverged {
        iterations: max_iter,
        residual: dot(&r, &r).sqrt() / bnorm,
    })
}
