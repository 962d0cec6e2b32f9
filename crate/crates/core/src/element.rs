//! Construction of a single virtual element: degree-of-freedom layout,
//! projector, consistency and stabilization stiffness, and load vectors.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix3};

use crate::error::{Result, VemError};
use crate::mesh::{ElementGeometry, Point2};
use crate::polybasis::{
    divergence_decomposition, eval_monomials, gauss_lobatto, monomial_ordering,
    polygon_moments, polygon_quadrature, DivergenceDecomposition, GaussLobattoRule,
    PolygonMomentTable, StrainBasis,
};

/// Local ordering of the element unknowns.
///
/// Nodes are numbered vertices first (`0..m`), then the `k - 1` interior
/// Gauss-Lobatto nodes of each edge in counter-clockwise traversal order
/// (`m + e (k - 1) + j`), then the `r = k (k - 1) / 2` moments (`k m + j`).
/// Node `i` owns dofs `2 i` (u) and `2 i + 1` (v).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofLayout {
    pub order: usize,
    pub num_edges: usize,
    pub n: usize,
    pub r: usize,
}

pub fn dof_layout(k: usize, m: usize) -> DofLayout {
    assert!(k >= 1 && m >= 3, "invalid layout k={k} m={m}");
    DofLayout {
        order: k,
        num_edges: m,
        n: 2 * m * k + k * (k - 1),
        r: k * (k - 1) / 2,
    }
}

impl DofLayout {
    pub fn num_nodes(&self) -> usize {
        self.num_boundary_nodes() + self.r
    }

    pub fn num_boundary_nodes(&self) -> usize {
        self.order * self.num_edges
    }

    pub fn vertex(&self, i: usize) -> usize {
        i
    }

    pub fn edge_node(&self, e: usize, j: usize) -> usize {
        self.num_edges + e * (self.order - 1) + j
    }

    pub fn moment(&self, j: usize) -> usize {
        self.order * self.num_edges + j
    }

    /// Local node at Gauss-Lobatto point `g` (`0..=k`) of edge `e`.
    pub fn edge_point_node(&self, e: usize, g: usize) -> usize {
        if g == 0 {
            self.vertex(e)
        } else if g == self.order {
            self.vertex((e + 1) % self.num_edges)
        } else {
            self.edge_node(e, g - 1)
        }
    }

    pub fn dof(node: usize, comp: usize) -> usize {
        2 * node + comp
    }
}

/// Plane-strain isotropic constitutive matrix in Voigt form with engineering
/// shear strain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Material {
    pub c: Matrix3<f64>,
}

impl Material {
    pub fn from_lame(lambda: f64, mu: f64) -> Result<Self> {
        let c = Matrix3::new(
            lambda + 2.0 * mu,
            lambda,
            0.0,
            lambda,
            lambda + 2.0 * mu,
            0.0,
            0.0,
            0.0,
            mu,
        );
        Self::from_matrix(c)
    }

    pub fn plane_strain(young: f64, poisson: f64) -> Result<Self> {
        if !(young > 0.0) || !(poisson > -1.0 && poisson < 0.5) {
            return Err(VemError::Config(format!(
                "invalid material E={young}, nu={poisson}"
            )));
        }
        let lambda = young * poisson / ((1.0 + poisson) * (1.0 - 2.0 * poisson));
        let mu = young / (2.0 * (1.0 + poisson));
        Self::from_lame(lambda, mu)
    }

    pub fn from_matrix(c: Matrix3<f64>) -> Result<Self> {
        if (c - c.transpose()).amax() > 1e-14 * c.amax() || c.cholesky().is_none() {
            return Err(VemError::Config(
                "constitutive matrix must be symmetric positive definite".into(),
            ));
        }
        Ok(Self { c })
    }
}

pub type ConstitutiveFn = dyn Fn(Point2) -> Matrix3<f64> + Send + Sync;

/// Elastic matrix over an element: constant, or varying in space.
#[derive(Clone)]
pub enum Constitutive {
    Uniform(Material),
    Varying(Arc<ConstitutiveFn>),
}

impl Constitutive {
    pub fn at(&self, p: Point2) -> Matrix3<f64> {
        match self {
            Constitutive::Uniform(m) => m.c,
            Constitutive::Varying(f) => f(p),
        }
    }

    pub fn scaled(&self, factor: f64) -> Constitutive {
        match self {
            Constitutive::Uniform(m) => Constitutive::Uniform(Material { c: m.c * factor }),
            Constitutive::Varying(f) => {
                let f = f.clone();
                Constitutive::Varying(Arc::new(move |p| f(p) * factor))
            }
        }
    }
}

impl fmt::Debug for Constitutive {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constitutive::Uniform(m) => f.debug_tuple("Uniform").field(m).finish(),
            Constitutive::Varying(_) => f.write_str("Varying(..)"),
        }
    }
}

impl From<Material> for Constitutive {
    fn from(m: Material) -> Self {
        Constitutive::Uniform(m)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilizationConfig {
    pub tau: f64,
}

impl StabilizationConfig {
    pub fn new(tau: f64) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(VemError::Config(format!(
                "stabilization factor must be positive, got {tau}"
            )));
        }
        Ok(Self { tau })
    }
}

impl Default for StabilizationConfig {
    fn default() -> Self {
        Self { tau: 0.5 }
    }
}

/// Matrices of one element.
#[derive(Debug, Clone)]
pub struct ElementMatrices {
    pub layout: DofLayout,
    pub g: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub pi: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub kc: DMatrix<f64>,
    pub ks: DMatrix<f64>,
    pub k: DMatrix<f64>,
}

/// Order-dependent data shared by every element of a mesh.
#[derive(Debug, Clone)]
pub struct ElementKernel {
    pub order: usize,
    pub lobatto: GaussLobattoRule,
    pub divergence: DivergenceDecomposition,
    pub basis: StrainBasis,
}

impl ElementKernel {
    pub fn new(k: usize) -> Self {
        assert!(k >= 1, "method order must be at least 1");
        Self {
            order: k,
            lobatto: gauss_lobatto(k + 1),
            divergence: divergence_decomposition(k),
            basis: StrainBasis::new(k),
        }
    }

    /// Moments up to the degree needed by `G`, `D`, `H` and `Q`.
    pub fn moments(&self, geom: &ElementGeometry) -> PolygonMomentTable {
        polygon_moments(geom, 2 * self.order - 2)
    }

    /// Physical positions of all boundary nodes in local order.
    pub fn boundary_nodes(&self, geom: &ElementGeometry) -> Vec<Point2> {
        let k = self.order;
        let m = geom.num_edges();
        let layout = dof_layout(k, m);
        let mut pts = vec![Point2::default(); layout.num_boundary_nodes()];
        pts[..m].copy_from_slice(&geom.vertices);
        for e in 0..m {
            let (a, b) = geom.edge_endpoints(e);
            for (j, t) in self.lobatto.interior_nodes().iter().enumerate() {
                pts[layout.edge_node(e, j)] = a.lerp(b, 0.5 * (t + 1.0));
            }
        }
        pts
    }

    pub fn build(
        &self,
        geom: &ElementGeometry,
        constitutive: &Constitutive,
        stab: StabilizationConfig,
    ) -> Result<ElementMatrices> {
        let layout = dof_layout(self.order, geom.num_edges());
        let moments = self.moments(geom);
        let g = matrix_g(self.order, &moments);
        let b = self.matrix_b(geom);
        let d = self.matrix_d(geom, &moments);
        let pi = projector(geom.id, &g, &b)?;
        let h = match constitutive {
            Constitutive::Uniform(mat) => middle_matrix(self.order, &moments, &mat.c),
            Constitutive::Varying(_) => self.middle_matrix_quadrature(geom, constitutive),
        };
        let kc = stiffness_consistent(&pi, &h);
        let ks = stiffness_stabilization(geom.id, &kc, &d, stab)?;
        let k = &kc + &ks;
        Ok(ElementMatrices {
            layout,
            g,
            b,
            pi,
            d,
            kc,
            ks,
            k,
        })
    }

    /// Degrees of freedom of `D`, built from monomial values at boundary
    /// nodes and scaled moments `|E|^-1 ∫ q_i m_j`.
    pub fn matrix_d(&self, geom: &ElementGeometry, moments: &PolygonMomentTable) -> DMatrix<f64> {
        let k = self.order;
        let layout = dof_layout(k, geom.num_edges());
        let ord = monomial_ordering(k);
        let mut d = DMatrix::zeros(layout.n, 2 * ord.len());
        for (i, p) in self.boundary_nodes(geom).into_iter().enumerate() {
            let (xi, eta) = geom.scaled_coords(p);
            for (j, v) in eval_monomials(k, xi, eta).into_iter().enumerate() {
                d[(2 * i, 2 * j)] = v;
                d[(2 * i + 1, 2 * j + 1)] = v;
            }
        }
        if k >= 2 {
            let qs = monomial_ordering(k - 2);
            for (i, &qi) in qs.entries.iter().enumerate() {
                let node = layout.moment(i);
                for (j, &mj) in ord.entries.iter().enumerate() {
                    let v = moments.product(qi, mj) / geom.area;
                    d[(2 * node, 2 * j)] = v;
                    d[(2 * node + 1, 2 * j + 1)] = v;
                }
            }
        }
        d
    }

    /// Right-hand side of the projection problem.
    pub fn matrix_b(&self, geom: &ElementGeometry) -> DMatrix<f64> {
        let k = self.order;
        let m = geom.num_edges();
        let layout = dof_layout(k, m);
        let l = self.basis.dim();
        let mut b = DMatrix::zeros(l, layout.n);
        for e in 0..m {
            let (pa, pb) = geom.edge_endpoints(e);
            let edge = &geom.edges[e];
            let [nx, ny] = edge.normal;
            for (g, (t, w)) in self.lobatto.nodes.iter().zip(&self.lobatto.weights).enumerate() {
                let node = layout.edge_point_node(e, g);
                let (xi, eta) = geom.scaled_coords(pa.lerp(pb, 0.5 * (t + 1.0)));
                let wl = 0.5 * w * edge.length;
                let q = eval_monomials(k - 1, xi, eta);
                for (j, qj) in q.iter().enumerate() {
                    let s = wl * qj;
                    // rows of N_E N^P: (nx, 0, ny) and (0, ny, nx) per Voigt slot
                    b[(3 * j, 2 * node)] += nx * s;
                    b[(3 * j + 2, 2 * node)] += ny * s;
                    b[(3 * j + 1, 2 * node + 1)] += ny * s;
                    b[(3 * j + 2, 2 * node + 1)] += nx * s;
                }
            }
        }
        for (j, mj) in self.divergence.matrices.iter().enumerate() {
            let node = layout.moment(j);
            let scale = geom.area / geom.diameter;
            for col in 0..l {
                b[(col, 2 * node)] -= scale * mj[(0, col)];
                b[(col, 2 * node + 1)] -= scale * mj[(1, col)];
            }
        }
        b
    }

    /// `∫ N^P^T C N^P` for a spatially varying elastic matrix.
    pub fn middle_matrix_quadrature(
        &self,
        geom: &ElementGeometry,
        constitutive: &Constitutive,
    ) -> DMatrix<f64> {
        let l = self.basis.dim();
        let mut h = DMatrix::zeros(l, l);
        for (p, w) in polygon_quadrature(&geom.vertices, 2 * self.order + 2) {
            let (xi, eta) = geom.scaled_coords(p);
            let np = self.basis.eval(xi, eta);
            let c = constitutive.at(p);
            let cm = DMatrix::from_fn(3, 3, |i, j| c[(i, j)]);
            h += np.transpose() * cm * &np * w;
        }
        symmetrize(&mut h);
        h
    }

    /// Body-load vector. For `k = 1` the load resultant is spread equally over
    /// the vertices; for `k >= 2` the load is projected onto `P_{k-2}` and
    /// lands on the moment dofs.
    pub fn load<F>(&self, geom: &ElementGeometry, body: F) -> Result<DVector<f64>>
    where
        F: Fn(Point2) -> [f64; 2],
    {
        if self.order == 1 {
            let mut bbar = [0.0; 2];
            for (p, w) in polygon_quadrature(&geom.vertices, 4) {
                let b = body(p);
                bbar[0] += w * b[0];
                bbar[1] += w * b[1];
            }
            load_k1(geom, bbar, 1)
        } else {
            load_general(self.order, geom, &self.moments(geom), body)
        }
    }
}

pub fn matrix_g(k: usize, moments: &PolygonMomentTable) -> DMatrix<f64> {
    let q = monomial_ordering(k - 1);
    let l = 3 * q.len();
    let mut g = DMatrix::zeros(l, l);
    for (i, &qi) in q.entries.iter().enumerate() {
        for (j, &qj) in q.entries.iter().enumerate() {
            let v = moments.product(qi, qj);
            for t in 0..3 {
                g[(3 * i + t, 3 * j + t)] = v;
            }
        }
    }
    g
}

/// `H[3i+s, 3j+t] = C[s,t] ∫ q_i q_j` for a constant elastic matrix.
pub fn middle_matrix(k: usize, moments: &PolygonMomentTable, c: &Matrix3<f64>) -> DMatrix<f64> {
    let q = monomial_ordering(k - 1);
    let l = 3 * q.len();
    let mut h = DMatrix::zeros(l, l);
    for (i, &qi) in q.entries.iter().enumerate() {
        for (j, &qj) in q.entries.iter().enumerate() {
            let v = moments.product(qi, qj);
            for s in 0..3 {
                for t in 0..3 {
                    h[(3 * i + s, 3 * j + t)] = c[(s, t)] * v;
                }
            }
        }
    }
    h
}

fn spd_factor(element: usize, what: &'static str, a: &DMatrix<f64>) -> Result<nalgebra::Cholesky<f64, nalgebra::Dyn>> {
    let chol = a.clone().cholesky().ok_or(VemError::Conditioning {
        element,
        what,
        condition: f64::INFINITY,
    })?;
    let diag = chol.l_dirty().diagonal();
    let (lo, hi) = diag
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let condition = (hi / lo).powi(2);
    if !condition.is_finite() || condition > 1e15 {
        return Err(VemError::Conditioning {
            element,
            what,
            condition,
        });
    }
    Ok(chol)
}

/// Solves `G Πm = B`.
pub fn projector(element: usize, g: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(spd_factor(element, "G", g)?.solve(b))
}

pub fn stiffness_consistent(pi: &DMatrix<f64>, h: &DMatrix<f64>) -> DMatrix<f64> {
    let mut kc = pi.transpose() * h * pi;
    symmetrize(&mut kc);
    kc
}

/// `τ tr(K_c) (I - D (D^T D)^-1 D^T)`.
pub fn stiffness_stabilization(
    element: usize,
    kc: &DMatrix<f64>,
    d: &DMatrix<f64>,
    stab: StabilizationConfig,
) -> Result<DMatrix<f64>> {
    StabilizationConfig::new(stab.tau)?;
    let n = d.nrows();
    // orthonormal basis of range(D) avoids squaring its condition number
    let qr = d.clone().qr();
    let rdiag = qr.r().diagonal().map(f64::abs);
    let condition = rdiag.max() / rdiag.min();
    if !condition.is_finite() || condition > 1e12 {
        return Err(VemError::Conditioning {
            element,
            what: "D",
            condition,
        });
    }
    let q = qr.q();
    let proj = &q * q.transpose();
    let mut ks = (DMatrix::identity(n, n) - proj) * (stab.tau * kc.trace());
    symmetrize(&mut ks);
    Ok(ks)
}

/// Vertex load rule for `k = 1`: each vertex receives `b̄ / m`.
pub fn load_k1(geom: &ElementGeometry, bbar: [f64; 2], k: usize) -> Result<DVector<f64>> {
    if k != 1 {
        return Err(VemError::Usage(format!(
            "vertex load rule applies to k = 1 only, got k = {k}"
        )));
    }
    let m = geom.num_edges();
    let mut f = DVector::zeros(2 * m);
    for i in 0..m {
        f[2 * i] = bbar[0] / m as f64;
        f[2 * i + 1] = bbar[1] / m as f64;
    }
    Ok(f)
}

/// Load vector for `k >= 2` from the `L^2` projection of `b` onto
/// `(P_{k-2})^2`.
pub fn load_general<F>(
    k: usize,
    geom: &ElementGeometry,
    moments: &PolygonMomentTable,
    body: F,
) -> Result<DVector<f64>>
where
    F: Fn(Point2) -> [f64; 2],
{
    if k < 2 {
        return Err(VemError::Usage("projected load needs k >= 2".into()));
    }
    let layout = dof_layout(k, geom.num_edges());
    let qs = monomial_ordering(k - 2);
    let r = qs.len();
    let q = DMatrix::from_fn(r, r, |i, j| moments.product(qs.entries[i], qs.entries[j]));
    let mut f = DMatrix::zeros(r, 2);
    for (p, w) in polygon_quadrature(&geom.vertices, 2 * k + 2) {
        let (xi, eta) = geom.scaled_coords(p);
        let b = body(p);
        for (i, qi) in eval_monomials(k - 2, xi, eta).iter().enumerate() {
            f[(i, 0)] += w * b[0] * qi;
            f[(i, 1)] += w * b[1] * qi;
        }
    }
    let coeffs = spd_factor(geom.id, "Q", &q)?.solve(&f);
    let mut out = DVector::zeros(layout.n);
    for i in 0..r {
        let node = layout.moment(i);
        out[2 * node] = geom.area * coeffs[(i, 0)];
        out[2 * node + 1] = geom.area * coeffs[(i, 1)];
    }
    Ok(out)
}

/// Traction contributions at the `k + 1` Gauss-Lobatto points of the edge
/// from `a` to `b`, in that order.
pub fn neumann_edge<F>(k: usize, a: Point2, b: Point2, traction: F) -> Vec<[f64; 2]>
where
    F: Fn(Point2) -> [f64; 2],
{
    let rule = gauss_lobatto(k + 1);
    let half = 0.5 * a.dist(b);
    rule.nodes
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| {
            let tr = traction(a.lerp(b, 0.5 * (t + 1.0)));
            [w * half * tr[0], w * half * tr[1]]
        })
        .collect()
}

fn symmetrize(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (a[(i, j)] + a[(j, i)]);
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_geometry, PolygonCell};

    fn geometry(pts: &[(f64, f64)]) -> ElementGeometry {
        let vertices: Vec<Point2> = pts.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        build_geometry(0, &PolygonCell::new((0..pts.len()).collect()), &vertices).unwrap()
    }

    fn unit_square() -> ElementGeometry {
        geometry(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)])
    }

    #[test]
    fn layout_counts() {
        assert_eq!(dof_layout(1, 4).n, 8);
        let l = dof_layout(2, 5);
        assert_eq!((l.n, l.r), (22, 1));
        let l = dof_layout(3, 5);
        assert_eq!((l.n, l.r), (36, 3));
        assert_eq!(StrainBasis::new(3).dim(), 18);
        assert_eq!(l.edge_point_node(4, 3), 0);
        assert_eq!(l.edge_point_node(1, 1), 5 + 2);
    }

    #[test]
    fn k1_square_d_matrix() {
        let geom = unit_square();
        let kernel = ElementKernel::new(1);
        let d = kernel.matrix_d(&geom, &kernel.moments(&geom));
        assert_eq!(d.shape(), (8, 6));
        for (i, p) in geom.vertices.iter().enumerate() {
            let (xi, eta) = geom.scaled_coords(*p);
            let expect = [1.0, 0.0, xi, 0.0, eta, 0.0];
            for j in 0..6 {
                assert_eq!(d[(2 * i, j)], expect[j]);
            }
            assert_eq!(d[(2 * i + 1, 1)], 1.0);
            assert_eq!(d[(2 * i + 1, 3)], xi);
        }
    }

    #[test]
    fn k1_square_b_matrix() {
        let b = ElementKernel::new(1).matrix_b(&unit_square());
        let row: Vec<f64> = (0..4).map(|i| b[(0, 2 * i)]).collect();
        assert_eq!(row, vec![-0.5, 0.5, 0.5, -0.5]);
        assert!((0..4).all(|i| b[(0, 2 * i + 1)] == 0.0));
    }

    #[test]
    fn k1_square_projector_of_u_equals_x() {
        let geom = unit_square();
        let m = ElementKernel::new(1)
            .build(&geom, &Material::from_lame(1.0, 1.0).unwrap().into(), Default::default())
            .unwrap();
        let mut u = DVector::zeros(8);
        for (i, p) in geom.vertices.iter().enumerate() {
            u[2 * i] = p.x;
        }
        let eps = &m.pi * u;
        assert!((eps[0] - 1.0).abs() < 1e-14 && eps[1].abs() < 1e-14 && eps[2].abs() < 1e-14);
    }

    #[test]
    fn k1_loads() {
        let f = load_k1(&unit_square(), [0.0, -1.0], 1).unwrap();
        for i in 0..4 {
            assert_eq!(f[2 * i + 1], -0.25);
            assert_eq!(f[2 * i], 0.0);
        }
        assert!(load_k1(&unit_square(), [0.0, 0.0], 2).is_err());
    }

    #[test]
    fn k2_load_is_average() {
        let geom = geometry(&[(0.0, 0.0), (2.0, 0.0), (2.0, 1.0), (1.0, 1.5), (0.0, 1.0)]);
        let kernel = ElementKernel::new(2);
        let f = kernel.load(&geom, |p| [p.x, 3.0]).unwrap();
        let node = dof_layout(2, 5).moment(0);
        assert!((f[2 * node] - geom.area * geom.centroid.x).abs() < 1e-13);
        assert!((f[2 * node + 1] - 3.0 * geom.area).abs() < 1e-13);
    }

    #[test]
    fn neumann_weights() {
        let a = Point2::new(0.0, 0.0);
        let b = Point2::new(0.0, 3.0);
        let f1 = neumann_edge(1, a, b, |_| [2.0, 0.0]);
        assert_eq!(f1, vec![[3.0, 0.0], [3.0, 0.0]]);
        let f2 = neumann_edge(2, a, b, |_| [2.0, 0.0]);
        assert!((f2[0][0] - 1.0).abs() < 1e-15);
        assert!((f2[1][0] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn tau_must_be_positive() {
        assert!(StabilizationConfig::new(0.0).is_err());
        assert!(StabilizationConfig::new(-1.0).is_err());
    }

    #[test]
    fn plane_strain_lame() {
        let m = Material::plane_strain(7000.0, 0.3).unwrap();
        let lambda = 7000.0 * 0.3 / (1.3 * 0.4);
        let mu = 7000.0 / 2.6;
        assert!((m.c[(0, 0)] - lambda - 2.0 * mu).abs() < 1e-9);
        assert!((m.c[(2, 2)] - mu).abs() < 1e-9);
    }
}
