//! Built-in benchmark problems: materials, loads and exact solutions.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use vem_core::polynomial::{Poly2, PolyField};
use vem_core::{BoundaryConditions, Material, Mesh, Point2, VemError};

pub type Field2 = Arc<dyn Fn(Point2) -> [f64; 2] + Send + Sync>;
pub type Field3 = Arc<dyn Fn(Point2) -> [f64; 3] + Send + Sync>;
pub type Gradient = Arc<dyn Fn(Point2) -> [[f64; 2]; 2] + Send + Sync>;

/// Displacement, Voigt strain and displacement gradient of a known solution.
#[derive(Clone)]
pub struct ExactSolution {
    pub displacement: Field2,
    pub strain: Field3,
    pub gradient: Gradient,
}

impl ExactSolution {
    pub fn from_poly(field: PolyField) -> Self {
        let strain = field.strain();
        let f1 = field.clone();
        let f2 = field;
        Self {
            displacement: Arc::new(move |p| f1.displacement(p)),
            strain: Arc::new(move |p| [strain[0].at(p), strain[1].at(p), strain[2].at(p)]),
            gradient: Arc::new(move |p| f2.gradient_at(p)),
        }
    }
}

/// Material, body load and optional exact solution of a benchmark.
#[derive(Clone)]
pub struct ProblemSpec {
    pub name: &'static str,
    pub material: Material,
    pub body: Option<Field2>,
    pub exact: Option<ExactSolution>,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("material", &self.material)
            .field("body", &self.body.is_some())
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

impl ProblemSpec {
    /// Checks that the exact solution, when known, meets every Dirichlet
    /// condition and pin to `1e-10` at edge ends and midpoints.
    pub fn check_boundary_data(&self, mesh: &Mesh, bcs: &BoundaryConditions) -> Result<(), VemError> {
        let Some(exact) = &self.exact else {
            return Ok(());
        };
        let check = |p: Point2, comps: [bool; 2], g: [f64; 2]| {
            let u = (exact.displacement)(p);
            for c in 0..2 {
                let err = (u[c] - g[c]).abs();
                if comps[c] && err > 1e-10 {
                    return Err(VemError::Config(format!(
                        "{}: exact solution violates boundary data at ({}, {}) by {err:e}",
                        self.name, p.x, p.y
                    )));
                }
            }
            Ok(())
        };
        for (_, edge) in mesh.boundary_edges() {
            let (a, b) = (mesh.vertex(edge.vertices[0]), mesh.vertex(edge.vertices[1]));
            let mid = a.lerp(b, 0.5);
            for dc in bcs.dirichlet.iter().filter(|dc| (dc.on)(mid)) {
                for p in [a, mid, b] {
                    check(p, dc.components, (dc.value)(p))?;
                }
            }
        }
        for pin in &bcs.pins {
            check(pin.point, pin.components, pin.value)?;
        }
        Ok(())
    }
}

/// `u = x^3 - 3xy^2`, `v = y^3 - 3x^2y`.
pub fn test_2a_field() -> PolyField {
    let mut u = Poly2::monomial(3, 0, 1.0);
    u.add_term(1, 2, -3.0);
    let mut v = Poly2::monomial(0, 3, 1.0);
    v.add_term(2, 1, -3.0);
    PolyField { u, v }
}

/// Polynomial solution with zero body load, `λ = μ = 1`.
pub fn test_2a() -> Result<ProblemSpec, VemError> {
    let material = Material::from_lame(1.0, 1.0)?;
    let field = test_2a_field();
    let [bx, by] = field.body_load(&material.c);
    // the field must be in equilibrium without body load
    for i in 0..=10 {
        for j in 0..=10 {
            let p = Point2::new(i as f64 / 10.0, j as f64 / 10.0);
            let r = bx.at(p).abs().max(by.at(p).abs());
            if r > 1e-12 {
                return Err(VemError::Config(format!(
                    "test 2a field is not load-free: residual {r:e} at ({}, {})",
                    p.x, p.y
                )));
            }
        }
    }
    Ok(ProblemSpec {
        name: "2a",
        material,
        body: None,
        exact: Some(ExactSolution::from_poly(field)),
    })
}

/// `u = v = sin(πx) sin(πy)` with `λ = μ = 1`.
pub fn test_2b() -> Result<ProblemSpec, VemError> {
    let (lambda, mu) = (1.0, 1.0);
    let material = Material::from_lame(lambda, mu)?;
    let body: Field2 = Arc::new(move |p: Point2| {
        let s = (PI * p.x).sin() * (PI * p.y).sin();
        let c = (PI * p.x).cos() * (PI * p.y).cos();
        let b = -PI * PI * (-(3.0 * mu + lambda) * s + (mu + lambda) * c);
        [b, b]
    });
    let exact = ExactSolution {
        displacement: Arc::new(|p: Point2| {
            let s = (PI * p.x).sin() * (PI * p.y).sin();
            [s, s]
        }),
        strain: Arc::new(|p: Point2| {
            let (sx, cx) = (PI * p.x).sin_cos();
            let (sy, cy) = (PI * p.y).sin_cos();
            [PI * cx * sy, PI * sx * cy, PI * (sx * cy + cx * sy)]
        }),
        gradient: Arc::new(|p: Point2| {
            let (sx, cx) = (PI * p.x).sin_cos();
            let (sy, cy) = (PI * p.y).sin_cos();
            let g = [PI * cx * sy, PI * sx * cy];
            [g, g]
        }),
    };
    Ok(ProblemSpec {
        name: "2b",
        material,
        body: Some(body),
        exact: Some(exact),
    })
}

pub const PATCH_YOUNG: f64 = 7000.0;
pub const PATCH_POISSON: f64 = 0.3;
pub const PATCH_TENSION: f64 = 2000.0;
pub const PATCH_SHEAR: f64 = 400.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchTest {
    /// Uniaxial tension against left rollers.
    Tension,
    /// Pure shear from tangential boundary traction.
    Shear,
}

impl PatchTest {
    pub fn name(self) -> &'static str {
        match self {
            PatchTest::Tension => "1a",
            PatchTest::Shear => "1b",
        }
    }

    /// Exact constant Voigt stress.
    pub fn stress(self) -> [f64; 3] {
        match self {
            PatchTest::Tension => [PATCH_TENSION, 0.0, 0.0],
            PatchTest::Shear => [0.0, 0.0, PATCH_SHEAR],
        }
    }

    pub fn problem(self) -> Result<ProblemSpec, VemError> {
        let (e, nu) = (PATCH_YOUNG, PATCH_POISSON);
        let material = Material::plane_strain(e, nu)?;
        let mut field = PolyField {
            u: Poly2::zero(),
            v: Poly2::zero(),
        };
        match self {
            PatchTest::Tension => {
                let q = PATCH_TENSION;
                field.u.add_term(1, 0, q * (1.0 - nu * nu) / e);
                field.v.add_term(0, 1, -q * nu * (1.0 + nu) / e);
            }
            PatchTest::Shear => {
                let mu = e / (2.0 * (1.0 + nu));
                field.u.add_term(0, 1, PATCH_SHEAR / mu);
            }
        }
        Ok(ProblemSpec {
            name: self.name(),
            material,
            body: None,
            exact: Some(ExactSolution::from_poly(field)),
        })
    }
}

impl FromStr for PatchTest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "1a" => Ok(PatchTest::Tension),
            "1b" => Ok(PatchTest::Shear),
            other => Err(format!("unknown patch test '{other}' (expected 1a or 1b)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConvergenceTest {
    Polynomial,
    Trigonometric,
}

impl ConvergenceTest {
    pub fn name(self) -> &'static str {
        match self {
            ConvergenceTest::Polynomial => "2a",
            ConvergenceTest::Trigonometric => "2b",
        }
    }

    pub fn problem(self) -> Result<ProblemSpec, VemError> {
        match self {
            ConvergenceTest::Polynomial => test_2a(),
            ConvergenceTest::Trigonometric => test_2b(),
        }
    }
}

impl FromStr for ConvergenceTest {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "2a" => Ok(ConvergenceTest::Polynomial),
            "2b" => Ok(ConvergenceTest::Trigonometric),
            other => Err(format!("unknown convergence test '{other}' (expected 2a or 2b)")),
        }
    }
}

pub const COOK_YOUNG: f64 = 70.0;
pub const COOK_POISSON: f64 = 1.0 / 3.0;
pub const COOK_TRACTION: f64 = 6.25;
/// Midpoint of the loaded edge.
pub const COOK_POINT_A: Point2 = Point2 { x: 48.0, y: 52.0 };

pub fn cook() -> Result<ProblemSpec, VemError> {
    Ok(ProblemSpec {
        name: "cook",
        material: Material::plane_strain(COOK_YOUNG, COOK_POISSON)?,
        body: None,
        exact: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_load_matches_polynomial_derivation() {
        // compare with -div(C ε) by central differences of the exact strain
        let p = test_2b().unwrap();
        let exact = p.exact.as_ref().unwrap();
        let c = p.material.c;
        let h = 1e-5;
        let stress = |q: Point2| {
            let e = (exact.strain)(q);
            let s = c * nalgebra::Vector3::new(e[0], e[1], e[2]);
            [s[0], s[1], s[2]]
        };
        let at = Point2::new(0.3, 0.7);
        let dx = |f: &dyn Fn(Point2) -> [f64; 3], t: usize| {
            (f(Point2::new(at.x + h, at.y))[t] - f(Point2::new(at.x - h, at.y))[t]) / (2.0 * h)
        };
        let dy = |f: &dyn Fn(Point2) -> [f64; 3], t: usize| {
            (f(Point2::new(at.x, at.y + h))[t] - f(Point2::new(at.x, at.y - h))[t]) / (2.0 * h)
        };
        let b = (p.body.unwrap())(at);
        assert!((b[0] + dx(&stress, 0) + dy(&stress, 2)).abs() < 1e-6);
        assert!((b[1] + dx(&stress, 2) + dy(&stress, 1)).abs() < 1e-6);
    }

    #[test]
    fn patch_fields_carry_the_exact_stress() {
        for t in [PatchTest::Tension, PatchTest::Shear] {
            let p = t.problem().unwrap();
            let e = (p.exact.as_ref().unwrap().strain)(Point2::new(0.2, 0.9));
            let s = p.material.c * nalgebra::Vector3::new(e[0], e[1], e[2]);
            for (got, want) in s.iter().zip(t.stress()) {
                assert!((got - want).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn boundary_check_flags_mismatch() {
        let p = test_2a().unwrap();
        let mesh = vem_core::meshgen::unit_square_quads(2).unwrap();
        let exact = p.exact.clone().unwrap();
        let good = BoundaryConditions::new().dirichlet(|_| true, [true, true], move |q| (exact.displacement)(q));
        assert!(p.check_boundary_data(&mesh, &good).is_ok());
        let bad = BoundaryConditions::new().dirichlet(|q| q.x == 0.0, [false, true], |_| [0.0, 0.0]);
        assert!(p.check_boundary_data(&mesh, &bad).is_err());
        let masked = BoundaryConditions::new().dirichlet(|q| q.x == 0.0, [true, false], |_| [0.0, 0.0]);
        assert!(p.check_boundary_data(&mesh, &masked).is_ok());
    }
}
