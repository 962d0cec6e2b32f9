//! TOML problem description for the `solve` command.
//!
//! ```toml
//! k = 2
//! tau = 0.5
//! solver = "direct"
//!
//! [material]
//! young = 7000.0
//! poisson = 0.3
//!
//! [load]
//! kind = "zero"
//!
//! [[dirichlet]]
//! on = "left"
//! components = [true, false]
//!
//! [[neumann]]
//! on = "right"
//! traction = [2000.0, 0.0]
//!
//! [[pin]]
//! point = [0.0, 0.0]
//! components = [false, true]
//! ```

use std::path::Path;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Deserialize;
use vem_core::{BoundaryConditions, Material, Mesh, Point2, SolverMode};

use crate::commands::{on_side, Side};
use crate::problems::{test_2a, test_2b, Field2, ProblemSpec};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolveConfig {
    pub k: usize,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_solver")]
    pub solver: String,
    pub material: MaterialConfig,
    #[serde(default)]
    pub load: LoadConfig,
    #[serde(default)]
    pub dirichlet: Vec<DirichletConfig>,
    #[serde(default)]
    pub neumann: Vec<NeumannConfig>,
    #[serde(default)]
    pub pin: Vec<PinConfig>,
}

fn default_tau() -> f64 {
    0.5
}

fn default_solver() -> String {
    "direct".into()
}

fn both() -> [bool; 2] {
    [true, true]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged, deny_unknown_fields)]
pub enum MaterialConfig {
    Engineering { young: f64, poisson: f64 },
    Lame { lambda: f64, mu: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum LoadConfig {
    #[default]
    Zero,
    Constant {
        value: [f64; 2],
    },
    /// Body load of the polynomial benchmark.
    #[serde(rename = "2a")]
    Polynomial,
    /// Body load of the trigonometric benchmark.
    #[serde(rename = "2b")]
    Trigonometric,
}

/// Boundary portion of the mesh bounding box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Selector {
    Left,
    Right,
    Bottom,
    Top,
    All,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DirichletConfig {
    pub on: Selector,
    #[serde(default = "both")]
    pub components: [bool; 2],
    #[serde(default)]
    pub value: [f64; 2],
    /// Impose the exact solution of the `2a`/`2b` load instead of `value`.
    #[serde(default)]
    pub exact: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NeumannConfig {
    pub on: Selector,
    pub traction: [f64; 2],
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PinConfig {
    pub point: [f64; 2],
    #[serde(default = "both")]
    pub components: [bool; 2],
    #[serde(default)]
    pub value: [f64; 2],
}

impl SolveConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: SolveConfig = toml::from_str(text)?;
        if cfg.k == 0 {
            bail!("k must be at least 1");
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn solver_mode(&self) -> Result<SolverMode> {
        Ok(self.solver.parse()?)
    }

    /// Material, body load and, for the benchmark loads, the exact solution.
    pub fn problem(&self) -> Result<ProblemSpec> {
        let material = match self.material {
            MaterialConfig::Engineering { young, poisson } => Material::plane_strain(young, poisson)?,
            MaterialConfig::Lame { lambda, mu } => Material::from_lame(lambda, mu)?,
        };
        let mut problem = match &self.load {
            LoadConfig::Zero => ProblemSpec {
                name: "custom",
                material,
                body: None,
                exact: None,
            },
            LoadConfig::Constant { value } => {
                let value = *value;
                let body: Field2 = Arc::new(move |_| value);
                ProblemSpec {
                    name: "custom",
                    material,
                    body: Some(body),
                    exact: None,
                }
            }
            LoadConfig::Polynomial => test_2a()?,
            LoadConfig::Trigonometric => test_2b()?,
        };
        if matches!(self.load, LoadConfig::Trigonometric) && problem.material != material {
            bail!("load '2b' is only in equilibrium with lambda = mu = 1");
        }
        problem.material = material;
        Ok(problem)
    }

    pub fn boundary_conditions(&self, mesh: &Mesh, problem: &ProblemSpec) -> Result<BoundaryConditions> {
        let select = |s: Selector| -> Arc<dyn Fn(Point2) -> bool + Send + Sync> {
            match s {
                Selector::Left => Arc::new(on_side(mesh, Side::Left)),
                Selector::Right => Arc::new(on_side(mesh, Side::Right)),
                Selector::Bottom => Arc::new(on_side(mesh, Side::Bottom)),
                Selector::Top => Arc::new(on_side(mesh, Side::Top)),
                Selector::All => Arc::new(|_| true),
            }
        };
        let mut bcs = BoundaryConditions::new();
        for d in &self.dirichlet {
            let on = select(d.on);
            if d.exact {
                let Some(exact) = problem.exact.clone() else {
                    bail!("'exact' Dirichlet data needs load kind 2a or 2b");
                };
                bcs = bcs.dirichlet(move |p| on(p), d.components, move |p| (exact.displacement)(p));
            } else {
                let value = d.value;
                bcs = bcs.dirichlet(move |p| on(p), d.components, move |_| value);
            }
        }
        for n in &self.neumann {
            let on = select(n.on);
            let t = n.traction;
            bcs = bcs.neumann(move |p| on(p), move |_| t);
        }
        for p in &self.pin {
            bcs = bcs.pin(Point2::new(p.point[0], p.point[1]), p.components, p.value);
        }
        Ok(bcs)
    }
}
