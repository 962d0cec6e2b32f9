//! Arbitrary-order virtual element method for plane-strain linear
//! elasticity on polygonal meshes.
//!
//! The pipeline is mesh → per-element projection and stiffness → global
//! assembly and solve → projected strain, error norms and output files:
//!
//! ```
//! use vem_core::assembly::{BoundaryConditions, Discretization, SolverMode};
//! use vem_core::element::{Material, StabilizationConfig};
//! use vem_core::meshgen::unit_square_quads;
//!
//! let mesh = unit_square_quads(4).unwrap();
//! let material = Material::plane_strain(7000.0, 0.3).unwrap();
//! let disc = Discretization::new(mesh, 2, material, StabilizationConfig::default()).unwrap();
//! let bcs = BoundaryConditions::new()
//!     .dirichlet(|p| p.x == 0.0, [true, true], |_| [0.0, 0.0])
//!     .neumann(|p| p.x == 1.0, |_| [0.0, -1.0]);
//! let solution = disc.solve(None, &bcs, SolverMode::Direct).unwrap();
//! assert!(solution.values.iter().all(|v| v.is_finite()));
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod assembly;
pub mod element;
pub mod error;
pub mod mesh;
pub mod meshgen;
pub mod polybasis;
pub mod polynomial;
pub mod postproc;

pub use assembly::{BoundaryConditions, Discretization, Solution, SolverMode};
pub use element::{Material, StabilizationConfig};
pub use error::{Result, VemError};
pub use mesh::{Mesh, Point2, PolygonCell};
