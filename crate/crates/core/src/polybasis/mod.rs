//! Scaled monomials, strain basis, quadrature rules and the divergence
//! decomposition of the strain basis.

mod divergence;
mod moments;
mod monomial;
mod quadrature;

pub use divergence::{divergence_decomposition, eval_divergence, DivergenceDecomposition};
pub use moments::{polygon_moments, PolygonMomentTable};
pub use monomial::{
    eval_monomials, eval_strain_basis, monomial_index, monomial_ordering, num_monomials,
    strain_dim, MonomialOrdering, StrainBasis,
};
pub use quadrature::{
    gauss_legendre, gauss_lobatto, legendre, polygon_quadrature, triangle_rule, GaussLobattoRule,
    TriangleRule,
};
