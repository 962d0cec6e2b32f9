use super::monomial::{eval_monomials, monomial_index, num_monomials, StrainBasis};
use nalgebra::DMatrix;

/// Constant matrices `M^j` with `∂ N^P = Σ_j M^j q_j`, where `∂ = S^T` acts
/// on the Voigt columns of the strain basis.
///
/// The matrices are stored for `h = 1`; derivatives with respect to physical
/// coordinates carry an extra `1 / h`, applied by [`DivergenceDecomposition::scaled`].
#[derive(Debug, Clone)]
pub struct DivergenceDecomposition {
    pub order: usize,
    pub matrices: Vec<DMatrix<f64>>,
}

impl DivergenceDecomposition {
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.matrices.is_empty()
    }

    pub fn scaled(&self, h: f64) -> Vec<DMatrix<f64>> {
        self.matrices.iter().map(|m| m / h).collect()
    }

    /// `Σ_j M^j q_j(xi, eta)` for `h = 1`.
    pub fn reconstruct(&self, xi: f64, eta: f64) -> DMatrix<f64> {
        let basis = StrainBasis::new(self.order);
        let mut out = DMatrix::zeros(2, basis.dim());
        if self.order < 2 {
            return out;
        }
        let q = eval_monomials(self.order - 2, xi, eta);
        for (m, qj) in self.matrices.iter().zip(&q) {
            out += m * *qj;
        }
        out
    }
}

pub fn divergence_decomposition(k: usize) -> DivergenceDecomposition {
    let basis = StrainBasis::new(k);
    let l = basis.dim();
    let r = if k >= 2 { num_monomials(k - 2) } else { 0 };
    let mut matrices = vec![DMatrix::zeros(2, l); r];
    for col in 0..l {
        let ((a, b), t) = basis.column(col);
        let mut put = |row: usize, coeff: usize, idx: usize| {
            matrices[idx][(row, col)] += coeff as f64;
        };
        match t {
            0 => {
                if a > 0 {
                    put(0, a, monomial_index(a - 1, b));
                }
            }
            1 => {
                if b > 0 {
                    put(1, b, monomial_index(a, b - 1));
                }
            }
            _ => {
                if b > 0 {
                    put(0, b, monomial_index(a, b - 1));
                }
                if a > 0 {
                    put(1, a, monomial_index(a - 1, b));
                }
            }
        }
    }
    DivergenceDecomposition { order: k, matrices }
}

/// `∂ N^P` at a point by direct differentiation of each basis column, `h = 1`.
pub fn eval_divergence(k: usize, xi: f64, eta: f64) -> DMatrix<f64> {
    let basis = StrainBasis::new(k);
    let mut out = DMatrix::zeros(2, basis.dim());
    for col in 0..basis.dim() {
        let ((a, b), t) = basis.column(col);
        let dx = if a > 0 {
            a as f64 * xi.powi(a as i32 - 1) * eta.powi(b as i32)
        } else {
            0.0
        };
        let dy = if b > 0 {
            b as f64 * xi.powi(a as i32) * eta.powi(b as i32 - 1)
        } else {
            0.0
        };
        match t {
            0 => out[(0, col)] = dx,
            1 => out[(1, col)] = dy,
            _ => {
                out[(0, col)] = dy;
                out[(1, col)] = dx;
            }
        }
    }
    out
}
