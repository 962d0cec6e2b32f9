use nalgebra::DMatrix;

/// Number of monomials of total degree `<= s`.
pub const fn num_monomials(s: usize) -> usize {
    (s + 1) * (s + 2) / 2
}

/// Position of `xi^a eta^b` in Pascal order.
pub const fn monomial_index(a: usize, b: usize) -> usize {
    let d = a + b;
    d * (d + 1) / 2 + b
}

/// Scaled monomials `xi^a eta^b` up to a total degree, in Pascal-triangle
/// order: `1; xi, eta; xi^2, xi eta, eta^2; ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MonomialOrdering {
    pub degree: usize,
    pub entries: Vec<(usize, usize)>,
}

impl MonomialOrdering {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

pub fn monomial_ordering(s: usize) -> MonomialOrdering {
    let mut entries = Vec::with_capacity(num_monomials(s));
    for d in 0..=s {
        for b in 0..=d {
            entries.push((d - b, b));
        }
    }
    MonomialOrdering { degree: s, entries }
}

/// Values of every monomial up to degree `s` at `(xi, eta)`, Pascal order.
pub fn eval_monomials(s: usize, xi: f64, eta: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(num_monomials(s));
    out.push(1.0);
    for d in 1..=s {
        let start = out.len() - d;
        // row d from row d-1: multiply every entry by xi, then the last by eta
        for b in 0..d {
            out.push(out[start + b] * xi);
        }
        out.push(out[start + d - 1] * eta);
    }
    out
}

/// Basis of symmetric strain polynomials of degree `k - 1` in Voigt form.
///
/// Column `3 j + t` holds monomial `q_j` in Voigt row `t` (`xx`, `yy`, `xy`).
#[derive(Debug, Clone)]
pub struct StrainBasis {
    pub order: usize,
    pub monomials: MonomialOrdering,
}

impl StrainBasis {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "method order must be at least 1");
        Self {
            order,
            monomials: monomial_ordering(order - 1),
        }
    }

    pub fn dim(&self) -> usize {
        3 * self.monomials.len()
    }

    /// (exponents, Voigt slot) of column `col`.
    pub fn column(&self, col: usize) -> ((usize, usize), usize) {
        (self.monomials.entries[col / 3], col % 3)
    }

    pub fn eval(&self, xi: f64, eta: f64) -> DMatrix<f64> {
        let q = eval_monomials(self.order - 1, xi, eta);
        let mut np = DMatrix::zeros(3, self.dim());
        for (j, qj) in q.iter().enumerate() {
            for t in 0..3 {
                np[(t, 3 * j + t)] = *qj;
            }
        }
        np
    }
}

/// The `3 x l` matrix `N^P` of the order-`k` strain basis at `(xi, eta)`.
pub fn eval_strain_basis(k: usize, xi: f64, eta: f64) -> DMatrix<f64> {
    StrainBasis::new(k).eval(xi, eta)
}

/// Dimension of the strain space for order `k`: `3 k (k + 1) / 2`.
pub const fn strain_dim(k: usize) -> usize {
    3 * k * (k + 1) / 2
}
