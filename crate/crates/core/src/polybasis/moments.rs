use super::monomial::{monomial_index, monomial_ordering, num_monomials};
use super::quadrature::polygon_quadrature;
use crate::mesh::{ElementGeometry, Point2};

/// Integrals `m(a, b) = ∫_E xi^a eta^b dx dy` of the scaled monomials over one
/// element, in Pascal order.
#[derive(Debug, Clone)]
pub struct PolygonMomentTable {
    pub element: usize,
    pub max_degree: usize,
    values: Vec<f64>,
}

impl PolygonMomentTable {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        assert!(a + b <= self.max_degree, "moment ({a}, {b}) beyond table degree");
        self.values[monomial_index(a, b)]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `∫ q_i q_j` for monomials given by exponent pairs.
    pub fn product(&self, p: (usize, usize), q: (usize, usize)) -> f64 {
        self.get(p.0 + q.0, p.1 + q.1)
    }

    pub fn area(&self) -> f64 {
        self.values[0]
    }
}

/// Exact monomial moments by a signed triangle fan in scaled coordinates.
pub fn polygon_moments(geom: &ElementGeometry, max_degree: usize) -> PolygonMomentTable {
    let scaled: Vec<Point2> = geom
        .vertices
        .iter()
        .map(|&p| {
            let (xi, eta) = geom.scaled_coords(p);
            Point2::new(xi, eta)
        })
        .collect();
    let jac = geom.diameter * geom.diameter;
    let ordering = monomial_ordering(max_degree);
    let mut values = vec![0.0; num_monomials(max_degree)];
    for (p, w) in polygon_quadrature(&scaled, max_degree) {
        let q = super::monomial::eval_monomials(max_degree, p.x, p.y);
        for (v, qi) in values.iter_mut().zip(&q) {
            *v += w * qi;
        }
    }
    debug_assert_eq!(ordering.len(), values.len());
    for v in values.iter_mut() {
        *v *= jac;
    }
    PolygonMomentTable {
        element: geom.id,
        max_degree,
        values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_geometry;
    use crate::mesh::PolygonCell;

    fn geometry(pts: &[(f64, f64)]) -> ElementGeometry {
        let vertices: Vec<Point2> = pts.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        let cell = PolygonCell::new((0..pts.len()).collect());
        build_geometry(0, &cell, &vertices).unwrap()
    }

    #[test]
    fn unit_square_moments() {
        let g = geometry(&[(0.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)]);
        let m = polygon_moments(&g, 4);
        assert!((m.get(0, 0) - 1.0).abs() < 1e-14);
        assert!(m.get(1, 0).abs() < 1e-14);
        assert!(m.get(0, 1).abs() < 1e-14);
        // ∫ (x - 1/2)^2 / h^2 over the square = 1/12 / 2
        assert!((m.get(2, 0) - 1.0 / 24.0).abs() < 1e-14);
    }

    #[test]
    fn concave_quad_second_moment() {
        let g = geometry(&[(0.0, 0.0), (2.0, 0.0), (1.0, 0.5), (0.0, 2.0)]);
        let m = polygon_moments(&g, 2);
        assert!((m.area() - g.area).abs() < 1e-14);
        assert!(m.get(1, 0).abs() < 1e-13 * g.area);
        assert!(m.get(0, 1).abs() < 1e-13 * g.area);
    }
}
