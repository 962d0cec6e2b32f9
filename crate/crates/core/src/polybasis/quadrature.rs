//! One-dimensional Gauss rules, triangle rules and the signed-fan polygon rule.

use crate::mesh::Point2;

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for j in 2..=n {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-300 {
        0.5 * nf * (nf + 1.0) * x.powi(n as i32 + 1)
    } else {
        nf * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, dp)
}

/// Gauss-Legendre nodes (ascending) and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    (nodes, weights)
}

/// Gauss-Lobatto rule with `p` points on `[-1, 1]`, endpoints included.
///
/// Exact for polynomials of degree `2p - 3`. The interior nodes double as the
/// edge degrees of freedom of the order `p - 1` element.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLobattoRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLobattoRule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn interior_nodes(&self) -> &[f64] {
        &self.nodes[1..self.nodes.len() - 1]
    }
}

pub fn gauss_lobatto(p: usize) -> GaussLobattoRule {
    assert!(p >= 2, "Gauss-Lobatto needs at least two points");
    let (nodes, weights) = match p {
        2 => (vec![-1.0, 1.0], vec![1.0, 1.0]),
        3 => (vec![-1.0, 0.0, 1.0], vec![1.0 / 3.0, 4.0 / 3.0, 1.0 / 3.0]),
        4 => {
            let a = 1.0 / 5f64.sqrt();
            (vec![-1.0, -a, a, 1.0], vec![1.0 / 6.0, 5.0 / 6.0, 5.0 / 6.0, 1.0 / 6.0])
        }
        5 => {
            let a = (3.0 / 7.0f64).sqrt();
            (
                vec![-1.0, -a, 0.0, a, 1.0],
                vec![0.1, 49.0 / 90.0, 32.0 / 45.0, 49.0 / 90.0, 0.1],
            )
        }
        6 => {
            let s7 = 7f64.sqrt();
            let inner = ((7.0 - 2.0 * s7) / 21.0).sqrt();
            let outer = ((7.0 + 2.0 * s7) / 21.0).sqrt();
            let w_inner = (14.0 + s7) / 30.0;
            let w_outer = (14.0 - s7) / 30.0;
            (
                vec![-1.0, -outer, -inner, inner, outer, 1.0],
                vec![1.0 / 15.0, w_outer, w_inner, w_inner, w_outer, 1.0 / 15.0],
            )
        }
        _ => gauss_lobatto_newton(p),
    };
    GaussLobattoRule { nodes, weights }
}

/// Interior nodes are the roots of `P'_{p-1}`, found by Newton iteration
/// started from the Chebyshev-Gauss-Lobatto points.
fn gauss_lobatto_newton(p: usize) -> (Vec<f64>, Vec<f64>) {
    let n = p - 1;
    let nf = n as f64;
    let mut nodes = vec![0.0; p];
    for (i, x) in nodes.iter_mut().enumerate() {
        *x = -(std::f64::consts::PI * i as f64 / nf).cos();
    }
    for x in nodes.iter_mut().take(p - 1).skip(1) {
        for _ in 0..100 {
            // Newton on P'_n using P''_n from the Legendre ODE
            let (pn, dpn) = legendre(n, *x);
            let d2 = (2.0 * *x * dpn - nf * (nf + 1.0) * pn) / (1.0 - *x * *x);
            let dx = dpn / d2;
            *x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
    }
    let weights = nodes
        .iter()
        .map(|&x| {
            let (pn, _) = legendre(n, x);
            2.0 / (nf * (nf + 1.0) * pn * pn)
        })
        .collect();
    (nodes, weights)
}

/// Symmetric rule on a triangle, barycentric points with weights summing to one.
#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub degree: usize,
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
}

fn orbit3(a: f64, w: f64, points: &mut Vec<[f64; 3]>, weights: &mut Vec<f64>) {
    let b = 1.0 - 2.0 * a;
    for p in [[a, a, b], [a, b, a], [b, a, a]] {
        points.push(p);
        weights.push(w);
    }
}

/// Rule exact for polynomials of total degree `degree`.
///
/// Degrees up to 5 use tabulated symmetric rules (1, 3, 6 and 7 points);
/// higher degrees use a collapsed tensor Gauss-Legendre rule.
pub fn triangle_rule(degree: usize) -> TriangleRule {
    let mut points = Vec::new();
    let mut weights = Vec::new();
    match degree {
        0 | 1 => {
            points.push([1.0 / 3.0; 3]);
            weights.push(1.0);
        }
        2 => orbit3(1.0 / 6.0, 1.0 / 3.0, &mut points, &mut weights),
        3 | 4 => {
            orbit3(0.445948490915965, 0.223381589678011, &mut points, &mut weights);
            orbit3(0.091576213509771, 0.109951743655322, &mut points, &mut weights);
        }
        5 => {
            let s15 = 15f64.sqrt();
            points.push([1.0 / 3.0; 3]);
            weights.push(9.0 / 40.0);
            orbit3((6.0 - s15) / 21.0, (155.0 - s15) / 1200.0, &mut points, &mut weights);
            orbit3((6.0 + s15) / 21.0, (155.0 + s15) / 1200.0, &mut points, &mut weights);
        }
        _ => {
            // (u, v) in the unit square -> (u, (1 - u) v); Jacobian (1 - u)
            let q = (degree + 2).div_ceil(2);
            let (x, w) = gauss_legendre(q);
            for i in 0..q {
                let u = 0.5 * (x[i] + 1.0);
                for j in 0..q {
                    let v = 0.5 * (x[j] + 1.0);
                    let l1 = u;
                    let l2 = (1.0 - u) * v;
                    points.push([1.0 - l1 - l2, l1, l2]);
                    // reference area is 1/2, weights normalized to sum 1
                    weights.push(2.0 * 0.25 * w[i] * w[j] * (1.0 - u));
                }
            }
        }
    }
    TriangleRule {
        degree,
        points,
        weights,
    }
}

/// Quadrature points and signed weights over a simple polygon.
///
/// The polygon is split into the fan of triangles `(v0, v_i, v_{i+1})`; each
/// triangle contributes with its signed area, so the rule integrates
/// polynomials exactly on concave polygons as well.
pub fn polygon_quadrature(vertices: &[Point2], degree: usize) -> Vec<(Point2, f64)> {
    let rule = triangle_rule(degree);
    let o = vertices[0];
    let mut out = Vec::with_capacity(rule.points.len() * (vertices.len() - 2));
    for i in 1..vertices.len() - 1 {
        let a = vertices[i];
        let b = vertices[i + 1];
        let area = 0.5 * ((a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y));
        for (l, w) in rule.points.iter().zip(&rule.weights) {
            let p = Point2::new(
                l[0] * o.x + l[1] * a.x + l[2] * b.x,
                l[0] * o.y + l[1] * a.y + l[2] * b.y,
            );
            out.push((p, w * area));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: usize) -> f64 {
        (1..=n).map(|i| i as f64).product()
    }

    #[test]
    fn lobatto_small_rules() {
        let r2 = gauss_lobatto(2);
        assert_eq!(r2.nodes, vec![-1.0, 1.0]);
        assert_eq!(r2.weights, vec![1.0, 1.0]);
        let r3 = gauss_lobatto(3);
        assert_eq!(r3.nodes, vec![-1.0, 0.0, 1.0]);
        let r4 = gauss_lobatto(4);
        assert!((r4.nodes[2] - 1.0 / 5f64.sqrt()).abs() < 1e-16);
        assert!((r4.weights[1] - 5.0 / 6.0).abs() < 1e-16);
    }

    #[test]
    fn lobatto_newton_matches_tables() {
        for p in 3..=6 {
            let table = gauss_lobatto(p);
            let (nodes, weights) = gauss_lobatto_newton(p);
            for i in 0..p {
                assert!((table.nodes[i] - nodes[i]).abs() < 1e-14, "p={p}");
                assert!((table.weights[i] - weights[i]).abs() < 1e-14, "p={p}");
            }
        }
    }

    #[test]
    fn lobatto_exactness_high_order() {
        for p in 7..=12 {
            let r = gauss_lobatto(p);
            assert!((r.weights.iter().sum::<f64>() - 2.0).abs() < 1e-13);
            for d in 0..=(2 * p - 3) {
                let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
                let q: f64 = r
                    .nodes
                    .iter()
                    .zip(&r.weights)
                    .map(|(x, w)| w * x.powi(d as i32))
                    .sum();
                assert!((q - exact).abs() < 1e-13, "p={p} d={d}");
            }
        }
    }

    #[test]
    fn gauss_legendre_exactness() {
        for n in 1..=12 {
            let (x, w) = gauss_legendre(n);
            for d in 0..2 * n {
                let exact = if d % 2 == 0 { 2.0 / (d as f64 + 1.0) } else { 0.0 };
                let q: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert!((q - exact).abs() < 1e-14, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn triangle_rules_are_exact() {
        // reference triangle (0,0),(1,0),(0,1): int x^a y^b = a! b! / (a+b+2)!
        for degree in 0..=12 {
            let rule = triangle_rule(degree);
            for d in 0..=degree {
                for b in 0..=d {
                    let a = d - b;
                    let exact = factorial(a) * factorial(b) / factorial(a + b + 2);
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(l, w)| 0.5 * w * l[1].powi(a as i32) * l[2].powi(b as i32))
                        .sum();
                    assert!(
                        (q - exact).abs() < 1e-14,
                        "degree {degree}: x^{a} y^{b} gives {q}, expected {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn fan_rule_on_concave_polygon() {
        let pts = [
            Point2::new(0.0, 0.0),
            Point2::new(2.0, 0.0),
            Point2::new(1.0, 0.5),
            Point2::new(0.0, 2.0),
        ];
        let area: f64 = polygon_quadrature(&pts, 1).iter().map(|(_, w)| w).sum();
        // triangles (0,0),(2,0),(1,0.5) and (0,0),(1,0.5),(0,2)
        assert!((area - (0.5 + 1.0)).abs() < 1e-15);
    }
}
