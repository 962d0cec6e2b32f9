#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vem_core::mesh::{build_geometry, signed_area, ElementGeometry, Point2, PolygonCell};
use vem_core::polynomial::Poly2;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn is_convex(pts: &[Point2]) -> bool {
    let m = pts.len();
    (0..m).all(|i| {
        let (a, b, c) = (pts[i], pts[(i + 1) % m], pts[(i + 2) % m]);
        (b.x - a.x) * (c.y - b.y) - (b.y - a.y) * (c.x - b.x) > 0.0
    })
}

/// Star-shaped polygon with `m` vertices around a random center.
///
/// Convex polygons use points on an ellipse; concave ones alternate radii
/// until at least one reflex vertex appears.
pub fn random_polygon(rng: &mut ChaCha8Rng, m: usize, concave: bool) -> Vec<Point2> {
    loop {
        let cx = rng.random_range(-2.0..2.0);
        let cy = rng.random_range(-2.0..2.0);
        let scale = rng.random_range(0.2..3.0);
        let aspect = rng.random_range(0.6..1.0);
        let rot = rng.random_range(0.0..std::f64::consts::TAU);
        // angles with a minimum gap so no edge degenerates
        let gap = 0.35 * std::f64::consts::TAU / m as f64;
        let mut angles: Vec<f64> = (0..m)
            .map(|i| {
                std::f64::consts::TAU * i as f64 / m as f64
                    + rng.random_range(0.0..(std::f64::consts::TAU / m as f64 - gap))
            })
            .collect();
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let pts: Vec<Point2> = angles
            .iter()
            .enumerate()
            .map(|(i, &t)| {
                let r = if concave {
                    if i % 2 == 0 {
                        1.0
                    } else {
                        rng.random_range(0.3..0.6)
                    }
                } else {
                    1.0
                };
                let (x, y) = (r * t.cos(), aspect * r * t.sin());
                let (s, c) = rot.sin_cos();
                Point2::new(cx + scale * (c * x - s * y), cy + scale * (s * x + c * y))
            })
            .collect();
        if signed_area(&pts) <= 0.0 {
            continue;
        }
        if concave == !is_convex(&pts) || (concave && m < 4) {
            return pts;
        }
    }
}

pub fn geometry(pts: &[Point2]) -> ElementGeometry {
    build_geometry(0, &PolygonCell::new((0..pts.len()).collect()), pts).unwrap()
}

/// Area by ear clipping of a simple CCW polygon.
pub fn ear_clip_area(pts: &[Point2]) -> f64 {
    let mut idx: Vec<usize> = (0..pts.len()).collect();
    let mut area = 0.0;
    let cross = |a: Point2, b: Point2, c: Point2| (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    while idx.len() > 3 {
        let n = idx.len();
        let mut clipped = false;
        for i in 0..n {
            let (a, b, c) = (pts[idx[(i + n - 1) % n]], pts[idx[i]], pts[idx[(i + 1) % n]]);
            if cross(a, b, c) <= 0.0 {
                continue;
            }
            let blocked = idx.iter().any(|&j| {
                let p = pts[j];
                p != a && p != b && p != c && cross(a, b, p) >= 0.0 && cross(b, c, p) >= 0.0 && cross(c, a, p) >= 0.0
            });
            if !blocked {
                area += 0.5 * cross(a, b, c);
                idx.remove(i);
                clipped = true;
                break;
            }
        }
        assert!(clipped, "no ear found");
    }
    area + 0.5 * cross(pts[idx[0]], pts[idx[1]], pts[idx[2]])
}

/// Coefficients of `(p + q t)^n` in powers of `t`.
fn binomial_expand(p: f64, q: f64, n: u32) -> Vec<f64> {
    let mut c = vec![1.0];
    for _ in 0..n {
        let mut next = vec![0.0; c.len() + 1];
        for (i, v) in c.iter().enumerate() {
            next[i] += v * p;
            next[i + 1] += v * q;
        }
        c = next;
    }
    c
}

/// `∫ x^a y^b` over a simple polygon by the divergence theorem,
/// `∮ x^(a+1) y^b / (a+1) dy`, with the edge integrals expanded exactly.
pub fn green_monomial(pts: &[Point2], a: u32, b: u32) -> f64 {
    let m = pts.len();
    let mut total = 0.0;
    for i in 0..m {
        let (p, q) = (pts[i], pts[(i + 1) % m]);
        let xs = binomial_expand(p.x, q.x - p.x, a + 1);
        let ys = binomial_expand(p.y, q.y - p.y, b);
        let dy = q.y - p.y;
        for (i, xv) in xs.iter().enumerate() {
            for (j, yv) in ys.iter().enumerate() {
                total += xv * yv * dy / (i + j + 1) as f64;
            }
        }
    }
    total / (a + 1) as f64
}

pub fn green_integral(pts: &[Point2], p: &Poly2) -> f64 {
    p.terms().map(|((a, b), c)| c * green_monomial(pts, a, b)).sum()
}

/// Polygon vertices in the scaled coordinates of `geom`.
pub fn scaled_vertices(geom: &ElementGeometry) -> Vec<Point2> {
    geom.vertices
        .iter()
        .map(|&p| {
            let (x, y) = geom.scaled_coords(p);
            Point2::new(x, y)
        })
        .collect()
}

/// `p(x(ξ, η), y(ξ, η))`.
pub fn compose(p: &Poly2, x: &Poly2, y: &Poly2) -> Poly2 {
    let mut out = Poly2::zero();
    for ((a, b), c) in p.terms() {
        let mut term = Poly2::constant(c);
        for _ in 0..a {
            term = &term * x;
        }
        for _ in 0..b {
            term = &term * y;
        }
        out = &out + &term;
    }
    out
}

/// Rewrites a polynomial in scaled element coordinates as one in `(x, y)`.
pub fn to_physical(p: &Poly2, geom: &ElementGeometry) -> Poly2 {
    let h = geom.diameter;
    let mut xi = Poly2::monomial(1, 0, 1.0 / h);
    xi.add_term(0, 0, -geom.centroid.x / h);
    let mut eta = Poly2::monomial(0, 1, 1.0 / h);
    eta.add_term(0, 0, -geom.centroid.y / h);
    compose(p, &xi, &eta)
}

/// Rewrites a polynomial in `(x, y)` in scaled element coordinates.
pub fn to_scaled(p: &Poly2, geom: &ElementGeometry) -> Poly2 {
    let h = geom.diameter;
    let mut x = Poly2::monomial(1, 0, h);
    x.add_term(0, 0, geom.centroid.x);
    let mut y = Poly2::monomial(0, 1, h);
    y.add_term(0, 0, geom.centroid.y);
    compose(p, &x, &y)
}

/// Random polynomial of total degree `deg` with coefficients in `[-1, 1]`.
pub fn random_poly(rng: &mut ChaCha8Rng, deg: u32) -> Poly2 {
    let mut p = Poly2::zero();
    for d in 0..=deg {
        for b in 0..=d {
            p.add_term(d - b, b, rng.random_range(-1.0..1.0));
        }
    }
    p
}

/// Coefficient vector of a scaled-coordinate field `(u, v)` of degree `k`,
/// interleaved as `(u_j, v_j)` per Pascal-ordered monomial.
pub fn coefficient_vector(u: &Poly2, v: &Poly2, k: usize) -> Vec<f64> {
    let n = (k + 1) * (k + 2) / 2;
    let mut out = vec![0.0; 2 * n];
    for (comp, p) in [u, v].into_iter().enumerate() {
        for ((a, b), c) in p.terms() {
            assert!((a + b) as usize <= k);
            let d = (a + b) as usize;
            out[2 * (d * (d + 1) / 2 + b as usize) + comp] += c;
        }
    }
    out
}

/// Dof vector of the interpolant of a scaled-coordinate field: nodal values
/// on the boundary and scaled moments against `P_{k-2}`, the latter by the
/// Green oracle.
pub fn interpolant_dofs(
    geom: &ElementGeometry,
    k: usize,
    boundary_nodes: &[Point2],
    u: &Poly2,
    v: &Poly2,
) -> Vec<f64> {
    let mut out = Vec::new();
    for &p in boundary_nodes {
        let (xi, eta) = geom.scaled_coords(p);
        out.push(u.eval(xi, eta));
        out.push(v.eval(xi, eta));
    }
    if k >= 2 {
        let pts = scaled_vertices(geom);
        let scaled_area = geom.area / (geom.diameter * geom.diameter);
        for d in 0..=(k as u32 - 2) {
            for b in 0..=d {
                let m = Poly2::monomial(d - b, b, 1.0);
                out.push(green_integral(&pts, &(u * &m)) / scaled_area);
                out.push(green_integral(&pts, &(v * &m)) / scaled_area);
            }
        }
    }
    out
}

/// Interpolant dof vector of a physical polynomial field on a whole mesh.
pub fn global_interpolant(disc: &vem_core::Discretization, field: &vem_core::polynomial::PolyField) -> Vec<f64> {
    let k = disc.order();
    let mut out = vec![0.0; disc.dofs.num_dofs()];
    for (c, geom) in disc.geometries.iter().enumerate() {
        let u = to_scaled(&field.u, geom);
        let v = to_scaled(&field.v, geom);
        let nodes = disc.kernel.boundary_nodes(geom);
        let local = interpolant_dofs(geom, k, &nodes, &u, &v);
        for (i, g) in disc.dofs.cell_dofs(c).into_iter().enumerate() {
            out[g] = local[i];
        }
    }
    out
}

/// Single-cell mesh of a polygon.
pub fn single_cell_mesh(pts: Vec<Point2>) -> vem_core::Mesh {
    let n = pts.len();
    vem_core::Mesh::new(pts, vec![PolygonCell::new((0..n).collect())]).unwrap()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn max_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}
