//! Mesh generators for the unit square, the patch-test layouts and Cook's
//! membrane.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, VemError};
use crate::mesh::{signed_area, Mesh, Point2, PolygonCell};

/// Corners of Cook's tapered panel, counter-clockwise.
pub const COOK_CORNERS: [Point2; 4] = [
    Point2 { x: 0.0, y: 0.0 },
    Point2 { x: 48.0, y: 44.0 },
    Point2 { x: 48.0, y: 60.0 },
    Point2 { x: 0.0, y: 44.0 },
];

pub const UNIT_SQUARE: [Point2; 4] = [
    Point2 { x: 0.0, y: 0.0 },
    Point2 { x: 1.0, y: 0.0 },
    Point2 { x: 1.0, y: 1.0 },
    Point2 { x: 0.0, y: 1.0 },
];

/// Lloyd iterations used for the centroidal Voronoi family.
pub const DEFAULT_LLOYD_ITERS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MeshFamily {
    Squares,
    DistortedConcave,
    Trapezoids,
    Triangles,
    Hexagons,
    NonuniformQuads,
    Voronoi,
    VoronoiRandom,
}

impl MeshFamily {
    pub const ALL: [MeshFamily; 8] = [
        MeshFamily::Squares,
        MeshFamily::DistortedConcave,
        MeshFamily::Trapezoids,
        MeshFamily::Triangles,
        MeshFamily::Hexagons,
        MeshFamily::NonuniformQuads,
        MeshFamily::Voronoi,
        MeshFamily::VoronoiRandom,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MeshFamily::Squares => "squares",
            MeshFamily::DistortedConcave => "distorted",
            MeshFamily::Trapezoids => "trapezoids",
            MeshFamily::Triangles => "triangles",
            MeshFamily::Hexagons => "hexagons",
            MeshFamily::NonuniformQuads => "quads",
            MeshFamily::Voronoi => "voronoi",
            MeshFamily::VoronoiRandom => "voronoi-random",
        }
    }
}

impl fmt::Display for MeshFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MeshFamily {
    type Err = VemError;

    fn from_str(s: &str) -> Result<Self> {
        MeshFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = MeshFamily::ALL.iter().map(|f| f.name()).collect();
                VemError::Config(format!(
                    "unknown mesh family '{s}', expected one of: {}",
                    names.join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    UnitSquare,
    Cook,
}

/// Everything needed to regenerate a mesh deterministically.
///
/// `n` is the number of cells per side for structured families and the
/// square root of the seed count for Voronoi families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GeneratorSpec {
    pub family: MeshFamily,
    pub n: usize,
    pub seed: u64,
    pub lloyd_iters: usize,
    pub domain: Domain,
}

impl GeneratorSpec {
    pub fn new(family: MeshFamily, n: usize) -> Self {
        Self {
            family,
            n,
            seed: 0,
            lloyd_iters: DEFAULT_LLOYD_ITERS,
            domain: Domain::UnitSquare,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn on(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn generate(&self) -> Result<Mesh> {
        if self.n == 0 {
            return Err(VemError::Config("mesh resolution must be at least 1".into()));
        }
        let n = self.n;
        match (self.domain, self.family) {
            (Domain::UnitSquare, MeshFamily::Squares) => unit_square_quads(n),
            (Domain::UnitSquare, MeshFamily::DistortedConcave) => distorted_concave_quads(n),
            (Domain::UnitSquare, MeshFamily::Trapezoids) => trapezoid_collapsing_quads(n),
            (Domain::UnitSquare, MeshFamily::Triangles) => nonuniform_triangles(n, self.seed),
            (Domain::UnitSquare, MeshFamily::Hexagons) => uniform_hexagons(n),
            (Domain::UnitSquare, MeshFamily::NonuniformQuads) => nonuniform_quads(n),
            (Domain::UnitSquare, MeshFamily::Voronoi) => {
                voronoi(n * n, self.lloyd_iters, self.seed)
            }
            (Domain::UnitSquare, MeshFamily::VoronoiRandom) => voronoi(n * n, 0, self.seed),
            (Domain::Cook, MeshFamily::Squares | MeshFamily::NonuniformQuads) => cook_quads(n),
            (Domain::Cook, MeshFamily::Voronoi) => cook_voronoi(n * n, self.lloyd_iters, self.seed),
            (Domain::Cook, MeshFamily::VoronoiRandom) => cook_voronoi(n * n, 0, self.seed),
            (Domain::Cook, family) => Err(VemError::Config(format!(
                "mesh family '{family}' is not available on the Cook domain"
            ))),
        }
    }
}

fn grid_mesh<F>(n: usize, map: F) -> Result<Mesh>
where
    F: Fn(usize, usize) -> Point2,
{
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            vertices.push(map(i, j));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut cells = Vec::with_capacity(n * n);
    for j in 0..n {
        for i in 0..n {
            cells.push(PolygonCell::new(vec![
                id(i, j),
                id(i + 1, j),
                id(i + 1, j + 1),
                id(i, j + 1),
            ]));
        }
    }
    Mesh::new(vertices, cells)
}

pub fn unit_square_quads(n: usize) -> Result<Mesh> {
    let h = 1.0 / n as f64;
    grid_mesh(n, |i, j| Point2::new(i as f64 * h, j as f64 * h))
}

/// Interior vertices move by `±0.3 h` along the diagonal in a checkerboard
/// pattern; cells with four interior corners become darts.
pub fn distorted_concave_quads(n: usize) -> Result<Mesh> {
    let h = 1.0 / n as f64;
    let a = 0.3 * h;
    grid_mesh(n, |i, j| {
        let (x, y) = (i as f64 * h, j as f64 * h);
        if i == 0 || j == 0 || i == n || j == n {
            Point2::new(x, y)
        } else if (i + j) % 2 == 0 {
            Point2::new(x + a, y + a)
        } else {
            Point2::new(x - a, y - a)
        }
    })
}

/// Odd interior horizontal lines zig-zag by `±0.95 h`, giving right
/// trapezoids with one side of length `0.05 h`.
pub fn trapezoid_collapsing_quads(n: usize) -> Result<Mesh> {
    let h = 1.0 / n as f64;
    grid_mesh(n, |i, j| {
        let (x, y) = (i as f64 * h, j as f64 * h);
        if j % 2 == 1 && j < n {
            let shift = if i % 2 == 0 { 0.95 * h } else { -0.95 * h };
            Point2::new(x, y + shift)
        } else {
            Point2::new(x, y)
        }
    })
}

/// Smoothly graded quadrilaterals: grid points shifted by
/// `0.1 sin(2πx) sin(2πy)` in both coordinates.
pub fn nonuniform_quads(n: usize) -> Result<Mesh> {
    let h = 1.0 / n as f64;
    grid_mesh(n, |i, j| {
        let (x, y) = (i as f64 * h, j as f64 * h);
        let s = 0.1 * (2.0 * PI * x).sin() * (2.0 * PI * y).sin();
        // exact zeros on the boundary
        let s = if i == 0 || j == 0 || i == n || j == n { 0.0 } else { s };
        Point2::new(x + s, y + s)
    })
}

/// Delaunay triangulation of a jittered `(n + 1)^2` grid.
pub fn nonuniform_triangles(n: usize, seed: u64) -> Result<Mesh> {
    let h = 1.0 / n as f64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = Vec::with_capacity((n + 1) * (n + 1));
    for j in 0..=n {
        for i in 0..=n {
            let (mut x, mut y) = (i as f64 * h, j as f64 * h);
            let dx = rng.random_range(-0.2..0.2) * h;
            let dy = rng.random_range(-0.2..0.2) * h;
            let on_x = i == 0 || i == n;
            let on_y = j == 0 || j == n;
            if !on_x {
                x += dx;
            }
            if !on_y {
                y += dy;
            }
            vertices.push(Point2::new(x, y));
        }
    }
    let id = |i: usize, j: usize| j * (n + 1) + i;
    let mut tris = Vec::with_capacity(2 * n * n);
    for j in 0..n {
        for i in 0..n {
            tris.push([id(i, j), id(i + 1, j), id(i + 1, j + 1)]);
            tris.push([id(i, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    lawson_flips(&vertices, &mut tris);
    let cells = tris.into_iter().map(|t| PolygonCell::new(t.to_vec())).collect();
    Mesh::new(vertices, cells)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)
}

/// Positive when `d` lies strictly inside the circumcircle of CCW `(a, b, c)`.
fn in_circle(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let (adx, ady) = (a.x - d.x, a.y - d.y);
    let (bdx, bdy) = (b.x - d.x, b.y - d.y);
    let (cdx, cdy) = (c.x - d.x, c.y - d.y);
    let ad = adx * adx + ady * ady;
    let bd = bdx * bdx + bdy * bdy;
    let cd = cdx * cdx + cdy * cdy;
    adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx)
}

fn lawson_flips(p: &[Point2], tris: &mut [[usize; 3]]) {
    for _ in 0..1000 {
        let mut owner: HashMap<(usize, usize), (usize, usize)> = HashMap::new();
        for (t, tri) in tris.iter().enumerate() {
            for e in 0..3 {
                owner.insert((tri[e], tri[(e + 1) % 3]), (t, e));
            }
        }
        let mut flipped = false;
        let mut touched = vec![false; tris.len()];
        for t in 0..tris.len() {
            for e in 0..3 {
                if touched[t] {
                    break;
                }
                let tri = tris[t];
                let (a, b, c) = (tri[e], tri[(e + 1) % 3], tri[(e + 2) % 3]);
                let Some(&(u, f)) = owner.get(&(b, a)) else {
                    continue;
                };
                if touched[u] {
                    continue;
                }
                let d = tris[u][(f + 2) % 3];
                let tol = 1e-12 * (p[a].dist(p[b])).powi(4);
                if in_circle(p[a], p[b], p[c], p[d]) > tol
                    && orient(p[c], p[a], p[d]) > 0.0
                    && orient(p[d], p[b], p[c]) > 0.0
                {
                    tris[t] = [c, a, d];
                    tris[u] = [d, b, c];
                    touched[t] = true;
                    touched[u] = true;
                    flipped = true;
                }
            }
        }
        if !flipped {
            return;
        }
    }
}

/// Merges points closer than `tol` so that neighboring cells share vertex ids.
struct VertexPool {
    tol: f64,
    points: Vec<Point2>,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl VertexPool {
    fn new(tol: f64) -> Self {
        Self {
            tol,
            points: Vec::new(),
            buckets: HashMap::new(),
        }
    }

    fn key(&self, p: Point2) -> (i64, i64) {
        ((p.x / self.tol).floor() as i64, (p.y / self.tol).floor() as i64)
    }

    fn insert(&mut self, p: Point2) -> usize {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        if self.points[id].dist(p) <= self.tol {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.buckets.entry((kx, ky)).or_default().push(id);
        id
    }

    /// Adds a polygon, dropping repeated consecutive ids.
    fn polygon(&mut self, pts: &[Point2]) -> Vec<usize> {
        let mut ids: Vec<usize> = Vec::with_capacity(pts.len());
        for &p in pts {
            let id = self.insert(p);
            if ids.last() != Some(&id) {
                ids.push(id);
            }
        }
        while ids.len() > 1 && ids.first() == ids.last() {
            ids.pop();
        }
        ids
    }
}

/// Keeps the part of `poly` where `n · p <= c`.
fn clip_halfplane(poly: &[Point2], n: [f64; 2], c: f64) -> Vec<Point2> {
    let side = |p: Point2| n[0] * p.x + n[1] * p.y - c;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let a = poly[i];
        let b = poly[(i + 1) % poly.len()];
        let (sa, sb) = (side(a), side(b));
        if sa <= 0.0 {
            out.push(a);
        }
        if (sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0) {
            out.push(a.lerp(b, sa / (sa - sb)));
        }
    }
    out
}

/// Clips `poly` against a convex CCW `domain`.
fn clip_convex(poly: &[Point2], domain: &[Point2]) -> Vec<Point2> {
    let mut out = poly.to_vec();
    for i in 0..domain.len() {
        if out.is_empty() {
            break;
        }
        let a = domain[i];
        let b = domain[(i + 1) % domain.len()];
        // outward normal of a CCW edge
        let n = [b.y - a.y, a.x - b.x];
        out = clip_halfplane(&out, n, n[0] * a.x + n[1] * a.y);
    }
    out
}

fn mesh_from_polygons(polys: Vec<Vec<Point2>>, tol: f64, min_area: f64) -> Result<Mesh> {
    let mut pool = VertexPool::new(tol);
    let mut cells = Vec::with_capacity(polys.len());
    for poly in polys {
        if poly.len() < 3 || signed_area(&poly) <= min_area {
            continue;
        }
        let ids = pool.polygon(&poly);
        if ids.len() >= 3 {
            cells.push(PolygonCell::new(ids));
        }
    }
    Mesh::new(pool.points, cells)
}

/// Pointy-top honeycomb clipped to the unit square, `n` hexagons across.
pub fn uniform_hexagons(n: usize) -> Result<Mesh> {
    let w = 1.0 / n as f64;
    let rows = ((2.0 * n as f64) / 3f64.sqrt()).round().max(1.0) as usize;
    let height = 4.0 / (3.0 * rows as f64);
    let mut polys = Vec::new();
    for j in 0..=rows {
        let cy = j as f64 / rows as f64;
        let (offset, count) = if j % 2 == 0 { (0.5 * w, n) } else { (0.0, n + 1) };
        for i in 0..count {
            let cx = offset + i as f64 * w;
            let hex = [
                Point2::new(cx, cy - 0.5 * height),
                Point2::new(cx + 0.5 * w, cy - 0.25 * height),
                Point2::new(cx + 0.5 * w, cy + 0.25 * height),
                Point2::new(cx, cy + 0.5 * height),
                Point2::new(cx - 0.5 * w, cy + 0.25 * height),
                Point2::new(cx - 0.5 * w, cy - 0.25 * height),
            ];
            polys.push(clip_convex(&hex, &UNIT_SQUARE));
        }
    }
    mesh_from_polygons(polys, 1e-10 * w, 1e-6 * w * w)
}

/// Voronoi tessellation of the unit square.
pub fn voronoi(n_seeds: usize, lloyd_iters: usize, seed: u64) -> Result<Mesh> {
    voronoi_in(&UNIT_SQUARE, n_seeds, lloyd_iters, seed)
}

pub fn cook_voronoi(n_seeds: usize, lloyd_iters: usize, seed: u64) -> Result<Mesh> {
    voronoi_in(&COOK_CORNERS, n_seeds, lloyd_iters, seed)
}

/// Voronoi tessellation of a convex CCW domain with `lloyd_iters` centroidal
/// relaxation steps from uniformly random seeds.
pub fn voronoi_in(domain: &[Point2], n_seeds: usize, lloyd_iters: usize, seed: u64) -> Result<Mesh> {
    if n_seeds < 2 {
        return Err(VemError::Config("Voronoi meshes need at least two seeds".into()));
    }
    let (_, cells) = voronoi_seeds(domain, n_seeds, lloyd_iters, seed);
    let diam = crate::mesh::diameter(domain);
    let area = signed_area(domain);
    mesh_from_polygons(cells, 1e-10 * diam, 1e-12 * area)
}

/// Relaxed seeds and their clipped Voronoi cells.
pub fn voronoi_seeds(
    domain: &[Point2],
    n_seeds: usize,
    lloyd_iters: usize,
    seed: u64,
) -> (Vec<Point2>, Vec<Vec<Point2>>) {
    let mut seeds = random_seeds(domain, n_seeds, seed);
    let mut cells = voronoi_cells(domain, &seeds);
    for _ in 0..lloyd_iters {
        seeds = cells
            .iter()
            .zip(&seeds)
            .map(|(c, &s)| polygon_centroid(c).unwrap_or(s))
            .collect();
        cells = voronoi_cells(domain, &seeds);
    }
    (seeds, cells)
}

fn random_seeds(domain: &[Point2], n: usize, seed: u64) -> Vec<Point2> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (domain[0], domain[0]);
    for p in domain {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let min_sep = 1e-6 * lo.dist(hi);
    let mut seeds: Vec<Point2> = Vec::with_capacity(n);
    while seeds.len() < n {
        let p = Point2::new(rng.random_range(lo.x..hi.x), rng.random_range(lo.y..hi.y));
        if !crate::mesh::point_in_polygon(p, domain) {
            continue;
        }
        // a duplicate seed is redrawn
        if seeds.iter().any(|s| s.dist(p) < min_sep) {
            continue;
        }
        seeds.push(p);
    }
    seeds
}

fn polygon_centroid(pts: &[Point2]) -> Option<Point2> {
    if pts.len() < 3 {
        return None;
    }
    let a = signed_area(pts);
    if a <= 0.0 {
        return None;
    }
    let (mut cx, mut cy) = (0.0, 0.0);
    let o = pts[0];
    for i in 0..pts.len() {
        let p = Point2::new(pts[i].x - o.x, pts[i].y - o.y);
        let q = pts[(i + 1) % pts.len()];
        let q = Point2::new(q.x - o.x, q.y - o.y);
        let cross = p.x * q.y - q.x * p.y;
        cx += (p.x + q.x) * cross;
        cy += (p.y + q.y) * cross;
    }
    Some(Point2::new(o.x + cx / (6.0 * a), o.y + cy / (6.0 * a)))
}

/// Cell of every seed by half-plane clipping, visiting neighbors through a
/// bucket grid in growing rings.
fn voronoi_cells(domain: &[Point2], seeds: &[Point2]) -> Vec<Vec<Point2>> {
    let (mut lo, mut hi) = (domain[0], domain[0]);
    for p in domain {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let nb = ((seeds.len() as f64).sqrt().ceil() as usize).max(1);
    let bw = ((hi.x - lo.x) / nb as f64).max((hi.y - lo.y) / nb as f64);
    let bucket_of = |p: Point2| -> (i64, i64) {
        (
            (((p.x - lo.x) / bw).floor() as i64).clamp(0, nb as i64 - 1),
            (((p.y - lo.y) / bw).floor() as i64).clamp(0, nb as i64 - 1),
        )
    };
    let mut grid: Vec<Vec<usize>> = vec![Vec::new(); nb * nb];
    for (i, &s) in seeds.iter().enumerate() {
        let (bx, by) = bucket_of(s);
        grid[by as usize * nb + bx as usize].push(i);
    }
    seeds
        .iter()
        .enumerate()
        .map(|(i, &s)| {
            let (bx, by) = bucket_of(s);
            let mut cell = domain.to_vec();
            let mut ring: i64 = 0;
            loop {
                for gy in (by - ring)..=(by + ring) {
                    for gx in (bx - ring)..=(bx + ring) {
                        if (gy - by).abs() != ring && (gx - bx).abs() != ring {
                            continue;
                        }
                        if gx < 0 || gy < 0 || gx >= nb as i64 || gy >= nb as i64 {
                            continue;
                        }
                        for &j in &grid[gy as usize * nb + gx as usize] {
                            if j == i {
                                continue;
                            }
                            let t = seeds[j];
                            let n = [t.x - s.x, t.y - s.y];
                            let mid = s.lerp(t, 0.5);
                            cell = clip_halfplane(&cell, n, n[0] * mid.x + n[1] * mid.y);
                        }
                    }
                }
                let reach = cell.iter().map(|p| p.dist(s)).fold(0.0, f64::max);
                if ring as f64 * bw >= 2.0 * reach || ring as usize > nb {
                    break;
                }
                ring += 1;
            }
            cell
        })
        .collect()
}

/// Five-cell patch: a square of side 1/3 rotated by π/3 about the center,
/// joined to the outer corners by four concave quadrilaterals.
pub fn patch_mesh_1a() -> Result<Mesh> {
    let inner = rotated_inner_square();
    let mut vertices = UNIT_SQUARE.to_vec();
    vertices.extend_from_slice(&inner);
    let mut cells: Vec<PolygonCell> = (0..4)
        .map(|i| PolygonCell::new(vec![i, (i + 1) % 4, 4 + (i + 1) % 4, 4 + i]))
        .collect();
    cells.push(PolygonCell::new(vec![4, 5, 6, 7]));
    Mesh::new(vertices, cells)
}

/// As [`patch_mesh_1a`], with each side midpoint of the inner square pushed
/// toward the center by a quarter of the side, giving a star-shaped octagon
/// and four concave pentagons.
pub fn patch_mesh_1b() -> Result<Mesh> {
    let inner = rotated_inner_square();
    let center = Point2::new(0.5, 0.5);
    let side = 1.0 / 3.0;
    let mut vertices = UNIT_SQUARE.to_vec();
    vertices.extend_from_slice(&inner);
    for i in 0..4 {
        let mid = inner[i].lerp(inner[(i + 1) % 4], 0.5);
        let d = mid.dist(center);
        let t = 0.25 * side / d;
        vertices.push(mid.lerp(center, t));
    }
    let mut cells: Vec<PolygonCell> = (0..4)
        .map(|i| PolygonCell::new(vec![i, (i + 1) % 4, 4 + (i + 1) % 4, 8 + i, 4 + i]))
        .collect();
    cells.push(PolygonCell::new((0..4).flat_map(|i| [4 + i, 8 + i]).collect()));
    Mesh::new(vertices, cells)
}

fn rotated_inner_square() -> [Point2; 4] {
    let r = (1.0 / 3.0) / 2f64.sqrt();
    let mut out = [Point2::default(); 4];
    for (i, p) in out.iter_mut().enumerate() {
        let angle = 1.25 * PI + 0.5 * PI * i as f64 + PI / 3.0;
        *p = Point2::new(0.5 + r * angle.cos(), 0.5 + r * angle.sin());
    }
    out
}

/// Bilinear image of an `n x n` grid on Cook's panel.
pub fn cook_quads(n: usize) -> Result<Mesh> {
    let h = 1.0 / n as f64;
    grid_mesh(n, |i, j| cook_map(i as f64 * h, j as f64 * h))
}

pub fn cook_map(s: f64, t: f64) -> Point2 {
    Point2::new(48.0 * s, 44.0 * s + t * (44.0 - 28.0 * s))
}
