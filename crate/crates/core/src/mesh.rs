//! Polygonal meshes and per-element geometry.
//!
//! A [`Mesh`] owns its vertex coordinates and counter-clockwise polygon
//! cells, and derives an edge table keyed by the unordered vertex pair. An
//! edge is shared by at most two cells; edges with a single cell form the
//! domain boundary. A vertex sitting in the middle of a neighbor's side
//! (a "hanging" node) is simply listed by both polygons, so no special
//! treatment is needed downstream.

use std::collections::HashMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, VemError};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: Point2, t: f64) -> Point2 {
        Point2::new(
            self.x + t * (other.x - self.x),
            self.y + t * (other.y - self.y),
        )
    }
}

/// Ordered vertex indices of one polygon (counter-clockwise once inside a [`Mesh`]).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolygonCell {
    pub vertex_ids: Vec<usize>,
}

impl PolygonCell {
    pub fn new(vertex_ids: Vec<usize>) -> Self {
        Self { vertex_ids }
    }

    pub fn len(&self) -> usize {
        self.vertex_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertex_ids.is_empty()
    }

    /// Local edge `i` runs from vertex `i` to vertex `i + 1` (cyclically).
    pub fn edge_vertices(&self, i: usize) -> (usize, usize) {
        let m = self.vertex_ids.len();
        (self.vertex_ids[i], self.vertex_ids[(i + 1) % m])
    }
}

/// One mesh edge. `vertices` is stored as (low id, high id).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub vertices: [usize; 2],
    pub cells: (usize, Option<usize>),
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.cells.1.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point2>,
    cells: Vec<PolygonCell>,
    edges: Vec<Edge>,
    cell_edges: Vec<Vec<usize>>,
}

impl Mesh {
    /// Validates the cells, normalizes clockwise cells to counter-clockwise and
    /// builds the edge table.
    pub fn new(vertices: Vec<Point2>, cells: Vec<PolygonCell>) -> Result<Self> {
        for (i, v) in vertices.iter().enumerate() {
            if !v.x.is_finite() || !v.y.is_finite() {
                return Err(VemError::InvalidMesh(format!(
                    "vertex {i} has non-finite coordinates"
                )));
            }
        }
        let mut cells = cells;
        let mut used = vec![false; vertices.len()];
        for (c, cell) in cells.iter_mut().enumerate() {
            validate_cell(c, cell, &vertices)?;
            if signed_area(&cell_points(cell, &vertices)) < 0.0 {
                cell.vertex_ids.reverse();
            }
            for &v in &cell.vertex_ids {
                used[v] = true;
            }
        }
        if let Some(v) = used.iter().position(|u| !u) {
            return Err(VemError::InvalidMesh(format!(
                "vertex {v} is not referenced by any cell"
            )));
        }

        let mut lookup: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edges: Vec<Edge> = Vec::new();
        let mut directions: Vec<(usize, usize)> = Vec::new();
        let mut cell_edges = Vec::with_capacity(cells.len());
        for (c, cell) in cells.iter().enumerate() {
            let mut ids = Vec::with_capacity(cell.len());
            for i in 0..cell.len() {
                let (a, b) = cell.edge_vertices(i);
                let key = (a.min(b), a.max(b));
                match lookup.get(&key) {
                    None => {
                        lookup.insert(key, edges.len());
                        ids.push(edges.len());
                        edges.push(Edge {
                            vertices: [key.0, key.1],
                            cells: (c, None),
                        });
                        directions.push((a, b));
                    }
                    Some(&e) => {
                        if edges[e].cells.1.is_some() {
                            return Err(VemError::InvalidMesh(format!(
                                "edge ({}, {}) is shared by more than two cells",
                                key.0, key.1
                            )));
                        }
                        if directions[e] == (a, b) {
                            return Err(VemError::InvalidMesh(format!(
                                "cells {} and {c} overlap along edge ({}, {})",
                                edges[e].cells.0, key.0, key.1
                            )));
                        }
                        edges[e].cells.1 = Some(c);
                        ids.push(e);
                    }
                }
            }
            cell_edges.push(ids);
        }

        let mut degree = vec![0usize; vertices.len()];
        for e in edges.iter().filter(|e| e.is_boundary()) {
            degree[e.vertices[0]] += 1;
            degree[e.vertices[1]] += 1;
        }
        if let Some(v) = degree.iter().position(|d| d % 2 == 1) {
            return Err(VemError::InvalidMesh(format!(
                "boundary is not closed at vertex {v}"
            )));
        }

        Ok(Self {
            vertices,
            cells,
            edges,
            cell_edges,
        })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i]
    }

    pub fn cells(&self) -> &[PolygonCell] {
        &self.cells
    }

    pub fn cell(&self, c: usize) -> &PolygonCell {
        &self.cells[c]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Global edge ids of cell `c`, aligned with its local edge numbering.
    pub fn cell_edges(&self, c: usize) -> &[usize] {
        &self.cell_edges[c]
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = (usize, &Edge)> {
        self.edges.iter().enumerate().filter(|(_, e)| e.is_boundary())
    }

    pub fn cell_points(&self, c: usize) -> Vec<Point2> {
        cell_points(&self.cells[c], &self.vertices)
    }

    pub fn geometry(&self, c: usize) -> Result<ElementGeometry> {
        build_geometry(c, &self.cells[c], &self.vertices)
    }

    pub fn geometries(&self) -> Result<Vec<ElementGeometry>> {
        (0..self.num_cells()).map(|c| self.geometry(c)).collect()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| signed_area(&self.cell_points(c)))
            .sum()
    }

    /// Largest element diameter.
    pub fn max_diameter(&self) -> f64 {
        (0..self.num_cells())
            .map(|c| diameter(&self.cell_points(c)))
            .fold(0.0, f64::max)
    }

    pub fn bounding_box(&self) -> (Point2, Point2) {
        let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &self.vertices {
            lo.x = lo.x.min(p.x);
            lo.y = lo.y.min(p.y);
            hi.x = hi.x.max(p.x);
            hi.y = hi.y.max(p.y);
        }
        (lo, hi)
    }

    /// First cell containing `p` (boundary points count as inside).
    pub fn locate(&self, p: Point2) -> Option<usize> {
        (0..self.num_cells()).find(|&c| point_in_polygon(p, &self.cell_points(c)))
    }

    /// Cell whose boundary is closest to `p`.
    pub fn nearest_cell(&self, p: Point2) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for c in 0..self.num_cells() {
            let pts = self.cell_points(c);
            for i in 0..pts.len() {
                let d = segment_distance(p, pts[i], pts[(i + 1) % pts.len()]);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
        }
        best
    }

    pub fn nearest_vertex(&self, p: Point2) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, v) in self.vertices.iter().enumerate() {
            let d = v.dist(p);
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }

    pub fn to_json(&self) -> String {
        let file = MeshFile {
            vertices: self.vertices.iter().map(|p| [p.x, p.y]).collect(),
            cells: self.cells.iter().map(|c| c.vertex_ids.clone()).collect(),
        };
        serde_json::to_string(&file).expect("mesh serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: MeshFile =
            serde_json::from_str(text).map_err(|e| VemError::MeshParse(e.to_string()))?;
        let vertices = file
            .vertices
            .into_iter()
            .map(|[x, y]| Point2::new(x, y))
            .collect();
        let cells = file.cells.into_iter().map(PolygonCell::new).collect();
        Mesh::new(vertices, cells).map_err(|e| VemError::MeshParse(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct MeshFile {
    vertices: Vec<[f64; 2]>,
    cells: Vec<Vec<usize>>,
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let text = fs::read_to_string(path)?;
    Mesh::from_json(&text)
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, mesh.to_json())?;
    Ok(())
}

fn cell_points(cell: &PolygonCell, vertices: &[Point2]) -> Vec<Point2> {
    cell.vertex_ids.iter().map(|&i| vertices[i]).collect()
}

fn validate_cell(c: usize, cell: &PolygonCell, vertices: &[Point2]) -> Result<()> {
    let invalid = |reason: String| VemError::InvalidCell { cell: c, reason };
    if cell.len() < 3 {
        return Err(invalid(format!("{} vertices, need at least 3", cell.len())));
    }
    for &v in &cell.vertex_ids {
        if v >= vertices.len() {
            return Err(invalid(format!(
                "vertex index {v} out of range ({} vertices)",
                vertices.len()
            )));
        }
    }
    let mut sorted = cell.vertex_ids.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(invalid("repeated vertex".into()));
    }
    let pts = cell_points(cell, vertices);
    let area = signed_area(&pts);
    let scale = diameter(&pts);
    if !(area.abs() > 1e-14 * scale * scale) {
        return Err(invalid(format!("degenerate polygon (area {area:e})")));
    }
    if !is_simple(&pts) {
        return Err(invalid("polygon is self-intersecting".into()));
    }
    Ok(())
}

/// Shoelace area, positive for counter-clockwise polygons.
pub fn signed_area(pts: &[Point2]) -> f64 {
    let o = pts[0];
    let m = pts.len();
    let mut twice = 0.0;
    for i in 1..m - 1 {
        let a = pts[i];
        let b = pts[i + 1];
        twice += (a.x - o.x) * (b.y - o.y) - (b.x - o.x) * (a.y - o.y);
    }
    0.5 * twice
}

pub fn diameter(pts: &[Point2]) -> f64 {
    let mut h: f64 = 0.0;
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            h = h.max(pts[i].dist(pts[j]));
        }
    }
    h
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x)
}

fn on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

fn segments_intersect(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && on_segment(c, d, a))
        || (d2 == 0.0 && on_segment(c, d, b))
        || (d3 == 0.0 && on_segment(a, b, c))
        || (d4 == 0.0 && on_segment(a, b, d))
}

fn is_simple(pts: &[Point2]) -> bool {
    let m = pts.len();
    for i in 0..m {
        let (a, b) = (pts[i], pts[(i + 1) % m]);
        // consecutive edges may only share their common vertex
        let c = pts[(i + 2) % m];
        if orient(a, b, c) == 0.0 {
            let u = (b.x - a.x, b.y - a.y);
            let w = (c.x - b.x, c.y - b.y);
            if u.0 * w.0 + u.1 * w.1 < 0.0 {
                return false;
            }
        }
        for j in i + 2..m {
            if i == 0 && j == m - 1 {
                continue;
            }
            if segments_intersect(a, b, pts[j], pts[(j + 1) % m]) {
                return false;
            }
        }
    }
    true
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let (dx, dy) = (b.x - a.x, b.y - a.y);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p.x - a.x) * dx + (p.y - a.y) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    p.dist(Point2::new(a.x + t * dx, a.y + t * dy))
}

/// Winding-number test; points on the boundary count as inside.
pub fn point_in_polygon(p: Point2, pts: &[Point2]) -> bool {
    let m = pts.len();
    let mut winding = 0i32;
    for i in 0..m {
        let a = pts[i];
        let b = pts[(i + 1) % m];
        let o = orient(a, b, p);
        let scale = a.dist(b);
        if o.abs() <= 1e-14 * scale * scale && on_segment(a, b, p) {
            return true;
        }
        if a.y <= p.y {
            if b.y > p.y && o > 0.0 {
                winding += 1;
            }
        } else if b.y <= p.y && o < 0.0 {
            winding -= 1;
        }
    }
    winding != 0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EdgeGeometry {
    pub length: f64,
    /// Outward unit normal.
    pub normal: [f64; 2],
}

/// Geometric data of one element: area, centroid, diameter and edge normals.
///
/// Points are mapped to scaled local coordinates
/// `xi = (x - x_c) / h`, `eta = (y - y_c) / h` centred at the centroid and
/// scaled by the diameter `h`.
#[derive(Debug, Clone)]
pub struct ElementGeometry {
    pub id: usize,
    pub vertices: Vec<Point2>,
    pub area: f64,
    pub centroid: Point2,
    pub diameter: f64,
    pub edges: Vec<EdgeGeometry>,
}

pub fn build_geometry(
    id: usize,
    cell: &PolygonCell,
    vertices: &[Point2],
) -> Result<ElementGeometry> {
    validate_cell(id, cell, vertices)?;
    let pts = cell_points(cell, vertices);
    let area = signed_area(&pts);
    if area <= 0.0 {
        return Err(VemError::InvalidCell {
            cell: id,
            reason: "clockwise orientation".into(),
        });
    }
    let m = pts.len();
    let o = pts[0];
    let (mut cx, mut cy) = (0.0, 0.0);
    for i in 0..m {
        let (ax, ay) = (pts[i].x - o.x, pts[i].y - o.y);
        let (bx, by) = (pts[(i + 1) % m].x - o.x, pts[(i + 1) % m].y - o.y);
        let cross = ax * by - bx * ay;
        cx += (ax + bx) * cross;
        cy += (ay + by) * cross;
    }
    let centroid = Point2::new(o.x + cx / (6.0 * area), o.y + cy / (6.0 * area));
    let edges = (0..m)
        .map(|i| {
            let a = pts[i];
            let b = pts[(i + 1) % m];
            let length = a.dist(b);
            let (tx, ty) = ((b.x - a.x) / length, (b.y - a.y) / length);
            EdgeGeometry {
                length,
                normal: [ty, -tx],
            }
        })
        .collect();
    Ok(ElementGeometry {
        id,
        diameter: diameter(&pts),
        vertices: pts,
        area,
        centroid,
        edges,
    })
}

impl ElementGeometry {
    pub fn num_edges(&self) -> usize {
        self.vertices.len()
    }

    pub fn scaled_coords(&self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.centroid.x) / self.diameter,
            (p.y - self.centroid.y) / self.diameter,
        )
    }

    pub fn from_scaled(&self, xi: f64, eta: f64) -> Point2 {
        Point2::new(
            self.centroid.x + xi * self.diameter,
            self.centroid.y + eta * self.diameter,
        )
    }

    pub fn perimeter(&self) -> f64 {
        self.edges.iter().map(|e| e.length).sum()
    }

    /// Endpoints of local edge `i`.
    pub fn edge_endpoints(&self, i: usize) -> (Point2, Point2) {
        (self.vertices[i], self.vertices[(i + 1) % self.vertices.len()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square() -> Mesh {
        Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            vec![PolygonCell::new(vec![0, 1, 2, 3])],
        )
        .unwrap()
    }

    #[test]
    fn unit_square_geometry() {
        let g = unit_square().geometry(0).unwrap();
        assert!((g.area - 1.0).abs() < 1e-15);
        assert!(g.centroid.dist(Point2::new(0.5, 0.5)) < 1e-15);
        assert!((g.diameter - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(g.edges[0].normal, [0.0, -1.0]);
        assert_eq!(g.edges[1].normal, [1.0, 0.0]);
    }

    #[test]
    fn rotated_inner_square() {
        let (s, c) = (std::f64::consts::FRAC_PI_3).sin_cos();
        let pts: Vec<Point2> = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)]
            .iter()
            .map(|&(a, b): &(f64, f64)| {
                let (a, b) = (a / 6.0, b / 6.0);
                Point2::new(0.5 + c * a - s * b, 0.5 + s * a + c * b)
            })
            .collect();
        let g = build_geometry(0, &PolygonCell::new(vec![0, 1, 2, 3]), &pts).unwrap();
        assert!((g.area - 1.0 / 9.0).abs() < 1e-15);
        assert!(g.centroid.dist(Point2::new(0.5, 0.5)) < 1e-15);
    }

    #[test]
    fn scaled_coordinates() {
        let g = unit_square().geometry(0).unwrap();
        assert_eq!(g.scaled_coords(g.centroid), (0.0, 0.0));
        let (xi, eta) = g.scaled_coords(Point2::new(1.0, 1.0));
        let expected = 0.5 / 2f64.sqrt();
        assert!((xi - expected).abs() < 1e-15 && (eta - expected).abs() < 1e-15);
        let p = Point2::new(0.123, -7.5);
        let (xi, eta) = g.scaled_coords(p);
        assert!(g.from_scaled(xi, eta).dist(p) < 1e-14 * g.diameter);
    }

    #[test]
    fn clockwise_cells_are_reversed() {
        let mesh = Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
            ],
            vec![PolygonCell::new(vec![0, 3, 2, 1])],
        )
        .unwrap();
        assert!(mesh.geometry(0).unwrap().area > 0.0);
        assert_eq!(mesh.cell(0).vertex_ids, vec![1, 2, 3, 0]);
    }

    #[test]
    fn rejects_bad_cells() {
        let v = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ];
        let bowtie = Mesh::new(v.clone(), vec![PolygonCell::new(vec![0, 2, 1, 3])]);
        assert!(matches!(bowtie, Err(VemError::InvalidCell { cell: 0, .. })));
        let repeated = Mesh::new(v.clone(), vec![PolygonCell::new(vec![0, 1, 1, 3])]);
        assert!(repeated.is_err());
        let collinear = Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(2.0, 0.0),
            ],
            vec![PolygonCell::new(vec![0, 1, 2])],
        );
        assert!(collinear.is_err());
    }

    #[test]
    fn edge_table_marks_shared_edges() {
        let mesh = Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(2.0, 0.0),
                Point2::new(0.0, 1.0),
                Point2::new(1.0, 1.0),
                Point2::new(2.0, 1.0),
            ],
            vec![
                PolygonCell::new(vec![0, 1, 4, 3]),
                PolygonCell::new(vec![1, 2, 5, 4]),
            ],
        )
        .unwrap();
        assert_eq!(mesh.num_edges(), 7);
        let interior: Vec<_> = mesh.edges().iter().filter(|e| !e.is_boundary()).collect();
        assert_eq!(interior.len(), 1);
        assert_eq!(interior[0].vertices, [1, 4]);
        assert_eq!(interior[0].cells, (0, Some(1)));
    }

    #[test]
    fn hanging_node_is_an_ordinary_vertex() {
        // coarse cell on the left lists the midpoint of its right side
        let mesh = Mesh::new(
            vec![
                Point2::new(0.0, 0.0),
                Point2::new(1.0, 0.0),
                Point2::new(1.0, 0.5),
                Point2::new(1.0, 1.0),
                Point2::new(0.0, 1.0),
                Point2::new(2.0, 0.0),
                Point2::new(2.0, 0.5),
                Point2::new(2.0, 1.0),
            ],
            vec![
                PolygonCell::new(vec![0, 1, 2, 3, 4]),
                PolygonCell::new(vec![1, 5, 6, 2]),
                PolygonCell::new(vec![2, 6, 7, 3]),
            ],
        )
        .unwrap();
        assert!((mesh.total_area() - 2.0).abs() < 1e-14);
        assert_eq!(mesh.edges().iter().filter(|e| !e.is_boundary()).count(), 3);
    }

    #[test]
    fn json_round_trip() {
        let mesh = unit_square();
        let text = mesh.to_json();
        let back = Mesh::from_json(&text).unwrap();
        assert_eq!(back.vertices(), mesh.vertices());
        assert_eq!(back.cells(), mesh.cells());
        assert_eq!(back.boundary_edges().count(), 4);
    }

    #[test]
    fn json_errors() {
        let out_of_range = r#"{"vertices": [[0,0],[1,0],[1,1]], "cells": [[0,1,5]]}"#;
        let err = Mesh::from_json(out_of_range).unwrap_err().to_string();
        assert!(err.contains("cell 0"), "{err}");
        let malformed = "{\"vertices\": [[0,0],\n[1,0]";
        assert!(matches!(
            Mesh::from_json(malformed),
            Err(VemError::MeshParse(_))
        ));
    }

    #[test]
    fn locate_points() {
        let mesh = unit_square();
        assert_eq!(mesh.locate(Point2::new(0.3, 0.7)), Some(0));
        assert_eq!(mesh.locate(Point2::new(1.0, 0.5)), Some(0));
        assert_eq!(mesh.locate(Point2::new(1.5, 0.5)), None);
    }
}
