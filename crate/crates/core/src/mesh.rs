//! Polygonal meshes stored as a face array plus face-to-cell incidence.
//!
//! Every cell is a counter-clockwise vertex cycle. Faces are the distinct
//! edges, stored with the lower vertex index first; `face_cells` records the
//! one or two incident cells and `cell_faces` lists, per cell, the face of
//! each local edge together with whether the cell traverses it in canonical
//! direction.

use alloc::collections::{BTreeMap, BTreeSet, VecDeque};
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::point::Point;
use crate::polygon;

mod generators;

pub use generators::{
    fixture, gen_cut_cartesian, gen_fixture, gen_uniform_quad, Axis, Cut, CutMesh, Fixture, FixtureKind, SliverTag,
    BUMP_RELATIVE_SIZE, CRACK_WIDTH, HOURGLASS_WAIST,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeshError {
    #[error("mesh has no cells")]
    Empty,
    #[error("vertex {index} is not finite")]
    NonFiniteVertex { index: usize },
    #[error("cell {cell} references vertex {index}, but only {len} vertices exist")]
    VertexOutOfRange { cell: usize, index: usize, len: usize },
    #[error("cell {cell} has fewer than three vertices")]
    TooFewVertices { cell: usize },
    #[error("cell {cell} lists vertex {vertex} more than once")]
    DuplicateVertexInCell { cell: usize, vertex: usize },
    #[error("cell {cell} has non-positive signed area {area:e} (cells must be counter-clockwise)")]
    NegativeArea { cell: usize, area: f64 },
    #[error("cell {cell} is self-intersecting")]
    SelfIntersecting { cell: usize },
    #[error("face ({a}, {b}) is shared by more than two cells")]
    NonManifoldFace { a: usize, b: usize },
    #[error("cells {first} and {second} traverse face ({a}, {b}) in the same direction")]
    InconsistentOrientation { a: usize, b: usize, first: usize, second: usize },
    #[error("resolution must be at least 1")]
    InvalidResolution,
    #[error("cut offset {offset} must lie strictly between 0 and {limit}")]
    CutOutOfRange { offset: f64, limit: f64 },
    #[error("unknown fixture `{0}`")]
    UnknownFixture(String),
    #[error("selection is empty")]
    EmptySelection,
    #[error("cell {0} is not in the mesh")]
    CellOutOfRange(usize),
    #[error("selected cells are not face-connected")]
    DisconnectedSelection,
    #[error("boundary of the selected cells is not a single simple cycle")]
    SelectionWithHole,
}

/// One local edge of a cell.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct CellFace {
    pub face: usize,
    /// The cell walks the face from its lower to its higher vertex index.
    pub aligned: bool,
}

#[derive(Clone, Debug)]
pub struct Mesh {
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    faces: Vec<[usize; 2]>,
    face_cells: Vec<(usize, Option<usize>)>,
    cell_faces: Vec<Vec<CellFace>>,
    cell_area: Vec<f64>,
    cell_diameter: Vec<f64>,
}

impl Mesh {
    /// Builds a mesh from vertex coordinates and counter-clockwise cells,
    /// deriving faces and incidence.
    pub fn new(vertices: Vec<Point>, cells: Vec<Vec<usize>>) -> Result<Self, MeshError> {
        if cells.is_empty() {
            return Err(MeshError::Empty);
        }
        if let Some(index) = vertices.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(MeshError::NonFiniteVertex { index });
        }
        let mut cell_area = Vec::with_capacity(cells.len());
        let mut cell_diameter = Vec::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            if cell.len() < 3 {
                return Err(MeshError::TooFewVertices { cell: k });
            }
            let mut seen = BTreeSet::new();
            for &v in cell {
                if v >= vertices.len() {
                    return Err(MeshError::VertexOutOfRange { cell: k, index: v, len: vertices.len() });
                }
                if !seen.insert(v) {
                    return Err(MeshError::DuplicateVertexInCell { cell: k, vertex: v });
                }
            }
            let poly: Vec<Point> = cell.iter().map(|&v| vertices[v]).collect();
            let area = polygon::signed_area(&poly);
            if area <= 0.0 {
                return Err(MeshError::NegativeArea { cell: k, area });
            }
            if !polygon::is_simple(&poly) {
                return Err(MeshError::SelfIntersecting { cell: k });
            }
            cell_area.push(area);
            cell_diameter.push(polygon::diameter(&poly));
        }

        let mut index: BTreeMap<[usize; 2], usize> = BTreeMap::new();
        let mut faces: Vec<[usize; 2]> = Vec::new();
        let mut face_cells: Vec<(usize, Option<usize>)> = Vec::new();
        let mut face_first_aligned: Vec<bool> = Vec::new();
        let mut cell_faces = Vec::with_capacity(cells.len());
        for (k, cell) in cells.iter().enumerate() {
            let n = cell.len();
            let mut local = Vec::with_capacity(n);
            for i in 0..n {
                let (a, b) = (cell[i], cell[(i + 1) % n]);
                let key = if a < b { [a, b] } else { [b, a] };
                let aligned = a < b;
                let face = match index.get(&key) {
                    Some(&f) => {
                        let (first, second) = face_cells[f];
                        if second.is_some() {
                            return Err(MeshError::NonManifoldFace { a: key[0], b: key[1] });
                        }
                        if face_first_aligned[f] == aligned {
                            return Err(MeshError::InconsistentOrientation { a: key[0], b: key[1], first, second: k });
                        }
                        face_cells[f].1 = Some(k);
                        f
                    }
                    None => {
                        let f = faces.len();
                        index.insert(key, f);
                        faces.push(key);
                        face_cells.push((k, None));
                        face_first_aligned.push(aligned);
                        f
                    }
                };
                local.push(CellFace { face, aligned });
            }
            cell_faces.push(local);
        }

        Ok(Self { vertices, cells, faces, face_cells, cell_faces, cell_area, cell_diameter })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn cell(&self, k: usize) -> &[usize] {
        &self.cells[k]
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn faces(&self) -> &[[usize; 2]] {
        &self.faces
    }

    pub fn face(&self, f: usize) -> [usize; 2] {
        self.faces[f]
    }

    /// Incident cells of a face; the second slot is empty on the boundary.
    pub fn face_cells(&self, f: usize) -> (usize, Option<usize>) {
        self.face_cells[f]
    }

    pub fn cell_faces(&self, k: usize) -> &[CellFace] {
        &self.cell_faces[k]
    }

    pub fn is_boundary_face(&self, f: usize) -> bool {
        self.face_cells[f].1.is_none()
    }

    pub fn boundary_faces(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.faces.len()).filter(move |&f| self.is_boundary_face(f))
    }

    pub fn num_interior_faces(&self) -> usize {
        self.face_cells.iter().filter(|(_, b)| b.is_some()).count()
    }

    /// The cell across face `f` from cell `k`.
    pub fn neighbor(&self, k: usize, f: usize) -> Option<usize> {
        match self.face_cells[f] {
            (a, Some(b)) if a == k => Some(b),
            (a, Some(_)) if a != k => Some(a),
            _ => None,
        }
    }

    /// Face-neighbours of `k`, in local edge order, without repetition.
    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        let mut out = Vec::new();
        for cf in &self.cell_faces[k] {
            if let Some(j) = self.neighbor(k, cf.face) {
                if !out.contains(&j) {
                    out.push(j);
                }
            }
        }
        out
    }

    pub fn face_endpoints(&self, f: usize) -> (Point, Point) {
        let [a, b] = self.faces[f];
        (self.vertices[a], self.vertices[b])
    }

    pub fn face_length(&self, f: usize) -> f64 {
        let (a, b) = self.face_endpoints(f);
        a.dist(b)
    }

    pub fn face_midpoint(&self, f: usize) -> Point {
        let (a, b) = self.face_endpoints(f);
        a.midpoint(b)
    }

    /// Endpoints of local edge `i` of cell `k` in the cell's traversal order.
    pub fn cell_edge(&self, k: usize, i: usize) -> (Point, Point) {
        let c = &self.cells[k];
        (self.vertices[c[i]], self.vertices[c[(i + 1) % c.len()]])
    }

    /// Outward unit normal of local edge `i` of cell `k`.
    pub fn outward_normal(&self, k: usize, i: usize) -> Point {
        let (a, b) = self.cell_edge(k, i);
        let t = b - a;
        Point::new(t.y, -t.x) * (1.0 / t.norm())
    }

    pub fn cell_polygon(&self, k: usize) -> Vec<Point> {
        self.cells[k].iter().map(|&v| self.vertices[v]).collect()
    }

    pub fn cell_area(&self, k: usize) -> f64 {
        self.cell_area[k]
    }

    pub fn cell_diameter(&self, k: usize) -> f64 {
        self.cell_diameter[k]
    }

    pub fn cell_centroid(&self, k: usize) -> Point {
        polygon::centroid(&self.cell_polygon(k))
    }

    /// Mesh size: the largest cell diameter.
    pub fn h(&self) -> f64 {
        self.cell_diameter.iter().copied().fold(0.0, f64::max)
    }

    pub fn total_area(&self) -> f64 {
        self.cell_area.iter().sum()
    }

    pub fn min_cell_area(&self) -> f64 {
        self.cell_area.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_cell_area(&self) -> f64 {
        self.cell_area.iter().copied().fold(0.0, f64::max)
    }

    /// Merges a face-connected set of cells into one polygon.
    pub fn merge_cells(&self, ids: &[usize]) -> Result<MergedCells, MeshError> {
        merge_cells(self, ids)
    }
}

/// Union of face-connected cells.
#[derive(Clone, Debug, PartialEq)]
pub struct MergedCells {
    /// Member cells in selection order.
    pub members: Vec<usize>,
    /// Counter-clockwise vertex cycle of the union boundary.
    pub boundary: Vec<usize>,
    /// Face of each boundary edge, aligned with `boundary`.
    pub boundary_faces: Vec<usize>,
    /// Every face of every member, with `true` when the face is interior to
    /// the union.
    pub faces: Vec<(usize, bool)>,
    pub area: f64,
    pub diameter: f64,
}

impl MergedCells {
    pub fn polygon(&self, mesh: &Mesh) -> Vec<Point> {
        self.boundary.iter().map(|&v| mesh.vertices[v]).collect()
    }

    pub fn perimeter(&self, mesh: &Mesh) -> f64 {
        self.boundary_faces.iter().map(|&f| mesh.face_length(f)).sum()
    }
}

/// Merges the cells `ids`, dropping faces interior to the union.
pub fn merge_cells(mesh: &Mesh, ids: &[usize]) -> Result<MergedCells, MeshError> {
    let mut members: Vec<usize> = Vec::with_capacity(ids.len());
    for &k in ids {
        if k >= mesh.num_cells() {
            return Err(MeshError::CellOutOfRange(k));
        }
        if !members.contains(&k) {
            members.push(k);
        }
    }
    if members.is_empty() {
        return Err(MeshError::EmptySelection);
    }
    let set: BTreeSet<usize> = members.iter().copied().collect();

    let mut reached = BTreeSet::new();
    let mut queue = VecDeque::from([members[0]]);
    reached.insert(members[0]);
    while let Some(k) = queue.pop_front() {
        for cf in mesh.cell_faces(k) {
            if let Some(j) = mesh.neighbor(k, cf.face) {
                if set.contains(&j) && reached.insert(j) {
                    queue.push_back(j);
                }
            }
        }
    }
    if reached.len() != set.len() {
        return Err(MeshError::DisconnectedSelection);
    }

    let mut faces = Vec::new();
    let mut next: BTreeMap<usize, (usize, usize)> = BTreeMap::new();
    let mut first_start = None;
    for &k in &members {
        let cell = mesh.cell(k);
        let n = cell.len();
        for (i, cf) in mesh.cell_faces(k).iter().enumerate() {
            let interior = mesh.neighbor(k, cf.face).is_some_and(|j| set.contains(&j));
            if !faces.iter().any(|&(f, _)| f == cf.face) {
                faces.push((cf.face, interior));
            }
            if !interior {
                let (a, b) = (cell[i], cell[(i + 1) % n]);
                if next.insert(a, (b, cf.face)).is_some() {
                    return Err(MeshError::SelectionWithHole);
                }
                first_start.get_or_insert(a);
            }
        }
    }
    let start = first_start.ok_or(MeshError::SelectionWithHole)?;
    let mut boundary = Vec::with_capacity(next.len());
    let mut boundary_faces = Vec::with_capacity(next.len());
    let mut v = start;
    loop {
        let (w, f) = *next.get(&v).ok_or(MeshError::SelectionWithHole)?;
        boundary.push(v);
        boundary_faces.push(f);
        v = w;
        if v == start || boundary.len() > next.len() {
            break;
        }
    }
    if v != start || boundary.len() != next.len() {
        return Err(MeshError::SelectionWithHole);
    }

    let poly: Vec<Point> = boundary.iter().map(|&v| mesh.vertices[v]).collect();
    let area = members.iter().map(|&k| mesh.cell_area(k)).sum();
    Ok(MergedCells { members, boundary, boundary_faces, faces, area, diameter: polygon::diameter(&poly) })
}
