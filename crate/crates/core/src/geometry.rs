//! Geometric admissibility of polygonal elements.
//!
//! For every face the element is probed for an inward triangle ("pyramid"
//! in 2-D) standing on the face inside the face's normal slab. A face passes
//! the height check when, possibly after splitting it into a bounded number
//! of pieces, every piece carries a triangle of height at least
//! `gamma1 * h_F`. It passes the hourglass check when each such triangle,
//! rescaled to height `gamma1 * h_F`, can be joined convexly to a point of
//! the element that is at distance `hourglass_dist_factor * h_K` from it.
//!
//! Elements failing any face check, carrying too many faces, or with a face
//! much longer than `sqrt(|K|)` are anisotropic and get an extended patch of
//! neighbouring cells that is itself isotropic.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use thiserror::Error;

use crate::mesh::{MergedCells, Mesh, MeshError};
use crate::point::Point;
use crate::polygon::{self, REL_TOL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("face {edge} has zero length")]
    DegenerateFace { edge: usize },
    #[error("no admissible patch with at most {max_cells} cells around cell {cell}")]
    PatchSearchFailed { cell: usize, max_cells: usize },
    #[error("invalid geometry configuration: {0}")]
    InvalidConfig(&'static str),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// Thresholds of the admissibility checks.
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeometryConfig {
    /// Height threshold: pieces need `l >= gamma1 * h_F`.
    pub gamma1: f64,
    /// Patch diameter bound: `h_omega <= gamma2 * h`.
    pub gamma2: f64,
    /// Bound on the number of patches whose convex hulls meet.
    pub gamma3: usize,
    /// `h_F / sqrt(|K|)` above this marks an element anisotropic.
    pub chunkiness_threshold: f64,
    /// Largest number of pieces a face may be split into (a power of two).
    pub max_partition: usize,
    /// Hourglass witness distance relative to `h_K`.
    pub hourglass_dist_factor: f64,
    /// Largest number of faces of an isotropic element.
    pub max_faces: usize,
    /// Largest number of cells in an extended patch.
    pub max_patch_cells: usize,
}

impl Default for GeometryConfig {
    fn default() -> Self {
        Self {
            gamma1: 0.1,
            gamma2: 4.0,
            gamma3: 25,
            chunkiness_threshold: 4.0,
            max_partition: 4,
            hourglass_dist_factor: 0.2,
            max_faces: 24,
            max_patch_cells: 4,
        }
    }
}

impl GeometryConfig {
    pub fn validate(&self) -> Result<(), GeometryError> {
        if !(self.gamma1 > 0.0 && self.gamma1 <= 1.0) {
            return Err(GeometryError::InvalidConfig("gamma1 must lie in (0, 1]"));
        }
        if !(self.gamma2 > 0.0 && self.chunkiness_threshold > 0.0 && self.hourglass_dist_factor > 0.0) {
            return Err(GeometryError::InvalidConfig("thresholds must be positive"));
        }
        if self.gamma3 == 0 || self.max_faces < 3 || self.max_patch_cells == 0 {
            return Err(GeometryError::InvalidConfig("counts must be positive"));
        }
        if !self.max_partition.is_power_of_two() {
            return Err(GeometryError::InvalidConfig("max_partition must be a power of two"));
        }
        Ok(())
    }
}

/// Height data of one piece `[s0, s1]` (fractions of the face length).
#[derive(Clone, Copy, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PieceHeight {
    pub s0: f64,
    pub s1: f64,
    /// Extent of the element inside the piece's normal slab.
    pub delta: f64,
    /// Height of the tallest triangle found; zero when none exists.
    pub l: f64,
    pub apex: Point,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FaceHeight {
    /// Slab depth over the whole face.
    pub delta_f: f64,
    /// Minimum height over the pieces.
    pub l_f: f64,
    /// Apex of the piece attaining `l_f`.
    pub apex: Point,
    pub pieces: Vec<PieceHeight>,
}

/// Local frame of edge `edge` of a counter-clockwise polygon.
struct FaceFrame {
    origin: Point,
    tangent: Point,
    inward: Point,
    length: f64,
}

impl FaceFrame {
    fn new(poly: &[Point], edge: usize) -> Option<Self> {
        let (a, b) = polygon::edge(poly, edge);
        let length = a.dist(b);
        if length <= REL_TOL * polygon::diameter(poly) || length == 0.0 {
            return None;
        }
        let tangent = (b - a) * (1.0 / length);
        Some(Self { origin: a, tangent, inward: tangent.perp(), length })
    }

    fn at(&self, s: f64, tau: f64) -> Point {
        self.origin + self.tangent * s + self.inward * tau
    }
}

const COLUMNS: usize = 33;
const LEVELS: usize = 33;
const BISECTIONS: usize = 48;

/// Tallest inward triangle over the piece `[s0, s1]` of edge `edge`.
///
/// Apex candidates are the polygon vertices inside the slab and a
/// 33 x 33 grid over the slab; the best candidate is refined by bisection
/// on its height, which is valid because lowering the apex keeps the
/// triangle inside the taller one. The result is a lower bound of the
/// supremum height.
fn piece_height(poly: &[Point], frame: &FaceFrame, s0: f64, s1: f64, tol: f64) -> PieceHeight {
    let (lo, hi) = (s0 * frame.length, s1 * frame.length);
    let slab = polygon::clip_halfplane(poly, frame.tangent, frame.tangent.dot(frame.origin) + lo);
    let slab = polygon::clip_halfplane(&slab, -frame.tangent, -(frame.tangent.dot(frame.origin) + hi));
    let delta = slab
        .iter()
        .map(|&p| frame.inward.dot(p - frame.origin))
        .fold(0.0_f64, f64::max);
    let base = (frame.at(lo, 0.0), frame.at(hi, 0.0));
    let feasible = |s: f64, tau: f64| {
        let tri = [base.0, base.1, frame.at(s, tau)];
        polygon::convex_in_polygon(&tri, poly, tol)
    };
    let mid = 0.5 * (lo + hi);
    let mut result = PieceHeight { s0, s1, delta, l: 0.0, apex: frame.at(mid, 0.0) };
    if delta <= tol {
        return result;
    }
    if feasible(mid, delta) {
        result.l = delta;
        result.apex = frame.at(mid, delta);
        return result;
    }

    // (height, position along the face); ties go to the position nearest
    // the middle of the piece.
    let mut best = (0.0_f64, mid);
    let consider = |h: f64, s: f64, best: &mut (f64, f64)| {
        if h > best.0 || (h == best.0 && (s - mid).abs() < (best.1 - mid).abs()) {
            *best = (h, s);
        }
    };
    for &v in poly {
        let s = frame.tangent.dot(v - frame.origin);
        let tau = frame.inward.dot(v - frame.origin);
        if s >= lo - tol && s <= hi + tol && tau > tol && tau <= delta + tol {
            let (s, tau) = (s.clamp(lo, hi), tau.min(delta));
            if tau > best.0 && feasible(s, tau) {
                consider(tau, s, &mut best);
            }
        }
    }
    let level = |j: usize| delta * j as f64 / LEVELS as f64;
    let column = |c: usize| lo + (hi - lo) * c as f64 / (COLUMNS - 1) as f64;
    // Largest feasible level per column, by bisection over the monotone
    // predicate.
    let levels: Vec<usize> = (0..COLUMNS)
        .map(|c| {
            let s = column(c);
            let (mut ok, mut bad) = (0usize, LEVELS + 1);
            while bad - ok > 1 {
                let m = (ok + bad) / 2;
                if feasible(s, level(m)) {
                    ok = m;
                } else {
                    bad = m;
                }
            }
            ok
        })
        .collect();
    let refine = |s: f64, mut good: f64, mut bad: f64| {
        for _ in 0..BISECTIONS {
            let m = 0.5 * (good + bad);
            if feasible(s, m) {
                good = m;
            } else {
                bad = m;
            }
        }
        good
    };
    // Every column at the top level is refined, so the result does not
    // hinge on rounding in the tie-break.
    let top = levels.iter().copied().max().unwrap_or(0);
    for (c, &j) in levels.iter().enumerate() {
        if j != top {
            continue;
        }
        let s = column(c);
        let h = if top == LEVELS { level(top) } else { refine(s, level(top), level(top + 1)) };
        consider(h, s, &mut best);
    }
    result.l = best.0;
    result.apex = frame.at(best.1, best.0);
    result
}

fn partition_heights(poly: &[Point], frame: &FaceFrame, pieces: usize, tol: f64) -> Vec<PieceHeight> {
    (0..pieces)
        .map(|i| {
            let s0 = i as f64 / pieces as f64;
            let s1 = (i + 1) as f64 / pieces as f64;
            piece_height(poly, frame, s0, s1, tol)
        })
        .collect()
}

fn face_height_from(poly: &[Point], frame: &FaceFrame, pieces: Vec<PieceHeight>, tol: f64) -> FaceHeight {
    let full = if pieces.len() == 1 { pieces[0].delta } else { piece_height(poly, frame, 0.0, 1.0, tol).delta };
    let min = pieces
        .iter()
        .min_by(|a, b| a.l.total_cmp(&b.l))
        .copied()
        .expect("at least one piece");
    FaceHeight { delta_f: full, l_f: min.l, apex: min.apex, pieces }
}

/// Slab depth and admissible triangle height of edge `edge` of a
/// counter-clockwise polygon. When no triangle fits over the whole edge it
/// is bisected recursively, up to `max_partition` pieces.
pub fn face_height(poly: &[Point], edge: usize, max_partition: usize) -> Result<FaceHeight, GeometryError> {
    let frame = FaceFrame::new(poly, edge).ok_or(GeometryError::DegenerateFace { edge })?;
    let tol = REL_TOL * polygon::diameter(poly);
    let mut pieces = 1;
    loop {
        let heights = partition_heights(poly, &frame, pieces, tol);
        if heights.iter().all(|p| p.l > 0.0) || pieces * 2 > max_partition {
            return Ok(face_height_from(poly, &frame, heights, tol));
        }
        pieces *= 2;
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HeightCheck {
    pub ok: bool,
    /// Heights of the accepted partition, or of the best one tried.
    pub height: Option<FaceHeight>,
}

/// Height condition: some bisection partition with at most
/// `cfg.max_partition` pieces has every piece at least `gamma1 * h_F` high.
pub fn check_height(poly: &[Point], edge: usize, cfg: &GeometryConfig) -> HeightCheck {
    let Some(frame) = FaceFrame::new(poly, edge) else {
        return HeightCheck { ok: false, height: None };
    };
    let tol = REL_TOL * polygon::diameter(poly);
    let need = cfg.gamma1 * frame.length;
    let mut best: Option<FaceHeight> = None;
    let mut pieces = 1;
    while pieces <= cfg.max_partition.max(1) {
        let fh = face_height_from(poly, &frame, partition_heights(poly, &frame, pieces, tol), tol);
        if fh.l_f >= need {
            return HeightCheck { ok: true, height: Some(fh) };
        }
        if best.as_ref().is_none_or(|b| fh.l_f > b.l_f) {
            best = Some(fh);
        }
        pieces *= 2;
    }
    HeightCheck { ok: false, height: best }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct HourglassCheck {
    pub ok: bool,
    /// Witness point per piece (`None` where the search failed).
    pub witnesses: Vec<Option<Point>>,
}

/// Hourglass condition on a partition accepted by the height check.
///
/// Each piece's triangle is rescaled to height `min(l, gamma1 * h_F)`; the
/// piece passes when a polygon vertex or the centroid lies at distance at
/// least `hourglass_dist_factor * h_K` from it and the convex hull of the
/// point and the triangle stays inside the polygon.
pub fn check_hourglass_on(poly: &[Point], edge: usize, height: &FaceHeight, cfg: &GeometryConfig) -> HourglassCheck {
    let Some(frame) = FaceFrame::new(poly, edge) else {
        return HourglassCheck { ok: false, witnesses: vec![None; height.pieces.len()] };
    };
    let h_k = polygon::diameter(poly);
    let tol = REL_TOL * h_k;
    let need = cfg.hourglass_dist_factor * h_k;
    let mut candidates: Vec<Point> = poly.to_vec();
    candidates.push(polygon::centroid(poly));

    let witnesses: Vec<Option<Point>> = height
        .pieces
        .iter()
        .map(|piece| {
            if piece.l <= 0.0 {
                return None;
            }
            let a = frame.at(piece.s0 * frame.length, 0.0);
            let b = frame.at(piece.s1 * frame.length, 0.0);
            let scaled = piece.l.min(cfg.gamma1 * frame.length);
            let foot = frame.at(frame.tangent.dot(piece.apex - frame.origin), 0.0);
            let apex = foot + (piece.apex - foot) * (scaled / piece.l);
            let pyramid = [a, b, apex];
            let mut found: Option<(f64, Point)> = None;
            for &c in &candidates {
                let d = polygon::convex_distance(&pyramid, c);
                if d < need || found.is_some_and(|(fd, _)| fd >= d) {
                    continue;
                }
                let hull = polygon::convex_hull(&[a, b, apex, c]);
                if hull.len() >= 3 && polygon::convex_in_polygon(&hull, poly, tol) {
                    found = Some((d, c));
                }
            }
            found.map(|(_, c)| c)
        })
        .collect();
    HourglassCheck { ok: witnesses.iter().all(Option::is_some), witnesses }
}

/// Runs the height check and, when it passes, the hourglass check on the
/// partition it found.
pub fn check_hourglass(poly: &[Point], edge: usize, cfg: &GeometryConfig) -> HourglassCheck {
    let hc = check_height(poly, edge, cfg);
    match (hc.ok, hc.height) {
        (true, Some(fh)) => check_hourglass_on(poly, edge, &fh, cfg),
        (_, fh) => HourglassCheck { ok: false, witnesses: vec![None; fh.map_or(1, |f| f.pieces.len())] },
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum AnisotropyReason {
    TooManyFaces { n_faces: usize },
    Chunky { edge: usize, ratio: f64 },
    DegenerateFace { edge: usize },
    Height { edge: usize },
    Hourglass { edge: usize },
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
#[cfg_attr(feature = "serde", serde(tag = "class", content = "reasons", rename_all = "snake_case"))]
pub enum Classification {
    Isotropic,
    Anisotropic(Vec<AnisotropyReason>),
}

impl Classification {
    pub fn is_isotropic(&self) -> bool {
        matches!(self, Classification::Isotropic)
    }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct FaceReport {
    /// Local edge index in the polygon.
    pub edge: usize,
    pub h_f: f64,
    /// `h_F / sqrt(|K|)`.
    pub chunkiness: f64,
    pub height_ok: bool,
    pub hourglass_ok: bool,
    pub height: Option<FaceHeight>,
    pub witnesses: Vec<Option<Point>>,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PolygonReport {
    pub n_faces: usize,
    pub h: f64,
    pub area: f64,
    pub classification: Classification,
    pub faces: Vec<FaceReport>,
}

/// Full isotropy analysis of a counter-clockwise polygon.
pub fn analyze_polygon(poly: &[Point], cfg: &GeometryConfig) -> PolygonReport {
    let area = polygon::signed_area(poly);
    let h = polygon::diameter(poly);
    let mut reasons = Vec::new();
    if poly.len() > cfg.max_faces {
        reasons.push(AnisotropyReason::TooManyFaces { n_faces: poly.len() });
    }
    let root = sqrt(area.max(0.0));
    let mut faces = Vec::with_capacity(poly.len());
    for edge in 0..poly.len() {
        let (a, b) = polygon::edge(poly, edge);
        let h_f = a.dist(b);
        let chunkiness = if root > 0.0 { h_f / root } else { f64::INFINITY };
        if chunkiness > cfg.chunkiness_threshold {
            reasons.push(AnisotropyReason::Chunky { edge, ratio: chunkiness });
        }
        let hc = check_height(poly, edge, cfg);
        let hg = match (&hc.ok, &hc.height) {
            (true, Some(fh)) => check_hourglass_on(poly, edge, fh, cfg),
            _ => HourglassCheck { ok: false, witnesses: Vec::new() },
        };
        if hc.height.is_none() {
            reasons.push(AnisotropyReason::DegenerateFace { edge });
        } else if !hc.ok {
            reasons.push(AnisotropyReason::Height { edge });
        } else if !hg.ok {
            reasons.push(AnisotropyReason::Hourglass { edge });
        }
        faces.push(FaceReport {
            edge,
            h_f,
            chunkiness,
            height_ok: hc.ok,
            hourglass_ok: hg.ok,
            height: hc.height,
            witnesses: hg.witnesses,
        });
    }
    let classification = if reasons.is_empty() { Classification::Isotropic } else { Classification::Anisotropic(reasons) };
    PolygonReport { n_faces: poly.len(), h, area, classification, faces }
}

pub fn classify_polygon(poly: &[Point], cfg: &GeometryConfig) -> Classification {
    analyze_polygon(poly, cfg).classification
}

pub fn classify(mesh: &Mesh, cell: usize, cfg: &GeometryConfig) -> Classification {
    classify_polygon(&mesh.cell_polygon(cell), cfg)
}

/// Extended patch of a cell: the member cells, their merged boundary and
/// the patch-local DoF numbering.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PatchAssignment {
    pub cell: usize,
    /// Member cells, `cell` first.
    pub members: Vec<usize>,
    /// Counter-clockwise vertex cycle of the patch boundary.
    pub boundary: Vec<usize>,
    /// Mesh face of each boundary edge.
    pub boundary_faces: Vec<usize>,
    /// Patch DoF map: global face ids of all member faces; the first
    /// `n_K` entries are the faces of `cell` in local edge order.
    pub dofs: Vec<usize>,
    /// Per entry of `dofs`, whether the face is interior to the patch.
    pub interior: Vec<bool>,
    pub area: f64,
    pub diameter: f64,
}

impl PatchAssignment {
    /// The trivial patch `omega_K = K`.
    pub fn singleton(mesh: &Mesh, cell: usize) -> Self {
        let faces: Vec<usize> = mesh.cell_faces(cell).iter().map(|cf| cf.face).collect();
        Self {
            cell,
            members: vec![cell],
            boundary: mesh.cell(cell).to_vec(),
            boundary_faces: faces.clone(),
            interior: vec![false; faces.len()],
            dofs: faces,
            area: mesh.cell_area(cell),
            diameter: mesh.cell_diameter(cell),
        }
    }

    /// Patch of `cell` made of `members` (which must contain `cell`).
    pub fn from_cells(mesh: &Mesh, cell: usize, members: &[usize]) -> Result<Self, MeshError> {
        let mut ids = vec![cell];
        ids.extend(members.iter().copied().filter(|&m| m != cell));
        Ok(Self::from_merge(mesh, cell, mesh.merge_cells(&ids)?))
    }

    fn from_merge(mesh: &Mesh, cell: usize, merged: MergedCells) -> Self {
        let mut dofs: Vec<usize> = mesh.cell_faces(cell).iter().map(|cf| cf.face).collect();
        for &(f, _) in &merged.faces {
            if !dofs.contains(&f) {
                dofs.push(f);
            }
        }
        let interior = dofs
            .iter()
            .map(|f| merged.faces.iter().any(|&(g, inner)| g == *f && inner))
            .collect();
        Self {
            cell,
            members: merged.members,
            boundary: merged.boundary,
            boundary_faces: merged.boundary_faces,
            dofs,
            interior,
            area: merged.area,
            diameter: merged.diameter,
        }
    }

    pub fn is_singleton(&self) -> bool {
        self.members.len() == 1
    }

    pub fn n_dofs(&self) -> usize {
        self.dofs.len()
    }

    pub fn polygon(&self, mesh: &Mesh) -> Vec<Point> {
        self.boundary.iter().map(|&v| mesh.vertices()[v]).collect()
    }

    /// Position of a global face in the patch DoF map.
    pub fn local_index(&self, face: usize) -> Option<usize> {
        self.dofs.iter().position(|&f| f == face)
    }
}

/// Largest `h_F / sqrt(area)` over the boundary faces of a merge.
fn merged_chunkiness(mesh: &Mesh, merged: &MergedCells) -> f64 {
    let longest = merged.boundary_faces.iter().map(|&f| mesh.face_length(f)).fold(0.0, f64::max);
    longest / sqrt(merged.area)
}

/// Greedy extended-patch search: repeatedly merge the face-neighbour that
/// gives the least chunky union, until the union is isotropic and its
/// diameter is at most `gamma2 * h`.
pub fn find_patch(mesh: &Mesh, cell: usize, cfg: &GeometryConfig) -> Result<PatchAssignment, GeometryError> {
    if cell >= mesh.num_cells() {
        return Err(MeshError::CellOutOfRange(cell).into());
    }
    let h = mesh.h();
    let mut members = vec![cell];
    while members.len() < cfg.max_patch_cells {
        let mut candidates: Vec<usize> = members
            .iter()
            .flat_map(|&k| mesh.neighbors(k))
            .filter(|j| !members.contains(j))
            .collect();
        candidates.sort_unstable();
        candidates.dedup();
        let mut best: Option<(f64, usize, MergedCells)> = None;
        for j in candidates {
            let mut trial = members.clone();
            trial.push(j);
            let Ok(merged) = mesh.merge_cells(&trial) else { continue };
            let c = merged_chunkiness(mesh, &merged);
            if best.as_ref().is_none_or(|(bc, _, _)| c < *bc) {
                best = Some((c, j, merged));
            }
        }
        let Some((_, j, merged)) = best else { break };
        members.push(j);
        let poly = merged.polygon(mesh);
        if merged.diameter <= cfg.gamma2 * h && classify_polygon(&poly, cfg).is_isotropic() {
            return Ok(PatchAssignment::from_merge(mesh, cell, merged));
        }
    }
    Err(GeometryError::PatchSearchFailed { cell, max_cells: cfg.max_patch_cells })
}

/// Patches for every cell of a mesh. Isotropic cells carry no explicit
/// patch (`omega_K = K`).
#[derive(Clone, Debug)]
pub struct PatchSet {
    pub anisotropic: Vec<bool>,
    pub patches: Vec<Option<PatchAssignment>>,
}

impl PatchSet {
    /// Every cell treated as isotropic.
    pub fn singletons(mesh: &Mesh) -> Self {
        Self { anisotropic: vec![false; mesh.num_cells()], patches: vec![None; mesh.num_cells()] }
    }

    pub fn len(&self) -> usize {
        self.patches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.patches.is_empty()
    }

    /// Member cells of `omega_K`.
    pub fn members(&self, cell: usize) -> Vec<usize> {
        self.patches[cell].as_ref().map_or_else(|| vec![cell], |p| p.members.clone())
    }
}

/// Classifies every cell and searches patches for the anisotropic ones.
pub fn assign_patches(mesh: &Mesh, cfg: &GeometryConfig) -> Result<PatchSet, GeometryError> {
    cfg.validate()?;
    let mut set = PatchSet::singletons(mesh);
    for k in 0..mesh.num_cells() {
        if !classify(mesh, k, cfg).is_isotropic() {
            set.anisotropic[k] = true;
            set.patches[k] = Some(find_patch(mesh, k, cfg)?);
        }
    }
    Ok(set)
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct OverlapAudit {
    /// Per cell, the number of cells whose patch hull meets its patch hull
    /// (itself included).
    pub counts: Vec<usize>,
    pub max_count: usize,
    pub gamma3: usize,
    pub ok: bool,
    pub offenders: Vec<usize>,
}

/// Counts, for every cell, the cells whose patch convex hulls intersect its
/// own (closed hulls, so touching counts).
pub fn audit_overlap(mesh: &Mesh, patches: &PatchSet, cfg: &GeometryConfig) -> OverlapAudit {
    let n = mesh.num_cells();
    let hulls: Vec<Vec<Point>> = (0..n)
        .map(|k| {
            let pts: Vec<Point> = patches
                .members(k)
                .iter()
                .flat_map(|&m| mesh.cell_polygon(m))
                .collect();
            polygon::convex_hull(&pts)
        })
        .collect();
    let boxes: Vec<(Point, Point)> = hulls.iter().map(|h| polygon::bbox(h)).collect();
    let tol = REL_TOL * mesh.h();
    let mut counts = vec![0usize; n];
    for i in 0..n {
        counts[i] += 1;
        for j in i + 1..n {
            let (a, b) = (boxes[i], boxes[j]);
            if a.1.x < b.0.x - tol || b.1.x < a.0.x - tol || a.1.y < b.0.y - tol || b.1.y < a.0.y - tol {
                continue;
            }
            if polygon::convex_intersect(&hulls[i], &hulls[j], tol) {
                counts[i] += 1;
                counts[j] += 1;
            }
        }
    }
    let max_count = counts.iter().copied().max().unwrap_or(0);
    let offenders = (0..n).filter(|&k| counts[k] > cfg.gamma3).collect();
    OverlapAudit { counts, max_count, gamma3: cfg.gamma3, ok: max_count <= cfg.gamma3, offenders }
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct PatchSummary {
    pub members: Vec<usize>,
    pub h_omega: f64,
    pub area: f64,
    pub n_dofs: usize,
    pub isotropic: bool,
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ElementReport {
    pub cell: usize,
    #[cfg_attr(feature = "serde", serde(flatten))]
    pub polygon: PolygonReport,
    pub patch: Option<PatchSummary>,
    pub patch_error: Option<String>,
}

/// Per-element classification, patch suggestions and the overlap audit.
#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct GeometryReport {
    pub config: GeometryConfig,
    pub mesh_h: f64,
    pub elements: Vec<ElementReport>,
    pub overlap: Option<OverlapAudit>,
    /// Every element is isotropic or has an admissible patch.
    pub admissible: bool,
}

impl GeometryReport {
    pub fn anisotropic_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.elements
            .iter()
            .filter(|e| !e.polygon.classification.is_isotropic())
            .map(|e| e.cell)
    }

    pub fn failed_cells(&self) -> impl Iterator<Item = usize> + '_ {
        self.elements.iter().filter(|e| e.patch_error.is_some()).map(|e| e.cell)
    }
}

pub fn analyze_mesh(mesh: &Mesh, cfg: &GeometryConfig) -> GeometryReport {
    let mut set = PatchSet::singletons(mesh);
    let mut elements = Vec::with_capacity(mesh.num_cells());
    for k in 0..mesh.num_cells() {
        let polygon = analyze_polygon(&mesh.cell_polygon(k), cfg);
        let (mut patch, mut patch_error) = (None, None);
        if !polygon.classification.is_isotropic() {
            set.anisotropic[k] = true;
            match find_patch(mesh, k, cfg) {
                Ok(p) => {
                    patch = Some(PatchSummary {
                        members: p.members.clone(),
                        h_omega: p.diameter,
                        area: p.area,
                        n_dofs: p.n_dofs(),
                        isotropic: true,
                    });
                    set.patches[k] = Some(p);
                }
                Err(e) => patch_error = Some(e.to_string()),
            }
        }
        elements.push(ElementReport { cell: k, polygon, patch, patch_error });
    }
    let admissible = elements.iter().all(|e| e.patch_error.is_none());
    let overlap = admissible.then(|| audit_overlap(mesh, &set, cfg));
    GeometryReport { config: *cfg, mesh_h: mesh.h(), elements, overlap, admissible }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{fixture, gen_cut_cartesian, gen_uniform_quad, Axis, Cut, FixtureKind};

    fn rect(w: f64, h: f64) -> Vec<Point> {
        vec![Point::new(0.0, 0.0), Point::new(w, 0.0), Point::new(w, h), Point::new(0.0, h)]
    }

    #[test]
    fn unit_square_bottom_edge() {
        let fh = face_height(&rect(1.0, 1.0), 0, 4).unwrap();
        assert!((fh.delta_f - 1.0).abs() < 1e-12);
        assert!((fh.l_f - 1.0).abs() < 1e-12);
        assert_eq!(fh.pieces.len(), 1);
    }

    #[test]
    fn thin_rectangle_is_slab_limited() {
        let eps = 0.01;
        let fh = face_height(&rect(1.0, eps), 0, 4).unwrap();
        assert!((fh.delta_f - eps).abs() < 1e-14);
        assert!((fh.l_f - eps).abs() < 1e-14);
    }

    #[test]
    fn degenerate_face() {
        let poly = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert_eq!(face_height(&poly, 1, 4), Err(GeometryError::DegenerateFace { edge: 1 }));
        assert!(!check_height(&poly, 1, &GeometryConfig::default()).ok);
    }

    #[test]
    fn height_checks() {
        let cfg = GeometryConfig { gamma1: 0.5, ..Default::default() };
        for e in 0..4 {
            assert!(check_height(&rect(1.0, 1.0), e, &cfg).ok);
        }
        let cfg = GeometryConfig { gamma1: 0.1, ..Default::default() };
        assert!(!check_height(&rect(1.0, 0.01), 0, &cfg).ok);
    }

    #[test]
    fn square_hourglass_witness_is_a_top_vertex() {
        let hg = check_hourglass(&rect(1.0, 1.0), 0, &GeometryConfig::default());
        assert!(hg.ok);
        let w = hg.witnesses[0].unwrap();
        assert!((w.y - 1.0).abs() < 1e-12);
    }

    #[test]
    fn classify_basic_shapes() {
        let cfg = GeometryConfig { chunkiness_threshold: 3.0, ..Default::default() };
        assert!(classify_polygon(&rect(1.0, 1.0), &cfg).is_isotropic());
        match classify_polygon(&rect(1.0, 0.01), &GeometryConfig::default()) {
            Classification::Anisotropic(r) => {
                assert!(r.iter().any(|x| matches!(x, AnisotropyReason::Chunky { ratio, .. } if (ratio - 10.0).abs() < 1e-9)))
            }
            Classification::Isotropic => panic!("sliver classified isotropic"),
        }
        let tri = [Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)];
        assert!(classify_polygon(&tri, &GeometryConfig::default()).is_isotropic());
    }

    #[test]
    fn cut_sliver_patch() {
        let cm = gen_cut_cartesian(4, Cut { axis: Axis::Y, offset: 1e-3 }).unwrap();
        let cfg = GeometryConfig::default();
        for tag in &cm.slivers {
            assert!(!classify(&cm.mesh, tag.sliver, &cfg).is_isotropic());
            let p = find_patch(&cm.mesh, tag.sliver, &cfg).unwrap();
            assert_eq!(p.members, vec![tag.sliver, tag.full]);
            assert_eq!(p.n_dofs(), 7);
            assert_eq!(p.interior.iter().filter(|&&i| i).count(), 1);
            assert!(p.dofs[..4].iter().zip(cm.mesh.cell_faces(tag.sliver)).all(|(a, b)| *a == b.face));
        }
    }

    #[test]
    fn stacked_slivers_fail_patch_search() {
        let eps = 0.01;
        let m = 10;
        let mut v = Vec::new();
        for j in 0..=m {
            v.push(Point::new(0.0, j as f64 * eps));
            v.push(Point::new(1.0, j as f64 * eps));
        }
        let cells = (0..m).map(|j| vec![2 * j, 2 * j + 1, 2 * j + 3, 2 * j + 2]).collect();
        let mesh = Mesh::new(v, cells).unwrap();
        let cfg = GeometryConfig::default();
        assert_eq!(find_patch(&mesh, 0, &cfg), Err(GeometryError::PatchSearchFailed { cell: 0, max_cells: 4 }));
        assert!(assign_patches(&mesh, &cfg).is_err());
        assert!(!analyze_mesh(&mesh, &cfg).admissible);
    }

    #[test]
    fn uniform_overlap_counts() {
        let m = gen_uniform_quad(4).unwrap();
        let cfg = GeometryConfig::default();
        let audit = audit_overlap(&m, &PatchSet::singletons(&m), &cfg);
        assert_eq!(audit.max_count, 9);
        assert_eq!(audit.counts[0], 4);
        assert!(audit.ok);
        let one = gen_uniform_quad(1).unwrap();
        assert_eq!(audit_overlap(&one, &PatchSet::singletons(&one), &cfg).max_count, 1);
    }

    #[test]
    fn fixture_classification() {
        let cfg = GeometryConfig::default();
        let h = fixture(FixtureKind::Hourglass);
        let poly = h.mesh.cell_polygon(h.element);
        let report = analyze_polygon(&poly, &cfg);
        assert!(report.classification.is_isotropic(), "{:?}", report.classification);
        let bottom = &report.faces[0];
        assert_eq!(bottom.height.as_ref().unwrap().pieces.len(), 2);

        let b = fixture(FixtureKind::Bump);
        let poly = b.mesh.cell_polygon(b.element);
        match classify_polygon(&poly, &cfg) {
            Classification::Anisotropic(r) => assert!(r.iter().any(|x| matches!(x, AnisotropyReason::Hourglass { .. }))),
            Classification::Isotropic => panic!("bump classified isotropic"),
        }

        let c = fixture(FixtureKind::Cracklike);
        assert!(classify(&c.mesh, c.element, &cfg).is_isotropic());
        assert!(!classify(&c.mesh, 1, &cfg).is_isotropic());
        assert_eq!(find_patch(&c.mesh, 1, &cfg).unwrap().members, vec![1, 0]);
    }

    #[test]
    fn config_validation() {
        assert!(GeometryConfig::default().validate().is_ok());
        assert!(GeometryConfig { gamma1: 1.5, ..Default::default() }.validate().is_err());
        assert!(GeometryConfig { max_partition: 3, ..Default::default() }.validate().is_err());
    }
}
