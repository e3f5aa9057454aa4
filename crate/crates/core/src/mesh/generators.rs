//! Mesh families on the unit square and small pathological fixtures.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;
use core::str::FromStr;

use super::{Mesh, MeshError};
use crate::point::Point;

/// `n × n` unit-square grid, cells numbered row by row from the bottom.
pub fn gen_uniform_quad(n: usize) -> Result<Mesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidResolution);
    }
    let levels: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    tensor_grid(&levels, &levels)
}

/// Tensor-product grid with the given x and y breakpoints.
fn tensor_grid(xs: &[f64], ys: &[f64]) -> Result<Mesh, MeshError> {
    let nx = xs.len() - 1;
    let ny = ys.len() - 1;
    let mut vertices = Vec::with_capacity(xs.len() * ys.len());
    for &y in ys {
        for &x in xs {
            vertices.push(Point::new(x, y));
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut cells = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            cells.push(vec![id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)]);
        }
    }
    Mesh::new(vertices, cells)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Axis {
    X,
    Y,
}

/// A cut line parallel to the grid line `axis = 0`, at distance `offset`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Cut {
    /// Coordinate along which the cut is offset (`Y` gives a horizontal cut).
    pub axis: Axis,
    pub offset: f64,
}

/// A sliver cell and the near-full cell it was cut from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SliverTag {
    pub sliver: usize,
    pub full: usize,
}

#[derive(Clone, Debug)]
pub struct CutMesh {
    pub mesh: Mesh,
    pub slivers: Vec<SliverTag>,
}

/// Uniform `n × n` grid whose first row (or column) of squares is cut by a
/// line at distance `offset` from the domain edge, leaving a row of slivers
/// of thickness `offset` next to near-full cells of thickness
/// `1/n - offset`.
pub fn gen_cut_cartesian(n: usize, cut: Cut) -> Result<CutMesh, MeshError> {
    if n == 0 {
        return Err(MeshError::InvalidResolution);
    }
    let limit = 1.0 / n as f64;
    if !(cut.offset > 0.0 && cut.offset < limit) {
        return Err(MeshError::CutOutOfRange { offset: cut.offset, limit });
    }
    let uniform: Vec<f64> = (0..=n).map(|i| i as f64 / n as f64).collect();
    let mut split = Vec::with_capacity(n + 2);
    split.push(0.0);
    split.push(cut.offset);
    split.extend_from_slice(&uniform[1..]);

    let mesh = match cut.axis {
        Axis::Y => tensor_grid(&uniform, &split)?,
        Axis::X => tensor_grid(&split, &uniform)?,
    };
    // Row-major numbering: for a horizontal cut the slivers are cells
    // 0..n and their partners n..2n; for a vertical cut they are the first
    // two cells of every row.
    let slivers = (0..n)
        .map(|i| match cut.axis {
            Axis::Y => SliverTag { sliver: i, full: n + i },
            Axis::X => SliverTag { sliver: i * (n + 1), full: i * (n + 1) + 1 },
        })
        .collect();
    Ok(CutMesh { mesh, slivers })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum FixtureKind {
    /// Sideways hourglass: two lobes over one long bottom edge, joined by a
    /// narrow waist above that edge.
    Hourglass,
    /// Unit square carrying a tiny mushroom-shaped bump on its top edge.
    Bump,
    /// Unit square with a thin slit from its right side to its centre, the
    /// slit filled by a separate sliver cell.
    Cracklike,
}

impl FromStr for FixtureKind {
    type Err = MeshError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hourglass" => Ok(Self::Hourglass),
            "bump" => Ok(Self::Bump),
            "crack-free-cracklike" | "cracklike" => Ok(Self::Cracklike),
            other => Err(MeshError::UnknownFixture(other.to_string())),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Fixture {
    pub kind: FixtureKind,
    pub mesh: Mesh,
    /// The cell realising the pathology.
    pub element: usize,
}

/// Depth of the waist above the hourglass bottom edge.
pub const HOURGLASS_WAIST: f64 = 0.05;
/// Width of the cracklike slit.
pub const CRACK_WIDTH: f64 = 1e-3;
/// Bump size relative to the diameter of the bumped cell.
pub const BUMP_RELATIVE_SIZE: f64 = 1e-3;

pub fn gen_fixture(kind: FixtureKind) -> Mesh {
    fixture(kind).mesh
}

/// Builds a fixture mesh (at most six cells) with documented coordinates.
pub fn fixture(kind: FixtureKind) -> Fixture {
    let p = Point::new;
    let (vertices, cells, element) = match kind {
        FixtureKind::Hourglass => {
            // Bottom edge (0,0)-(2,0) spans both lobes; a V-notch from the
            // top reaches down to the waist at (1, HOURGLASS_WAIST) and is
            // filled by a thin wedge. A 2 x 1 block sits below.
            let w = HOURGLASS_WAIST;
            let v = vec![
                p(0.0, -1.0),
                p(2.0, -1.0),
                p(2.0, 0.0),
                p(0.0, 0.0),
                p(2.0, 1.0),
                p(1.05, 1.0),
                p(1.0, w),
                p(0.95, 1.0),
                p(0.0, 1.0),
            ];
            let c = vec![vec![0, 1, 2, 3], vec![3, 2, 4, 5, 6, 7, 8], vec![7, 6, 5]];
            (v, c, 1)
        }
        FixtureKind::Bump => {
            // Neck of width e/2 and height e/2 under a head of width e and
            // height e/2, centred on the top edge of the unit square.
            let e = BUMP_RELATIVE_SIZE * core::f64::consts::SQRT_2;
            let v = vec![
                p(0.0, -1.0),
                p(1.0, -1.0),
                p(1.0, 0.0),
                p(0.0, 0.0),
                p(1.0, 1.0),
                p(0.5 + e / 4.0, 1.0),
                p(0.5 + e / 4.0, 1.0 + e / 2.0),
                p(0.5 + e / 2.0, 1.0 + e / 2.0),
                p(0.5 + e / 2.0, 1.0 + e),
                p(0.5 - e / 2.0, 1.0 + e),
                p(0.5 - e / 2.0, 1.0 + e / 2.0),
                p(0.5 - e / 4.0, 1.0 + e / 2.0),
                p(0.5 - e / 4.0, 1.0),
                p(0.0, 1.0),
            ];
            let c = vec![vec![0, 1, 2, 3], vec![3, 2, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13]];
            (v, c, 1)
        }
        FixtureKind::Cracklike => {
            let w = CRACK_WIDTH;
            let v = vec![
                p(0.0, 0.0),
                p(1.0, 0.0),
                p(1.0, 0.5 - w / 2.0),
                p(0.5, 0.5 - w / 2.0),
                p(0.5, 0.5 + w / 2.0),
                p(1.0, 0.5 + w / 2.0),
                p(1.0, 1.0),
                p(0.0, 1.0),
            ];
            let c = vec![vec![0, 1, 2, 3, 4, 5, 6, 7], vec![3, 2, 5, 4]];
            (v, c, 0)
        }
    };
    let mesh = Mesh::new(vertices, cells).expect("fixture coordinates form a valid mesh");
    Fixture { kind, mesh, element }
}
