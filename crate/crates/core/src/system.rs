//! Global assembly over face DoFs, Dirichlet reduction and solve.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::geometry::{PatchAssignment, PatchSet};
use crate::mesh::Mesh;
use crate::point::Point;
use crate::quadrature::GaussLegendre;
use crate::sparse::{self, CgOutcome, CsrMatrix, SolveError};
use crate::vem::{Constraint, LocalGeometry, VemError};

/// Stabilization form of the discrete bilinear form.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Stabilization {
    /// Patch projector, `h_omega^-1 |F|`-weighted faces of `K`.
    Patch,
    /// Element projector, unit face weights.
    Original,
}

impl Stabilization {
    pub fn name(self) -> &'static str {
        match self {
            Self::Patch => "patch",
            Self::Original => "original",
        }
    }
}

impl fmt::Display for Stabilization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown stabilization `{0}` (expected `patch` or `original`)")]
pub struct UnknownStabilization(pub alloc::string::String);

impl FromStr for Stabilization {
    type Err = UnknownStabilization;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "patch" => Ok(Self::Patch),
            "original" | "orig" => Ok(Self::Original),
            other => Err(UnknownStabilization(other.into())),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SystemError {
    #[error("anisotropic cell {0} has no patch")]
    PatchMissing(usize),
    #[error("patch set covers {found} cells, mesh has {expected}")]
    PatchCountMismatch { expected: usize, found: usize },
    #[error("cell {cell}: {source}")]
    Local { cell: usize, source: VemError },
    #[error(transparent)]
    Solve(#[from] SolveError),
    #[error("expected {expected} values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Dense local matrix and load of one element, over global face ids.
#[derive(Clone, Debug)]
pub struct ElementContribution {
    pub dofs: Vec<usize>,
    pub matrix: DMatrix<f64>,
    pub load: Vec<f64>,
}

/// Local matrix `Kc + S` and load of cell `k`. Under the patch form the
/// consistency block sits on the leading `n_K` patch DoFs and the load uses
/// the projector constant of the patch boundary.
pub fn element_contribution(
    mesh: &Mesh,
    patches: &PatchSet,
    k: usize,
    kind: Stabilization,
    f: &dyn Fn(Point) -> f64,
) -> Result<ElementContribution, SystemError> {
    let local = |source| SystemError::Local { cell: k, source };
    match kind {
        Stabilization::Patch => {
            let singleton;
            let patch = match &patches.patches[k] {
                Some(p) => p,
                None if patches.anisotropic[k] => return Err(SystemError::PatchMissing(k)),
                None => {
                    singleton = PatchAssignment::singleton(mesh, k);
                    &singleton
                }
            };
            let geo = LocalGeometry::patch(mesh, patch).map_err(local)?;
            let mut matrix = geo.stabilization_matrix();
            let kc = geo.consistency_matrix();
            let mut block = matrix.view_mut((0, 0), (geo.n_k, geo.n_k));
            block += kc;
            let load = geo.local_load(f, Constraint::Patch);
            Ok(ElementContribution { dofs: patch.dofs.clone(), matrix, load })
        }
        Stabilization::Original => {
            let geo = LocalGeometry::element(mesh, k).map_err(local)?;
            let matrix = geo.consistency_matrix() + geo.stabilization_matrix_original();
            let load = geo.local_load(f, Constraint::Element);
            let dofs = mesh.cell_faces(k).iter().map(|cf| cf.face).collect();
            Ok(ElementContribution { dofs, matrix, load })
        }
    }
}

/// Strategy for evaluating per-element contributions.
///
/// Implementations must return the contributions in element order; the
/// global matrix then depends only on that sequence.
pub trait Assemble {
    fn contributions(
        &self,
        n_cells: usize,
        element: &(dyn Fn(usize) -> Result<ElementContribution, SystemError> + Sync),
    ) -> Result<Vec<ElementContribution>, SystemError>;
}

/// Evaluates elements one after another.
#[derive(Clone, Copy, Debug, Default)]
pub struct SerialAssembly;

impl Assemble for SerialAssembly {
    fn contributions(
        &self,
        n_cells: usize,
        element: &(dyn Fn(usize) -> Result<ElementContribution, SystemError> + Sync),
    ) -> Result<Vec<ElementContribution>, SystemError> {
        (0..n_cells).map(element).collect()
    }
}

/// Assembled global system over all face DoFs.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    pub boundary_dofs: Vec<usize>,
    pub free_dofs: Vec<usize>,
    pub kind: Stabilization,
}

pub fn assemble(
    mesh: &Mesh,
    patches: &PatchSet,
    kind: Stabilization,
    f: &(dyn Fn(Point) -> f64 + Sync),
) -> Result<SparseSystem, SystemError> {
    assemble_with(mesh, patches, kind, f, &SerialAssembly)
}

pub fn assemble_with(
    mesh: &Mesh,
    patches: &PatchSet,
    kind: Stabilization,
    f: &(dyn Fn(Point) -> f64 + Sync),
    strategy: &dyn Assemble,
) -> Result<SparseSystem, SystemError> {
    if patches.len() != mesh.num_cells() {
        return Err(SystemError::PatchCountMismatch { expected: mesh.num_cells(), found: patches.len() });
    }
    let element = |k: usize| element_contribution(mesh, patches, k, kind, f);
    let contributions = strategy.contributions(mesh.num_cells(), &element)?;
    Ok(scatter(mesh, &contributions, kind))
}

/// Sums element contributions, in the given order, into a global system.
pub fn scatter(mesh: &Mesh, contributions: &[ElementContribution], kind: Stabilization) -> SparseSystem {
    let n = mesh.num_faces();
    let mut triplets = Vec::with_capacity(contributions.iter().map(|c| c.dofs.len().pow(2)).sum());
    let mut b = vec![0.0; n];
    for c in contributions {
        for (i, &gi) in c.dofs.iter().enumerate() {
            b[gi] += c.load[i];
            for (j, &gj) in c.dofs.iter().enumerate() {
                let v = c.matrix[(i, j)];
                if v != 0.0 {
                    triplets.push((gi, gj, v));
                }
            }
        }
    }
    let boundary_dofs: Vec<usize> = mesh.boundary_faces().collect();
    let free_dofs = (0..n).filter(|&f| !mesh.is_boundary_face(f)).collect();
    SparseSystem { a: CsrMatrix::from_triplets(n, n, triplets), b, boundary_dofs, free_dofs, kind }
}

/// Face averages of `g` by 4-point Gauss quadrature.
pub fn face_averages(mesh: &Mesh, faces: impl Iterator<Item = usize>, g: &dyn Fn(Point) -> f64) -> Vec<f64> {
    let rule = GaussLegendre::new(4);
    faces
        .map(|f| {
            let (a, b) = mesh.face_endpoints(f);
            rule.average_segment(a, b, g)
        })
        .collect()
}

/// System on the free DoFs after prescribing the boundary DoFs.
#[derive(Clone, Debug)]
pub struct ReducedSystem {
    pub a: CsrMatrix,
    pub b: Vec<f64>,
    pub free_dofs: Vec<usize>,
    pub boundary_dofs: Vec<usize>,
    pub boundary_values: Vec<f64>,
    pub n_dofs: usize,
    pub kind: Stabilization,
}

impl SparseSystem {
    pub fn n_dofs(&self) -> usize {
        self.b.len()
    }

    /// Prescribes `chi_F(g)` on boundary faces and moves their columns to
    /// the right-hand side.
    pub fn apply_dirichlet(&self, mesh: &Mesh, g: &dyn Fn(Point) -> f64) -> ReducedSystem {
        let values = face_averages(mesh, self.boundary_dofs.iter().copied(), g);
        self.apply_dirichlet_values(&values)
    }

    pub fn apply_dirichlet_values(&self, values: &[f64]) -> ReducedSystem {
        assert_eq!(values.len(), self.boundary_dofs.len());
        let n = self.n_dofs();
        let mut full = vec![0.0; n];
        for (&f, &v) in self.boundary_dofs.iter().zip(values) {
            full[f] = v;
        }
        let lifted = self.a.mul_vec(&full);
        let mut col_map = vec![None; n];
        for (i, &f) in self.free_dofs.iter().enumerate() {
            col_map[f] = Some(i);
        }
        let a = self.a.select(&self.free_dofs, &col_map, self.free_dofs.len());
        let b = self.free_dofs.iter().map(|&f| self.b[f] - lifted[f]).collect();
        ReducedSystem {
            a,
            b,
            free_dofs: self.free_dofs.clone(),
            boundary_dofs: self.boundary_dofs.clone(),
            boundary_values: values.to_vec(),
            n_dofs: n,
            kind: self.kind,
        }
    }
}

/// Solution of a reduced system, expanded to all face DoFs.
#[derive(Clone, Debug)]
pub struct Solution {
    pub dofs: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

impl ReducedSystem {
    /// Full DoF vector from free values.
    pub fn expand(&self, free: &[f64]) -> Vec<f64> {
        let mut x = vec![0.0; self.n_dofs];
        for (&f, &v) in self.boundary_dofs.iter().zip(&self.boundary_values) {
            x[f] = v;
        }
        for (&f, &v) in self.free_dofs.iter().zip(free) {
            x[f] = v;
        }
        x
    }

    pub fn solve_cg(&self, tol: f64, max_iter: usize) -> Result<Solution, SystemError> {
        let CgOutcome { x, iterations, residual } = if self.free_dofs.is_empty() {
            CgOutcome { x: Vec::new(), iterations: 0, residual: 0.0 }
        } else {
            sparse::cg(&self.a, &self.b, tol, max_iter)?
        };
        Ok(Solution { dofs: self.expand(&x), iterations, residual })
    }
}

/// `sqrt(v^T A v)`, clamped at zero against round-off.
pub fn energy_norm(a: &CsrMatrix, v: &[f64]) -> Result<f64, SystemError> {
    if v.len() != a.ncols() {
        return Err(SystemError::DimensionMismatch { expected: a.ncols(), found: v.len() });
    }
    let av = a.mul_vec(v);
    let q: f64 = v.iter().zip(&av).map(|(x, y)| x * y).sum();
    Ok(libm::sqrt(q.max(0.0)))
}
