//! Lowest-order nonconforming virtual element operators.
//!
//! Degrees of freedom are face averages. Local operators live on an element
//! `K` and its patch `omega_K` (possibly `K` itself); columns are indexed by
//! the patch DoF map, whose first `n_K` entries are the faces of `K`.

use alloc::vec::Vec;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::geometry::PatchAssignment;
use crate::mesh::Mesh;
use crate::point::Point;
use crate::polygon;
use crate::quadrature::{self, GaussLegendre};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VemError {
    #[error("cell has non-positive area {0}")]
    ZeroAreaCell(f64),
    #[error("patch has non-positive area {0}")]
    ZeroAreaPatch(f64),
    #[error("face {0} has zero length")]
    DegenerateFace(usize),
    #[error("expected {expected} values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Largest sub-triangle diameter of the load quadrature. Elements finer
/// than this use the plain centroid fan.
pub const LOAD_QUADRATURE_SIZE: f64 = 1.0 / 16.0;

/// Scaled monomials `{1, (x - xc)/s, (y - yc)/s}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonomialBasis {
    pub center: Point,
    pub scale: f64,
}

impl MonomialBasis {
    pub fn new(center: Point, scale: f64) -> Self {
        Self { center, scale }
    }

    pub fn eval(&self, p: Point) -> [f64; 3] {
        [1.0, (p.x - self.center.x) / self.scale, (p.y - self.center.y) / self.scale]
    }

    /// Gradient of member `i`.
    pub fn grad(&self, i: usize) -> Point {
        match i {
            0 => Point::new(0.0, 0.0),
            1 => Point::new(1.0 / self.scale, 0.0),
            2 => Point::new(0.0, 1.0 / self.scale),
            _ => panic!("basis index {i} out of range"),
        }
    }
}

/// A linear polynomial in a monomial basis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Linear {
    pub basis: MonomialBasis,
    pub coef: [f64; 3],
}

impl Linear {
    pub fn eval(&self, p: Point) -> f64 {
        let m = self.basis.eval(p);
        self.coef[0] * m[0] + self.coef[1] * m[1] + self.coef[2] * m[2]
    }

    pub fn grad(&self) -> Point {
        Point::new(self.coef[1], self.coef[2]) * (1.0 / self.basis.scale)
    }
}

/// Face average of `v` over `[a, b]` with `points` Gauss points.
pub fn dof_of(v: impl FnMut(Point) -> f64, a: Point, b: Point, points: usize) -> Result<f64, VemError> {
    if a == b {
        return Err(VemError::DegenerateFace(0));
    }
    Ok(GaussLegendre::new(points).average_segment(a, b, v))
}

/// `L^2(F)` projection onto constants of a polynomial of degree at most 5.
pub fn qf_project(a: Point, b: Point, p: impl FnMut(Point) -> f64) -> f64 {
    GaussLegendre::new(3).average_segment(a, b, p)
}

/// Which boundary fixes the constant of an element projector.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Constraint {
    /// Average over `∂K`.
    Element,
    /// Average over `∂omega_K`; coincides with `Element` for singletons.
    Patch,
}

/// Geometric data of an element and its patch, in patch DoF numbering.
#[derive(Clone, Debug)]
pub struct LocalGeometry {
    pub basis: MonomialBasis,
    pub n_k: usize,
    pub k_polygon: Vec<Point>,
    pub k_area: f64,
    pub h_k: f64,
    /// Face midpoints, one per patch DoF.
    pub mid: Vec<Point>,
    /// Face lengths, one per patch DoF.
    pub len: Vec<f64>,
    /// Outward normals of `K` scaled by face length, one per face of `K`.
    pub k_flux: Vec<Point>,
    /// Boundary faces of the patch: DoF column and outward normal scaled by
    /// face length.
    pub omega_flux: Vec<(usize, Point)>,
    pub omega_area: f64,
    pub h_omega: f64,
}

fn outward_flux(a: Point, b: Point) -> Point {
    let t = b - a;
    Point::new(t.y, -t.x)
}

impl LocalGeometry {
    /// A standalone counter-clockwise polygon; DoF `i` lives on edge `i`.
    pub fn from_polygon(poly: &[Point]) -> Result<Self, VemError> {
        let n = poly.len();
        let mut mid = Vec::with_capacity(n);
        let mut len = Vec::with_capacity(n);
        let mut k_flux = Vec::with_capacity(n);
        for i in 0..n {
            let (a, b) = polygon::edge(poly, i);
            mid.push(a.midpoint(b));
            len.push(a.dist(b));
            k_flux.push(outward_flux(a, b));
        }
        let area = polygon::signed_area(poly);
        let h = polygon::diameter(poly);
        let omega_flux = k_flux.iter().copied().enumerate().collect();
        Self {
            basis: MonomialBasis::new(polygon::centroid(poly), h),
            n_k: n,
            k_polygon: poly.to_vec(),
            k_area: area,
            h_k: h,
            mid,
            len,
            k_flux,
            omega_flux,
            omega_area: area,
            h_omega: h,
        }
        .validated()
    }

    /// Cell `k` of a mesh, with `omega_K = K`.
    pub fn element(mesh: &Mesh, k: usize) -> Result<Self, VemError> {
        Self::patch(mesh, &PatchAssignment::singleton(mesh, k))
    }

    pub fn patch(mesh: &Mesh, patch: &PatchAssignment) -> Result<Self, VemError> {
        let k = patch.cell;
        let n_k = mesh.cell_faces(k).len();
        let mid = patch.dofs.iter().map(|&f| mesh.face_midpoint(f)).collect();
        let len = patch.dofs.iter().map(|&f| mesh.face_length(f)).collect();
        let k_flux = (0..n_k)
            .map(|i| {
                let (a, b) = mesh.cell_edge(k, i);
                outward_flux(a, b)
            })
            .collect();
        let verts = mesh.vertices();
        let m = patch.boundary.len();
        let omega_flux = (0..m)
            .map(|i| {
                let a = verts[patch.boundary[i]];
                let b = verts[patch.boundary[(i + 1) % m]];
                let col = patch
                    .local_index(patch.boundary_faces[i])
                    .expect("patch boundary face belongs to the DoF map");
                (col, outward_flux(a, b))
            })
            .collect();
        let omega_poly = patch.polygon(mesh);
        Self {
            basis: MonomialBasis::new(polygon::centroid(&omega_poly), patch.diameter),
            n_k,
            k_polygon: mesh.cell_polygon(k),
            k_area: mesh.cell_area(k),
            h_k: mesh.cell_diameter(k),
            mid,
            len,
            k_flux,
            omega_flux,
            omega_area: patch.area,
            h_omega: patch.diameter,
        }
        .validated()
    }

    fn validated(self) -> Result<Self, VemError> {
        if !(self.k_area > 0.0) {
            return Err(VemError::ZeroAreaCell(self.k_area));
        }
        if !(self.omega_area > 0.0) {
            return Err(VemError::ZeroAreaPatch(self.omega_area));
        }
        if let Some(i) = self.len.iter().position(|&l| !(l > 0.0)) {
            return Err(VemError::DegenerateFace(i));
        }
        Ok(self)
    }

    pub fn n_omega(&self) -> usize {
        self.mid.len()
    }

    pub fn is_singleton(&self) -> bool {
        self.n_omega() == self.n_k && self.omega_area == self.k_area
    }

    /// Linear polynomial from projector coefficients.
    pub fn linear(&self, coef: [f64; 3]) -> Linear {
        Linear { basis: self.basis, coef }
    }

    /// Face averages of a linear function on all patch faces.
    pub fn dofs_of_linear(&self, q: impl Fn(Point) -> f64) -> Vec<f64> {
        self.mid.iter().map(|&m| q(m)).collect()
    }

    fn projector(&self, flux: &[(usize, Point)], area: f64, constraint: &[usize]) -> DMatrix<f64> {
        let n = self.n_omega();
        let s = self.basis.scale;
        let mut p = DMatrix::zeros(3, n);
        for &(col, f) in flux {
            p[(1, col)] += s * f.x / area;
            p[(2, col)] += s * f.y / area;
        }
        let perimeter: f64 = constraint.iter().map(|&c| self.len[c]).sum();
        let mut shift = [0.0; 2];
        for &c in constraint {
            let w = self.len[c] / perimeter;
            let m = self.basis.eval(self.mid[c]);
            p[(0, c)] += w;
            shift[0] += w * m[1];
            shift[1] += w * m[2];
        }
        for j in 0..n {
            p[(0, j)] -= shift[0] * p[(1, j)] + shift[1] * p[(2, j)];
        }
        p
    }

    fn constraint_columns(&self, constraint: Constraint) -> Vec<usize> {
        match constraint {
            Constraint::Element => (0..self.n_k).collect(),
            Constraint::Patch => self.omega_flux.iter().map(|&(c, _)| c).collect(),
        }
    }

    /// Coefficients (`3 x n_omega`) of the elliptic projector of `K`.
    pub fn elliptic_projector_matrix(&self, constraint: Constraint) -> DMatrix<f64> {
        let flux: Vec<(usize, Point)> = self.k_flux.iter().copied().enumerate().collect();
        self.projector(&flux, self.k_area, &self.constraint_columns(constraint))
    }

    /// Coefficients (`3 x n_omega`) of the patch projector; columns of faces
    /// interior to the patch are zero.
    pub fn patch_projector_matrix(&self) -> DMatrix<f64> {
        self.projector(&self.omega_flux, self.omega_area, &self.constraint_columns(Constraint::Patch))
    }

    /// DoF matrix `D` (`n_K x 3`): the basis averaged over the faces of `K`.
    pub fn dof_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_k, 3, |i, j| self.basis.eval(self.mid[i])[j])
    }

    /// `Kc_ij = (grad Pi phi_i, grad Pi phi_j)_K`, of size `n_K`.
    pub fn consistency_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n_k, self.n_k, |i, j| self.k_flux[i].dot(self.k_flux[j]) / self.k_area)
    }

    /// `h_omega^-1 (I_bar - D Pi_omega)^T diag(|F_i|) (I_bar - D Pi_omega)`.
    pub fn stabilization_matrix(&self) -> DMatrix<f64> {
        let m = self.residual_operator(&self.patch_projector_matrix(), self.n_omega());
        let weights = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.n_k,
            self.len[..self.n_k].iter().map(|l| l / self.h_omega),
        ));
        m.transpose() * weights * &m
    }

    /// `(I - D Pi_K)^T (I - D Pi_K)` on the faces of `K`, with the constant
    /// of `Pi_K` fixed on `∂K`.
    pub fn stabilization_matrix_original(&self) -> DMatrix<f64> {
        let pi = self.elliptic_projector_matrix(Constraint::Element);
        let pi = pi.columns(0, self.n_k).into_owned();
        let m = self.residual_operator(&pi, self.n_k);
        m.transpose() * &m
    }

    /// `I_bar - D Pi` for a `3 x cols` projector.
    fn residual_operator(&self, pi: &DMatrix<f64>, cols: usize) -> DMatrix<f64> {
        let mut m = -(self.dof_matrix() * pi);
        for i in 0..self.n_k.min(cols) {
            m[(i, i)] += 1.0;
        }
        m
    }

    /// `b_i = (f, Pi_K phi_i)_K` for every patch DoF.
    pub fn local_load(&self, f: impl Fn(Point) -> f64, constraint: Constraint) -> Vec<f64> {
        let pi = self.elliptic_projector_matrix(constraint);
        let moments = self.moments(f);
        (0..self.n_omega())
            .map(|j| (0..3).map(|r| pi[(r, j)] * moments[r]).sum())
            .collect()
    }

    /// `(f, m_r)_K` for the three basis members.
    pub fn moments(&self, f: impl Fn(Point) -> f64) -> [f64; 3] {
        let mut out = [0.0; 3];
        for (r, o) in out.iter_mut().enumerate() {
            *o = quadrature::integrate_polygon_refined(&self.k_polygon, LOAD_QUADRATURE_SIZE, |p| {
                f(p) * self.basis.eval(p)[r]
            });
        }
        out
    }
}

fn check_len(values: &[f64], expected: usize) -> Result<(), VemError> {
    if values.len() != expected {
        return Err(VemError::DimensionMismatch { expected, found: values.len() });
    }
    Ok(())
}

fn apply(pi: &DMatrix<f64>, values: &[f64]) -> [f64; 3] {
    let mut c = [0.0; 3];
    for (r, cr) in c.iter_mut().enumerate() {
        *cr = values.iter().enumerate().map(|(j, v)| pi[(r, j)] * v).sum();
    }
    c
}

/// `Pi_K v` of a polygon from its face averages (constant fixed on `∂K`).
pub fn elliptic_projector(poly: &[Point], dofs: &[f64]) -> Result<Linear, VemError> {
    let geo = LocalGeometry::from_polygon(poly)?;
    check_len(dofs, geo.n_omega())?;
    Ok(geo.linear(apply(&geo.elliptic_projector_matrix(Constraint::Element), dofs)))
}

/// `Pi_omega v` from the face averages on all patch faces, in patch DoF order.
pub fn patch_projector(mesh: &Mesh, patch: &PatchAssignment, dofs: &[f64]) -> Result<Linear, VemError> {
    let geo = LocalGeometry::patch(mesh, patch)?;
    check_len(dofs, geo.n_omega())?;
    Ok(geo.linear(apply(&geo.patch_projector_matrix(), dofs)))
}

/// Per-element matrices, mostly for inspection.
#[derive(Clone, Debug)]
pub struct LocalOperators {
    pub d: DMatrix<f64>,
    pub pi: DMatrix<f64>,
    pub kc: DMatrix<f64>,
    pub s: DMatrix<f64>,
    pub face_areas: Vec<f64>,
    /// `h_omega` for the patch form, `1` for the original form.
    pub h_used: f64,
}

impl LocalOperators {
    pub fn patch(geo: &LocalGeometry) -> Self {
        Self {
            d: geo.dof_matrix(),
            pi: geo.patch_projector_matrix(),
            kc: geo.consistency_matrix(),
            s: geo.stabilization_matrix(),
            face_areas: geo.len.clone(),
            h_used: geo.h_omega,
        }
    }

    pub fn original(geo: &LocalGeometry) -> Self {
        Self {
            d: geo.dof_matrix(),
            pi: geo.elliptic_projector_matrix(Constraint::Element),
            kc: geo.consistency_matrix(),
            s: geo.stabilization_matrix_original(),
            face_areas: geo.len[..geo.n_k].to_vec(),
            h_used: 1.0,
        }
    }
}

/// Sum of `|K| |grad Pi_K v|^2` over members of a patch, for the patch
/// projection bound.
pub fn member_energy(mesh: &Mesh, patch: &PatchAssignment, dofs: &[f64]) -> Result<f64, VemError> {
    check_len(dofs, patch.n_dofs())?;
    let mut total = 0.0;
    for &m in &patch.members {
        let geo = LocalGeometry::element(mesh, m)?;
        let local: Vec<f64> = mesh
            .cell_faces(m)
            .iter()
            .map(|cf| dofs[patch.local_index(cf.face).expect("member face in patch map")])
            .collect();
        let g = geo.linear(apply(&geo.elliptic_projector_matrix(Constraint::Element), &local)).grad();
        total += geo.k_area * g.dot(g);
    }
    Ok(total)
}
