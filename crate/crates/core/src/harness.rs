//! Manufactured solutions, error measures and convergence studies.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::str::FromStr;

use libm::{log2, sin, cos, sqrt};
use thiserror::Error;

use crate::geometry::{self, GeometryConfig, GeometryError, PatchSet};
use crate::mesh::{gen_cut_cartesian, gen_uniform_quad, Axis, Cut, Mesh, MeshError};
use crate::point::Point;
use crate::quadrature;
use crate::system::{self, Assemble, SerialAssembly, SparseSystem, Stabilization, SystemError};
use crate::vem::{Constraint, LocalGeometry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HarnessError {
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error("a convergence study needs at least {min} levels, got {found}")]
    TooFewLevels { min: usize, found: usize },
    #[error("energy error requested in the {requested} norm of a system assembled with {assembled}")]
    StabilizationMismatch { requested: Stabilization, assembled: Stabilization },
    #[error("expected {expected} values, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("unknown manufactured case `{0}`")]
    UnknownCase(String),
}

/// Exact solution `u` of `-Δu = f` with its gradient; `g = u` on the boundary.
#[derive(Clone, Copy, Debug)]
pub struct ManufacturedCase {
    pub name: &'static str,
    pub u: fn(Point) -> f64,
    pub grad: fn(Point) -> Point,
    pub f: fn(Point) -> f64,
    /// `u` is linear, so the discrete solution is exact.
    pub linear: bool,
}

impl ManufacturedCase {
    /// `u = sin(pi x) sin(pi y)`, `f = 2 pi^2 u`.
    pub fn sin_sin() -> Self {
        Self {
            name: "sinsin",
            u: |p| sin(PI * p.x) * sin(PI * p.y),
            grad: |p| Point::new(PI * cos(PI * p.x) * sin(PI * p.y), PI * sin(PI * p.x) * cos(PI * p.y)),
            f: |p| 2.0 * PI * PI * sin(PI * p.x) * sin(PI * p.y),
            linear: false,
        }
    }

    /// Patch test: `u = 1 + 2x - 3y`, `f = 0`.
    pub fn linear() -> Self {
        Self {
            name: "linear",
            u: |p| 1.0 + 2.0 * p.x - 3.0 * p.y,
            grad: |_| Point::new(2.0, -3.0),
            f: |_| 0.0,
            linear: true,
        }
    }
}

impl FromStr for ManufacturedCase {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sinsin" | "sin-sin" => Ok(Self::sin_sin()),
            "linear" | "patch-test" => Ok(Self::linear()),
            other => Err(HarnessError::UnknownCase(other.into())),
        }
    }
}

/// Canonical interpolant: face averages of `u` by 4-point Gauss quadrature.
pub fn interpolate(mesh: &Mesh, u: &dyn Fn(Point) -> f64) -> Vec<f64> {
    system::face_averages(mesh, 0..mesh.num_faces(), u)
}

/// `|||chi_i - chi_h|||` in the norm of the assembled form. The system must
/// have been assembled with `kind`, since the norm is the form itself.
pub fn energy_error(system: &SparseSystem, kind: Stabilization, chi_i: &[f64], chi_h: &[f64]) -> Result<f64, HarnessError> {
    if system.kind != kind {
        return Err(HarnessError::StabilizationMismatch { requested: kind, assembled: system.kind });
    }
    let n = system.n_dofs();
    for v in [chi_i, chi_h] {
        if v.len() != n {
            return Err(HarnessError::DimensionMismatch { expected: n, found: v.len() });
        }
    }
    let e: Vec<f64> = chi_i.iter().zip(chi_h).map(|(a, b)| a - b).collect();
    Ok(system::energy_norm(&system.a, &e)?)
}

/// `sqrt(sum_K ||grad u - grad Pi_K u_h||^2_K)`.
pub fn broken_h1_error(mesh: &Mesh, grad_u: &dyn Fn(Point) -> Point, chi_h: &[f64]) -> Result<f64, HarnessError> {
    if chi_h.len() != mesh.num_faces() {
        return Err(HarnessError::DimensionMismatch { expected: mesh.num_faces(), found: chi_h.len() });
    }
    let mut total = 0.0;
    for k in 0..mesh.num_cells() {
        let geo = LocalGeometry::element(mesh, k).map_err(|source| SystemError::Local { cell: k, source })?;
        let pi = geo.elliptic_projector_matrix(Constraint::Element);
        let mut coef = [0.0; 3];
        for (j, cf) in mesh.cell_faces(k).iter().enumerate() {
            for (r, c) in coef.iter_mut().enumerate() {
                *c += pi[(r, j)] * chi_h[cf.face];
            }
        }
        let g = geo.linear(coef).grad();
        total += quadrature::integrate_polygon(&geo.k_polygon, |p| {
            let d = grad_u(p) - g;
            d.dot(d)
        });
    }
    Ok(sqrt(total.max(0.0)))
}

/// How the cut offset depends on the resolution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CutRule {
    /// `eps = h^2` with `h = 1/n`.
    HSquared,
    Fixed(f64),
}

impl CutRule {
    pub fn offset(self, n: usize) -> f64 {
        match self {
            Self::HSquared => 1.0 / (n * n) as f64,
            Self::Fixed(eps) => eps,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MeshFamily {
    Uniform,
    Cut { axis: Axis, rule: CutRule },
}

impl MeshFamily {
    pub fn mesh(&self, n: usize) -> Result<Mesh, MeshError> {
        match *self {
            Self::Uniform => gen_uniform_quad(n),
            Self::Cut { axis, rule } => Ok(gen_cut_cartesian(n, Cut { axis, offset: rule.offset(n) })?.mesh),
        }
    }

    pub fn label(&self) -> String {
        match *self {
            Self::Uniform => "uniform".into(),
            Self::Cut { rule: CutRule::HSquared, .. } => "cut".into(),
            Self::Cut { rule: CutRule::Fixed(eps), .. } => format!("cut-eps{eps:e}"),
        }
    }
}

/// Solver settings of a study.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StudyConfig {
    pub geometry: GeometryConfig,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { geometry: GeometryConfig::default(), tol: 1e-11, max_iter: 20_000 }
    }
}

/// Outcome of one discrete solve against a manufactured solution.
#[derive(Clone, Debug)]
pub struct LevelResult {
    pub ndof: usize,
    pub energy_err: f64,
    pub h1proj_err: f64,
    pub max_dof_err: f64,
    pub iterations: usize,
    pub patches: PatchSet,
}

/// Classifies, patches (for the patch form), assembles, solves and measures.
pub fn solve_case(
    mesh: &Mesh,
    case: &ManufacturedCase,
    kind: Stabilization,
    cfg: &StudyConfig,
    strategy: &dyn Assemble,
) -> Result<LevelResult, HarnessError> {
    let patches = match kind {
        Stabilization::Patch => geometry::assign_patches(mesh, &cfg.geometry)?,
        Stabilization::Original => PatchSet::singletons(mesh),
    };
    let f = case.f;
    let sys = system::assemble_with(mesh, &patches, kind, &f, strategy)?;
    let u = case.u;
    let reduced = sys.apply_dirichlet(mesh, &u);
    let sol = reduced.solve_cg(cfg.tol, cfg.max_iter)?;
    let chi_i = interpolate(mesh, &u);
    let energy_err = energy_error(&sys, kind, &chi_i, &sol.dofs)?;
    let grad = case.grad;
    let h1proj_err = broken_h1_error(mesh, &grad, &sol.dofs)?;
    let max_dof_err = chi_i.iter().zip(&sol.dofs).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(LevelResult { ndof: mesh.num_faces(), energy_err, h1proj_err, max_dof_err, iterations: sol.iterations, patches })
}

#[derive(Clone, Debug, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct ConvergenceRow {
    pub level: usize,
    pub h: f64,
    pub ndof: usize,
    pub energy_err: f64,
    pub eoc_energy: Option<f64>,
    pub h1proj_err: f64,
    pub eoc_h1: Option<f64>,
    pub stab_kind: Stabilization,
    pub family: String,
    pub case: String,
}

/// `log2(e_prev / e_cur)`.
pub fn eoc(prev: f64, cur: f64) -> f64 {
    log2(prev / cur)
}

/// Runs one solve per resolution in `levels` and records errors and rates.
/// Rates are omitted for linear cases, whose errors are round-off.
pub fn convergence_study(
    family: &MeshFamily,
    levels: &[usize],
    case: &ManufacturedCase,
    kind: Stabilization,
    cfg: &StudyConfig,
    strategy: &dyn Assemble,
) -> Result<Vec<ConvergenceRow>, HarnessError> {
    if levels.len() < 3 {
        return Err(HarnessError::TooFewLevels { min: 3, found: levels.len() });
    }
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for (level, &n) in levels.iter().enumerate() {
        let mesh = family.mesh(n)?;
        let r = solve_case(&mesh, case, kind, cfg, strategy)?;
        let (eoc_energy, eoc_h1) = match rows.last() {
            Some(prev) if !case.linear => (Some(eoc(prev.energy_err, r.energy_err)), Some(eoc(prev.h1proj_err, r.h1proj_err))),
            _ => (None, None),
        };
        rows.push(ConvergenceRow {
            level,
            h: mesh.h(),
            ndof: r.ndof,
            energy_err: r.energy_err,
            eoc_energy,
            h1proj_err: r.h1proj_err,
            eoc_h1,
            stab_kind: kind,
            family: family.label(),
            case: case.name.into(),
        });
    }
    Ok(rows)
}

/// Cut meshes at fixed `n` and decreasing offsets: one row per offset and
/// stabilization kind, `level` indexing the offset.
pub fn robustness_study(
    n: usize,
    offsets: &[f64],
    case: &ManufacturedCase,
    kinds: &[Stabilization],
    cfg: &StudyConfig,
    strategy: &dyn Assemble,
) -> Result<Vec<ConvergenceRow>, HarnessError> {
    let mut rows = Vec::new();
    for &kind in kinds {
        for (level, &eps) in offsets.iter().enumerate() {
            let family = MeshFamily::Cut { axis: Axis::Y, rule: CutRule::Fixed(eps) };
            let mesh = family.mesh(n)?;
            let r = solve_case(&mesh, case, kind, cfg, strategy)?;
            rows.push(ConvergenceRow {
                level,
                h: mesh.h(),
                ndof: r.ndof,
                energy_err: r.energy_err,
                eoc_energy: None,
                h1proj_err: r.h1proj_err,
                eoc_h1: None,
                stab_kind: kind,
                family: family.label(),
                case: case.name.into(),
            });
        }
    }
    Ok(rows)
}

/// Relative spread `(max - min) / min` of a set of positive values.
pub fn relative_spread(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::MIN, f64::max);
    let min = values.iter().copied().fold(f64::MAX, f64::min);
    (max - min) / min
}

/// Mean of the available rates of a table.
pub fn mean_eoc(rows: &[ConvergenceRow]) -> Option<f64> {
    let rates: Vec<f64> = rows.iter().filter_map(|r| r.eoc_energy).collect();
    (!rates.is_empty()).then(|| rates.iter().sum::<f64>() / rates.len() as f64)
}

/// Default serial strategy, for callers without a preference.
pub fn serial() -> &'static dyn Assemble {
    &SerialAssembly
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn patch_test_on_uniform_mesh() {
        let mesh = gen_uniform_quad(3).unwrap();
        for kind in [Stabilization::Patch, Stabilization::Original] {
            let r = solve_case(&mesh, &ManufacturedCase::linear(), kind, &StudyConfig::default(), serial()).unwrap();
            assert!(r.energy_err < 1e-10, "{kind}: {}", r.energy_err);
            assert!(r.max_dof_err < 1e-10);
            assert!(r.h1proj_err < 1e-10);
        }
    }

    #[test]
    fn mismatched_norm_rejected() {
        let mesh = gen_uniform_quad(2).unwrap();
        let sys = system::assemble(&mesh, &PatchSet::singletons(&mesh), Stabilization::Patch, &|_| 0.0).unwrap();
        let z = alloc::vec![0.0; mesh.num_faces()];
        assert_eq!(energy_error(&sys, Stabilization::Patch, &z, &z), Ok(0.0));
        assert!(matches!(
            energy_error(&sys, Stabilization::Original, &z, &z),
            Err(HarnessError::StabilizationMismatch { .. })
        ));
    }

    #[test]
    fn too_few_levels() {
        let err = convergence_study(
            &MeshFamily::Uniform,
            &[2, 4],
            &ManufacturedCase::sin_sin(),
            Stabilization::Patch,
            &StudyConfig::default(),
            serial(),
        )
        .unwrap_err();
        assert_eq!(err, HarnessError::TooFewLevels { min: 3, found: 2 });
    }

    #[test]
    fn interpolant_of_constant() {
        let mesh = gen_uniform_quad(2).unwrap();
        assert!(interpolate(&mesh, &|_| 1.0).iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }
}
