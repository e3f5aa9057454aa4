//! Randomly perturbed meshes, reproducible through `POLYVEM_SEED`.

use polyvem_core::harness::{eoc, solve_case, HarnessError, StudyConfig};
use polyvem_core::mesh::gen_uniform_quad;
use polyvem_core::system::Assemble;
use polyvem_core::{ConvergenceRow, ManufacturedCase, Mesh, MeshError, Point, Stabilization};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const SEED_VAR: &str = "POLYVEM_SEED";
pub const DEFAULT_SEED: u64 = 0x5eed;

/// Seed from `POLYVEM_SEED`, or the fixed default when unset or unparsable.
pub fn seed_from_env() -> u64 {
    std::env::var(SEED_VAR).ok().and_then(|s| s.trim().parse().ok()).unwrap_or(DEFAULT_SEED)
}

/// Moves every vertex off the boundary by up to `amplitude` times its
/// shortest incident face, independently per coordinate. Boundary vertices
/// stay put, so the domain is unchanged.
pub fn jitter_mesh(mesh: &Mesh, amplitude: f64, seed: u64) -> Result<Mesh, MeshError> {
    let n = mesh.vertices().len();
    let mut reach = vec![f64::MAX; n];
    let mut fixed = vec![false; n];
    for f in 0..mesh.num_faces() {
        let [a, b] = mesh.face(f);
        let len = mesh.face_length(f);
        for v in [a, b] {
            reach[v] = reach[v].min(len);
            fixed[v] |= mesh.is_boundary_face(f);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vertices = mesh
        .vertices()
        .iter()
        .enumerate()
        .map(|(v, &p)| {
            let (dx, dy): (f64, f64) = (rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
            if fixed[v] {
                p
            } else {
                p + Point::new(dx, dy) * (amplitude * reach[v])
            }
        })
        .collect();
    Mesh::new(vertices, mesh.cells().to_vec())
}

/// Jittered uniform grid; each resolution draws from its own stream.
pub fn jittered_uniform(n: usize, amplitude: f64, seed: u64) -> Result<Mesh, MeshError> {
    jitter_mesh(&gen_uniform_quad(n)?, amplitude, seed.wrapping_add(n as u64))
}

pub fn family_label(amplitude: f64) -> String {
    format!("jitter{amplitude}")
}

/// Convergence rows on jittered uniform grids.
pub fn jittered_study(
    levels: &[usize],
    amplitude: f64,
    seed: u64,
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
        let mesh = jittered_uniform(n, amplitude, seed)?;
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
            family: family_label(amplitude),
            case: case.name.into(),
        });
    }
    Ok(rows)
}
