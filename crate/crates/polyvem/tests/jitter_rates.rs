//! On perturbed grids the energy error decays at rate one; the faster decay
//! on tensor grids comes from their symmetry.

use polyvem::jitter::{jittered_study, DEFAULT_SEED};
use polyvem::ThreadedAssembly;
use polyvem_core::harness::{convergence_study, StudyConfig};
use polyvem_core::{ManufacturedCase, MeshFamily, Stabilization};

#[test]
fn jittered_grids_converge_at_rate_one() {
    let cfg = StudyConfig::default();
    let strategy = ThreadedAssembly::available();
    for kind in [Stabilization::Patch, Stabilization::Original] {
        let rows = jittered_study(&[8, 16, 32, 64], 0.3, DEFAULT_SEED, &ManufacturedCase::sin_sin(), kind, &cfg, &strategy)
            .unwrap();
        let last = rows.last().unwrap();
        let (e, h1) = (last.eoc_energy.unwrap(), last.eoc_h1.unwrap());
        assert!((0.85..=1.15).contains(&e), "{kind}: energy rate {e}");
        assert!((0.85..=1.15).contains(&h1), "{kind}: gradient rate {h1}");
    }
}

#[test]
fn tensor_grids_are_superconvergent_in_energy() {
    let cfg = StudyConfig::default();
    let rows = convergence_study(
        &MeshFamily::Uniform,
        &[8, 16, 32],
        &ManufacturedCase::sin_sin(),
        Stabilization::Patch,
        &cfg,
        &ThreadedAssembly::new(2),
    )
    .unwrap();
    let e = rows.last().unwrap().eoc_energy.unwrap();
    assert!((1.9..=2.1).contains(&e), "energy rate {e}");
}
