use nalgebra::SymmetricEigen;
use polyvem_core::geometry::{assign_patches, GeometryConfig, PatchSet};
use polyvem_core::mesh::{fixture, gen_cut_cartesian, gen_uniform_quad, Axis, Cut, FixtureKind};
use polyvem_core::sparse::{cg, CsrMatrix, SolveError};
use polyvem_core::system::{assemble, element_contribution, scatter, SystemError};
use polyvem_core::{Mesh, Point, Stabilization};

const KINDS: [Stabilization; 2] = [Stabilization::Patch, Stabilization::Original];

fn corpus() -> Vec<(String, Mesh)> {
    let mut meshes = vec![];
    for n in [1, 2, 3, 8] {
        meshes.push((format!("uniform-{n}"), gen_uniform_quad(n).unwrap()));
    }
    for (n, eps) in [(3, 1e-3), (4, 1e-2), (8, 1e-3)] {
        let cm = gen_cut_cartesian(n, Cut { axis: Axis::Y, offset: eps }).unwrap();
        meshes.push((format!("cut-{n}-{eps}"), cm.mesh));
    }
    let cm = gen_cut_cartesian(4, Cut { axis: Axis::X, offset: 1e-4 }).unwrap();
    meshes.push(("cut-x-4".into(), cm.mesh));
    for kind in [FixtureKind::Hourglass, FixtureKind::Cracklike] {
        meshes.push((format!("{kind:?}"), fixture(kind).mesh));
    }
    meshes
}

fn patches_for(mesh: &Mesh, kind: Stabilization) -> PatchSet {
    match kind {
        Stabilization::Patch => assign_patches(mesh, &GeometryConfig::default()).unwrap(),
        Stabilization::Original => PatchSet::singletons(mesh),
    }
}

fn zero(_: Point) -> f64 {
    0.0
}

/// Eigenvalues of the unreduced matrix, ascending, with the matrix.
fn spectrum(mesh: &Mesh, kind: Stabilization) -> (Vec<f64>, CsrMatrix) {
    let sys = assemble(mesh, &patches_for(mesh, kind), kind, &zero).unwrap();
    let dense = sys.a.to_dense();
    assert!((&dense - dense.transpose()).amax() <= 1e-14 * dense.amax());
    let eig = SymmetricEigen::new(dense);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    (values, sys.a)
}

#[test]
fn kernel_is_spanned_by_constants() {
    for (name, mesh) in corpus() {
        if mesh.num_faces() > 200 {
            continue;
        }
        for kind in KINDS {
            let (values, a) = spectrum(&mesh, kind);
            let top = values.last().unwrap().abs();
            assert!(values[0].abs() / top < 1e-12, "{name} {kind}: lambda_1 = {}", values[0]);
            assert!(values[1] / top > 1e-10, "{name} {kind}: lambda_2 / lambda_max = {}", values[1] / top);
            // One-dimensional kernel plus an exact constant null vector.
            let ones = vec![1.0; mesh.num_faces()];
            let residual = a.mul_vec(&ones).iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(residual <= 1e-13 * top, "{name} {kind}: A 1 = {residual}");
        }
    }
}

#[test]
fn twelve_dof_uniform_kernel() {
    let mesh = gen_uniform_quad(2).unwrap();
    assert_eq!(mesh.num_faces(), 12);
    for kind in KINDS {
        let (values, _) = spectrum(&mesh, kind);
        assert_eq!(values.len(), 12);
        let top = values[11];
        assert_eq!(values.iter().filter(|l| l.abs() / top < 1e-12).count(), 1);
    }
}

#[test]
fn sliver_rows_couple_to_the_whole_patch() {
    let cm = gen_cut_cartesian(4, Cut { axis: Axis::Y, offset: 1e-3 }).unwrap();
    let mesh = &cm.mesh;
    let patches = patches_for(mesh, Stabilization::Patch);
    let sys = assemble(mesh, &patches, Stabilization::Patch, &zero).unwrap();
    for tag in &cm.slivers {
        let patch = patches.patches[tag.sliver].as_ref().unwrap();
        assert_eq!(patch.n_dofs(), 7);
        let c = element_contribution(mesh, &patches, tag.sliver, Stabilization::Patch, &zero).unwrap();
        assert_eq!(c.dofs, patch.dofs);
        for i in 0..4 {
            for j in 0..7 {
                assert!(c.matrix[(i, j)] != 0.0, "sliver {} local ({i},{j}) is zero", tag.sliver);
            }
            let row: Vec<usize> = sys.a.row(patch.dofs[i]).map(|(c, _)| c).collect();
            assert!(patch.dofs.iter().all(|d| row.contains(d)));
        }
    }
}

#[test]
fn patch_test_on_the_corpus() {
    let u = |p: Point| 1.0 + 2.0 * p.x - 3.0 * p.y;
    for (name, mesh) in corpus() {
        for kind in KINDS {
            let sys = assemble(&mesh, &patches_for(&mesh, kind), kind, &zero).unwrap();
            let sol = sys.apply_dirichlet(&mesh, &u).solve_cg(1e-14, 10_000).unwrap();
            for f in 0..mesh.num_faces() {
                let exact = u(mesh.face_midpoint(f));
                assert!((sol.dofs[f] - exact).abs() < 1e-9, "{name} {kind}: face {f}");
            }
        }
    }
}

#[test]
fn scatter_order_only_changes_round_off() {
    let cm = gen_cut_cartesian(8, Cut { axis: Axis::Y, offset: 1e-3 }).unwrap();
    let mesh = &cm.mesh;
    let f = |p: Point| (p.x * 3.0).sin() + p.y;
    for kind in KINDS {
        let patches = patches_for(mesh, kind);
        let mut contributions: Vec<_> =
            (0..mesh.num_cells()).map(|k| element_contribution(mesh, &patches, k, kind, &f).unwrap()).collect();
        let forward = scatter(mesh, &contributions, kind);
        contributions.reverse();
        let backward = scatter(mesh, &contributions, kind);
        let diff = (forward.a.to_dense() - backward.a.to_dense()).amax();
        assert!(diff <= 1e-14 * forward.a.to_dense().amax());
        for (x, y) in forward.b.iter().zip(&backward.b) {
            assert!((x - y).abs() <= 1e-15);
        }
    }
}

#[test]
fn matrices_are_symmetric() {
    for (name, mesh) in corpus() {
        for kind in KINDS {
            let sys = assemble(&mesh, &patches_for(&mesh, kind), kind, &zero).unwrap();
            assert!(sys.a.asymmetry() <= 1e-14, "{name} {kind}");
        }
    }
}

#[test]
fn cg_converges_on_a_moderate_mesh() {
    let mesh = gen_uniform_quad(8).unwrap();
    let one = |_: Point| 1.0;
    for kind in KINDS {
        let sys = assemble(&mesh, &patches_for(&mesh, kind), kind, &one).unwrap();
        let sol = sys.apply_dirichlet(&mesh, &zero).solve_cg(1e-10, 2000).unwrap();
        assert!(sol.iterations < 2000);
        // The discrete solution of -lap u = 1 is positive inside.
        assert!(sys.free_dofs.iter().all(|&f| sol.dofs[f] > 0.0));
    }
}

#[test]
fn unreduced_system_does_not_solve() {
    let mesh = gen_uniform_quad(4).unwrap();
    let one = |_: Point| 1.0;
    let sys = assemble(&mesh, &PatchSet::singletons(&mesh), Stabilization::Original, &one).unwrap();
    // Constants lie in the kernel while the load has a nonzero mean.
    match cg(&sys.a, &sys.b, 1e-12, 500) {
        Err(SolveError::NotConverged { .. } | SolveError::Breakdown { .. }) => {}
        other => panic!("singular system solved: {other:?}"),
    }
}

#[test]
fn dirichlet_examples() {
    let g = |p: Point| 1.0 + 2.0 * p.x - 3.0 * p.y;
    // One cell: all DoFs prescribed, nothing to solve.
    let mesh = gen_uniform_quad(1).unwrap();
    let sys = assemble(&mesh, &PatchSet::singletons(&mesh), Stabilization::Original, &zero).unwrap();
    let reduced = sys.apply_dirichlet(&mesh, &g);
    assert!(reduced.free_dofs.is_empty());
    let sol = reduced.solve_cg(1e-12, 10).unwrap();
    assert_eq!(sol.iterations, 0);
    for f in 0..4 {
        assert!((sol.dofs[f] - g(mesh.face_midpoint(f))).abs() < 1e-14);
    }
    // Two by two: four interior faces, the rest lifted to the right-hand side.
    let mesh = gen_uniform_quad(2).unwrap();
    let sys = assemble(&mesh, &PatchSet::singletons(&mesh), Stabilization::Patch, &zero).unwrap();
    let reduced = sys.apply_dirichlet(&mesh, &g);
    assert_eq!((reduced.a.nrows(), reduced.boundary_dofs.len()), (4, 8));
    assert!(reduced.b.iter().any(|v| v.abs() > 1e-3));
}

#[test]
fn missing_patch_is_reported() {
    let cm = gen_cut_cartesian(2, Cut { axis: Axis::Y, offset: 1e-3 }).unwrap();
    let mut patches = PatchSet::singletons(&cm.mesh);
    patches.anisotropic[cm.slivers[0].sliver] = true;
    let err = assemble(&cm.mesh, &patches, Stabilization::Patch, &zero).unwrap_err();
    assert!(matches!(err, SystemError::PatchMissing(k) if k == cm.slivers[0].sliver));
}

