use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use polyvem_core::geometry::{check_height, face_height, GeometryConfig, PatchAssignment};
use polyvem_core::mesh::{gen_cut_cartesian, gen_uniform_quad, Axis, Cut};
use polyvem_core::polygon;
use polyvem_core::vem::{self, Constraint, LocalGeometry};
use polyvem_core::{Mesh, Point};
use proptest::prelude::*;

/// Convex polygon from sorted angles and radii around `center`.
fn convex_polygon() -> impl Strategy<Value = Vec<Point>> {
    (3usize..9, -5.0..5.0f64, -5.0..5.0f64, 0.01..10.0f64).prop_flat_map(|(n, cx, cy, scale)| {
        (prop::collection::vec(0.0..1.0f64, n), prop::collection::vec(0.6..1.0f64, n)).prop_map(
            move |(jitter, radii)| {
                let step = std::f64::consts::TAU / n as f64;
                let pts: Vec<Point> = jitter
                    .iter()
                    .zip(&radii)
                    .enumerate()
                    .map(|(i, (j, r))| {
                        let a = step * (i as f64 + 0.8 * j);
                        Point::new(cx + scale * r * a.cos(), cy + scale * r * a.sin())
                    })
                    .collect();
                polygon::convex_hull(&pts)
            },
        )
    })
}

fn psd_and_symmetric(s: &DMatrix<f64>) -> Result<(), TestCaseError> {
    let scale = s.amax().max(f64::MIN_POSITIVE);
    prop_assert!((s - s.transpose()).amax() <= 1e-13 * scale);
    let eig = SymmetricEigen::new(s.clone());
    prop_assert!(eig.eigenvalues.min() >= -1e-12 * eig.eigenvalues.amax().max(scale));
    Ok(())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn projector_reproduces_linears(poly in convex_polygon(), a in -3.0..3.0f64, b in -3.0..3.0f64, c in -3.0..3.0f64) {
        prop_assume!(poly.len() >= 3);
        let q = |p: Point| a + b * p.x + c * p.y;
        let geo = LocalGeometry::from_polygon(&poly).unwrap();
        let lin = vem::elliptic_projector(&poly, &geo.dofs_of_linear(q)).unwrap();
        let size = 1.0 + a.abs() + (b.abs() + c.abs()) * (geo.basis.center.norm() + geo.h_k);
        for &v in &poly {
            prop_assert!((lin.eval(v) - q(v)).abs() <= 1e-12 * size);
        }
    }

    #[test]
    fn local_matrices_are_psd_and_annihilate_linears(poly in convex_polygon()) {
        prop_assume!(poly.len() >= 3);
        let geo = LocalGeometry::from_polygon(&poly).unwrap();
        let n = poly.len();
        let kc = geo.consistency_matrix();
        let s = geo.stabilization_matrix();
        let so = geo.stabilization_matrix_original();
        for m in [&kc, &s, &so] {
            psd_and_symmetric(m)?;
        }
        let row_sums = &kc * DVector::from_element(n, 1.0);
        prop_assert!(row_sums.amax() <= 1e-13 * kc.amax().max(1.0));
        let eig = SymmetricEigen::new(kc.clone()).eigenvalues;
        let rank = eig.iter().filter(|&&l| l.abs() > 1e-10 * eig.amax()).count();
        prop_assert!(rank <= 2);
        let origin = geo.basis.center;
        for q in [|_: Point| 1.0, |p: Point| p.x, |p: Point| p.y] {
            let d = DVector::from_vec(geo.dofs_of_linear(|p| q(p - origin)));
            prop_assert!((&s * &d).amax() <= 1e-11 * s.amax().max(1.0) * d.amax().max(1.0));
            prop_assert!((&so * &d).amax() <= 1e-11 * so.amax().max(1.0) * d.amax().max(1.0));
        }
    }

    #[test]
    fn face_height_is_rigid_motion_invariant(
        poly in convex_polygon(),
        angle in 0.0..std::f64::consts::TAU,
        dx in -10.0..10.0f64,
        dy in -10.0..10.0f64,
    ) {
        prop_assume!(poly.len() >= 3);
        let moved: Vec<Point> = poly.iter().map(|p| p.rotate(angle) + Point::new(dx, dy)).collect();
        let h = polygon::diameter(&poly);
        for e in 0..poly.len() {
            let (Ok(a), Ok(b)) = (face_height(&poly, e, 4), face_height(&moved, e, 4)) else { continue };
            prop_assert!((a.delta_f - b.delta_f).abs() <= 1e-12 * h.max(1.0));
            prop_assert!((a.l_f - b.l_f).abs() <= 1e-12 * h.max(1.0), "edge {}: {} vs {}", e, a.l_f, b.l_f);
        }
    }

    #[test]
    fn height_check_survives_smaller_thresholds(poly in convex_polygon(), g in 0.05..1.0f64, t in 0.0..1.0f64) {
        prop_assume!(poly.len() >= 3);
        let strict = GeometryConfig { gamma1: g, ..Default::default() };
        let loose = GeometryConfig { gamma1: g * t.max(1e-3), ..Default::default() };
        for e in 0..poly.len() {
            if check_height(&poly, e, &strict).ok {
                prop_assert!(check_height(&poly, e, &loose).ok);
            }
        }
    }

    #[test]
    fn height_is_bounded_by_slab_depth(poly in convex_polygon()) {
        prop_assume!(poly.len() >= 3);
        let tol = 1e-10 * polygon::diameter(&poly);
        for e in 0..poly.len() {
            let Ok(fh) = face_height(&poly, e, 4) else { continue };
            for piece in &fh.pieces {
                prop_assert!(piece.l <= piece.delta + tol);
            }
            // Convex cells always carry a triangle over the whole edge.
            prop_assert!(fh.l_f > 0.0);
        }
    }

    #[test]
    fn patch_projection_energy_bound(v in prop::collection::vec(-10.0..10.0f64, 7), eps in 1e-4..0.2f64) {
        let cm = gen_cut_cartesian(4, Cut { axis: Axis::X, offset: eps }).unwrap();
        let tag = cm.slivers[2];
        let patch = PatchAssignment::from_cells(&cm.mesh, tag.sliver, &[tag.full]).unwrap();
        let pi = vem::patch_projector(&cm.mesh, &patch, &v).unwrap();
        let g = pi.grad();
        let lhs = patch.area * g.dot(g);
        let rhs = vem::member_energy(&cm.mesh, &patch, &v).unwrap();
        prop_assert!(lhs <= rhs + 1e-12 * rhs.max(1.0), "{} > {}", lhs, rhs);
    }

    #[test]
    fn merged_boundary_length(n in 2usize..6, seed in 0usize..1000, size in 1usize..6) {
        let mesh = gen_uniform_quad(n).unwrap();
        // Grow a face-connected selection from a seed cell.
        let mut members = vec![seed % mesh.num_cells()];
        let mut k = seed;
        while members.len() < size.min(mesh.num_cells()) {
            let frontier: BTreeSet<usize> = members
                .iter()
                .flat_map(|&m| mesh.neighbors(m))
                .filter(|c| !members.contains(c))
                .collect();
            let Some(&next) = frontier.iter().nth(k % frontier.len().max(1)) else { break };
            members.push(next);
            k = k / 3 + 7;
        }
        let Ok(merged) = mesh.merge_cells(&members) else { return Ok(()) };
        let perimeters: f64 = members.iter().map(|&m| polygon::perimeter(&mesh.cell_polygon(m))).sum();
        let interior: f64 = merged.faces.iter().filter(|f| f.1).map(|f| mesh.face_length(f.0)).sum();
        prop_assert!((merged.perimeter(&mesh) - (perimeters - 2.0 * interior)).abs() <= 1e-13);
        let area: f64 = members.iter().map(|&m| mesh.cell_area(m)).sum();
        prop_assert!((merged.area - area).abs() <= 1e-13);
    }

    #[test]
    fn cut_meshes_cover_the_square(n in 1usize..12, frac in 1e-6..0.999f64, vertical in any::<bool>()) {
        let axis = if vertical { Axis::X } else { Axis::Y };
        let cm = gen_cut_cartesian(n, Cut { axis, offset: frac / n as f64 }).unwrap();
        prop_assert_eq!(cm.mesh.num_cells(), n * n + n);
        prop_assert!((cm.mesh.total_area() - 1.0).abs() <= 1e-12);
        for tag in &cm.slivers {
            prop_assert!((cm.mesh.cell_area(tag.sliver) - frac / (n * n) as f64).abs() <= 1e-12 * frac);
        }
        incidence_round_trip(&cm.mesh)?;
    }
}

fn incidence_round_trip(mesh: &Mesh) -> Result<(), TestCaseError> {
    for k in 0..mesh.num_cells() {
        for cf in mesh.cell_faces(k) {
            let (a, b) = mesh.face_cells(cf.face);
            prop_assert!(a == k || b == Some(k));
        }
    }
    for f in 0..mesh.num_faces() {
        let (a, b) = mesh.face_cells(f);
        prop_assert!(mesh.cell_faces(a).iter().any(|cf| cf.face == f));
        if let Some(b) = b {
            prop_assert!(mesh.cell_faces(b).iter().any(|cf| cf.face == f));
        }
    }
    Ok(())
}

#[test]
fn uniform_meshes_are_consistent() {
    for n in [1, 2, 5, 8] {
        let mesh = gen_uniform_quad(n).unwrap();
        assert!((mesh.total_area() - 1.0).abs() <= 1e-12);
        incidence_round_trip(&mesh).unwrap();
    }
}

#[test]
fn projector_constant_follows_the_constraint_boundary() {
    let cm = gen_cut_cartesian(2, Cut { axis: Axis::Y, offset: 0.01 }).unwrap();
    let tag = cm.slivers[0];
    let patch = PatchAssignment::from_cells(&cm.mesh, tag.sliver, &[tag.full]).unwrap();
    let geo = LocalGeometry::patch(&cm.mesh, &patch).unwrap();
    let own = geo.elliptic_projector_matrix(Constraint::Element);
    let ext = geo.elliptic_projector_matrix(Constraint::Patch);
    // Same gradient, different constants.
    for j in 0..geo.n_omega() {
        assert_eq!(own[(1, j)], ext[(1, j)]);
        assert_eq!(own[(2, j)], ext[(2, j)]);
    }
    assert!((0..geo.n_omega()).any(|j| (own[(0, j)] - ext[(0, j)]).abs() > 1e-3));
}
