use std::f64::consts::PI;

use polyvem_core::geometry::PatchSet;
use polyvem_core::harness::{
    broken_h1_error, convergence_study, energy_error, interpolate, serial, solve_case, CutRule, HarnessError,
    ManufacturedCase, MeshFamily, StudyConfig,
};
use polyvem_core::mesh::{gen_uniform_quad, Axis};
use polyvem_core::system::assemble;
use polyvem_core::{Point, Stabilization};
use proptest::prelude::*;

const KINDS: [Stabilization; 2] = [Stabilization::Patch, Stabilization::Original];

proptest! {
    #![proptest_config(ProptestConfig::with_cases(20))]

    #[test]
    fn manufactured_cases_match_finite_differences(x in 0.05..0.95f64, y in 0.05..0.95f64) {
        let d = 1e-4;
        for case in [ManufacturedCase::sin_sin(), ManufacturedCase::linear()] {
            let u = case.u;
            let p = Point::new(x, y);
            let (ex, ey) = (Point::new(d, 0.0), Point::new(0.0, d));
            let gx = (u(p + ex) - u(p - ex)) / (2.0 * d);
            let gy = (u(p + ey) - u(p - ey)) / (2.0 * d);
            let g = (case.grad)(p);
            prop_assert!((gx - g.x).abs() < 1e-6 && (gy - g.y).abs() < 1e-6);
            let lap = (u(p + ex) + u(p - ex) + u(p + ey) + u(p - ey) - 4.0 * u(p)) / (d * d);
            prop_assert!((-lap - (case.f)(p)).abs() < 1e-6 * (1.0 + (case.f)(p).abs()), "{}", case.name);
        }
    }
}

/// Composite midpoint rule with `m` panels on a segment.
fn composite_average(a: Point, b: Point, m: usize, u: impl Fn(Point) -> f64) -> f64 {
    (0..m).map(|i| u(a.lerp(b, (i as f64 + 0.5) / m as f64))).sum::<f64>() / m as f64
}

#[test]
fn interpolation_examples() {
    let mesh = gen_uniform_quad(1).unwrap();
    assert!(interpolate(&mesh, &|_| 1.0).iter().all(|&v| (v - 1.0).abs() <= 1e-15));
    let chi = interpolate(&mesh, &|p| p.x);
    for f in 0..mesh.num_faces() {
        assert!((chi[f] - mesh.face_midpoint(f).x).abs() < 1e-15);
    }
    let mesh = gen_uniform_quad(2).unwrap();
    let case = ManufacturedCase::sin_sin();
    let chi = interpolate(&mesh, &case.u);
    let target = (0..mesh.num_faces())
        .find(|&f| {
            let (a, b) = mesh.face_endpoints(f);
            a.y == 0.5 && b.y == 0.5 && a.x.min(b.x) == 0.0
        })
        .unwrap();
    let (a, b) = mesh.face_endpoints(target);
    let oracle = composite_average(a, b, 10_000, case.u);
    // The average of sin(pi x) over [0, 1/2] is 2/pi.
    assert!((oracle - 2.0 / PI).abs() < 1e-9);
    // 4-point Gauss remainder for an average over length L:
    // L^8 (4!)^4 / (9 (8!)^3) max|u^(8)|, with max|u^(8)| = pi^8.
    let remainder = |len: f64| len.powi(8) * 24f64.powi(4) / (9.0 * 40320f64.powi(3)) * PI.powi(8);
    assert!((chi[target] - oracle).abs() <= remainder(0.5));
    assert!((chi[target] - oracle).abs() > 1e-8);
    // From n = 4 on, the rule sits below 1e-8 on every face.
    for n in [4, 8] {
        let mesh = gen_uniform_quad(n).unwrap();
        let chi = interpolate(&mesh, &case.u);
        for f in 0..mesh.num_faces() {
            let (a, b) = mesh.face_endpoints(f);
            let err = (chi[f] - composite_average(a, b, 10_000, case.u)).abs();
            assert!(err < 1e-8, "n={n} face {f}: {err}");
        }
    }
}

#[test]
fn interpolation_error_identity() {
    let mesh = MeshFamily::Cut { axis: Axis::Y, rule: CutRule::Fixed(1e-3) }.mesh(4).unwrap();
    let cfg = StudyConfig::default();
    let case = ManufacturedCase::sin_sin();
    for kind in KINDS {
        let patches = match kind {
            Stabilization::Patch => polyvem_core::geometry::assign_patches(&mesh, &cfg.geometry).unwrap(),
            Stabilization::Original => PatchSet::singletons(&mesh),
        };
        let sys = assemble(&mesh, &patches, kind, &case.f).unwrap();
        let chi = interpolate(&mesh, &case.u);
        assert_eq!(energy_error(&sys, kind, &chi, &chi).unwrap(), 0.0);
        let other = match kind {
            Stabilization::Patch => Stabilization::Original,
            Stabilization::Original => Stabilization::Patch,
        };
        assert!(matches!(energy_error(&sys, other, &chi, &chi), Err(HarnessError::StabilizationMismatch { .. })));
        assert!(matches!(energy_error(&sys, kind, &chi, &chi[1..]), Err(HarnessError::DimensionMismatch { .. })));
    }
}

#[test]
fn broken_h1_examples() {
    let mesh = gen_uniform_quad(3).unwrap();
    let zero = vec![0.0; mesh.num_faces()];
    assert_eq!(broken_h1_error(&mesh, &|_| Point::new(0.0, 0.0), &zero).unwrap(), 0.0);
    // Zero DoFs against a constant gradient: the error is |grad u| over the unit square.
    let e = broken_h1_error(&mesh, &|_| Point::new(3.0, 4.0), &zero).unwrap();
    assert!((e - 5.0).abs() < 1e-13);
    let chi = interpolate(&mesh, &|p| 3.0 * p.x + 4.0 * p.y);
    assert!(broken_h1_error(&mesh, &|_| Point::new(3.0, 4.0), &chi).unwrap() < 1e-13);
}

#[test]
fn patch_test_rows_carry_no_rates() {
    let cfg = StudyConfig::default();
    let families = [MeshFamily::Uniform, MeshFamily::Cut { axis: Axis::Y, rule: CutRule::HSquared }];
    for family in families {
        for kind in KINDS {
            let rows = convergence_study(&family, &[2, 4, 8], &ManufacturedCase::linear(), kind, &cfg, serial()).unwrap();
            for row in &rows {
                assert!(row.energy_err <= 1e-9 && row.h1proj_err <= 1e-9, "{row:?}");
                assert!(row.eoc_energy.is_none() && row.eoc_h1.is_none());
            }
        }
    }
}

#[test]
fn too_few_levels_are_rejected() {
    let err = convergence_study(
        &MeshFamily::Uniform,
        &[4, 8],
        &ManufacturedCase::sin_sin(),
        Stabilization::Patch,
        &StudyConfig::default(),
        serial(),
    )
    .unwrap_err();
    assert_eq!(err, HarnessError::TooFewLevels { min: 3, found: 2 });
}

#[test]
fn rows_halve_h_and_decay() {
    let cfg = StudyConfig::default();
    let families = [MeshFamily::Uniform, MeshFamily::Cut { axis: Axis::Y, rule: CutRule::HSquared }];
    for family in families {
        for kind in KINDS {
            let rows = convergence_study(&family, &[4, 8, 16], &ManufacturedCase::sin_sin(), kind, &cfg, serial()).unwrap();
            for pair in rows.windows(2) {
                let ratio = pair[0].h / pair[1].h;
                assert!((ratio - 2.0).abs() <= 0.05 * 2.0, "{family:?} h ratio {ratio}");
            }
            let last = rows.last().unwrap();
            // The energy error decays at least linearly; the projected
            // gradient error decays exactly linearly.
            assert!(last.eoc_energy.unwrap() >= 0.85, "{last:?}");
            let h1 = last.eoc_h1.unwrap();
            assert!((0.85..=1.15).contains(&h1), "{last:?}");
        }
    }
}

#[test]
fn solve_case_reports_exact_linears() {
    let mesh = MeshFamily::Cut { axis: Axis::X, rule: CutRule::Fixed(1e-4) }.mesh(8).unwrap();
    for kind in KINDS {
        // Sliver rows scale like 1/eps, so exactness needs a tight residual.
        let cfg = StudyConfig { tol: 1e-14, ..Default::default() };
        let r = solve_case(&mesh, &ManufacturedCase::linear(), kind, &cfg, serial()).unwrap();
        assert!(r.energy_err <= 1e-9 && r.max_dof_err <= 1e-9, "{kind}: {} {} after {}", r.energy_err, r.max_dof_err, r.iterations);
        assert_eq!(r.ndof, mesh.num_faces());
        assert_eq!(r.patches.anisotropic.iter().filter(|&&a| a).count(), if kind == Stabilization::Patch { 8 } else { 0 });
    }
}

#[test]
fn case_names_parse() {
    assert_eq!("sinsin".parse::<ManufacturedCase>().unwrap().name, "sinsin");
    assert_eq!("patch-test".parse::<ManufacturedCase>().unwrap().name, "linear");
    assert!(matches!("cosh".parse::<ManufacturedCase>(), Err(HarnessError::UnknownCase(_))));
    assert_eq!(MeshFamily::Cut { axis: Axis::Y, rule: CutRule::Fixed(1e-3) }.label(), "cut-eps1e-3");
}
