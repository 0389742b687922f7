use std::f64::consts::{PI, TAU};

use nalgebra::{Matrix4, Vector2, Vector4};
use proptest::prelude::*;
use soliton_core::convex::*;
use soliton_core::geom::{Axis, Placement};
use soliton_core::quad::Composite;
use soliton_core::{rng, Error};

fn cube() -> Vec<Vec<f64>> {
    (0..8)
        .map(|i| vec![(i & 1) as f64, ((i >> 1) & 1) as f64, ((i >> 2) & 1) as f64])
        .collect()
}

#[test]
fn hull_is_certified_and_matches_exhaustive_search() {
    for trial in 0..20 {
        let mut r = rng::stream(3, "hull-check", trial);
        let body = gaussian_polytope(3, 12 + trial as usize, &mut r).unwrap();
        assert!(
            body.certificate <= 1e-10,
            "certificate {}",
            body.certificate
        );
        let (v2, f2) = body::brute_force_hull(&body.vertices).unwrap();
        assert_eq!(v2.len(), body.vertices.len());
        let mut a: Vec<Vec<usize>> = body.facets.iter().map(|f| f.vertices.clone()).collect();
        let mut b = f2;
        b.iter_mut().for_each(|f| f.sort_unstable());
        a.sort();
        b.sort();
        assert_eq!(a, b);
    }
}

#[test]
fn surface_bodies_reject_interior_points() {
    let mut pts = fibonacci_sphere(200);
    pts.push(vec![0.1, 0.0, 0.0]);
    assert!(matches!(
        ConvexBody::from_surface(&pts),
        Err(Error::Assumption(_))
    ));
    assert!(ConvexBody::from_cloud(&vec![vec![0.0; 3]; 3]).is_err());
}

#[test]
fn round_sphere_diameters() {
    let d = diameters_by_refinement(
        |n| ConvexBody::from_surface(&fibonacci_sphere(n)),
        500,
        &DiameterOptions::default(),
    )
    .unwrap();
    assert!((d.d1 - PI).abs() <= 0.02, "d1 = {}", d.d1);
    assert!((d.d2 - 2.0).abs() <= 1e-3, "d2 = {}", d.d2);
    assert!(d.converged);
    assert!(d.ratio < 3.0);
}

#[test]
fn thin_pancake_ratio_is_near_one() {
    // Rim to opposite rim runs across a face: about the chord, 2.
    let body = ConvexBody::from_surface(&ellipsoid_samples([1.0, 1.0, 0.01], 2000)).unwrap();
    let d = diameters(&body, &DiameterOptions::default()).unwrap();
    assert!((d.d2 - 2.0).abs() < 1e-2);
    assert!(d.ratio >= 1.0 && d.ratio < 1.02, "ratio {}", d.ratio);
}

#[test]
fn cube_surface_paths_bound_the_corner_geodesic() {
    let body = ConvexBody::from_cloud(&cube()).unwrap();
    let d = diameters(&body, &DiameterOptions::default()).unwrap();
    assert!((d.d2 - 3f64.sqrt()).abs() < 1e-12);
    // Graph paths run on facets, so they cannot undercut √5 between opposite corners.
    assert!(d.d1 >= 5f64.sqrt() - 1e-12 && d.d1 < 2.3, "d1 = {}", d.d1);
    assert!(d.converged);
}

#[test]
fn random_polytopes_satisfy_diameter_inequality() {
    let trials = random_polytope_trials(100, 3, 10..=40, 11, &DiameterOptions::default()).unwrap();
    for t in &trials {
        assert!(t.d1 >= t.d2 - 1e-12);
        assert!(t.ratio <= 3.0);
    }
    let again = random_polytope_trials(3, 3, 10..=40, 11, &DiameterOptions::default()).unwrap();
    assert_eq!(again[2].d1, trials[2].d1);
}

#[test]
fn four_dimensional_polytopes() {
    let opts = DiameterOptions {
        max_levels: 3,
        ..Default::default()
    };
    for t in random_polytope_trials(4, 4, 10..=16, 5, &opts).unwrap() {
        assert!(t.d1 >= t.d2 - 1e-12 && t.ratio <= 3.0);
    }
}

#[test]
fn disconnected_sampling_is_reported() {
    let caps: Vec<Vec<f64>> = fibonacci_sphere(400)
        .into_iter()
        .filter(|p| p[2].abs() > 0.9)
        .collect();
    let body = ConvexBody::from_surface(&caps).unwrap();
    let opts = DiameterOptions {
        k: 4,
        ..Default::default()
    };
    assert!(matches!(
        diameters(&body, &opts),
        Err(Error::RefineSampling(_))
    ));
}

#[test]
fn untilted_cylinder_section_is_the_unit_circle() {
    let s = cross_section_quadratic(&Matrix4::identity(), 0.01).unwrap();
    assert_eq!(s.eigenvalues, [1.0, 1.0, 0.0]);
    assert_eq!(s.axes, [1.0, 1.0]);
    assert_eq!(s.trace_defect, 0.0);
}

#[test]
fn tilted_cylinder_matches_analytic_section() {
    for eta in [0.01, 0.02, 0.04, 0.3] {
        let s = cross_section_quadratic(&plane_rotation(0, 2, eta), eta).unwrap();
        assert!((s.axes[0] - 1.0).abs() < 1e-14);
        assert!((s.axes[1] - 1.0 / eta.cos()).abs() < 1e-13);
    }
}

#[test]
fn section_errors() {
    let mut skew = Matrix4::identity();
    skew[(0, 1)] = 0.1;
    assert!(matches!(
        cross_section_quadratic(&skew, 0.1),
        Err(Error::Invalid(_))
    ));
    assert!(matches!(
        cross_section_quadratic(&plane_rotation(0, 2, 0.2), 0.1),
        Err(Error::Assumption(_))
    ));
    assert!(matches!(
        cross_section_quadratic(&plane_rotation(0, 2, PI / 2.0), 1.0),
        Err(Error::Rank(_))
    ));
}

#[test]
fn eta_sweep_deviation_is_second_order() {
    let sweep = eta_sweep(&[0.01, 0.02, 0.04], 200, 9).unwrap();
    for row in &sweep.rows {
        // The pure tilt is the worst case: |P e3|² = A31² + A32² ≤ η².
        let sec = 1.0 / row.eta.cos() - 1.0;
        assert!((row.deviation - sec).abs() < 1e-12, "{row:?}");
    }
    assert!((sweep.power - 2.0).abs() < 0.01, "power {}", sweep.power);
    assert!(sweep.slope > 0.0);
}

#[test]
fn eccentricity_of_circle_and_ellipse() {
    let circle: Vec<Vector2<f64>> = (0..400)
        .map(|i| {
            let t = TAU * i as f64 / 400.0;
            Vector2::new(3.0 * t.cos(), 3.0 * t.sin())
        })
        .collect();
    assert!((eccentricity(&circle).unwrap().value - 2.0).abs() < 1e-4);
    let (a, b) = (2.0, 0.5);
    let ellipse: Vec<Vector2<f64>> = (0..2000)
        .map(|i| {
            let t = TAU * i as f64 / 2000.0;
            Vector2::new(a * t.cos(), b * t.sin())
        })
        .collect();
    let e = eccentricity(&ellipse).unwrap();
    assert!(
        (e.value - 2.0 * a * a / (b * b)).abs() < 1e-2 * e.value,
        "{e:?}"
    );
}

fn plane(half: f64, n: usize) -> WeightedSurface {
    let e1 = Vector4::new(1.0, 0.0, 0.3, 0.0) / 1.09f64.sqrt();
    let e2 = Vector4::new(0.0, 1.0, 0.0, 0.0);
    WeightedSurface::from_param2(
        Axis::new(-half, half, n),
        Axis::new(-half, half, n),
        |u, v| e1 * u + e2 * v,
    )
    .unwrap()
}

#[test]
fn plane_has_unit_entropy_density() {
    let s = plane(30.0, 241);
    for t0 in [0.25, 1.0, 4.0] {
        let f = entropy_F(&s, &Vector4::zeros(), t0).unwrap();
        assert!((f - 1.0).abs() < 1e-9, "t0 = {t0}: {f}");
    }
}

#[test]
fn round_sphere_in_three_space() {
    let s = WeightedSurface::from_param2(Axis::new(0.0, PI, 129), Axis::angle(128), |a, b| {
        Vector4::new(
            2.0 * a.sin() * b.cos(),
            2.0 * a.sin() * b.sin(),
            2.0 * a.cos(),
            0.0,
        )
    })
    .unwrap();
    assert!(s.boundary.is_empty());
    let f = entropy_F(&s, &Vector4::zeros(), 1.0).unwrap();
    assert!((f - 4.0 / std::f64::consts::E).abs() < 1e-6, "{f}");
}

#[test]
fn closed_forms_match_independent_quadrature() {
    // Circle factor: ∫ over the radius-√2 circle of (4π)^{-1/2} e^{-|x|²/4}.
    let circle = Composite::new(0.0, TAU, 8, 8)
        .integrate(|_| (4.0 * PI).powf(-0.5) * (-0.5f64).exp() * 2f64.sqrt());
    // Flat factor: a 1-d Gaussian in each flat direction.
    let line = Composite::new(-20.0, 20.0, 40, 10)
        .integrate(|z| (4.0 * PI).powf(-0.5) * (-z * z / 4.0).exp());
    assert!((circle * line * line - sphere_entropy(1)).abs() < 1e-12);
    assert!((sphere_entropy(1) - (TAU / std::f64::consts::E).sqrt()).abs() < 1e-14);
    assert!((sphere_entropy(2) - 4.0 / std::f64::consts::E).abs() < 1e-14);
}

#[test]
fn shrinker_entropies_are_stable_and_ordered() {
    let mut values = Vec::new();
    for k in [1, 2] {
        let coarse =
            WeightedSurface::from_patch(&shrinker_cylinder(k, 12.0, 32, 41).unwrap()).unwrap();
        let fine =
            WeightedSurface::from_patch(&shrinker_cylinder(k, 12.0, 64, 81).unwrap()).unwrap();
        let a = entropy_F(&coarse, &Vector4::zeros(), 1.0).unwrap();
        let b = entropy_F(&fine, &Vector4::zeros(), 1.0).unwrap();
        assert!((a - b).abs() < 0.002);
        assert!((b - sphere_entropy(k)).abs() < 0.002, "k = {k}: {b}");
        values.push(b);
    }
    assert!(values[0] - values[1] > 0.03);
}

#[test]
fn entropy_invariances() {
    let patch = shrinker_cylinder(1, 12.0, 32, 41).unwrap();
    let base = WeightedSurface::from_patch(&patch).unwrap();
    let x0 = Vector4::new(0.3, -0.2, 0.5, 0.1);
    let f0 = entropy_F(&base, &x0, 0.8).unwrap();

    let rot = plane_rotation(0, 3, 0.7) * plane_rotation(1, 2, -0.4);
    let offset = Vector4::new(1.0, -2.0, 0.5, 3.0);
    let moved = patch.clone().with_placement(Placement {
        scale: 1.0,
        rotation: rot,
        offset,
    });
    let f1 = entropy_F(
        &WeightedSurface::from_patch(&moved).unwrap(),
        &(rot * x0 + offset),
        0.8,
    )
    .unwrap();
    assert!((f1 - f0).abs() < 1e-9, "{f0} vs {f1}");

    let c = 1.7;
    let scaled = patch.with_placement(Placement {
        scale: c,
        ..Default::default()
    });
    let f2 = entropy_F(
        &WeightedSurface::from_patch(&scaled).unwrap(),
        &(x0 * c),
        0.8 * c * c,
    )
    .unwrap();
    assert!((f2 - f0).abs() < 1e-9, "{f0} vs {f2}");
}

#[test]
fn clipped_surface_reports_required_radius() {
    let s = WeightedSurface::from_patch(&shrinker_cylinder(1, 3.0, 32, 21).unwrap()).unwrap();
    match entropy_F(&s, &Vector4::zeros(), 1.0) {
        Err(Error::TailBound { required_radius }) => {
            assert!(required_radius > 3.0 && required_radius < 20.0)
        }
        other => panic!("expected tail error, got {other:?}"),
    }
}

#[test]
fn shrinker_sup_is_at_origin_and_unit_scale() {
    for k in [1, 2] {
        let s = WeightedSurface::from_patch(&shrinker_cylinder(k, 12.0, 32, 41).unwrap()).unwrap();
        let mut search = SupSearch::around(&s, 1.0);
        search.center = [0.0; 4];
        let e = entropy_sup(&s, &search).unwrap();
        let x_err = e.x0.iter().map(|x| x.abs()).fold(0.0, f64::max);
        assert!(
            x_err <= search.x_step() && e.t0.ln().abs() <= search.log_t_step(),
            "{e:?}"
        );
        assert!((e.value - sphere_entropy(k)).abs() < 0.002);
        assert!(e.record.excluded > 0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sections_of_tilted_cylinders(eta in 1e-3f64..0.2, seed in 0u64..1000) {
        let mut r = rng::stream(seed, "section-prop", 0);
        let a = random_tilted_rotation(eta, &mut r);
        let s = cross_section_quadratic(&a, eta).unwrap();
        prop_assert!(s.trace_defect.abs() < 1e-14);
        prop_assert!(s.axes[0] >= 1.0 - 1e-12);
        prop_assert!(s.axes[1] <= 1.0 / eta.cos() + 1e-12);
    }

    #[test]
    fn intrinsic_diameter_dominates_chord(seed in 0u64..500, n in 6usize..20) {
        let mut r = rng::stream(seed, "diam-prop", 0);
        let body = gaussian_polytope(3, n, &mut r).unwrap();
        let d = diameters(&body, &DiameterOptions { max_levels: 2, ..Default::default() }).unwrap();
        prop_assert!(d.d1 >= d.d2 - 1e-12);
        prop_assert!(d.ratio <= 3.0);
    }
}
