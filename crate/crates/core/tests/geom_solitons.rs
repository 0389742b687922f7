use nalgebra::{Matrix4, Vector4};
use proptest::prelude::*;
use soliton_core::geom::{
    closeness_to_model, extract_parabolic_neighborhood, geometry_field, mean_curvature,
    node_geometry, Axis, PatchKind, Placement, SpacetimePoint, SurfacePatch,
};
use soliton_core::solitons::*;

fn unit_sphere_graph(n: usize) -> SurfacePatch {
    let ax = Axis::new(-0.4, 0.4, n);
    SurfacePatch::from_fn(PatchKind::Graph, [ax, ax, ax], |u| {
        -(1.0 - u[0] * u[0] - u[1] * u[1] - u[2] * u[2]).sqrt()
    })
    .unwrap()
}

fn cylinder(n_theta: usize, nz: usize) -> SurfacePatch {
    let grid = [
        Axis::angle(n_theta),
        Axis::new(-1.0, 1.0, nz),
        Axis::new(-1.0, 1.0, nz),
    ];
    SurfacePatch::from_fn(PatchKind::PolarGraph, grid, |_| 2f64.sqrt()).unwrap()
}

/// max-node errors of (H, ν, |A|²) against exact values, over nodes in the
/// fixed physical box |x_i| ≤ 0.3 (i ≤ 3) so both grids compare the same region.
fn errors(
    p: &SurfacePatch,
    h: f64,
    a2: f64,
    normal: impl Fn(&Vector4<f64>) -> Vector4<f64>,
) -> [f64; 3] {
    let mut e = [0.0f64; 3];
    for g in geometry_field(p).into_iter().flatten() {
        if p.kind == PatchKind::Graph && (0..3).any(|i| g.point[i].abs() > 0.3 + 1e-9) {
            continue;
        }
        e[0] = e[0].max((g.h - h).abs());
        e[1] = e[1].max((g.normal - normal(&g.point)).norm());
        e[2] = e[2].max((g.a2 - a2).abs());
    }
    e
}

fn assert_second_order(coarse: [f64; 3], fine: [f64; 3], what: &str) {
    for k in 0..3 {
        if coarse[k] < 1e-12 && fine[k] < 1e-12 {
            continue;
        }
        let ratio = coarse[k] / fine[k];
        println!(
            "{what} quantity {k}: {:.3e} -> {:.3e} (ratio {ratio:.2})",
            coarse[k], fine[k]
        );
        assert!(ratio >= 3.5, "{what} quantity {k} ratio {ratio}");
    }
}

#[test]
fn sphere_has_mean_curvature_three() {
    let p = unit_sphere_graph(33);
    let h = mean_curvature(&p, [16, 16, 16]).unwrap();
    assert!((h - 3.0).abs() < 1e-3, "H = {h}");
}

#[test]
fn curvature_is_second_order() {
    let sphere_n = |x: &Vector4<f64>| -x;
    let a = errors(&unit_sphere_graph(17), 3.0, 3.0, sphere_n);
    let b = errors(&unit_sphere_graph(33), 3.0, 3.0, sphere_n);
    assert_second_order(a, b, "sphere");
    let cyl_n = |x: &Vector4<f64>| -Vector4::new(x[0], x[1], 0.0, 0.0).normalize();
    let a = errors(&cylinder(32, 5), 1.0 / 2f64.sqrt(), 0.5, cyl_n);
    let b = errors(&cylinder(64, 5), 1.0 / 2f64.sqrt(), 0.5, cyl_n);
    assert_second_order(a, b, "cylinder");
}

#[test]
fn bowl_line_mean_curvature_below_n_over_r() {
    let prof = solve_bowl_profile(2, 20.0, 2e-3).unwrap();
    let p = bowl_line_revolution(&prof, (9.0, 11.0), 21, 64, 1.0, 5).unwrap();
    let h = mean_curvature(&p, [10, 3, 2]).unwrap();
    println!("H(r=10) = {h}");
    assert!(h < 0.2, "H = {h}");
    assert!((h - 0.10052001485932288).abs() < 1e-3);
}

#[test]
fn bowl_line_translator_residual_converges() {
    let prof = solve_bowl_profile(2, 20.0, 2e-3).unwrap();
    let resid = |nr: usize, nt: usize| {
        let p = bowl_line_revolution(&prof, (2.0, 6.0), nr, nt, 1.0, 5).unwrap();
        geometry_field(&p)
            .into_iter()
            .flatten()
            .map(|g| (g.h - g.normal[2]).abs())
            .fold(0.0, f64::max)
    };
    let (a, b) = (resid(17, 32), resid(33, 64));
    println!("translator residual {a:.3e} -> {b:.3e}");
    assert!(a / b >= 3.5);
}

#[test]
fn far_bowl_closeness_to_cylinder_decreases() {
    // Rescale a far Bowl²×R neighbourhood by H and compare with the matching cylinder.
    let prof = solve_bowl_profile(2, 120.0, 1e-2).unwrap();
    let mut c2 = Vec::new();
    for d in [20.0, 40.0, 80.0] {
        let r0 = prof.radius_at_height(d).unwrap();
        let h = prof.mean_curvature(r0);
        let span = 1.0 / h;
        let patch = bowl_line_polar(&prof, (d - span, d + span), 17, 48, span, 9).unwrap();
        let shift = Placement {
            scale: h,
            rotation: Matrix4::identity(),
            offset: Vector4::new(0.0, 0.0, -d * h, 0.0),
        };
        let rescaled = patch.transformed(&shift);
        let grid = [
            Axis::angle(48),
            Axis::new(-1.5, 1.5, 25),
            Axis::new(-1.5, 1.5, 9),
        ];
        let model = SurfacePatch::from_fn(PatchKind::PolarGraph, grid, |_| r0 * h).unwrap();
        let rep = closeness_to_model(&rescaled, &model).unwrap();
        println!(
            "d = {d}: C0 {:.3e} C1 {:.3e} C2 {:.3e}",
            rep.graph_norm_c0, rep.graph_norm_c1, rep.graph_norm_c2
        );
        c2.push(rep.graph_norm_c2);
    }
    assert!(c2[0] > c2[1] && c2[1] > c2[2], "{c2:?}");
}

#[test]
fn bowl_tip_neighbourhood_exists() {
    let prof = solve_bowl_profile(2, 20.0, 2e-3).unwrap();
    let patch = bowl_line_graph(&prof, 11.0, 45, 11.0, 23).unwrap();
    let times: Vec<f64> = (0..=10).map(|i| -100.0 + 10.0 * i as f64).collect();
    let flow = translator_flow(&patch, Vector4::new(0.0, 0.0, 1.0, 0.0), times).unwrap();
    let c = SpacetimePoint::new(Vector4::zeros(), 0.0);
    let (nb, clip) = extract_parabolic_neighborhood(&flow, &c, 10.0, 100.0).unwrap();
    println!(
        "tip H = {}, radius {}, window {:?}",
        nb.h_center,
        nb.spatial_radius(),
        nb.time_window()
    );
    assert!((nb.h_center - 1.0).abs() < 1e-2);
    assert!(clip.node_count() > 0);
    let (lo, _) = nb.time_window();
    let expected = flow.times.iter().filter(|&&t| t >= lo).count();
    assert_eq!(clip.slices.len(), expected);
    assert!(expected >= 10);
}

#[test]
fn bowl_profile_matches_independent_oracle() {
    // Frozen from a separate high-order adaptive integration of the same ODE.
    let oracle = [
        (2, 1.0, 0.2580261670371132, 0.5325236208290723),
        (2, 10.0, 47.05538972604319, 9.897879917452265),
        (2, 100.0, 4994.742613346239, 99.98999799890005),
        (3, 1.0, 0.16851774964300864, 0.3407345773578687),
        (3, 10.0, 23.109833506769927, 4.897813287003583),
        (3, 100.0, 2495.7969064400622, 49.98999799839752),
    ];
    let profiles = [
        solve_bowl_profile(2, 100.0, 1e-2).unwrap(),
        solve_bowl_profile(3, 100.0, 1e-2).unwrap(),
    ];
    for (n, r, phi, dphi) in oracle {
        let p = &profiles[n - 2];
        let (a, b) = (p.phi_at(r), p.dphi_at(r));
        assert!(
            (a - phi).abs() < 1e-9 * phi.max(1.0),
            "n={n} r={r}: φ {a} vs {phi}"
        );
        assert!(
            (b - dphi).abs() < 1e-9 * dphi.max(1.0),
            "n={n} r={r}: φ' {b} vs {dphi}"
        );
    }
}

#[test]
fn bowl_bounds_and_curvature_decay() {
    for n in [2usize, 3] {
        let p = solve_bowl_profile(n, 100.0, 1e-2).unwrap();
        let (a, b) = p.bound_slack();
        assert!(a >= 0.0 && b >= 0.0);
        assert_eq!((p.phi[0], p.dphi[0]), (0.0, 0.0));
        assert_eq!(p.mean_curvature(0.0), 1.0);
        for r in p.radii().filter(|&r| r >= 1.0) {
            assert!(p.mean_curvature(r) < n as f64 / r);
        }
    }
    let p = solve_bowl_profile(2, 1.0, 1e-4).unwrap();
    assert!((p.ddphi_at(0.0) - 0.5).abs() < 1e-15);
    assert!((p.phi_at(0.01) - 0.01f64.powi(2) / 4.0).abs() < 1e-9);
}

#[test]
fn tip_ratio_table() {
    let p = solve_bowl_profile(2, 100.0, 1e-2).unwrap();
    let t = tabulate_tip_ratio(&p).unwrap();
    assert_eq!((t.s[0], t.f[0]), (0.0, 1.0));
    let k = t.s.len();
    let (q1, q2) = (t.f[k - 1] / t.s[k - 1], t.f[k / 2] / t.s[k / 2]);
    println!(
        "f(s)/s at s = {:.2}: {q1:.4}, at s = {:.2}: {q2:.4}",
        t.s[k - 1],
        t.s[k / 2]
    );
    assert!((q1 / q2 - 1.0).abs() < 0.1);
    // f(s)/s → 2/(n−1) from H ≈ √((n−1)/2)·d^{−1/2}
    assert!((q1 - 2.0).abs() < 0.05);
}

#[test]
fn a2_times_d_is_tabulated() {
    for n in [2usize, 3] {
        let p = solve_bowl_profile(n, 100.0, 1e-2).unwrap();
        for r in [10.0f64, 50.0, 100.0] {
            let d = r.hypot(p.phi_at(r));
            println!("n = {n}, r = {r}: |A|²·d = {:.4}", p.a2(r) * d);
        }
    }
}

#[test]
fn height_function_nonincreasing_on_translator() {
    let prof = solve_bowl_profile(2, 20.0, 2e-3).unwrap();
    let patch = bowl_line_graph(&prof, 3.0, 25, 1.0, 5).unwrap();
    let e3 = Vector4::new(0.0, 0.0, 1.0, 0.0);
    let flow = translator_flow(&patch, e3, vec![0.0, 0.05]).unwrap();
    let rep = height_evolution_check(&flow, e3, 1, 0.05);
    println!("{rep:?}");
    assert!(rep.matched);
    assert!(
        rep.max_dt_h <= 1e-8 && rep.max_dt_h >= -1e-8,
        "equality reached on the tip line"
    );
    assert!((rep.max_normal_alignment - 1.0).abs() < 1e-12);
    assert!(rep.trajectory_residual < 0.1);

    let tilted = Vector4::new(0.2, 0.0, 1.0, 0.0).normalize();
    let bad = height_evolution_check(&flow, tilted, 1, 0.05);
    println!("tilted: {bad:?}");
    assert!(bad.max_defect > 0.05 && !bad.matched);
}

#[test]
fn blow_down_identity_and_cylinder_covariance() {
    let grid = [
        Axis::angle(32),
        Axis::new(-3.0, 3.0, 13),
        Axis::new(-3.0, 3.0, 13),
    ];
    let cyl = SurfacePatch::from_fn(PatchKind::PolarGraph, grid, |_| 2f64.sqrt()).unwrap();
    let e4 = Vector4::new(0.0, 0.0, 0.0, 1.0);
    let id = blow_down_rescale(&cyl, e4, 1.0, 2.0).unwrap();
    for l in 0..id.len() {
        let idx = id.unlinear(l);
        let u = id.param([idx[0] as isize, idx[1] as isize, idx[2] as isize]);
        assert!((id.point(idx) - (cyl.embed(u, id.sample(idx)) - e4)).norm() < 1e-14);
    }
    let shifted = cyl.transformed(&Placement {
        scale: 1.0,
        rotation: Matrix4::identity(),
        offset: e4 * 4.0,
    });
    let out = blow_down_rescale(&shifted, e4, 2.0, 1.4).unwrap();
    for l in 0..out.len() {
        let x = out.point(out.unlinear(l));
        assert!((x[0].hypot(x[1]) - 2f64.sqrt() / 2.0).abs() < 1e-14);
    }
    assert!(blow_down_rescale(&cyl, e4, 3.0, 2.0).is_err());
}

#[test]
fn blow_down_commutes_with_rotation() {
    let prof = solve_bowl_profile(3, 100.0, 1e-2).unwrap();
    let a: f64 = 10.0;
    let bowl = bowl3_spherical(&prof, (a * a - 5.0 * a, a * a + 5.0 * a), 21, 12, 16).unwrap();
    let e4 = Vector4::new(0.0, 0.0, 0.0, 1.0);
    let rot = nalgebra::Rotation3::from_euler_angles(0.3, -0.2, 0.7);
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(1, 1).copy_from(rot.matrix());
    let rotated = bowl.transformed(&Placement {
        scale: 1.0,
        rotation: m,
        offset: Vector4::zeros(),
    });
    let x = blow_down_rescale(&bowl, e4, a, 5.0).unwrap();
    let y = blow_down_rescale(&rotated, m * e4, a, 5.0).unwrap();
    assert_eq!(x.dims(), y.dims());
    for l in 0..x.len() {
        let idx = x.unlinear(l);
        assert!((m * x.point(idx) - y.point(idx)).norm() < 1e-12);
    }
}

fn convex_graph(a: [f64; 3], b: [f64; 3]) -> SurfacePatch {
    let ax = Axis::new(-1.0, 1.0, 9);
    SurfacePatch::from_fn(PatchKind::Graph, [ax, ax, ax], |u| {
        (0..3)
            .map(|i| a[i] * u[i] * u[i] + b[i] * u[i].powi(4))
            .sum()
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn convex_surfaces_have_positive_mean_curvature(
        a in prop::array::uniform3(0.05f64..2.0),
        b in prop::array::uniform3(0.0f64..1.0),
    ) {
        let p = convex_graph(a, b);
        for g in geometry_field(&p).into_iter().flatten() {
            prop_assert!(g.h > 0.0);
        }
    }

    #[test]
    fn closeness_to_self_is_zero(amp in 0.0f64..0.3, m in 1usize..4, c in -0.2f64..0.2) {
        let grid = [Axis::angle(24), Axis::new(-1.0, 1.0, 7), Axis::new(-1.0, 1.0, 7)];
        let p = SurfacePatch::from_fn(PatchKind::PolarGraph, grid, |u| {
            1.5 + amp * (m as f64 * u[0]).cos() + c * u[1] * u[2]
        }).unwrap();
        let r = closeness_to_model(&p, &p).unwrap();
        prop_assert_eq!((r.graph_norm_c0, r.graph_norm_c1, r.graph_norm_c2), (0.0, 0.0, 0.0));
    }

    #[test]
    fn neighbourhoods_are_monotone(l1 in 0.2f64..6.0, l2 in 0.2f64..6.0, t1 in 0.1f64..4.0, t2 in 0.1f64..4.0) {
        let grid = [Axis::angle(32), Axis::new(-12.0, 12.0, 25), Axis::new(-12.0, 12.0, 25)];
        let times = vec![-9.0, -6.0, -4.0, -3.0, -2.0, -1.0];
        let flow = CylinderModel::standard(1).flow(times, grid).unwrap();
        let c = soliton_core::geom::SpacetimePoint::new(Vector4::new(2f64.sqrt(), 0.0, 0.0, 0.0), -1.0);
        let (ls, lb) = (l1.min(l2), l1.max(l2));
        let (ts, tb) = (t1.min(t2), t1.max(t2));
        let (_, small) = extract_parabolic_neighborhood(&flow, &c, ls, ts).unwrap();
        let (_, big) = extract_parabolic_neighborhood(&flow, &c, lb, tb).unwrap();
        prop_assert!(small.mask.iter().zip(&big.mask).all(|(s, b)| !s || *b));
        prop_assert!(small.slices.iter().all(|s| big.slices.contains(s)));
    }

    #[test]
    fn bowl_bounds_hold_for_any_step(n in 2usize..5, r_max in 1.0f64..60.0, frac in 0.1f64..1.0) {
        let step = frac * 1e-4 * r_max.max(1.0);
        let p = solve_bowl_profile(n, r_max, step).unwrap();
        let (a, b) = p.bound_slack();
        prop_assert!(a >= 0.0 && b >= 0.0);
    }
}

#[test]
fn node_geometry_reports_lambda12() {
    let p = cylinder(64, 5);
    let g = node_geometry(&p, [3, 2, 2]).unwrap();
    assert!(g.lambda12().abs() < 1e-12);
    assert!(g.principal[2] > 0.7);
}
