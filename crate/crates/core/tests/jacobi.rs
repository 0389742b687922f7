use rand::Rng;
use soliton_core::geom::{Axis, PatchKind, Placement, SurfacePatch};
use soliton_core::jacobi::*;
use soliton_core::rng::stream;
use soliton_core::rotation::RotationField;

fn separated(m: usize, t0: f64, t1: f64, max_dt: f64) -> ModeSpectrum {
    let p = ((m * m) as f64 - 1.0) / 2.0;
    let times: Vec<f64> = (0..=20).map(|k| t0 + (t1 - t0) * k as f64 / 20.0).collect();
    let mut cfg = EvolveConfig::uniform(32, 9, 2.0, times, 6);
    cfg.max_dt = max_dt;
    cfg.richardson = true;
    let data =
        move |th: f64, _: f64, _: f64, t: f64| ((-t) / (-t0)).powf(p) * (m as f64 * th).cos();
    evolve_cylinder_heat(&cfg, &data).unwrap()
}

#[test]
fn separated_modes_follow_the_power_law() {
    for m in 0..=6usize {
        let p = ((m * m) as f64 - 1.0) / 2.0;
        let mut errs = Vec::new();
        for dt in [2e-3, 1e-3] {
            let s = separated(m, -2.0, -1.0, dt);
            let last = s.times.len() - 1;
            let exact = 0.5f64.powf(p);
            errs.push((separated_mode_ratio(&s, m, last) / exact - 1.0).abs());
        }
        println!("m = {m}: relative errors {errs:?}");
        if m == 1 {
            assert!(errs[1] < 1e-12);
        } else {
            assert!(errs[1] < 1e-3, "m = {m}: {errs:?}");
            assert!(errs[1] < errs[0]);
        }
    }
}

#[test]
fn rescaled_modes_solve_the_heat_equation() {
    for m in [0usize, 2] {
        let s = separated(m, -2.0, -1.0, 1e-3);
        let r = rescaled_mode_heat_residual(&s, m, 0.0).unwrap();
        let wrong = rescaled_mode_heat_residual(&s, m, 0.1).unwrap();
        println!("m = {m}: residual {r:.3e}, shifted exponent {wrong:.3e}");
        assert!(r <= 1e-6);
        assert!(wrong >= 100.0 * r);
    }
}

#[test]
fn rescaled_residual_converges_for_spatially_varying_data() {
    // û_2 = e^{−2π²τ/16}·cos(πz1/4)cos(πz2/4) solves the heat equation on Ω_2.
    let mut res = Vec::new();
    for (nz, steps) in [(9usize, 10usize), (17, 20)] {
        let times: Vec<f64> = (0..=steps)
            .map(|k| -2.0 + k as f64 / steps as f64)
            .collect();
        let mut cfg = EvolveConfig::uniform(16, nz, 2.0, times, 3);
        cfg.max_dt = 1e-3;
        cfg.richardson = true;
        let k = std::f64::consts::PI / 4.0;
        let data = move |th: f64, z1: f64, z2: f64, t: f64| {
            (-2.0 * k * k * (t + 2.0)).exp()
                * (k * z1).cos()
                * (k * z2).cos()
                * (-t).powf(1.5)
                * (2.0 * th).cos()
        };
        let s = evolve_cylinder_heat(&cfg, &data).unwrap();
        res.push(rescaled_mode_heat_residual(&s, 2, 0.0).unwrap());
    }
    println!("residuals {res:?}");
    assert!(res[1] < res[0] / 3.0);
}

#[test]
fn weighted_maximum_principle_on_random_runs() {
    for run in 0..20u64 {
        let mut rng = stream(run, "max-principle", 0);
        let coef: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let data = move |th: f64, z1: f64, z2: f64, t: f64| {
            let mut v = 0.0;
            for m in 0..4 {
                let f = coef[3 * m]
                    + coef[3 * m + 1] * (0.7 * z1 + 0.2 * t).sin()
                    + coef[3 * m + 2] * (0.5 * z2).cos();
                v += f * (m as f64 * th + coef[m]).cos();
            }
            v
        };
        let times: Vec<f64> = (0..=10).map(|k| -3.0 + 0.2 * k as f64).collect();
        let mut cfg = EvolveConfig::uniform(16, 13, 3.0, times, 4);
        cfg.max_dt = 5e-3;
        let s = evolve_cylinder_heat(&cfg, &data).unwrap();
        let f = s.synthesize(16).unwrap();
        // w = u·(−t)^{1/2} obeys a pure diffusion.
        let nz = f.z.n;
        let (mut inner, mut boundary) = (0.0f64, 0.0f64);
        for (si, &t) in f.times.iter().enumerate() {
            let w = (-t).sqrt();
            for k in 0..f.ntheta {
                for i1 in 0..nz {
                    for i2 in 0..nz {
                        let v = f.at(si, k, i1, i2).abs() * w;
                        let edge = si == 0 || i1 == 0 || i2 == 0 || i1 + 1 == nz || i2 + 1 == nz;
                        if edge {
                            boundary = boundary.max(v);
                        } else {
                            inner = inner.max(v);
                        }
                    }
                }
            }
        }
        assert!(
            inner <= boundary * (1.0 + 1e-3),
            "run {run}: {inner} > {boundary}"
        );
    }
}

#[test]
fn mode_energy_decays_with_zero_boundary() {
    let times: Vec<f64> = (0..=20).map(|k| -4.0 + 0.15 * k as f64).collect();
    let cfg = EvolveConfig::uniform(32, 17, 3.0, times, 6);
    let data = |th: f64, z1: f64, z2: f64, t: f64| {
        if t > -4.0 + 1e-12 {
            return 0.0;
        }
        let bump =
            (-(z1 * z1 + z2 * z2)).exp() * (1.0 - (z1 / 3.0).powi(2)) * (1.0 - (z2 / 3.0).powi(2));
        bump * ((2.0 * th).cos() + 0.5 * (3.0 * th).sin() + 0.3 * (5.0 * th).cos())
    };
    let s = evolve_cylinder_heat(&cfg, &data).unwrap();
    for m in 2..=6 {
        let e: Vec<f64> = (0..s.times.len()).map(|k| s.mode_energy(k, m)).collect();
        assert!(
            e.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)),
            "m = {m}: {e:?}"
        );
    }
}

#[test]
fn parseval_and_round_trip() {
    let mut rng = stream(1, "parseval", 0);
    let coef: Vec<(f64, f64)> = (0..=8)
        .map(|_| (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let f = PolarField::from_fn(64, Axis::new(-1.0, 1.0, 5), vec![-1.0], |th, z1, _, _| {
        coef.iter()
            .enumerate()
            .map(|(m, (a, b))| (1.0 + z1) * (a * (m as f64 * th).cos() + b * (m as f64 * th).sin()))
            .sum()
    })
    .unwrap();
    let s = mode_decompose(&f, 16).unwrap();
    assert!(!s.aliasing_warning);
    for node in 0..25 {
        assert!((s.energy(0, node) - mean_square(&f, 0, node)).abs() < 1e-12);
    }
    let back = s.synthesize(64).unwrap();
    let err = f.values[0]
        .iter()
        .zip(&back.values[0])
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    assert!(err <= 1e-12, "{err}");
}

fn polar(ntheta: usize, r: impl Fn(f64, f64, f64) -> f64) -> SurfacePatch {
    let grid = [
        Axis::angle(ntheta),
        Axis::new(-1.0, 1.0, 9),
        Axis::new(-1.0, 1.0, 9),
    ];
    SurfacePatch::from_fn(PatchKind::PolarGraph, grid, |u| r(u[0], u[1], u[2])).unwrap()
}

#[test]
fn mode_zero_identity_cases() {
    let k = RotationField::standard();
    let (w, _) = mode_zero_identity(&polar(64, |_, _, _| 2f64.sqrt()), &k).unwrap();
    assert!(w <= 1e-14, "{w}");
    let (w, plain) = mode_zero_identity(
        &polar(64, |th, z1, _| {
            2f64.sqrt() + 0.05 * (3.0 * th).cos() + 0.1 * z1 * th.sin()
        }),
        &k,
    )
    .unwrap();
    println!("cos 3θ: weighted {w:.3e}, plain {plain:.3e}");
    assert!(w <= 1e-10 && plain > 1e-6);
    for trial in 0..20u64 {
        let mut rng = stream(trial, "mode0", 0);
        let c: Vec<f64> = (0..10).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = move |th: f64, z1: f64, z2: f64| {
            let s = c[0] * th.cos()
                + c[1] * (2.0 * th + c[2]).sin() * z1
                + c[3] * (3.0 * th).cos() * z2 * z2
                + c[4] * (z1 * c[5] + th).sin()
                + c[6] * (4.0 * th + c[7] * z2).cos();
            2f64.sqrt() + 0.1 * s / 5.0
        };
        let (w, _) = mode_zero_identity(&polar(96, r), &k).unwrap();
        assert!(w <= 1e-8, "trial {trial}: {w}");
    }
    let moved = polar(64, |th, _, _| 1.0 + 0.05 * th.sin()).with_placement(Placement {
        scale: 2.0,
        rotation: nalgebra::Matrix4::identity(),
        offset: nalgebra::Vector4::new(0.0, 0.0, 3.0, 0.0),
    });
    assert!(mode_zero_identity(&moved, &k).unwrap().0 < 1e-12);
    let off_axis = RotationField::new(
        nalgebra::Matrix4::identity(),
        nalgebra::Vector4::new(0.5, 0.0, 0.0, 0.0),
    )
    .unwrap();
    assert!(mode_zero_identity(&moved, &off_axis).is_err());
}

#[test]
fn improvement_controls() {
    let cfg = ImprovementConfig {
        nz: 25,
        rel_dt: 5e-3,
        ..Default::default()
    };
    let none = improvement_experiment(25.0, 1e-3, Perturbation::None, &cfg).unwrap();
    assert_eq!(none.epsilon_prime, 0.0);
    let lin =
        improvement_experiment(25.0, 1e-3, Perturbation::LinearModeOne { a: 1e-3 }, &cfg).unwrap();
    println!(
        "linear m=1: ε′ = {:.3e}, fit {:?}",
        lin.epsilon_prime, lin.fit_cos
    );
    assert!(lin.epsilon_prime <= 1e-12);
    assert!((lin.fit_cos[1] - 1e-3).abs() < 1e-12);
}

#[test]
fn improvement_ratio_falls_with_l0() {
    let cfg = ImprovementConfig {
        nz: 33,
        rel_dt: 4e-3,
        ..Default::default()
    };
    let mut ratios = Vec::new();
    for l0 in [25.0, 50.0, 100.0] {
        let start = std::time::Instant::now();
        let r = improvement_experiment(l0, 1e-3, Perturbation::ModeTwo, &cfg).unwrap();
        println!(
            "L0 = {l0}: ε_domain {:.3e} ε′ {:.3e} ratio {:.4}",
            r.epsilon_domain, r.epsilon_prime, r.ratio
        );
        println!("  {:.1}s", start.elapsed().as_secs_f64());
        ratios.push(r.ratio);
    }
    assert!(ratios.windows(2).all(|w| w[1] < w[0]));
    assert!(ratios[2] <= 0.6);
}
