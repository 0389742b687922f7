use std::f64::consts::PI;

use rand::Rng;
use soliton_core::heat_kernel::*;
use soliton_core::jacobi::{evolve_cylinder_heat, EvolveConfig};
use soliton_core::quad::Composite;
use soliton_core::rng::stream;

fn probe(rng: &mut impl Rng, l: f64) -> [f64; 2] {
    [rng.random_range(-l..l), rng.random_range(-l..l)]
}

#[test]
fn symmetry_boundary_and_heat_residual_on_random_probes() {
    let k = ImageKernel::square(8.0).unwrap();
    let mut rng = stream(11, "kernel-probes", 0);
    let (mut sym, mut bnd, mut res) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100 {
        let t = rng.random_range(0.5..16.0);
        let (x, y) = (probe(&mut rng, 8.0), probe(&mut rng, 8.0));
        sym =
            sym.max((kernel_eval(&k, t, x, y).unwrap() - kernel_eval(&k, t, y, x).unwrap()).abs());
        let s = rng.random_range(-8.0..8.0);
        for yb in [[8.0, s], [-8.0, s], [s, 8.0], [s, -8.0]] {
            bnd = bnd.max(kernel_eval(&k, t, x, yb).unwrap().abs());
        }
        let xi = probe(&mut rng, 7.0);
        res = res.max(heat_residual(&k, t, xi, y).unwrap());
    }
    println!("symmetry {sym:.2e}, boundary {bnd:.2e}, heat residual {res:.2e}");
    assert!(sym <= 1e-12 && bnd <= 1e-12 && res <= 1e-8);
}

#[test]
fn short_time_diagonal_matches_free_kernel() {
    let k = ImageKernel::square(8.0).unwrap();
    for t in [0.01, 0.1, 0.5] {
        let v = kernel_eval(&k, t, [0.0; 2], [0.0; 2]).unwrap();
        let free = 1.0 / (4.0 * PI * t);
        assert!((v / free - 1.0).abs() <= 1e-8, "t = {t}");
    }
}

#[test]
fn truncation_tail_is_negligible() {
    let mut rng = stream(3, "tail", 0);
    let (k5, k6) = (
        ImageKernel::new(4.0, 5).unwrap(),
        ImageKernel::new(4.0, 6).unwrap(),
    );
    let mut worst = 0.0f64;
    for _ in 0..200 {
        let t = rng.random_range(0.05..4.0);
        let (x, y) = (probe(&mut rng, 4.0), probe(&mut rng, 4.0));
        worst = worst
            .max((kernel_eval(&k5, t, x, y).unwrap() - kernel_eval(&k6, t, x, y).unwrap()).abs());
    }
    assert!(worst < 1e-12, "{worst}");
}

#[test]
fn delta_initial_data_in_the_weak_sense() {
    let k = ImageKernel::square(2.0).unwrap();
    let f = |y: [f64; 2]| (PI * y[0] / 4.0).cos() * (PI * y[1] / 4.0).cos() * (1.0 + 0.3 * y[0]);
    let q = Composite::new(-2.0, 2.0, 64, 8);
    let x = [0.4, -0.7];
    let mut errs = Vec::new();
    for t in [1e-2, 2.5e-3] {
        let v: f64 = q
            .nodes
            .iter()
            .zip(&q.weights)
            .map(|(&a, &wa)| {
                wa * q.integrate(|b| kernel_eval(&k, t, x, [a, b]).unwrap() * f([a, b]))
            })
            .sum();
        errs.push((v - f(x)).abs());
    }
    assert!(errs[1] < errs[0] / 3.0 && errs[1] < 1e-2, "{errs:?}");
}

#[test]
fn mass_is_a_survival_probability() {
    let l = 8.0;
    let k = ImageKernel::square(l).unwrap();
    let m = mass_bound(&k, l * l / 100.0, [0.0; 2]).unwrap();
    assert!(m > 0.99 && m <= 1.0 + 1e-6, "{m}");
    assert!((m - survival_series(l, l * l / 100.0, [0.0; 2])).abs() < 1e-9);

    let x = [l - 0.5, 0.0];
    let t = l * l / 4.0;
    let near = mass_bound(&k, t, x).unwrap();
    let series = survival_series(l, t, x);
    let (mc, se) = survival_monte_carlo(l, t, x, 2_000_000, 64, 5);
    println!("near-boundary mass {near:.6}, series {series:.6}, Monte Carlo {mc:.6} ± {se:.1e}");
    assert!(near < 0.9);
    assert!((near - series).abs() < 1e-9);
    assert!((near - mc).abs() < 1e-3_f64.max(4.0 * se));

    let mut prev = f64::INFINITY;
    for i in 1..=12 {
        let t = l * l * i as f64 / 24.0;
        let m = mass_bound(&k, t, [2.0, -3.0]).unwrap();
        assert!(m <= prev + 1e-12 && m <= 1.0 + 1e-6);
        prev = m;
    }
}

#[test]
fn flux_decays_faster_than_the_bound() {
    let k = ImageKernel::square(8.0).unwrap();
    let rep = flux_bound_experiment(&k, [0.1, -0.2], &default_flux_grid(8.0, 16)).unwrap();
    println!(
        "slope {:.2} vs reference {:.2}; C sharp {:.3e}, C coarse {:.3e}",
        rep.log_slope, rep.slope_reference, rep.c_sharp, rep.c_coarse
    );
    assert!(rep.slope_consistent(0.2));
    assert!(rep.c_sharp.is_finite() && rep.c_coarse.is_finite());
    assert!(rep.rows[0].flux < 1e-30);
    assert!(rep.rows.last().unwrap().flux > 1e-4);
    assert!(flux_bound_experiment(&k, [1.0, 0.0], &default_flux_grid(8.0, 4)).is_err());
}

#[test]
fn flux_is_self_similar() {
    for ratio in [0.05, 0.25, 1.0] {
        let a = boundary_flux(
            &ImageKernel::square(4.0).unwrap(),
            ratio * 16.0,
            [0.1, 0.05],
        )
        .unwrap();
        let b =
            boundary_flux(&ImageKernel::square(8.0).unwrap(), ratio * 64.0, [0.2, 0.1]).unwrap();
        assert!(
            (a * 16.0 / (b * 64.0) - 1.0).abs() < 0.05,
            "ratio {ratio}: {a} vs {b}"
        );
    }
}

/// Sine-series solution with zero boundary data on Ω_l.
fn sine_series_solution(
    l: f64,
    u0: impl Fn([f64; 2]) -> f64,
    x: [f64; 2],
    t: f64,
    modes: usize,
) -> f64 {
    let q = Composite::new(-l, l, 64, 8);
    let phi = |n: usize, y: f64| (n as f64 * PI * (y + l) / (2.0 * l)).sin();
    let mut s = 0.0;
    for n1 in 1..=modes {
        for n2 in 1..=modes {
            let c: f64 = q
                .nodes
                .iter()
                .zip(&q.weights)
                .map(|(&a, &wa)| wa * phi(n1, a) * q.integrate(|b| phi(n2, b) * u0([a, b])))
                .sum::<f64>()
                / (l * l);
            let lam = (PI / (2.0 * l)).powi(2) * ((n1 * n1 + n2 * n2) as f64);
            s += c * (-lam * t).exp() * phi(n1, x[0]) * phi(n2, x[1]);
        }
    }
    s
}

#[test]
fn representation_formula_matches_direct_solutions() {
    let l = 3.0;
    let k = ImageKernel::square(l).unwrap();
    let bump = |y: [f64; 2]| (-(y[0] * y[0] + y[1] * y[1]) / 0.5).exp();
    let zero = |_: [f64; 2], _: f64| 0.0;
    for (x, t) in [([0.0, 0.0], 0.5), ([1.0, -0.5], 1.5)] {
        let v = representation_formula(&k, 0.0, &bump, &zero, x, t, FormulaQuadrature::default())
            .unwrap();
        let oracle = sine_series_solution(l, bump, x, t, 40);
        assert!((v - oracle).abs() < 1e-4, "{v} vs {oracle}");
    }
    let one = |_: [f64; 2], _: f64| 1.0;
    let nothing = |_: [f64; 2]| 0.0;
    let mut prev = 0.0;
    for t in [0.5, 1.0, 2.0, 4.0] {
        let v = representation_formula(
            &k,
            0.0,
            &nothing,
            &one,
            [0.5, 0.2],
            t,
            FormulaQuadrature::default(),
        )
        .unwrap();
        assert!(v > prev && v < 1.0, "t = {t}: {v}");
        assert!((v - (1.0 - mass_bound(&k, t, [0.5, 0.2]).unwrap())).abs() < 1e-6);
        prev = v;
    }
}

#[test]
fn kernel_route_reproduces_the_rescaled_mode() {
    // shared configuration: Ω_2, t ∈ [−2, −1], mode-2 data with spatial structure
    let times: Vec<f64> = (0..=40).map(|i| -2.0 + 0.025 * i as f64).collect();
    let mut cfg = EvolveConfig::uniform(16, 17, 2.0, times.clone(), 3);
    cfg.max_dt = 1e-3;
    cfg.richardson = true;
    let data = |th: f64, z1: f64, z2: f64, t: f64| {
        let s = 1.0 + 0.3 * (0.8 * z1).cos() * (0.5 * z2 + t).sin() + 0.2 * z2 * (t + 2.0);
        (-t).powf(1.5) * s * (2.0 * th).cos()
    };
    let spec = evolve_cylinder_heat(&cfg, &data).unwrap();
    let values: Vec<Vec<f64>> = spec
        .times
        .iter()
        .enumerate()
        .map(|(s, &t)| spec.cos[s][2].iter().map(|v| v * (-t).powf(-1.5)).collect())
        .collect();
    let field = SampledField {
        axis: cfg.z_axis(),
        times: spec.times.clone(),
        values,
    };
    let k = ImageKernel::square(2.0).unwrap();
    let centre = spec.nodes() / 2;
    let last = spec.times.len() - 1;
    let kernel = boundary_solution_formula(&k, &field, [0.0, 0.0], -1.0).unwrap();
    let direct = field.values[last][centre];
    println!("kernel route {kernel:.6}, direct {direct:.6}");
    assert!((kernel - direct).abs() < 1e-3 * direct.abs().max(1.0));
    let mut wrong = field.clone();
    wrong.axis = soliton_core::geom::Axis::new(-1.0, 1.0, 17);
    assert!(boundary_solution_formula(&k, &wrong, [0.0, 0.0], -1.0).is_err());
}
