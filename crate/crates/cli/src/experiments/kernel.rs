use anyhow::{ensure, Result};
use soliton_core::heat_kernel::{
    default_flux_grid, flux_bound_experiment, heat_residual, kernel_eval, mass_bound,
    survival_monte_carlo, survival_series, ImageKernel,
};
use soliton_core::rand::Rng;
use soliton_core::rng::stream;

use crate::params::{Params, Value};
use crate::report::{num, Expect, Outcome, Provenance, Tolerance};

pub fn mass_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("l", Value::Float(8.0)),
        ("probes", Value::Int(100)),
        ("probe_tol", Value::Float(1e-8)),
        ("mass_probes", Value::Int(100)),
        ("mc_paths", Value::Int(1_000_000)),
        ("mc_steps", Value::Int(64)),
        ("time_steps", Value::Int(12)),
    ]
}

pub fn kernel_mass(p: &Params, seed: u64, out: &mut Outcome) -> Result<()> {
    let l = p.f64("l");
    let k = ImageKernel::square(l)?;
    let mut rng = stream(seed, "kernel-probes", 0);
    let mut probe = |r: f64| [rng.random_range(-r..r), rng.random_range(-r..r)];
    let (mut sym, mut bnd, mut res) = (0.0f64, 0.0f64, 0.0f64);
    let l2 = l * l;
    // Map a uniform draw in (−1, 1) to a log-uniform time in [lo, hi].
    let log_time = |u: f64, lo: f64, hi: f64| lo * (hi / lo).powf(0.5 * (u + 1.0));
    for _ in 0..p.usize("probes")? {
        let t = log_time(probe(1.0)[0], l2 / 128.0, l2 / 4.0);
        let (x, y) = (probe(l), probe(l));
        sym = sym.max((kernel_eval(&k, t, x, y)? - kernel_eval(&k, t, y, x)?).abs());
        let s = probe(l)[0];
        for yb in [[l, s], [-l, s], [s, l], [s, -l]] {
            bnd = bnd.max(kernel_eval(&k, t, x, yb)?.abs());
        }
        let xi = probe(l - 1.0);
        res = res.max(heat_residual(&k, t, xi, y)?);
    }
    let tol = p.f64("probe_tol");
    for (name, v, prov) in [
        ("symmetry", sym, Provenance::Exact),
        ("boundary_value", bnd, Provenance::Exact),
        ("heat_residual", res, Provenance::Derived),
    ] {
        out.check(name, v, Expect::AtMost(tol), Tolerance::Absolute(0.0), prov);
    }

    // The truncated image sum is certified only for t ≤ L²/4.
    let mut mass_max = 0.0f64;
    let mut series_gap = 0.0f64;
    for _ in 0..p.usize("mass_probes")? {
        let t = log_time(probe(1.0)[0], l2 / 400.0, l2 / 4.0);
        let x = probe(l);
        let m = mass_bound(&k, t, x)?;
        mass_max = mass_max.max(m);
        series_gap = series_gap.max((m - survival_series(l, t, x)).abs());
    }
    out.check(
        "mass_max",
        mass_max,
        Expect::AtMost(1.0),
        Tolerance::Absolute(1e-6),
        Provenance::Exact,
    );
    out.check(
        "mass_vs_series",
        series_gap,
        Expect::AtMost(1e-9),
        Tolerance::Absolute(0.0),
        Provenance::Derived,
    );

    let x = [l - 0.5, 0.0];
    let t = l2 / 4.0;
    let near = mass_bound(&k, t, x)?;
    let (mc, se) = survival_monte_carlo(l, t, x, p.usize("mc_paths")?, p.usize("mc_steps")?, seed);
    out.scalar("near_boundary_mass", near);
    out.scalar("monte_carlo_mass", mc);
    out.scalar("monte_carlo_stderr", se);
    out.check(
        "mass_vs_monte_carlo",
        (near - mc).abs(),
        Expect::AtMost(0.0),
        Tolerance::Absolute(1e-3f64.max(4.0 * se)),
        Provenance::Derived,
    );

    let steps = p.usize("time_steps")?;
    ensure!(steps >= 2, "need at least two time steps");
    let mut rows = Vec::new();
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    for i in 1..=steps {
        let t = l2 * i as f64 / (4 * steps) as f64;
        let m = mass_bound(&k, t, [2.0, -3.0])?;
        monotone &= m <= prev + 1e-12;
        prev = m;
        rows.push(vec![
            num(t),
            num(m),
            num(survival_series(l, t, [2.0, -3.0])),
        ]);
    }
    out.verdict("mass_nonincreasing", monotone);
    out.series("mass", ["t", "mass", "series"], rows);
    Ok(())
}

pub fn flux_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("l", Value::Float(8.0)),
        ("x", Value::Floats(vec![0.1, -0.2])),
        ("grid", Value::Int(16)),
        ("slope_tol", Value::Float(0.2)),
    ]
}

pub fn kernel_flux(p: &Params, _seed: u64, out: &mut Outcome) -> Result<()> {
    let l = p.f64("l");
    let xs = p.floats("x");
    ensure!(xs.len() == 2, "x needs two coordinates");
    let k = ImageKernel::square(l)?;
    let rep = flux_bound_experiment(&k, [xs[0], xs[1]], &default_flux_grid(l, p.usize("grid")?))?;
    out.scalar("slope_reference", rep.slope_reference);
    // Decay at least as fast as exp(−L²/(50 s)), with relative slack.
    out.check(
        "log_slope",
        rep.log_slope,
        Expect::AtMost(rep.slope_reference),
        Tolerance::Relative(p.f64("slope_tol")),
        Provenance::Published,
    );
    out.scalar("c_sharp", rep.c_sharp);
    out.scalar("c_coarse", rep.c_coarse);
    out.verdict(
        "constants_finite",
        rep.c_sharp.is_finite() && rep.c_coarse.is_finite(),
    );
    out.series(
        "flux",
        ["s", "flux", "shape_sharp", "shape_coarse"],
        rep.rows
            .iter()
            .map(|r| {
                vec![
                    num(r.s),
                    num(r.flux),
                    num(r.shape_sharp),
                    num(r.shape_coarse),
                ]
            })
            .collect(),
    );
    Ok(())
}
