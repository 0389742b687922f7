use anyhow::{ensure, Result};
use soliton_core::convex::{
    entropy_F, entropy_sup, eta_sweep, random_polytope_trials, shrinker_cylinder, sphere_entropy,
    DiameterOptions, DiameterTrial, SupSearch, WeightedSurface,
};
use soliton_core::nalgebra::Vector4;

use crate::params::{Params, Value};
use crate::report::{num, Expect, Outcome, Provenance, Tolerance};

pub fn diameters_defaults() -> Vec<(&'static str, Value)> {
    let d = DiameterOptions::default();
    vec![
        ("bodies", Value::Int(1000)),
        ("cloud_points", Value::Ints(vec![10, 40])),
        ("bodies_4d", Value::Int(20)),
        ("cloud_points_4d", Value::Ints(vec![10, 20])),
        ("k", Value::Int(d.k as i64)),
        ("initial_spacing", Value::Float(d.initial_spacing)),
        ("rel_change", Value::Float(d.rel_change)),
        ("max_levels", Value::Int(d.max_levels as i64)),
        ("max_levels_4d", Value::Int(3)),
        ("ratio_max", Value::Float(3.0)),
    ]
}

fn range(p: &Params, key: &str) -> Result<std::ops::RangeInclusive<usize>> {
    let v = p.ints(key);
    ensure!(
        v.len() == 2 && 0 <= v[0] && v[0] <= v[1],
        "{key} must be two increasing counts"
    );
    Ok(v[0] as usize..=v[1] as usize)
}

pub fn diameters(p: &Params, seed: u64, out: &mut Outcome) -> Result<()> {
    let opts = DiameterOptions {
        k: p.usize("k")?,
        initial_spacing: p.f64("initial_spacing"),
        rel_change: p.f64("rel_change"),
        max_levels: p.usize("max_levels")?,
        ..Default::default()
    };
    let mut trials = random_polytope_trials(
        p.usize("bodies")?,
        3,
        range(p, "cloud_points")?,
        seed,
        &opts,
    )?;
    let opts4 = DiameterOptions {
        max_levels: p.usize("max_levels_4d")?,
        ..opts
    };
    trials.extend(random_polytope_trials(
        p.usize("bodies_4d")?,
        4,
        range(p, "cloud_points_4d")?,
        seed,
        &opts4,
    )?);
    ensure!(!trials.is_empty(), "no bodies requested");
    let max_ratio = trials.iter().map(|t| t.ratio).fold(0.0, f64::max);
    let min_ratio = trials.iter().map(|t| t.ratio).fold(f64::INFINITY, f64::min);
    let unconverged = trials.iter().filter(|t| !t.converged).count();
    out.scalar("bodies", trials.len() as f64);
    out.scalar("min_ratio", min_ratio);
    out.scalar("unconverged", unconverged as f64);
    out.check(
        "max_ratio",
        max_ratio,
        Expect::AtMost(p.f64("ratio_max")),
        Tolerance::Absolute(0.0),
        Provenance::Published,
    );
    // Boundary paths are never shorter than chords.
    out.check(
        "min_ratio_at_least_one",
        min_ratio,
        Expect::AtLeast(1.0),
        Tolerance::Absolute(1e-12),
        Provenance::Exact,
    );
    out.series(
        "diameters",
        [
            "trial",
            "dim",
            "cloud_points",
            "vertices",
            "d1",
            "d2",
            "ratio",
            "samples",
            "converged",
        ],
        trials.iter().map(trial_row).collect(),
    );
    Ok(())
}

fn trial_row(t: &DiameterTrial) -> Vec<String> {
    vec![
        t.trial.to_string(),
        t.dim.to_string(),
        t.cloud_points.to_string(),
        t.vertices.to_string(),
        num(t.d1),
        num(t.d2),
        num(t.ratio),
        t.samples.to_string(),
        t.converged.to_string(),
    ]
}

pub fn section_defaults() -> Vec<(&'static str, Value)> {
    vec![
        (
            "eta",
            Value::Floats((1..=10).map(|i| 0.02 * i as f64).collect()),
        ),
        ("trials", Value::Int(200)),
        ("constant_max", Value::Float(1.0)),
        ("r2_min", Value::Float(0.99)),
    ]
}

pub fn cross_section(p: &Params, seed: u64, out: &mut Outcome) -> Result<()> {
    let sweep = eta_sweep(&p.floats("eta"), p.usize("trials")?, seed)?;
    let constant = sweep.rows.iter().map(|r| r.constant).fold(0.0, f64::max);
    out.check(
        "deviation_over_eta_max",
        constant,
        Expect::AtMost(p.f64("constant_max")),
        Tolerance::Absolute(0.0),
        Provenance::Derived,
    );
    out.check(
        "linear_fit_r2",
        sweep.r_squared,
        Expect::AtLeast(p.f64("r2_min")),
        Tolerance::Absolute(0.0),
        Provenance::Published,
    );
    out.scalar("linear_fit_slope", sweep.slope);
    out.scalar("linear_fit_intercept", sweep.intercept);
    out.scalar("log_log_power", sweep.power);
    out.series(
        "eta_sweep",
        ["eta", "deviation", "deviation_over_eta"],
        sweep
            .rows
            .iter()
            .map(|r| vec![num(r.eta), num(r.deviation), num(r.constant)])
            .collect(),
    );
    Ok(())
}

pub fn entropy_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("clip", Value::Float(12.0)),
        ("coarse", Value::Ints(vec![32, 41])),
        ("fine", Value::Ints(vec![64, 81])),
        ("search_radius", Value::Float(2.0)),
        ("stability_tol", Value::Float(0.002)),
        ("gap_min", Value::Float(0.03)),
    ]
}

fn resolution(p: &Params, key: &str) -> Result<(usize, usize)> {
    let v = p.ints(key);
    ensure!(
        v.len() == 2 && v.iter().all(|&x| x > 2),
        "{key} needs (round, flat) node counts"
    );
    Ok((v[0] as usize, v[1] as usize))
}

/// λ of S¹×R² and S²×R at two resolutions, and where the supremum sits.
pub fn entropy_table(p: &Params, _seed: u64, out: &mut Outcome) -> Result<()> {
    let clip = p.f64("clip");
    let tol = p.f64("stability_tol");
    let levels = [resolution(p, "coarse")?, resolution(p, "fine")?];
    let mut rows = Vec::new();
    let mut lambda = [0.0; 2];
    for k in [1usize, 2] {
        let mut sups = Vec::new();
        for &(nr, nf) in &levels {
            let s = WeightedSurface::from_patch(&shrinker_cylinder(k, clip, nr, nf)?)?;
            let f = entropy_F(&s, &Vector4::zeros(), 1.0)?;
            let mut search = SupSearch::around(&s, 1.0);
            search.center = [0.0; 4];
            search.radius = p.f64("search_radius");
            let e = entropy_sup(&s, &search)?;
            let x_err = e.x0.iter().map(|x| x.abs()).fold(0.0, f64::max);
            let at_origin = x_err <= search.x_step() && e.t0.ln().abs() <= search.log_t_step();
            rows.push(vec![
                k.to_string(),
                nr.to_string(),
                nf.to_string(),
                num(f),
                num(e.value),
                num(x_err),
                num(e.t0),
                e.record.evaluations.to_string(),
                e.record.excluded.to_string(),
            ]);
            sups.push((e.value, at_origin));
        }
        let (coarse, fine) = (sups[0], sups[1]);
        out.check(
            format!("lambda_k{k}_refinement_change"),
            (fine.0 - coarse.0).abs(),
            Expect::AtMost(tol),
            Tolerance::Absolute(0.0),
            Provenance::Derived,
        );
        out.check(
            format!("lambda_k{k}"),
            fine.0,
            Expect::Near(sphere_entropy(k)),
            Tolerance::Absolute(tol),
            Provenance::Exact,
        );
        out.verdict(format!("sup_at_origin_unit_scale_k{k}"), coarse.1 && fine.1);
        lambda[k - 1] = fine.0;
    }
    out.check(
        "gap",
        lambda[0] - lambda[1],
        Expect::Above(p.f64("gap_min")),
        Tolerance::Absolute(0.0),
        Provenance::Published,
    );
    out.series(
        "entropy",
        [
            "k",
            "round_nodes",
            "flat_nodes",
            "F_origin_unit",
            "sup",
            "argmax_offset",
            "argmax_t0",
            "evaluations",
            "excluded",
        ],
        rows,
    );
    out.series(
        "sphere_entropy",
        ["k", "lambda"],
        (1..=6)
            .map(|k| vec![k.to_string(), num(sphere_entropy(k))])
            .collect(),
    );
    Ok(())
}
