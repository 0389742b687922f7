use anyhow::{ensure, Result};
use soliton_core::jacobi::{
    evolve_cylinder_heat, improvement_experiment, separated_mode_ratio, EvolveConfig,
    ImprovementConfig, Perturbation,
};

use super::strictly_decreasing;
use crate::params::{Params, Value};
use crate::report::{num, Expect, Outcome, Provenance, Tolerance};

pub fn mode_decay_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("modes", Value::Ints(vec![0, 1, 2, 3, 4])),
        ("t0", Value::Float(-2.0)),
        ("t1", Value::Float(-1.0)),
        ("slices", Value::Int(20)),
        ("max_dt", Value::Floats(vec![2e-3, 1e-3])),
        ("ntheta", Value::Int(32)),
        ("nz", Value::Int(9)),
        ("half_width", Value::Float(2.0)),
        ("tol", Value::Float(1e-3)),
        ("neutral_tol", Value::Float(1e-6)),
    ]
}

/// Evolves spatially constant pure modes with boundary data following the
/// separated solution and compares ũ_m(t)/ũ_m(t0) with ((−t)/(−t0))^{(m²−1)/2}.
pub fn mode_decay(p: &Params, _seed: u64, out: &mut Outcome) -> Result<()> {
    let (t0, t1) = (p.f64("t0"), p.f64("t1"));
    ensure!(t0 < t1 && t1 < 0.0, "need t0 < t1 < 0");
    let slices = p.usize("slices")?.max(1);
    let times: Vec<f64> = (0..=slices)
        .map(|k| t0 + (t1 - t0) * k as f64 / slices as f64)
        .collect();
    let dts = p.floats("max_dt");
    ensure!(!dts.is_empty(), "need at least one time step");
    let modes = p.ints("modes");
    let max_mode = modes.iter().copied().max().unwrap_or(0).max(1) as usize + 2;
    let mut rows = Vec::new();
    for &m in &modes {
        ensure!(m >= 0, "modes must be non-negative");
        let mu = m as usize;
        let power = ((mu * mu) as f64 - 1.0) / 2.0;
        let mut errs = Vec::new();
        for &dt in &dts {
            let mut cfg = EvolveConfig::uniform(
                p.usize("ntheta")?,
                p.usize("nz")?,
                p.f64("half_width"),
                times.clone(),
                max_mode,
            );
            cfg.max_dt = dt;
            cfg.richardson = true;
            let data = move |th: f64, _: f64, _: f64, t: f64| {
                ((-t) / (-t0)).powf(power) * (m as f64 * th).cos()
            };
            let spec = evolve_cylinder_heat(&cfg, &data)?;
            let mut worst = 0.0f64;
            for (s, &t) in spec.times.iter().enumerate().skip(1) {
                let exact = ((-t) / (-t0)).powf(power);
                let got = separated_mode_ratio(&spec, mu, s);
                worst = worst.max((got / exact - 1.0).abs());
            }
            let last = spec.times.len() - 1;
            rows.push(vec![
                m.to_string(),
                num(dt),
                num(separated_mode_ratio(&spec, mu, last)),
                num(((-t1) / (-t0)).powf(power)),
                num(worst),
            ]);
            errs.push(worst);
        }
        let finest = *errs.last().unwrap();
        if m == 1 {
            out.check(
                "mode_1_neutral",
                finest,
                Expect::AtMost(p.f64("neutral_tol")),
                Tolerance::Absolute(0.0),
                Provenance::Exact,
            );
        } else {
            out.check(
                format!("mode_{m}_power_law"),
                finest,
                Expect::AtMost(p.f64("tol")),
                Tolerance::Absolute(0.0),
                Provenance::Published,
            );
        }
    }
    out.series(
        "mode_decay",
        [
            "m",
            "max_dt",
            "ratio_final",
            "exact_final",
            "max_relative_error",
        ],
        rows,
    );
    Ok(())
}

pub fn neck_defaults() -> Vec<(&'static str, Value)> {
    let d = ImprovementConfig::default();
    vec![
        ("l0", Value::Floats(vec![25.0, 50.0, 100.0])),
        ("eps", Value::Float(1e-3)),
        ("nz", Value::Int(33)),
        ("ntheta", Value::Int(d.ntheta as i64)),
        ("max_mode", Value::Int(d.max_mode as i64)),
        ("rel_dt", Value::Float(4e-3)),
        ("central_l", Value::Float(d.central_l)),
        ("output_slices", Value::Int(d.output_slices as i64)),
        ("ratio_target", Value::Float(0.5)),
        ("ratio_slack", Value::Float(0.1)),
    ]
}

pub fn neck_improvement(p: &Params, _seed: u64, out: &mut Outcome) -> Result<()> {
    let cfg = ImprovementConfig {
        nz: p.usize("nz")?,
        ntheta: p.usize("ntheta")?,
        max_mode: p.usize("max_mode")?,
        rel_dt: p.f64("rel_dt"),
        central_l: p.f64("central_l"),
        output_slices: p.usize("output_slices")?,
    };
    let eps = p.f64("eps");
    let mut ratios = Vec::new();
    let mut rows = Vec::new();
    for l0 in p.floats("l0") {
        let r = improvement_experiment(l0, eps, Perturbation::ModeTwo, &cfg)?;
        rows.push(vec![
            num(l0),
            num(r.epsilon_domain),
            num(r.epsilon_prime),
            num(r.ratio),
            num(r.fit_cos[0]),
            num(r.fit_sin[0]),
            r.slices.to_string(),
        ]);
        ratios.push(r.ratio);
    }
    out.series(
        "improvement",
        [
            "L0",
            "eps_domain",
            "eps_prime",
            "ratio",
            "fit_cos_A0",
            "fit_sin_B0",
            "slices",
        ],
        rows,
    );
    out.verdict("monotone_in_l0", strictly_decreasing(&ratios));
    if let Some(&last) = ratios.last() {
        out.check(
            "ratio_at_largest_l0",
            last,
            Expect::AtMost(p.f64("ratio_target")),
            Tolerance::Absolute(p.f64("ratio_slack")),
            Provenance::Published,
        );
    }
    Ok(())
}
