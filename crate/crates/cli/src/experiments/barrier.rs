use anyhow::{ensure, Result};
use soliton_core::barrier::{
    boundary_piece_sweep, chain_constant, chain_scan, final_barrier_coefficient,
    maximum_principle_experiment, smallest_sufficient_j, weight_condition_check, BarrierConfig,
    BarrierData, BarrierGrid,
};
use soliton_core::rand::Rng;
use soliton_core::rng::stream;

use crate::params::{Params, Value};
use crate::report::{num, Expect, Outcome, Provenance, Tolerance};

pub fn conditions_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("lambda1", Value::Float(2.0)),
        ("c1", Value::Float(2.0)),
        ("d_min", Value::Float(100.0)),
        ("chain_samples", Value::Int(20000)),
        ("j_max", Value::Int(2000)),
    ]
}

pub fn barrier_conditions(p: &Params, seed: u64, out: &mut Outcome) -> Result<()> {
    let (lambda1, c1) = (p.f64("lambda1"), p.f64("c1"));
    let j0 = smallest_sufficient_j(lambda1, c1);
    out.scalar("smallest_sufficient_j", j0 as f64);
    let rep = weight_condition_check(j0, lambda1, c1)?;
    out.scalar("weight_d", rep.config.d);
    out.verdict("sufficient_inequality", rep.sufficient.pass);
    out.verdict("weight_conditions", rep.all_pass());
    out.series(
        "weight_conditions",
        ["condition", "lhs", "rhs", "pass"],
        rep.conditions
            .iter()
            .chain(std::iter::once(&rep.sufficient))
            .map(|c| vec![c.name.clone(), num(c.lhs), num(c.rhs), c.pass.to_string()])
            .collect(),
    );

    let (worst, n) = chain_scan(p.f64("d_min"), p.usize("chain_samples")?, seed)?;
    out.scalar("chain_samples", n as f64);
    out.check(
        "chain_max",
        worst,
        Expect::Below(0.0),
        Tolerance::Absolute(0.0),
        Provenance::Published,
    );
    out.scalar("closing_constant_at_d_min", chain_constant(p.f64("d_min")));

    // λ_j − (4/3)c_j² on H ∈ (2c_j, ∞), sampled at the edge and beyond.
    let j_max = p.int("j_max");
    ensure!(j_max >= 1, "j_max must be at least 1");
    let (mut bound_max, mut value_excess, mut halved_excess) =
        (f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut rows = Vec::new();
    for j in 1..=j_max {
        let cj = 2f64.powf(-(j as f64) / 100.0);
        let c2 = 2.0 * cj;
        for h in [c2 * (1.0 + 1e-9), c2 * 1.5, c2 * 10.0, 1e3] {
            let f = final_barrier_coefficient(j, h)?;
            bound_max = bound_max.max(f.bound);
            value_excess = value_excess.max(f.value - f.bound);
            halved_excess = halved_excess.max(f.halved - f.bound);
        }
        if j == 1 || j % 100 == 0 {
            let f = final_barrier_coefficient(j, c2 * 1.5)?;
            rows.push(vec![
                j.to_string(),
                num(f.lambda_j),
                num(f.c_j),
                num(f.bound),
            ]);
        }
    }
    out.series("final_coefficient", ["j", "lambda_j", "c_j", "bound"], rows);
    out.check(
        "final_bound_max",
        bound_max,
        Expect::Below(0.0),
        Tolerance::Absolute(0.0),
        Provenance::Published,
    );
    out.check(
        "final_value_minus_bound",
        value_excess,
        Expect::AtMost(0.0),
        Tolerance::Absolute(1e-12),
        Provenance::Exact,
    );
    out.check(
        "final_halved_minus_bound",
        halved_excess,
        Expect::AtMost(0.0),
        Tolerance::Absolute(1e-15),
        Provenance::Exact,
    );
    Ok(())
}

pub fn maxprinciple_defaults() -> Vec<(&'static str, Value)> {
    let g = BarrierGrid::default();
    vec![
        ("runs", Value::Int(20)),
        ("d0", Value::Float(16.0)),
        ("c1", Value::Float(2.0)),
        ("lambda1", Value::Float(2.0)),
        ("nr", Value::Int(g.nr as i64)),
        ("ny", Value::Int(g.ny as i64)),
        ("tol", Value::Float(1e-8)),
        ("eps", Value::Float(1e-3)),
        ("j_offsets", Value::Ints(vec![0, 100, 200])),
        ("rate_tol", Value::Float(0.3)),
    ]
}

pub fn barrier_maxprinciple(p: &Params, seed: u64, out: &mut Outcome) -> Result<()> {
    let grid = BarrierGrid {
        nr: p.usize("nr")?,
        ny: p.usize("ny")?,
    };
    let mut rows = Vec::new();
    let mut excess = f64::NEG_INFINITY;
    for run in 0..p.usize("runs")? {
        let d = p.f64("d0") + run as f64;
        let cfg = BarrierConfig::with_d(d, 1.0);
        let data_seed = stream(seed, "barrier-runs", run as u64).random::<u64>();
        let r = maximum_principle_experiment(&cfg, grid, BarrierData::Random { seed: data_seed })?;
        excess = excess.max(r.interior_sup - r.boundary_sup);
        rows.push(vec![
            run.to_string(),
            num(d),
            r.steps.to_string(),
            num(r.interior_sup),
            num(r.boundary_sup),
            num(r.coefficient_max),
        ]);
    }
    out.series(
        "max_principle",
        [
            "run",
            "D",
            "steps",
            "interior_sup",
            "boundary_sup",
            "coefficient_max",
        ],
        rows,
    );
    out.check(
        "interior_minus_boundary",
        excess,
        Expect::AtMost(0.0),
        Tolerance::Absolute(p.f64("tol")),
        Provenance::Exact,
    );

    let (lambda1, c1) = (p.f64("lambda1"), p.f64("c1"));
    let j0 = smallest_sufficient_j(lambda1, c1);
    let js: Vec<i64> = p.ints("j_offsets").iter().map(|o| j0 + o).collect();
    let sweep = boundary_piece_sweep(&js, lambda1, c1, p.f64("eps"))?;
    out.check(
        "boundary_bound_exponent",
        sweep.exponent,
        Expect::Near(-0.25),
        Tolerance::Relative(p.f64("rate_tol")),
        Provenance::Published,
    );
    out.series(
        "boundary_pieces",
        [
            "j",
            "ln_outer",
            "ln_caps",
            "ln_initial",
            "ln_combined",
            "ln_target",
            "dominant",
        ],
        sweep
            .rows
            .iter()
            .zip(&sweep.dominant)
            .map(|(r, d)| {
                vec![
                    r.j.to_string(),
                    num(r.outer),
                    num(r.caps),
                    num(r.initial),
                    num(r.combined),
                    num(r.target),
                    d.clone(),
                ]
            })
            .collect(),
    );
    Ok(())
}
