use anyhow::Result;
use soliton_core::geom::{Axis, PatchKind, SpacetimePoint, SurfacePatch};
use soliton_core::jacobi::mode_zero_identity;
use soliton_core::nalgebra::Vector4;
use soliton_core::rand::Rng;
use soliton_core::rng::stream;
use soliton_core::rotation::{
    alignment_experiment, check_epsilon_symmetric, j_prime, rigidity_residual, rigidity_trials,
    AffineField, RigidModel, RotationField,
};
use soliton_core::solitons::{solve_bowl_profile, CylinderModel};

use crate::params::{Params, Value};
use crate::report::{num, Expect, Outcome, Provenance, Tolerance};

pub fn symmetry_defaults() -> Vec<(&'static str, Value)> {
    vec![
        (
            "times",
            Value::Floats(vec![-20010.0, -10000.0, -3000.0, -300.0, -30.0, -3.0, -1.0]),
        ),
        ("half_width", Value::Float(160.0)),
        ("nz", Value::Int(41)),
        ("ntheta", Value::Int(128)),
        ("cylinder_tol", Value::Float(1e-6)),
        ("graphs", Value::Int(20)),
        ("amplitude", Value::Float(0.1)),
        ("graph_ntheta", Value::Int(96)),
        ("identity_tol", Value::Float(1e-8)),
    ]
}

pub fn symmetry_check(p: &Params, seed: u64, out: &mut Outcome) -> Result<()> {
    let (half, nz, nt) = (p.f64("half_width"), p.usize("nz")?, p.usize("ntheta")?);
    let grid = [
        Axis::angle(nt),
        Axis::new(-half, half, nz),
        Axis::new(-half, half, nz),
    ];
    let flow = CylinderModel::standard(1).flow(p.floats("times"), grid)?;
    let center = SpacetimePoint::new(Vector4::new(2f64.sqrt(), 0.0, 0.0, 0.0), -1.0);
    let v = check_epsilon_symmetric(&flow, &center, &RotationField::standard())?;
    out.check(
        "cylinder_epsilon",
        v.epsilon_measured,
        Expect::AtMost(p.f64("cylinder_tol")),
        Tolerance::Absolute(0.0),
        Provenance::Derived,
    );
    out.check(
        "cylinder_kh",
        v.bound_kh,
        Expect::AtMost(5.0),
        Tolerance::Absolute(0.0),
        Provenance::Published,
    );
    out.scalar("cylinder_samples", v.samples as f64);
    out.scalar("cylinder_slices", v.slices as f64);

    // Random polar graphs r = √2 + amplitude·(bounded combination of modes).
    let amp = p.f64("amplitude");
    let gnt = p.usize("graph_ntheta")?;
    let k = RotationField::standard();
    let mut rows = Vec::new();
    let mut worst = 0.0f64;
    for trial in 0..p.usize("graphs")? {
        let mut rng = stream(seed, "mode-zero-graphs", trial as u64);
        let c: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let r = move |th: f64, z1: f64, z2: f64| {
            let s = c[0] * th.cos()
                + c[1] * (2.0 * th + c[2]).sin() * z1
                + c[3] * (3.0 * th).cos() * z2 * z2
                + c[4] * (z1 * c[5] + th).sin()
                + c[6] * (4.0 * th + c[7] * z2).cos();
            2f64.sqrt() + amp * s / 5.0
        };
        let grid = [
            Axis::angle(gnt),
            Axis::new(-1.0, 1.0, 9),
            Axis::new(-1.0, 1.0, 9),
        ];
        let patch = SurfacePatch::from_fn(PatchKind::PolarGraph, grid, |u| r(u[0], u[1], u[2]))?;
        let (w, plain) = mode_zero_identity(&patch, &k)?;
        worst = worst.max(w);
        rows.push(vec![trial.to_string(), num(w), num(plain)]);
    }
    out.series("mode_zero", ["trial", "weighted", "unweighted"], rows);
    out.check(
        "mode_zero_weighted_max",
        worst,
        Expect::AtMost(p.f64("identity_tol")),
        Tolerance::Absolute(0.0),
        Provenance::Published,
    );
    Ok(())
}

pub fn alignment_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("eps", Value::Float(1e-3)),
        ("l", Value::Floats(vec![1.0, 10.0, 100.0])),
        ("trials", Value::Int(50)),
        ("spread_max", Value::Float(5.0)),
    ]
}

pub fn alignment_scaling(p: &Params, seed: u64, out: &mut Outcome) -> Result<()> {
    let rep = alignment_experiment(
        &RigidModel::cylinder_at(-1.0),
        p.f64("eps"),
        &p.floats("l"),
        p.usize("trials")?,
        seed,
    )?;
    let rows = rep
        .rows
        .iter()
        .map(|r| {
            vec![
                num(r.l),
                r.trials.to_string(),
                num(r.max_ratio),
                num(r.mean_ratio),
                num(r.min_ratio),
                num(r.affine_extension_max),
            ]
        })
        .collect();
    out.series(
        "alignment",
        [
            "L",
            "trials",
            "max_ratio",
            "mean_ratio",
            "min_ratio",
            "affine_extension_max",
        ],
        rows,
    );
    out.scalar("constant", rep.constant);
    out.check(
        "spread",
        rep.spread,
        Expect::AtMost(p.f64("spread_max")),
        Tolerance::Absolute(0.0),
        Provenance::Derived,
    );
    let ext = rep
        .rows
        .iter()
        .map(|r| r.affine_extension_max)
        .fold(0.0, f64::max);
    out.check(
        "affine_extension_max",
        ext,
        Expect::AtMost(1.0),
        Tolerance::Absolute(1e-12),
        Provenance::Exact,
    );
    Ok(())
}

pub fn rigidity_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("eps", Value::Float(1e-3)),
        ("trials", Value::Int(50)),
        ("ball_radius", Value::Float(2.0)),
        ("ratio_max", Value::Float(1e3)),
    ]
}

pub fn rigidity(p: &Params, seed: u64, out: &mut Outcome) -> Result<()> {
    let radius = p.f64("ball_radius");
    let cyl = RigidModel::Cylinder {
        radius: 2f64.sqrt(),
    };
    let pts = cyl.ball(radius, 9)?;
    let jx = AffineField::from(&RotationField::standard());
    let jp = AffineField::linear_about(j_prime(), Vector4::new(0.0, 0.0, 0.7, -0.3));
    out.check(
        "cylinder_axis_field",
        rigidity_residual(&jx, &cyl, &pts),
        Expect::AtMost(0.0),
        Tolerance::Absolute(1e-12),
        Provenance::Exact,
    );
    out.check(
        "cylinder_second_field",
        rigidity_residual(&jp, &cyl, &pts),
        Expect::AtMost(0.0),
        Tolerance::Absolute(1e-12),
        Provenance::Exact,
    );
    let prof = solve_bowl_profile(2, 20.0, 2e-3)?;
    let bowl = RigidModel::BowlLine { profile: prof };
    let bpts = bowl.ball(radius, 9)?;
    out.check(
        "translator_axis_field",
        rigidity_residual(&jx, &bowl, &bpts),
        Expect::AtMost(0.0),
        Tolerance::Absolute(1e-12),
        Provenance::Exact,
    );
    // The second cylinder field is not tangent to Bowl×R.
    out.check(
        "translator_second_field",
        rigidity_residual(&jp, &bowl, &bpts),
        Expect::Above(0.5),
        Tolerance::Absolute(0.0),
        Provenance::Derived,
    );
    let trials = rigidity_trials(2f64.sqrt(), p.f64("eps"), p.usize("trials")?, seed)?;
    out.series(
        "rigidity",
        ["trial", "distance_over_eps"],
        trials
            .ratios
            .iter()
            .enumerate()
            .map(|(i, r)| vec![i.to_string(), num(*r)])
            .collect(),
    );
    out.check(
        "catalog_ratio_max",
        trials.max_ratio,
        Expect::Below(p.f64("ratio_max")),
        Tolerance::Absolute(0.0),
        Provenance::Derived,
    );
    Ok(())
}
