use anyhow::{ensure, Result};
use soliton_core::nalgebra::Vector4;
use soliton_core::solitons::{
    blow_down_rescale, bowl3_spherical, solve_bowl_profile, tabulate_tip_ratio, CylinderModel,
};

use super::{strictly_decreasing, stride};
use crate::params::{Params, Value};
use crate::report::{num, Expect, Outcome, Provenance, Tolerance};

pub fn bowl_ode_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("n", Value::Ints(vec![2, 3])),
        ("r_max", Value::Float(100.0)),
        ("step", Value::Float(1e-2)),
        ("rows", Value::Int(1001)),
    ]
}

pub fn bowl_ode(p: &Params, _seed: u64, out: &mut Outcome) -> Result<()> {
    let (mut dphi_ok, mut phi_ok, mut h_ok) = (true, true, true);
    for n in p.ints("n") {
        ensure!(n >= 2, "dimension n must be at least 2");
        let prof = solve_bowl_profile(n as usize, p.f64("r_max"), p.f64("step"))?;
        let (a, b) = prof.bound_slack();
        let nf = n as f64;
        // H < n/r from r = 1 on; the margin is the smallest n/r − H.
        let margin = prof
            .radii()
            .filter(|&r| r >= 1.0)
            .map(|r| nf / r - prof.mean_curvature(r))
            .fold(f64::INFINITY, f64::min);
        let exact = Tolerance::Absolute(0.0);
        dphi_ok &= out.check(
            format!("dphi_slack_n{n}"),
            a,
            Expect::AtLeast(0.0),
            exact,
            Provenance::Published,
        );
        phi_ok &= out.check(
            format!("phi_slack_n{n}"),
            b,
            Expect::AtLeast(0.0),
            exact,
            Provenance::Published,
        );
        h_ok &= out.check(
            format!("h_margin_n{n}"),
            margin,
            Expect::Above(0.0),
            exact,
            Provenance::Published,
        );
        let radii: Vec<f64> = prof.radii().collect();
        let rows = stride(radii.len(), p.usize("rows")?)
            .into_iter()
            .map(|i| {
                let r = radii[i];
                vec![
                    num(r),
                    num(prof.phi[i]),
                    num(prof.dphi[i]),
                    num(prof.mean_curvature(r)),
                ]
            })
            .collect();
        out.series(
            format!("bowl_profile_n{n}"),
            ["r", "phi", "dphi", "H"],
            rows,
        );
    }
    out.verdict("phi_prime_bound", dphi_ok);
    out.verdict("phi_bound", phi_ok);
    out.verdict("H_bound", h_ok);
    Ok(())
}

pub fn tip_ratio_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("n", Value::Int(2)),
        ("r_max", Value::Float(100.0)),
        ("step", Value::Float(1e-2)),
        ("rows", Value::Int(1001)),
    ]
}

pub fn tip_ratio(p: &Params, _seed: u64, out: &mut Outcome) -> Result<()> {
    let n = p.usize("n")?;
    ensure!(n >= 2, "dimension n must be at least 2");
    let prof = solve_bowl_profile(n, p.f64("r_max"), p.f64("step"))?;
    let t = tabulate_tip_ratio(&prof)?;
    let k = t.s.len();
    out.check(
        "ratio_at_tip",
        t.f[0],
        Expect::Near(1.0),
        Tolerance::Absolute(1e-12),
        Provenance::Exact,
    );
    // H ≈ √((n−1)/2)·d^{−1/2} far out, so f(s)/s tends to 2/(n−1).
    out.check(
        "asymptotic_slope",
        t.f[k - 1] / t.s[k - 1],
        Expect::Near(2.0 / (n as f64 - 1.0)),
        Tolerance::Absolute(0.05),
        Provenance::Derived,
    );
    out.scalar("s_max", t.s[k - 1]);
    let rows = stride(k, p.usize("rows")?)
        .into_iter()
        .map(|i| vec![num(t.s[i]), num(t.f[i])])
        .collect();
    out.series("tip_ratio", ["s", "f"], rows);
    Ok(())
}

pub fn blowdown_defaults() -> Vec<(&'static str, Value)> {
    vec![
        ("a", Value::Floats(vec![5.0, 10.0, 20.0, 40.0])),
        ("radius", Value::Float(5.0)),
        ("threshold", Value::Float(0.05)),
        ("ns", Value::Int(101)),
        ("nsigma", Value::Int(12)),
        ("ntheta", Value::Int(16)),
        ("r_max", Value::Float(100.0)),
        ("step", Value::Float(1e-2)),
    ]
}

/// Largest distance from nodes of a⁻¹(Bowl³ − a²e4) inside B_R to the radius-2 cylinder.
pub fn blowdown(p: &Params, _seed: u64, out: &mut Outcome) -> Result<()> {
    let prof = solve_bowl_profile(3, p.f64("r_max"), p.f64("step"))?;
    let radius = p.f64("radius");
    let e4 = Vector4::new(0.0, 0.0, 0.0, 1.0);
    // Round S²×R of radius 2 about the e4 axis: the t = −1 slice.
    let model = CylinderModel::standard(2);
    let mut dists = Vec::new();
    let mut rows = Vec::new();
    for a in p.floats("a") {
        let bowl = bowl3_spherical(
            &prof,
            (a * a - radius * a, a * a + radius * a),
            p.usize("ns")?,
            p.usize("nsigma")?,
            p.usize("ntheta")?,
        )?;
        let scaled = blow_down_rescale(&bowl, e4, a, radius)?;
        let inside: Vec<Vector4<f64>> = scaled
            .points()
            .into_iter()
            .filter(|x| x.norm() <= radius)
            .collect();
        ensure!(
            !inside.is_empty(),
            "no rescaled node inside the ball at a = {a}"
        );
        let d = inside
            .iter()
            .map(|x| model.signed_distance(x, -1.0).abs())
            .fold(0.0, f64::max);
        rows.push(vec![num(a), num(d), inside.len().to_string()]);
        out.scalar(format!("hausdorff_a{a}"), d);
        dists.push(d);
    }
    out.series("blowdown", ["a", "hausdorff", "nodes"], rows);
    out.verdict("monotone_in_a", strictly_decreasing(&dists));
    if let Some(&last) = dists.last() {
        out.check(
            "hausdorff_at_largest_a",
            last,
            Expect::Below(p.f64("threshold")),
            Tolerance::Absolute(0.0),
            Provenance::Published,
        );
    }
    Ok(())
}
