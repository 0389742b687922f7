use nalgebra::{Matrix3, Matrix4, Vector2};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng;

const RANK_TOL: f64 = 1e-10;

/// Slice `{x3 = 0}` of the rotated unit cylinder `{X : X A I Aᵀ Xᵀ = 1}`, `I = diag(1,1,0,0)`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CrossSection {
    /// Eigenvalues of the reduced 3×3 form, descending.
    pub eigenvalues: [f64; 3],
    /// Ellipse semi-axes `1/√λ` for the two nonzero eigenvalues, ascending.
    pub axes: [f64; 2],
    /// Largest of |A31|, |A32|: how far the height direction leans into the circle factor.
    pub coupling: f64,
    /// `max |axis − 1| / η`.
    pub constant: f64,
    /// `Σλ − (tr I₁ − (I₁)₃₃)`.
    pub trace_defect: f64,
}

impl CrossSection {
    pub fn deviation(&self) -> f64 {
        self.axes
            .iter()
            .map(|a| (a - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

pub fn cross_section_quadratic(a: &Matrix4<f64>, eta: f64) -> Result<CrossSection> {
    if !(eta > 0.0 && eta.is_finite()) {
        return invalid("eta must be positive");
    }
    let orth = (a.transpose() * a - Matrix4::identity()).abs().max();
    if orth > 1e-10 {
        return invalid(format!("A is not orthogonal (|AᵀA − I| = {orth:e})"));
    }
    let coupling = a[(2, 0)].abs().max(a[(2, 1)].abs());
    if coupling > eta * (1.0 + 1e-12) {
        return Err(Error::Assumption(format!(
            "height coupling {coupling:e} exceeds eta {eta:e}"
        )));
    }
    let i = Matrix4::from_diagonal(&nalgebra::Vector4::new(1.0, 1.0, 0.0, 0.0));
    let i1 = a * i * a.transpose();
    let keep = [0usize, 1, 3];
    let reduced = Matrix3::from_fn(|r, c| i1[(keep[r], keep[c])]);
    let mut ev: Vec<f64> = reduced
        .symmetric_eigen()
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    if ev[1] <= RANK_TOL || ev[2].abs() > RANK_TOL {
        return Err(Error::Rank(format!(
            "reduced form has eigenvalues {ev:?}, expected rank 2"
        )));
    }
    let mut axes = [1.0 / ev[0].sqrt(), 1.0 / ev[1].sqrt()];
    axes.sort_by(f64::total_cmp);
    let trace_defect = ev.iter().sum::<f64>() - (i1.trace() - i1[(2, 2)]);
    let dev = axes.iter().map(|x| (x - 1.0).abs()).fold(0.0, f64::max);
    Ok(CrossSection {
        eigenvalues: [ev[0], ev[1], ev[2]],
        axes,
        coupling,
        constant: dev / eta,
        trace_defect,
    })
}

/// Rotation by `angle` in the `(i, j)` coordinate plane (0-based).
pub fn plane_rotation(i: usize, j: usize, angle: f64) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    let (s, c) = angle.sin_cos();
    m[(i, i)] = c;
    m[(j, j)] = c;
    m[(i, j)] = -s;
    m[(j, i)] = s;
    m
}

/// Random orthogonal A with |A31|, |A32| ≤ η.
///
/// The outer factor fixes e3, so the third row comes from two small tilts
/// and one unrestricted turn in the (3,4)-plane.
pub fn random_tilted_rotation(eta: f64, rng: &mut impl Rng) -> Matrix4<f64> {
    let mut outer = Matrix4::identity();
    for (i, j) in [(0, 1), (0, 3), (1, 3)] {
        outer = plane_rotation(
            i,
            j,
            rng.random_range(-std::f64::consts::PI..std::f64::consts::PI),
        ) * outer;
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let alpha = eta * s * rng.random_range(-1.0..1.0);
    let beta = eta * s * rng.random_range(-1.0..1.0);
    let gamma = rng.random_range(-1.0..1.0);
    outer * plane_rotation(2, 3, gamma) * plane_rotation(0, 2, alpha) * plane_rotation(1, 2, beta)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EtaRow {
    pub eta: f64,
    /// Largest axis deviation over the trials, including the pure (1,3) tilt by η.
    pub deviation: f64,
    pub constant: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EtaSweep {
    pub rows: Vec<EtaRow>,
    /// Least-squares fit `deviation ≈ intercept + slope·η`.
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// Slope of ln(deviation) against ln(η).
    pub power: f64,
}

pub fn eta_sweep(etas: &[f64], trials: usize, seed: u64) -> Result<EtaSweep> {
    if etas.len() < 2 {
        return invalid("need at least two eta values");
    }
    let mut rows = Vec::new();
    for (k, &eta) in etas.iter().enumerate() {
        let mut worst = cross_section_quadratic(&plane_rotation(0, 2, eta), eta)?.deviation();
        let mut r = rng::stream(seed, "eta-sweep", k as u64);
        for _ in 0..trials {
            let a = random_tilted_rotation(eta, &mut r);
            worst = worst.max(cross_section_quadratic(&a, eta)?.deviation());
        }
        rows.push(EtaRow {
            eta,
            deviation: worst,
            constant: worst / eta,
        });
    }
    let xs: Vec<f64> = rows.iter().map(|r| r.eta).collect();
    let ys: Vec<f64> = rows.iter().map(|r| r.deviation).collect();
    let (slope, intercept, r_squared) = linear_fit(&xs, &ys);
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.max(f64::MIN_POSITIVE).ln()).collect();
    let (power, _, _) = linear_fit(&lx, &ly);
    Ok(EtaSweep {
        rows,
        slope,
        intercept,
        r_squared,
        power,
    })
}

/// Ordinary least squares: `(slope, intercept, R²)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let syy: f64 = y.iter().map(|b| (b - my) * (b - my)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    (slope, my - slope * mx, r2)
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct Eccentricity {
    pub diameter: f64,
    pub sup_curvature: f64,
    /// `diameter · sup curvature`; 2 for a round circle, large for thin sections.
    pub value: f64,
}

/// Diameter times largest curvature of a closed planar polygon.
///
/// Curvature at each vertex is the inverse circumradius of it and its two
/// neighbors.
pub fn eccentricity(curve: &[Vector2<f64>]) -> Result<Eccentricity> {
    let n = curve.len();
    if n < 3 {
        return invalid("need at least three points");
    }
    let mut diameter: f64 = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            diameter = diameter.max((curve[i] - curve[j]).norm());
        }
    }
    let mut sup: f64 = 0.0;
    for i in 0..n {
        let (a, b, c) = (curve[(i + n - 1) % n], curve[i], curve[(i + 1) % n]);
        let (u, v) = (b - a, c - b);
        let cross = (u.x * v.y - u.y * v.x).abs();
        let denom = u.norm() * v.norm() * (c - a).norm();
        if denom == 0.0 {
            return Err(Error::Degenerate("repeated polygon vertex".into()));
        }
        sup = sup.max(2.0 * cross / denom);
    }
    Ok(Eccentricity {
        diameter,
        sup_curvature: sup,
        value: diameter * sup,
    })
}
