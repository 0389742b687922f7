//! so(4) utilities: exponential remainder, the commutator identity with J,
//! and the gauge fix that removes the (2,1) and (4,3) entries.

use nalgebra::{Matrix2, Matrix4, Vector2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::field::{j, j_prime};
use crate::error::{Error, Result};

/// Gauge-fix Newton is only run inside this Frobenius radius.
pub const GAUGE_RADIUS: f64 = 0.1;

pub fn random_so4<R: Rng>(rng: &mut R, scale: f64) -> Matrix4<f64> {
    let mut a = Matrix4::zeros();
    for i in 0..4 {
        for k in (i + 1)..4 {
            let v: f64 = rng.sample(StandardNormal);
            a[(i, k)] = v * scale;
            a[(k, i)] = -v * scale;
        }
    }
    a
}

/// Logarithm near the identity by the Mercator series of log(I + X).
pub fn log_near_identity(s: &Matrix4<f64>) -> Matrix4<f64> {
    let x = s - Matrix4::identity();
    let mut term = x;
    let mut out = Matrix4::zeros();
    for k in 1..200 {
        let add = term / k as f64 * if k % 2 == 1 { 1.0 } else { -1.0 };
        out += add;
        if add.norm() < 1e-18 {
            break;
        }
        term *= x;
    }
    (out - out.transpose()) * 0.5
}

/// Ã with exp(Ã) = exp(A)·exp(−ηJ − θJ′).
pub fn gauge_transform(a: &Matrix4<f64>, eta: f64, theta: f64) -> Matrix4<f64> {
    log_near_identity(&(a.exp() * (-(j() * eta + j_prime() * theta)).exp()))
}

/// Solves (Ã)_21 = (Ã)_43 = 0 for (η, θ) by 2-d Newton.
pub fn gauge_fix(a: &Matrix4<f64>) -> Result<(f64, f64, Matrix4<f64>)> {
    if a.norm() > GAUGE_RADIUS {
        return Err(Error::NoConvergence {
            what: format!(
                "gauge fix outside |A| ≤ {GAUGE_RADIUS} (|A| = {:.3})",
                a.norm()
            ),
            residual: f64::NAN,
        });
    }
    let f = |p: Vector2<f64>| {
        let t = gauge_transform(a, p[0], p[1]);
        Vector2::new(t[(1, 0)], t[(3, 2)])
    };
    let mut p = Vector2::new(a[(1, 0)], a[(3, 2)]);
    let mut r = f(p);
    for _ in 0..30 {
        if r.norm() < 1e-14 {
            break;
        }
        let d = 1e-7;
        let c0 = (f(p + Vector2::new(d, 0.0)) - f(p - Vector2::new(d, 0.0))) / (2.0 * d);
        let c1 = (f(p + Vector2::new(0.0, d)) - f(p - Vector2::new(0.0, d))) / (2.0 * d);
        let jac = Matrix2::from_columns(&[c0, c1]);
        let step = jac.lu().solve(&(-r)).ok_or(Error::NoConvergence {
            what: "singular gauge Jacobian".into(),
            residual: r.norm(),
        })?;
        p += step;
        r = f(p);
    }
    if !(r.abs().sum() <= 1e-10) {
        return Err(Error::NoConvergence {
            what: "gauge fix Newton".into(),
            residual: r.abs().sum(),
        });
    }
    Ok((p[0], p[1], gauge_transform(a, p[0], p[1])))
}

/// Restricts A to the gauge A_21 = A_43 = 0 by zeroing those entry pairs.
pub fn zero_gauge_entries(mut a: Matrix4<f64>) -> Matrix4<f64> {
    a[(1, 0)] = 0.0;
    a[(0, 1)] = 0.0;
    a[(3, 2)] = 0.0;
    a[(2, 3)] = 0.0;
    a
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct So4Report {
    pub samples: usize,
    /// max over samples of | |[A,J]x| − |Ax| | / |A||x| (pointwise form).
    pub commutator_pointwise_max: f64,
    /// Fraction of samples where the pointwise form misses by more than 1e-12.
    pub commutator_pointwise_violation_rate: f64,
    /// max | ‖[A,J]‖_F − ‖A‖_F | and the same for the operator norm.
    pub commutator_frobenius_max: f64,
    pub commutator_operator_max: f64,
    /// max |E| / (|A|²/2·e^{|A|}) with exp(A) = I + A + E.
    pub exp_remainder_ratio_max: f64,
    /// max ‖[exp(−ηJ−θJ′), J]‖.
    pub commute_max: f64,
    /// max |(Ã)_21| + |(Ã)_43| after Newton.
    pub gauge_residual_max: f64,
    pub gauge_failures: usize,
}

fn operator_norm(m: &Matrix4<f64>) -> f64 {
    m.singular_values().max()
}

pub fn so4_structure_checks<R: Rng>(rng: &mut R, samples: usize, max_norm: f64) -> So4Report {
    let jm = j();
    let mut rep = So4Report {
        samples,
        commutator_pointwise_max: 0.0,
        commutator_pointwise_violation_rate: 0.0,
        commutator_frobenius_max: 0.0,
        commutator_operator_max: 0.0,
        exp_remainder_ratio_max: 0.0,
        commute_max: 0.0,
        gauge_residual_max: 0.0,
        gauge_failures: 0,
    };
    let mut violations = 0usize;
    for _ in 0..samples {
        let a = zero_gauge_entries(random_so4(rng, 1.0));
        let c = a * jm - jm * a;
        let x = nalgebra::Vector4::<f64>::from_fn(|_, _| rng.sample(StandardNormal));
        let miss = ((c * x).norm() - (a * x).norm()).abs() / (a.norm() * x.norm());
        rep.commutator_pointwise_max = rep.commutator_pointwise_max.max(miss);
        if miss > 1e-12 {
            violations += 1;
        }
        rep.commutator_frobenius_max = rep
            .commutator_frobenius_max
            .max((c.norm() - a.norm()).abs());
        rep.commutator_operator_max = rep
            .commutator_operator_max
            .max((operator_norm(&c) - operator_norm(&a)).abs());

        let s: f64 = rng.random_range(0.0..1.0);
        let b = random_so4(rng, 1.0);
        let b = b * (s * 2.0 / b.norm());
        let e = b.exp() - Matrix4::identity() - b;
        let nb = b.norm();
        if nb > 0.0 {
            rep.exp_remainder_ratio_max = rep
                .exp_remainder_ratio_max
                .max(e.norm() / (0.5 * nb * nb * nb.exp()));
        }

        let (eta, theta): (f64, f64) = (rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let g = (-(jm * eta + j_prime() * theta)).exp();
        rep.commute_max = rep.commute_max.max((g * jm - jm * g).norm());

        let small = random_so4(rng, 1.0);
        let r: f64 = rng.random_range(0.0..1.0);
        let small = small * (r * max_norm / small.norm());
        match gauge_fix(&small) {
            Ok((_, _, t)) => {
                rep.gauge_residual_max = rep
                    .gauge_residual_max
                    .max(t[(1, 0)].abs() + t[(3, 2)].abs());
            }
            Err(_) => rep.gauge_failures += 1,
        }
    }
    rep.commutator_pointwise_violation_rate = violations as f64 / samples.max(1) as f64;
    rep
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_inverts_exp() {
        let mut rng = crate::rng::stream(1, "so4-test", 0);
        for _ in 0..20 {
            let a = random_so4(&mut rng, 0.05);
            assert!((log_near_identity(&a.exp()) - a).norm() < 1e-14);
        }
    }

    #[test]
    fn gauge_of_zero_is_zero() {
        let (eta, theta, t) = gauge_fix(&Matrix4::zeros()).unwrap();
        assert_eq!((eta, theta), (0.0, 0.0));
        assert!(t.norm() < 1e-15);
    }

    #[test]
    fn pure_j_entry_gauges_away() {
        let a = j() * 0.01;
        let (eta, theta, _) = gauge_fix(&a).unwrap();
        assert!(
            (eta - 0.01).abs() < 1e-4 && theta.abs() < 1e-4,
            "η = {eta}, θ = {theta}"
        );
    }

    #[test]
    fn large_a_rejected() {
        assert!(gauge_fix(&(j_prime() * 0.5 + j() * 0.5)).is_err());
    }
}
