//! Rigidity catalog distances and the two-field alignment experiment.

use nalgebra::{Matrix4, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::{j, j_prime, AffineField, RotationField};
use super::so4::random_so4;
use super::symmetry::KH_BOUND;
use crate::error::{invalid, Error, Result};
use crate::rng::stream;
use crate::solitons::BowlProfile;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SurfacePoint {
    pub x: Vector4<f64>,
    pub normal: Vector4<f64>,
    pub h: f64,
}

/// Model surfaces with closed-form normals: the cylinder S¹_ρ × R² about
/// span(e3, e4), and Bowl²×R with axis e3 and split direction e4.
#[derive(Clone, Debug)]
pub enum RigidModel {
    Cylinder { radius: f64 },
    BowlLine { profile: BowlProfile },
}

const THETA_SAMPLES: usize = 128;

impl RigidModel {
    pub fn cylinder_at(t: f64) -> Self {
        RigidModel::Cylinder {
            radius: (-2.0 * t).sqrt(),
        }
    }

    /// Base point x̄: (ρ, 0, 0, 0) on the cylinder, the tip on Bowl×R.
    pub fn center(&self) -> Vector4<f64> {
        match self {
            RigidModel::Cylinder { radius } => Vector4::new(*radius, 0.0, 0.0, 0.0),
            RigidModel::BowlLine { .. } => Vector4::zeros(),
        }
    }

    pub fn h_center(&self) -> f64 {
        match self {
            RigidModel::Cylinder { radius } => 1.0 / radius,
            RigidModel::BowlLine { .. } => 1.0,
        }
    }

    /// Surface samples inside the Euclidean ball B(x̄, radius); `res` nodes
    /// per non-angular parameter direction.
    pub fn ball(&self, radius: f64, res: usize) -> Result<Vec<SurfacePoint>> {
        let c = self.center();
        let mut out = Vec::new();
        let thetas: Vec<f64> = (0..THETA_SAMPLES)
            .map(|i| std::f64::consts::TAU * i as f64 / THETA_SAMPLES as f64)
            .collect();
        let line = |lo: f64, hi: f64| -> Vec<f64> {
            (0..res)
                .map(|i| lo + (hi - lo) * i as f64 / (res - 1) as f64)
                .collect()
        };
        match self {
            RigidModel::Cylinder { radius: rho } => {
                let zs = line(-radius, radius);
                for &th in &thetas {
                    let (s, co) = th.sin_cos();
                    let normal = Vector4::new(-co, -s, 0.0, 0.0);
                    for &z1 in &zs {
                        for &z2 in &zs {
                            let x = Vector4::new(rho * co, rho * s, z1, z2);
                            if (x - c).norm() <= radius {
                                out.push(SurfacePoint {
                                    x,
                                    normal,
                                    h: 1.0 / rho,
                                });
                            }
                        }
                    }
                }
            }
            RigidModel::BowlLine { profile } => {
                if profile.n != 2 {
                    return invalid("Bowl×R needs the n = 2 profile");
                }
                let r_hi = profile.radius_at_height(radius)?;
                let rs = line(0.0, r_hi);
                let ss = line(-radius, radius);
                for &r in &rs {
                    let p = profile.dphi_at(r);
                    let w = (1.0 + p * p).sqrt();
                    let z = profile.phi_at(r);
                    let th_set: &[f64] = if r == 0.0 { &thetas[..1] } else { &thetas };
                    for &th in th_set {
                        let (sn, co) = th.sin_cos();
                        let normal = Vector4::new(-p * co / w, -p * sn / w, 1.0 / w, 0.0);
                        for &s in &ss {
                            let x = Vector4::new(r * co, r * sn, z, s);
                            if (x - c).norm() <= radius {
                                out.push(SurfacePoint {
                                    x,
                                    normal,
                                    h: 1.0 / w,
                                });
                            }
                        }
                    }
                }
            }
        }
        if out.is_empty() {
            return invalid("ball holds no samples");
        }
        Ok(out)
    }
}

fn sup_diff(a: &AffineField, b: &AffineField, pts: &[SurfacePoint]) -> f64 {
    pts.iter()
        .map(|p| (a.eval(&p.x) - b.eval(&p.x)).norm())
        .fold(0.0, f64::max)
}

/// min over the catalog {±Jx, ±J′(x − a) (cylinder only)} of the sup
/// distance to K over `pts`. For J′ the base point a is chosen by least
/// squares, so that branch is an upper bound on the exact minimum.
pub fn rigidity_residual(k: &AffineField, model: &RigidModel, pts: &[SurfacePoint]) -> f64 {
    let mut best = f64::INFINITY;
    for sign in [1.0, -1.0] {
        let c = AffineField {
            a: j() * sign,
            b: Vector4::zeros(),
        };
        best = best.min(sup_diff(k, &c, pts));
        if matches!(model, RigidModel::Cylinder { .. }) {
            let m = j_prime() * sign;
            // diff(x) = (K.a − m)x + K.b + m·a; m·a spans e3, e4.
            let base = AffineField { a: k.a - m, b: k.b };
            let mut mean = Vector4::zeros();
            for p in pts {
                mean += base.eval(&p.x);
            }
            mean /= pts.len() as f64;
            let shift = Vector4::new(0.0, 0.0, -mean[2], -mean[3]);
            let d = AffineField {
                a: base.a,
                b: base.b + shift,
            };
            best = best.min(pts.iter().map(|p| d.eval(&p.x).norm()).fold(0.0, f64::max));
        }
    }
    best
}

/// sup |⟨K, ν⟩|·H over `pts`.
pub fn normal_defect(k: &RotationField, pts: &[SurfacePoint]) -> f64 {
    let m = k.matrix();
    pts.iter()
        .map(|p| (m * (p.x - k.q)).dot(&p.normal).abs() * p.h)
        .fold(0.0, f64::max)
}

pub fn kh_sup(k: &RotationField, pts: &[SurfacePoint]) -> f64 {
    let m = k.matrix();
    pts.iter()
        .map(|p| (m * (p.x - k.q)).norm() * p.h)
        .fold(0.0, f64::max)
}

/// Perturbs `base` along a random (A, b) direction, scaled by bisection so
/// that sup |⟨K, ν⟩|·H over `unit` equals `eps`.
pub fn perturbed_field<R: Rng>(
    rng: &mut R,
    base: &RotationField,
    unit: &[SurfacePoint],
    length: f64,
    eps: f64,
) -> Result<RotationField> {
    const TRIES: usize = 20;
    for _ in 0..TRIES {
        let a = random_so4(rng, 1.0);
        let b = Vector4::<f64>::from_fn(|_, _| rng.sample(StandardNormal)) * length;
        let at = |s: f64| RotationField {
            s: base.s * (a * s).exp(),
            q: base.q + b * s,
        };
        let f = |s: f64| normal_defect(&at(s), unit);
        let mut hi = 1e-6;
        while f(hi) < eps && hi < 1.0 {
            hi *= 2.0;
        }
        if f(hi) < eps {
            continue;
        }
        let mut lo = 0.0;
        for _ in 0..80 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < eps {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-13 * hi {
                break;
            }
        }
        let k = at(hi);
        if kh_sup(&k, unit) <= KH_BOUND {
            return Ok(k);
        }
    }
    Err(Error::Invalid(format!(
        "no admissible field after {TRIES} directions"
    )))
}

/// min(sup|K1 − K2|, sup|K1 + K2|)·H(x̄) over `pts`.
pub fn alignment_distance(
    k1: &AffineField,
    k2: &AffineField,
    pts: &[SurfacePoint],
    h_center: f64,
) -> f64 {
    let minus = sup_diff(k1, k2, pts);
    let plus = sup_diff(k1, &k2.scaled(-1.0), pts);
    minus.min(plus) * h_center
}

/// Largest value of sup_{B_L}|D| / ((1 + L/ρ)·sup_{B_ρ}|D|) over antipodal
/// direction sets about x̄; at most 1 for every affine D.
pub fn affine_extension_ratio<R: Rng>(
    rng: &mut R,
    d: &AffineField,
    center: &Vector4<f64>,
    rho: f64,
    l: f64,
) -> f64 {
    let mut dirs: Vec<Vector4<f64>> = (0..4).map(|i| Vector4::ith(i, 1.0)).collect();
    for _ in 0..60 {
        let v = Vector4::<f64>::from_fn(|_, _| rng.sample(StandardNormal));
        dirs.push(v.normalize());
    }
    let sup = |r: f64| {
        dirs.iter()
            .flat_map(|u| [u * r, -u * r])
            .map(|y| d.eval(&(center + y)).norm())
            .fold(0.0, f64::max)
    };
    let small = sup(rho);
    if small == 0.0 {
        return 0.0;
    }
    sup(l) / ((1.0 + l / rho) * small)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlignmentRow {
    pub l: f64,
    pub trials: usize,
    pub max_ratio: f64,
    pub mean_ratio: f64,
    pub min_ratio: f64,
    pub affine_extension_max: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlignmentReport {
    pub epsilon: f64,
    pub rows: Vec<AlignmentRow>,
    /// max over L of the per-L maximum ratio.
    pub constant: f64,
    /// (max of per-L maxima) / (min of per-L maxima).
    pub spread: f64,
}

/// Two admissible fields per trial on the unit-scale ball; their
/// min-over-sign sup difference on the L-ball, divided by ε(L + 1).
pub fn alignment_experiment(
    model: &RigidModel,
    eps: f64,
    ls: &[f64],
    trials: usize,
    seed: u64,
) -> Result<AlignmentReport> {
    if !(eps > 0.0 && eps <= 0.01) {
        return invalid("ε must lie in (0, 0.01]");
    }
    if ls.iter().any(|&l| !(1.0..=100.0).contains(&l)) {
        return invalid("L must lie in [1, 100]");
    }
    if trials == 0 {
        return invalid("need at least one trial");
    }
    let h = model.h_center();
    let center = model.center();
    let unit = model.ball(1.0 / h, 17)?;
    let flip = {
        let mut s = Matrix4::identity();
        s[(1, 1)] = -1.0;
        s
    };
    let mut rows = Vec::new();
    for (li, &l) in ls.iter().enumerate() {
        let far = model.ball(l / h, 33)?;
        let results = (0..trials)
            .into_par_iter()
            .map(|trial| {
                let mut rng = stream(seed, "alignment", (li * 1_000_000 + trial) as u64);
                let base1 = RotationField::standard();
                let base2 = if rng.random::<bool>() {
                    RotationField {
                        s: flip,
                        q: Vector4::zeros(),
                    }
                } else {
                    base1.clone()
                };
                let k1 = perturbed_field(&mut rng, &base1, &unit, 1.0 / h, eps)?;
                let k2 = perturbed_field(&mut rng, &base2, &unit, 1.0 / h, eps)?;
                let (a1, a2) = (AffineField::from(&k1), AffineField::from(&k2));
                let dist = alignment_distance(&a1, &a2, &far, h);
                let d = if sup_diff(&a1, &a2, &far) <= sup_diff(&a1, &a2.scaled(-1.0), &far) {
                    a1.sub(&a2)
                } else {
                    a1.add(&a2)
                };
                let ext = affine_extension_ratio(&mut rng, &d, &center, 1.0 / h, l / h);
                Ok((dist / (eps * (l + 1.0)), ext))
            })
            .collect::<Result<Vec<_>>>()?;
        let ratios: Vec<f64> = results.iter().map(|r| r.0).collect();
        rows.push(AlignmentRow {
            l,
            trials,
            max_ratio: ratios.iter().copied().fold(0.0, f64::max),
            mean_ratio: ratios.iter().sum::<f64>() / trials as f64,
            min_ratio: ratios.iter().copied().fold(f64::INFINITY, f64::min),
            affine_extension_max: results.iter().map(|r| r.1).fold(0.0, f64::max),
        });
    }
    let maxes: Vec<f64> = rows.iter().map(|r| r.max_ratio).collect();
    let hi = maxes.iter().copied().fold(0.0, f64::max);
    let lo = maxes.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(AlignmentReport {
        epsilon: eps,
        rows,
        constant: hi,
        spread: if lo > 0.0 { hi / lo } else { f64::INFINITY },
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RigidityTrials {
    pub epsilon: f64,
    pub trials: usize,
    /// Catalog distance ÷ ε, per trial.
    pub ratios: Vec<f64>,
    pub max_ratio: f64,
}

/// Random K with sup|⟨K, ν⟩|·H = ε on the cylinder's unit-scale ball; the
/// catalog distance measured on the same ball.
pub fn rigidity_trials(radius: f64, eps: f64, trials: usize, seed: u64) -> Result<RigidityTrials> {
    let model = RigidModel::Cylinder { radius };
    let unit = model.ball(radius, 17)?;
    let ratios = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = stream(seed, "rigidity", t as u64);
            let k = perturbed_field(&mut rng, &RotationField::standard(), &unit, radius, eps)?;
            Ok(rigidity_residual(&AffineField::from(&k), &model, &unit) / eps)
        })
        .collect::<Result<Vec<f64>>>()?;
    let max_ratio = ratios.iter().copied().fold(0.0, f64::max);
    Ok(RigidityTrials {
        epsilon: eps,
        trials,
        ratios,
        max_ratio,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct KernelLowerBound {
    /// min over sampled unit (B, b) of sup |⟨[A,J]x − Jb, ν⟩|.
    pub min_sup: f64,
    pub samples: usize,
}

/// Sampled minimization of (A, b) ↦ sup|⟨[A,J]x − Jb, ν⟩| over the cylinder's
/// unit-scale ball, with A_21 = A_43 = 0 and b ∈ span(e1, e2) (the part of b
/// that J sees), on the unit sphere of the six free parameters.
pub fn commutator_kernel_lower_bound(
    radius: f64,
    samples: usize,
    seed: u64,
) -> Result<KernelLowerBound> {
    let pts = RigidModel::Cylinder { radius }.ball(radius, 9)?;
    let jm = j();
    let eval = |p: &[f64; 6]| {
        let mut a = Matrix4::zeros();
        let idx = [(0, 2), (0, 3), (1, 2), (1, 3)];
        for (c, &(r, s)) in idx.iter().enumerate() {
            a[(r, s)] = p[c];
            a[(s, r)] = -p[c];
        }
        let b = Vector4::new(p[4], p[5], 0.0, 0.0);
        let comm = a * jm - jm * a;
        let jb = jm * b;
        pts.iter()
            .map(|q| (comm * q.x - jb).dot(&q.normal).abs())
            .fold(0.0, f64::max)
    };
    let norm = |p: &mut [f64; 6]| {
        let n = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        p.iter_mut().for_each(|v| *v /= n);
    };
    let mut rng = stream(seed, "kernel-bound", 0);
    let mut best = f64::INFINITY;
    let mut best_p = [0.0; 6];
    for _ in 0..samples {
        let mut p = [0.0; 6];
        p.iter_mut().for_each(|v| *v = rng.sample(StandardNormal));
        norm(&mut p);
        let v = eval(&p);
        if v < best {
            best = v;
            best_p = p;
        }
    }
    // Local polish of the best sample by shrinking random perturbations.
    let mut step = 0.1;
    while step > 1e-6 {
        let mut improved = false;
        for _ in 0..40 {
            let mut p = best_p;
            p.iter_mut()
                .for_each(|v| *v += step * rng.sample::<f64, _>(StandardNormal));
            norm(&mut p);
            let v = eval(&p);
            if v < best {
                best = v;
                best_p = p;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    Ok(KernelLowerBound {
        min_sup: best,
        samples,
    })
}
