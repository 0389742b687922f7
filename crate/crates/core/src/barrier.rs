//! Weighted barrier f = e^{−Φ+λ(t−t̄)}·u/(H − c) on Bowl²×R regions
//! Ω_j = {|y4| ≤ W_j, d(y, l_t) ≤ D_j} × [−1 − T_j, −1], with Φ = φ(x4).

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::stream;
use crate::solitons::{solve_bowl_profile, BowlProfile};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierConfig {
    pub j: i64,
    pub lambda1: f64,
    pub c1: f64,
    pub d: f64,
    pub w: f64,
    pub t_depth: f64,
    pub lambda: f64,
    pub c: f64,
}

impl BarrierConfig {
    /// D_j = 2^{j/100}Λ₁, W_j = T_j = 2^{j/50}Λ₁², λ = D_j⁻¹/1000, c = D_j^{−1/2}/8.
    pub fn new(j: i64, lambda1: f64, c1: f64) -> Self {
        let d = 2f64.powf(j as f64 / 100.0) * lambda1;
        let w = 2f64.powf(j as f64 / 50.0) * lambda1 * lambda1;
        BarrierConfig {
            j,
            lambda1,
            c1,
            d,
            w,
            t_depth: w,
            lambda: 1.0 / (1000.0 * d),
            c: 1.0 / (8.0 * d.sqrt()),
        }
    }

    /// The configuration with j = 0 and D = Λ₁ = `d`.
    pub fn with_d(d: f64, c1: f64) -> Self {
        Self::new(0, d, c1)
    }

    pub fn weight(&self) -> WeightFunction {
        WeightFunction { d: self.d }
    }

    /// W_j + D_j + T_j.
    pub fn size(&self) -> f64 {
        self.w + self.d + self.t_depth
    }
}

/// φ(s) = ln cosh(s)/(400 D).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightFunction {
    pub d: f64,
}

/// ln cosh without overflow.
pub fn ln_cosh(s: f64) -> f64 {
    let a = s.abs();
    a + (-2.0 * a).exp().ln_1p() - std::f64::consts::LN_2
}

impl WeightFunction {
    fn scale(&self) -> f64 {
        1.0 / (400.0 * self.d)
    }

    pub fn phi(&self, s: f64) -> f64 {
        self.scale() * ln_cosh(s)
    }

    pub fn dphi(&self, s: f64) -> f64 {
        self.scale() * s.tanh()
    }

    pub fn ddphi(&self, s: f64) -> f64 {
        let ch = s.abs().min(350.0).cosh();
        self.scale() / (ch * ch)
    }

    /// sup |φ′| and sup |φ″|, both 1/(400 D).
    pub fn sup_derivatives(&self) -> (f64, f64) {
        (self.scale(), self.scale())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Condition {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightConditions {
    pub config: BarrierConfig,
    pub conditions: Vec<Condition>,
    /// 2^{j/100} > 100j + 10³ ln(10⁴C₁Λ₁¹⁰).
    pub sufficient: Condition,
}

impl WeightConditions {
    pub fn all_pass(&self) -> bool {
        self.conditions.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Condition> {
        self.conditions.iter().find(|c| c.name == name)
    }
}

fn le(name: &str, lhs: f64, rhs: f64) -> Condition {
    Condition {
        name: name.into(),
        lhs,
        rhs,
        pass: lhs <= rhs * (1.0 + 1e-12),
    }
}

fn ge(name: &str, lhs: f64, rhs: f64) -> Condition {
    Condition {
        name: name.into(),
        lhs,
        rhs,
        pass: lhs >= rhs,
    }
}

/// Evaluates the five requirements on φ for the ln cosh weight.
pub fn weight_condition_check(j: i64, lambda1: f64, c1: f64) -> Result<WeightConditions> {
    if j < 1 || lambda1 < 1.0 || c1 < 1.0 {
        return invalid("need j ≥ 1, Λ₁ ≥ 1, C₁ ≥ 1");
    }
    let cfg = BarrierConfig::new(j, lambda1, c1);
    let phi = cfg.weight();
    let (d1, d2) = phi.sup_derivatives();
    let size = cfg.size();
    // ln(32 C₁ D (W+D+T)⁴) expanded to stay finite for large j
    let target = (32.0 * c1 * cfg.d).ln() + 4.0 * size.ln();
    let samples: Vec<f64> = (1..=400).map(|i| 1e-3 * 1.05f64.powi(i)).collect();
    let even = samples
        .iter()
        .map(|&s| (phi.phi(s) - phi.phi(-s)).abs())
        .fold(0.0, f64::max);
    let monotone = samples.iter().all(|&s| phi.dphi(s) > 0.0);
    let shape = Condition {
        name: "even, phi(0) = 0, phi' > 0".into(),
        lhs: even + phi.phi(0.0).abs(),
        rhs: 0.0,
        pass: even == 0.0 && phi.phi(0.0) == 0.0 && monotone,
    };
    let conditions = vec![
        le("|phi'| <= D^-1/2/20", d1, 1.0 / (20.0 * cfg.d.sqrt())),
        le("|phi''| <= D^-1/400", d2, 1.0 / (400.0 * cfg.d)),
        ge("phi(W) >= ln(32 C1 D (W+D+T)^4)", phi.phi(cfg.w), target),
        le("phi(200) <= ln(W+D+T)", phi.phi(200.0), size.ln()),
        shape,
    ];
    let lhs = j as f64 / 100.0 * std::f64::consts::LN_2;
    let rhs = (100.0 * j as f64 + 1e3 * (1e4 * c1 * lambda1.powi(10)).ln()).ln();
    let sufficient = Condition {
        name: "2^(j/100) > 100 j + 1e3 ln(1e4 C1 L1^10)".into(),
        lhs,
        rhs,
        pass: lhs > rhs,
    };
    Ok(WeightConditions {
        config: cfg,
        conditions,
        sufficient,
    })
}

/// Smallest j ≥ 1 satisfying the sufficient inequality.
pub fn smallest_sufficient_j(lambda1: f64, c1: f64) -> i64 {
    let k = 1e3 * (1e4 * c1 * lambda1.powi(10)).ln();
    (1..)
        .find(|&j| 2f64.powf(j as f64 / 100.0) > 100.0 * j as f64 + k)
        .expect("exponential wins")
}

/// Local data of a flow point entering the coefficient of f.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfaceSample {
    pub h: f64,
    pub a2: f64,
    /// x4 = ⟨x, ω4⟩.
    pub x4: f64,
    /// ⟨∂_t x, ω4⟩ = ⟨H⃗, ω4⟩.
    pub dt_x4: f64,
    /// |ω4^T|².
    pub omega_t2: f64,
    /// ⟨ω4^T, ∇H⟩.
    pub omega_grad_h: f64,
}

/// λ − c|A|²/(H−c) − ∂_tΦ + ΔΦ + |∇Φ|² + 2⟨∇Φ,∇H⟩/(H−c).
pub fn evolution_coefficient(s: &SurfaceSample, cfg: &BarrierConfig) -> Result<f64> {
    let denom = s.h - cfg.c;
    if !(denom > 0.0) {
        return Err(Error::Degenerate(format!("H − c = {denom} ≤ 0")));
    }
    let phi = cfg.weight();
    let (d1, d2) = (phi.dphi(s.x4), phi.ddphi(s.x4));
    let dt_phi = d1 * s.dt_x4;
    let lap_phi = d1 * s.dt_x4 + d2 * s.omega_t2;
    let grad2 = d1 * d1 * s.omega_t2;
    let cross = d1 * s.omega_grad_h;
    Ok(cfg.lambda - cfg.c * s.a2 / denom - dt_phi + lap_phi + grad2 + 2.0 * cross / denom)
}

/// Upper bound for the coefficient from the perturbative estimates
/// |∂_tΦ|, |⟨∇Φ,∇H⟩| ≤ ε₁|φ′|, |ΔΦ| ≤ ε₁|φ′| + |φ″|, |∇Φ|² ≤ φ′², with φ′, φ″ at
/// their admissible maxima D^{−1/2}/20 and D⁻¹/400 and |A|² ≥ H²/3.
pub fn coefficient_chain(d: f64, h: f64, eps1: f64) -> Result<f64> {
    let cfg = BarrierConfig::with_d(d, 1.0);
    let denom = h - cfg.c;
    if !(denom > 0.0) {
        return Err(Error::Degenerate(format!("H − c = {denom} ≤ 0")));
    }
    let p1 = 1.0 / (20.0 * d.sqrt());
    let p2 = 1.0 / (400.0 * d);
    Ok(cfg.lambda - cfg.c * h * h / (3.0 * denom)
        + 2.0 * eps1 * p1
        + p2
        + p1 * p1
        + 2.0 * eps1 * p1 / denom)
}

/// The closing numeric expression of the chain,
/// −D⁻¹/96 + D⁻¹/1000 + D^{−5/2}(1 + 8D^{1/2})/4 + 2D⁻¹/400.
pub fn chain_constant(d: f64) -> f64 {
    -1.0 / (96.0 * d)
        + 1.0 / (1000.0 * d)
        + d.powf(-2.5) * (1.0 + 8.0 * d.sqrt()) / 4.0
        + 2.0 / (400.0 * d)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalCoefficient {
    pub lambda_j: f64,
    pub c_j: f64,
    /// λ_j − c_j H²/(3(H − c_j)), the coefficient at |A|² = H²/3.
    pub value: f64,
    /// λ_j − c_j H²/(3(H − H/2)).
    pub halved: f64,
    /// λ_j − (4/3)c_j².
    pub bound: f64,
}

/// Coefficient of the final barrier with λ_j = 2^{−j/50}, c_j = 2^{−j/100}.
pub fn final_barrier_coefficient(j: i64, h: f64) -> Result<FinalCoefficient> {
    let lambda_j = 2f64.powf(-(j as f64) / 50.0);
    let c_j = 2f64.powf(-(j as f64) / 100.0);
    if !(h > 2.0 * c_j) {
        return Err(Error::Degenerate(format!("H = {h} ≤ 2c_j = {}", 2.0 * c_j)));
    }
    Ok(FinalCoefficient {
        lambda_j,
        c_j,
        value: lambda_j - c_j * h * h / (3.0 * (h - c_j)),
        halved: lambda_j - c_j * h * h / (3.0 * (h - h / 2.0)),
        bound: lambda_j - 4.0 / 3.0 * c_j * c_j,
    })
}

/// (lhs, rhs) of the evolution equation for f on the shrinking cylinder
/// S¹_{√(−2t)} × R² with u = e^{a z1 + a²t}(−t)^{(m²−1)/2} cos mθ and
/// Φ = `scale`·ln cosh(z2). lhs is (∂_t − Δ)f by fourth-order differences,
/// rhs the coefficient form.
pub fn cylinder_equation_check(
    lambda: f64,
    c: f64,
    scale: f64,
    m: u32,
    a: f64,
    point: [f64; 4],
    step: f64,
) -> Result<(f64, f64)> {
    let [th, z1, z2, t] = point;
    if !(t < 0.0) {
        return invalid("cylinder time must be negative");
    }
    let h_of = |t: f64| 1.0 / (-2.0 * t).sqrt();
    if !(h_of(t) > c) {
        return Err(Error::Degenerate("H ≤ c on the cylinder".into()));
    }
    let p = (m * m) as f64 / 2.0 - 0.5;
    let f = |th: f64, z1: f64, z2: f64, t: f64| {
        let u = (a * z1 + a * a * t).exp() * (-t).powf(p) * (m as f64 * th).cos();
        (-scale * ln_cosh(z2) + lambda * (t + 1.0)).exp() * u / (h_of(t) - c)
    };
    let d1 = |g: &dyn Fn(f64) -> f64, x: f64| {
        (-g(x + 2.0 * step) + 8.0 * g(x + step) - 8.0 * g(x - step) + g(x - 2.0 * step))
            / (12.0 * step)
    };
    let d2 = |g: &dyn Fn(f64) -> f64, x: f64| {
        (-g(x + 2.0 * step) + 16.0 * g(x + step) - 30.0 * g(x) + 16.0 * g(x - step)
            - g(x - 2.0 * step))
            / (12.0 * step * step)
    };
    let r2 = -2.0 * t;
    let ft = d1(&|s| f(th, z1, z2, s), t);
    let lap = d2(&|s| f(th, s, z2, t), z1)
        + d2(&|s| f(th, z1, s, t), z2)
        + d2(&|s| f(s, z1, z2, t), th) / r2;
    let h = h_of(t);
    let (dphi, ddphi) = (scale * z2.tanh(), scale / z2.cosh().powi(2));
    let q = lambda - c * (1.0 / r2) / (h - c) + ddphi + dphi * dphi;
    let fz2 = d1(&|s| f(th, z1, s, t), z2);
    Ok((ft - lap, q * f(th, z1, z2, t) + 2.0 * fz2 * dphi))
}

/// Boundary data for the barrier PDE.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum BarrierData {
    Zero,
    /// 1 on ∂¹Ω_j (d = D), 0 on ∂²Ω_j and the initial slice.
    OuterOne,
    /// Random smooth data with the given seed.
    Random {
        seed: u64,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BarrierGrid {
    pub nr: usize,
    pub ny: usize,
}

impl Default for BarrierGrid {
    fn default() -> Self {
        BarrierGrid { nr: 25, ny: 17 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleReport {
    pub d: f64,
    pub steps: usize,
    pub coefficient_max: f64,
    pub interior_sup: f64,
    pub boundary_sup: f64,
}

impl MaxPrincipleReport {
    pub fn holds(&self, tol: f64) -> bool {
        self.interior_sup <= self.boundary_sup + tol
    }
}

struct RadialModel {
    r: Vec<f64>,
    /// r/√(1+φ′²) at half nodes, for the flux form.
    flux_half: Vec<f64>,
    /// 1/(r√(1+φ′²)) at nodes.
    inv_area: Vec<f64>,
    /// Radial drift coefficient multiplying ∂_r f.
    drift: Vec<f64>,
    h: Vec<f64>,
    a2: Vec<f64>,
}

fn radial_model(profile: &BowlProfile, r_max: f64, nr: usize, c: f64) -> RadialModel {
    let hr = r_max / (nr - 1) as f64;
    let r: Vec<f64> = (0..nr).map(|i| i as f64 * hr).collect();
    let w = |r: f64| (1.0 + profile.dphi_at(r).powi(2)).sqrt();
    let grr: Vec<f64> = r.iter().map(|&x| 1.0 / w(x).powi(2)).collect();
    let flux_half = (0..nr)
        .map(|i| (r[i] + 0.5 * hr) / w(r[i] + 0.5 * hr))
        .collect();
    let inv_area = r
        .iter()
        .map(|&x| if x > 0.0 { 1.0 / (x * w(x)) } else { 0.0 })
        .collect();
    let h: Vec<f64> = r.iter().map(|&x| profile.mean_curvature(x)).collect();
    let a2 = r.iter().map(|&x| profile.a2(x)).collect();
    let drift = r
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let p = profile.dphi_at(x);
            let pp = profile.ddphi_at(x);
            let dh = -p * pp / (1.0 + p * p).powf(1.5);
            // 2⟨∇H, ∇f⟩/(H − c) + ⟨ω3^T, ∇f⟩, both radial
            grr[i] * (2.0 * dh / (h[i] - c) + p)
        })
        .collect();
    RadialModel {
        r,
        flux_half,
        inv_area,
        drift,
        h,
        a2,
    }
}

fn tip_distance(profile: &BowlProfile, r: f64) -> f64 {
    r.hypot(profile.phi_at(r))
}

/// Radius where the distance to the tip reaches d.
fn radius_for_distance(profile: &BowlProfile, d: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, d);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if tip_distance(profile, mid) < d {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Solves the evolution equation of f on Ω_j over the rotationally invariant
/// reduction (r, y4) of Bowl²×R, with coefficients frozen from the model.
/// The scheme is explicit and monotone (upwind drift, flux-form diffusion),
/// so the discrete maximum principle is exact up to rounding.
pub fn maximum_principle_experiment(
    cfg: &BarrierConfig,
    grid: BarrierGrid,
    data: BarrierData,
) -> Result<MaxPrincipleReport> {
    if grid.nr < 5 || grid.ny < 5 {
        return invalid("barrier grid needs at least 5 nodes per axis");
    }
    let profile = solve_bowl_profile(
        2,
        4.0 * cfg.d.sqrt() + 4.0,
        1e-4 * (4.0 * cfg.d.sqrt() + 4.0),
    )?;
    let r_max = radius_for_distance(&profile, cfg.d);
    let m = radial_model(&profile, r_max, grid.nr, cfg.c);
    let phi = cfg.weight();
    let (nr, ny) = (grid.nr, grid.ny);
    let hr = r_max / (nr - 1) as f64;
    let hy = 2.0 * cfg.w / (ny - 1) as f64;
    let y: Vec<f64> = (0..ny).map(|k| -cfg.w + k as f64 * hy).collect();

    let mut q = vec![0.0; nr * ny];
    let mut coefficient_max = f64::NEG_INFINITY;
    for i in 0..nr {
        for k in 0..ny {
            let s = SurfaceSample {
                h: m.h[i],
                a2: m.a2[i],
                x4: y[k],
                dt_x4: 0.0,
                omega_t2: 1.0,
                omega_grad_h: 0.0,
            };
            let v = evolution_coefficient(&s, cfg)?;
            coefficient_max = coefficient_max.max(v);
            q[i * ny + k] = v;
        }
    }
    if coefficient_max >= 0.0 {
        return Err(Error::Assumption(format!(
            "coefficient of f reaches {coefficient_max:.3e} ≥ 0 on Ω_j"
        )));
    }

    // explicit stencil weights per node: (center, r−, r+, y−, y+)
    let mut wts = vec![[0.0f64; 5]; nr * ny];
    let mut max_rate = 0.0f64;
    for i in 0..nr - 1 {
        for k in 1..ny - 1 {
            let (mut wm, mut wp) = if i == 0 {
                // Δf → 2·(2/h²)(f₁ − f₀) at the tip; g^{rr} = 1 there
                (0.0, 4.0 / (hr * hr))
            } else {
                let a = m.inv_area[i] / (hr * hr);
                (a * m.flux_half[i - 1], a * m.flux_half[i])
            };
            let b = m.drift[i] / hr;
            if i > 0 {
                if b > 0.0 {
                    wp += b;
                } else {
                    wm -= b;
                }
            }
            let by = 2.0 * phi.dphi(y[k]) / hy;
            let (mut ym, mut yp) = (1.0 / (hy * hy), 1.0 / (hy * hy));
            if by > 0.0 {
                yp += by;
            } else {
                ym -= by;
            }
            let l = i * ny + k;
            let center = -(wm + wp + ym + yp) + q[l];
            max_rate = max_rate.max(-center);
            wts[l] = [center, wm, wp, ym, yp];
        }
    }
    let dt_max = 0.9 / max_rate;
    let steps = (cfg.t_depth / dt_max).ceil() as usize;
    let dt = cfg.t_depth / steps as f64;
    let t0 = -1.0 - cfg.t_depth;

    let random = match data {
        BarrierData::Random { seed } => {
            let mut rng = stream(seed, "barrier-data", 0);
            Some(
                (0..9)
                    .map(|_| rng.random_range(-1.0..1.0))
                    .collect::<Vec<f64>>(),
            )
        }
        _ => None,
    };
    let value = |r: f64, yy: f64, t: f64, outer: bool| -> f64 {
        match (&data, &random) {
            (BarrierData::Zero, _) => 0.0,
            (BarrierData::OuterOne, _) => {
                if outer {
                    1.0
                } else {
                    0.0
                }
            }
            (BarrierData::Random { .. }, Some(c)) => {
                let (a, b, s) = (r / r_max, yy / cfg.w, (t - t0) / cfg.t_depth);
                c[0] + c[1] * (3.0 * a + c[2]).sin()
                    + c[3] * (2.0 * b + c[4] * s).cos()
                    + c[5] * s * a
                    + c[6] * (5.0 * s).sin() * b
                    + c[7] * a * b
                    + c[8] * (4.0 * a * s).cos()
            }
            _ => 0.0,
        }
    };
    let is_edge = |i: usize, k: usize| i == nr - 1 || k == 0 || k == ny - 1;
    let set_boundary = |f: &mut [f64], t: f64| {
        for i in 0..nr {
            for k in 0..ny {
                if is_edge(i, k) {
                    f[i * ny + k] = value(m.r[i], y[k], t, i == nr - 1 && k > 0 && k < ny - 1);
                }
            }
        }
    };
    let mut f: Vec<f64> = (0..nr * ny)
        .map(|l| value(m.r[l / ny], y[l % ny], t0, false))
        .collect();
    set_boundary(&mut f, t0);
    let mut boundary_sup = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let mut interior_sup = 0.0f64;
    let mut next = f.clone();
    for step in 1..=steps {
        let t = t0 + dt * step as f64;
        next.par_chunks_mut(ny).enumerate().for_each(|(i, row)| {
            if i == nr - 1 {
                return;
            }
            for k in 1..ny - 1 {
                let l = i * ny + k;
                let [c0, wm, wp, ym, yp] = wts[l];
                let fm = if i == 0 { f[l] } else { f[l - ny] };
                row[k] = f[l]
                    + dt * (c0 * f[l] + wm * fm + wp * f[l + ny] + ym * f[l - 1] + yp * f[l + 1]);
            }
        });
        set_boundary(&mut next, t);
        std::mem::swap(&mut f, &mut next);
        for i in 0..nr {
            for k in 0..ny {
                let v = f[i * ny + k].abs();
                if is_edge(i, k) {
                    boundary_sup = boundary_sup.max(v);
                } else {
                    interior_sup = interior_sup.max(v);
                }
            }
        }
    }
    Ok(MaxPrincipleReport {
        d: cfg.d,
        steps,
        coefficient_max,
        interior_sup,
        boundary_sup,
    })
}

/// Natural logarithms of the three boundary pieces of sup|f| (large j
/// underflows otherwise).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryPieces {
    pub j: i64,
    /// ln(1000 C₁Λ₁⁴ 2^{−j/2} ε), outer boundary.
    pub outer: f64,
    /// ln((W+D+T)⁻² ε), top and bottom.
    pub caps: f64,
    /// ln(e^{−D/1000}·32 D C₁ (W+D+T)² ε), initial slice.
    pub initial: f64,
    pub combined: f64,
    /// ln(C₁ 2^{−j/4} ε).
    pub target: f64,
}

pub fn boundary_pieces_ln(j: i64, lambda1: f64, c1: f64, eps: f64) -> BoundaryPieces {
    let cfg = BarrierConfig::new(j, lambda1, c1);
    let ln2 = std::f64::consts::LN_2;
    let jf = j as f64;
    let le = eps.ln();
    let outer = (1000.0 * c1 * lambda1.powi(4)).ln() - jf / 2.0 * ln2 + le;
    let caps = -2.0 * cfg.size().ln() + le;
    let initial = -cfg.d / 1000.0 + (32.0 * cfg.d * c1).ln() + 2.0 * cfg.size().ln() + le;
    BoundaryPieces {
        j,
        outer,
        caps,
        initial,
        combined: outer.max(caps).max(initial),
        target: c1.ln() - jf / 4.0 * ln2 + le,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PieceSweep {
    pub rows: Vec<BoundaryPieces>,
    /// Least-squares slope of log₂(combined) per unit j.
    pub exponent: f64,
    pub dominant: Vec<String>,
}

impl PieceSweep {
    /// Whether the fitted exponent is within `tol` (relative) of −1/4.
    pub fn matches_quarter(&self, tol: f64) -> bool {
        (self.exponent / -0.25 - 1.0).abs() <= tol
    }
}

pub fn boundary_piece_sweep(js: &[i64], lambda1: f64, c1: f64, eps: f64) -> Result<PieceSweep> {
    if js.len() < 2 {
        return invalid("sweep needs at least two j values");
    }
    let rows: Vec<BoundaryPieces> = js
        .iter()
        .map(|&j| boundary_pieces_ln(j, lambda1, c1, eps))
        .collect();
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .map(|r| (r.j as f64, r.combined / std::f64::consts::LN_2))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let dominant = rows
        .iter()
        .map(|r| {
            if r.combined == r.outer {
                "outer"
            } else if r.combined == r.caps {
                "caps"
            } else {
                "initial"
            }
            .to_string()
        })
        .collect();
    Ok(PieceSweep {
        rows,
        exponent: sxy / sxx,
        dominant,
    })
}

/// Samples (D, H, ε₁) with D ≥ `d_min`, H in (D^{−1/2}/4, 4D^{1/2}) and
/// ε₁ < D⁻², returning the largest chain value found.
pub fn chain_scan(d_min: f64, samples: usize, seed: u64) -> Result<(f64, usize)> {
    let mut rng = stream(seed, "barrier-chain", 0);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..samples {
        let d = d_min * (rng.random_range(0.0..6.0f64)).exp();
        let lo = 0.25 / d.sqrt();
        let hi = 4.0 * d.sqrt();
        let h = lo * (hi / lo).powf(rng.random::<f64>());
        let eps1 = rng.random::<f64>() / (d * d);
        worst = worst.max(coefficient_chain(d, h, eps1)?);
    }
    Ok((worst, samples))
}
