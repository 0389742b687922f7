//! Dirichlet heat kernel of ∂_t = Δ on the square Ω_L = [−L, L]².
//!
//! Odd images: in one dimension the n-th image of y is 2nL + (−1)ⁿy with sign
//! (−1)ⁿ, and the square kernel sums products over (n1, n2) with
//! |n1| + |n2| ≤ truncation.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::Axis;
use crate::quad::Composite;
use crate::rng::stream;

pub const DEFAULT_TRUNCATION: usize = 6;
const ORDER: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImageKernel {
    pub l: f64,
    pub truncation: usize,
}

impl ImageKernel {
    pub fn new(l: f64, truncation: usize) -> Result<Self> {
        if !(l > 0.0 && l.is_finite()) {
            return invalid("half-width must be positive");
        }
        if truncation < 3 {
            return invalid("image truncation must be at least 3");
        }
        Ok(ImageKernel { l, truncation })
    }

    pub fn square(l: f64) -> Result<Self> {
        Self::new(l, DEFAULT_TRUNCATION)
    }

    pub fn contains(&self, p: [f64; 2]) -> bool {
        let tol = self.l * (1.0 + 1e-12);
        p[0].abs() <= tol && p[1].abs() <= tol
    }

    fn check(&self, t: f64, pts: &[[f64; 2]]) -> Result<()> {
        if !(t > 0.0) {
            return invalid(format!("kernel time must be positive, got {t}"));
        }
        if let Some(p) = pts.iter().find(|p| !self.contains(**p)) {
            return invalid(format!("point {p:?} outside Ω_{}", self.l));
        }
        Ok(())
    }

    /// 1-d image terms (position, sign) for |n| ≤ truncation.
    fn images_1d(&self, y: f64) -> Vec<(i64, f64, f64)> {
        let n = self.truncation as i64;
        (-n..=n)
            .map(|k| {
                let s = if k % 2 == 0 { 1.0 } else { -1.0 };
                (k, 2.0 * k as f64 * self.l + s * y, s)
            })
            .collect()
    }

    /// K_t(x, y) and its y-gradient, no domain checks.
    fn eval_raw(&self, t: f64, x: [f64; 2], y: [f64; 2]) -> (f64, [f64; 2]) {
        let a = self.images_1d(y[0]);
        let b = self.images_1d(y[1]);
        let n = self.truncation as i64;
        let c = 1.0 / (4.0 * PI * t);
        let (mut k, mut g0, mut g1) = (0.0, 0.0, 0.0);
        for &(k1, p1, s1) in &a {
            let d1 = x[0] - p1;
            let e1 = (-d1 * d1 / (4.0 * t)).exp();
            if e1 == 0.0 {
                continue;
            }
            for &(k2, p2, s2) in &b {
                if k1.abs() + k2.abs() > n {
                    continue;
                }
                let d2 = x[1] - p2;
                let term = s1 * s2 * c * e1 * (-d2 * d2 / (4.0 * t)).exp();
                k += term;
                // d(image)/dy = sign, d/d(image) of the Gaussian = d/(2t)
                g0 += term * d1 / (2.0 * t) * s1;
                g1 += term * d2 / (2.0 * t) * s2;
            }
        }
        (k, [g0, g1])
    }

    fn value(&self, t: f64, x: [f64; 2], y: [f64; 2]) -> f64 {
        self.eval_raw(t, x, y).0
    }

    /// Outward normal derivative in y at a boundary point.
    fn normal_raw(&self, t: f64, x: [f64; 2], y: [f64; 2], side: Side) -> f64 {
        let (_, g) = self.eval_raw(t, x, y);
        match side {
            Side::Right => g[0],
            Side::Left => -g[0],
            Side::Top => g[1],
            Side::Bottom => -g[1],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Side {
    Right,
    Left,
    Top,
    Bottom,
}

const SIDES: [Side; 4] = [Side::Right, Side::Left, Side::Top, Side::Bottom];

impl Side {
    fn point(self, l: f64, s: f64) -> [f64; 2] {
        match self {
            Side::Right => [l, s],
            Side::Left => [-l, s],
            Side::Top => [s, l],
            Side::Bottom => [s, -l],
        }
    }
}

pub fn kernel_eval(k: &ImageKernel, t: f64, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    k.check(t, &[x, y])?;
    Ok(k.value(t, x, y))
}

/// Analytic y-gradient of K_t(x, y).
pub fn kernel_grad_y(k: &ImageKernel, t: f64, x: [f64; 2], y: [f64; 2]) -> Result<[f64; 2]> {
    k.check(t, &[x, y])?;
    Ok(k.eval_raw(t, x, y).1)
}

/// ∂_{ν_y} K_t(x, y) with the outward normal; y must lie on ∂Ω_L (corners use
/// the first side found).
pub fn kernel_normal_derivative(k: &ImageKernel, t: f64, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    k.check(t, &[x, y])?;
    let tol = 1e-12 * k.l;
    let side = if (y[0] - k.l).abs() <= tol {
        Side::Right
    } else if (y[0] + k.l).abs() <= tol {
        Side::Left
    } else if (y[1] - k.l).abs() <= tol {
        Side::Top
    } else if (y[1] + k.l).abs() <= tol {
        Side::Bottom
    } else {
        return invalid("normal derivative needs a boundary point");
    };
    Ok(k.normal_raw(t, x, y, side))
}

/// |∂_t K − Δ_x K| by fourth-order centered differences.
pub fn heat_residual(k: &ImageKernel, t: f64, x: [f64; 2], y: [f64; 2]) -> Result<f64> {
    k.check(t, &[x, y])?;
    let ht = 1e-2 * t;
    let f = |s: f64| k.value(s, x, y);
    let dt = (-f(t + 2.0 * ht) + 8.0 * f(t + ht) - 8.0 * f(t - ht) + f(t - 2.0 * ht)) / (12.0 * ht);
    let hx = 1e-2 * t.sqrt();
    let mut lap = 0.0;
    for a in 0..2 {
        let g = |d: f64| {
            let mut p = x;
            p[a] += d;
            k.value(t, p, y)
        };
        lap += (-g(2.0 * hx) + 16.0 * g(hx) - 30.0 * g(0.0) + 16.0 * g(-hx) - g(-2.0 * hx))
            / (12.0 * hx * hx);
    }
    Ok((dt - lap).abs())
}

/// ∫ f(y) dy over Ω_L on a tensor composite rule.
fn integrate_square(l: f64, panels: usize, f: impl Fn([f64; 2]) -> f64 + Sync) -> f64 {
    let q = Composite::new(-l, l, panels, ORDER);
    (0..q.len())
        .into_par_iter()
        .map(|i| {
            let y0 = q.nodes[i];
            q.weights[i]
                * q.nodes
                    .iter()
                    .zip(&q.weights)
                    .map(|(&y1, &w)| w * f([y0, y1]))
                    .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum()
}

/// Repeats a quadrature with doubled panels until two results agree.
fn converge(
    what: &str,
    start: usize,
    max: usize,
    tol: f64,
    mut f: impl FnMut(usize) -> f64,
) -> Result<f64> {
    let mut panels = start.max(1);
    let mut prev = f(panels);
    while panels < max {
        panels *= 2;
        let next = f(panels);
        if (next - prev).abs() <= tol * next.abs().max(1e-300) || next == prev {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::NoConvergence {
        what: what.into(),
        residual: prev,
    })
}

fn start_panels(l: f64, t: f64) -> usize {
    ((2.0 * l / t.sqrt()).ceil() as usize).clamp(4, 256)
}

/// ∫_{Ω_L} |K_t(x, y)| dy.
pub fn mass_bound(k: &ImageKernel, t: f64, x: [f64; 2]) -> Result<f64> {
    k.check(t, &[x])?;
    converge(
        "kernel mass quadrature",
        start_panels(k.l, t),
        1024,
        1e-10,
        |p| integrate_square(k.l, p, |y| k.value(t, x, y).abs()),
    )
}

/// Survival probability of Brownian motion with generator Δ in Ω_L, from the
/// sine eigenfunction expansion (independent of the image sum).
pub fn survival_series(l: f64, t: f64, x: [f64; 2]) -> f64 {
    let one = |x: f64| {
        let mut s = 0.0;
        for j in 0..100_000 {
            let n = (2 * j + 1) as f64;
            let w = n * PI / (2.0 * l);
            let decay = (-w * w * t).exp();
            s += 4.0 / (n * PI) * (w * (x + l)).sin() * decay;
            if decay < 1e-18 {
                break;
            }
        }
        s
    };
    one(x[0]) * one(x[1])
}

/// Monte Carlo survival estimate with a Brownian-bridge crossing correction;
/// returns (estimate, standard error).
pub fn survival_monte_carlo(
    l: f64,
    t: f64,
    x: [f64; 2],
    paths: usize,
    steps: usize,
    seed: u64,
) -> (f64, f64) {
    let dt = t / steps as f64;
    let sd = (2.0 * dt).sqrt();
    let chunks = 64usize;
    let per = paths.div_ceil(chunks);
    let alive: usize = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, "survival-mc", c as u64);
            let mut count = 0usize;
            'path: for _ in 0..per {
                let mut p = x;
                for _ in 0..steps {
                    let q = [
                        p[0] + sd * rng.sample::<f64, _>(StandardNormal),
                        p[1] + sd * rng.sample::<f64, _>(StandardNormal),
                    ];
                    for a in 0..2 {
                        if q[a].abs() >= l {
                            continue 'path;
                        }
                        for wall in [l, -l] {
                            let d0 = (wall - p[a]).abs();
                            let d1 = (wall - q[a]).abs();
                            // crossing probability of the bridge with variance 2dt
                            if rng.random::<f64>() < (-d0 * d1 / dt).exp() {
                                continue 'path;
                            }
                        }
                    }
                    p = q;
                }
                count += 1;
            }
            count
        })
        .sum();
    let n = (per * chunks) as f64;
    let p = alive as f64 / n;
    (p, (p * (1.0 - p) / n).sqrt())
}

/// ∫_{∂Ω_L} |∂_{ν_y} K_s(x, y)| dy.
pub fn boundary_flux(k: &ImageKernel, s: f64, x: [f64; 2]) -> Result<f64> {
    k.check(s, &[x])?;
    converge(
        "boundary flux quadrature",
        start_panels(k.l, s),
        4096,
        1e-9,
        |p| {
            let q = Composite::new(-k.l, k.l, p, ORDER);
            // Collected first so the summation order does not depend on scheduling.
            let per_side: Vec<f64> = SIDES
                .par_iter()
                .map(|&side| q.integrate(|u| k.normal_raw(s, x, side.point(k.l, u), side).abs()))
                .collect();
            per_side.iter().sum()
        },
    )
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxRow {
    /// Elapsed time t − τ.
    pub s: f64,
    pub flux: f64,
    /// L⁻² e^{−L²/(50s)}, the boundary-integrated pointwise shape.
    pub shape_sharp: f64,
    /// L²s⁻² e^{−L²/(1000s)}.
    pub shape_coarse: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FluxReport {
    pub l: f64,
    pub x: [f64; 2],
    pub rows: Vec<FluxRow>,
    /// Smallest C with flux ≤ C·shape over the grid, per shape.
    pub c_sharp: f64,
    pub c_coarse: f64,
    /// Least-squares slope of ln(flux) against 1/s over s ≤ L²/16.
    pub log_slope: f64,
    pub slope_reference: f64,
}

impl FluxReport {
    /// Decay at least as fast as e^{−L²/(50s)}, allowing `tol` relative slack.
    pub fn slope_consistent(&self, tol: f64) -> bool {
        self.log_slope <= self.slope_reference * (1.0 - tol)
    }
}

/// Geometric grid of elapsed times from L²/400 to L².
pub fn default_flux_grid(l: f64, n: usize) -> Vec<f64> {
    let (a, b) = ((l * l / 400.0).ln(), (l * l).ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1).max(1) as f64).exp())
        .collect()
}

pub fn flux_bound_experiment(k: &ImageKernel, x: [f64; 2], s_grid: &[f64]) -> Result<FluxReport> {
    let inner = k.l / 25.0;
    if x[0].abs() > inner || x[1].abs() > inner {
        return Err(Error::Assumption(format!(
            "x = {x:?} must lie in Ω_{inner}"
        )));
    }
    if s_grid.len() < 3 {
        return invalid("flux experiment needs at least three elapsed times");
    }
    let l2 = k.l * k.l;
    let rows = s_grid
        .iter()
        .map(|&s| {
            let flux = boundary_flux(k, s, x)?;
            Ok(FluxRow {
                s,
                flux,
                shape_sharp: (-l2 / (50.0 * s)).exp() / l2,
                shape_coarse: l2 / (s * s) * (-l2 / (1000.0 * s)).exp(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    if rows.iter().any(|r| !r.flux.is_finite()) {
        return Err(Error::NoConvergence {
            what: "flux not finite".into(),
            residual: f64::NAN,
        });
    }
    let c_sharp = rows
        .iter()
        .map(|r| r.flux / r.shape_sharp)
        .fold(0.0, f64::max);
    let c_coarse = rows
        .iter()
        .map(|r| r.flux / r.shape_coarse)
        .fold(0.0, f64::max);
    let fit: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| r.s <= l2 / 16.0 && r.flux > 0.0)
        .map(|r| (1.0 / r.s, r.flux.ln()))
        .collect();
    if fit.len() < 2 {
        return invalid("too few short-time samples for the slope fit");
    }
    let n = fit.len() as f64;
    let mx = fit.iter().map(|p| p.0).sum::<f64>() / n;
    let my = fit.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = fit.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = fit.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Ok(FluxReport {
        l: k.l,
        x,
        rows,
        c_sharp,
        c_coarse,
        log_slope: sxy / sxx,
        slope_reference: -l2 / 50.0,
    })
}

/// Panel counts for the representation formula.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormulaQuadrature {
    pub space_panels: usize,
    pub time_panels: usize,
    pub order: usize,
}

impl Default for FormulaQuadrature {
    fn default() -> Self {
        FormulaQuadrature {
            space_panels: 32,
            time_panels: 64,
            order: 6,
        }
    }
}

/// u(x, t) = ∫ K_{t−t0}(x, y)u0(y) dy − ∫_{t0}^t ∫_{∂Ω} ∂_{ν_y}K_{t−τ}(x, y) g(y, τ) dy dτ.
pub fn representation_formula(
    k: &ImageKernel,
    t0: f64,
    u0: &(dyn Fn([f64; 2]) -> f64 + Sync),
    g: &(dyn Fn([f64; 2], f64) -> f64 + Sync),
    x: [f64; 2],
    t: f64,
    quad: FormulaQuadrature,
) -> Result<f64> {
    k.check(t - t0, &[x])?;
    let q = Composite::new(-k.l, k.l, quad.space_panels, quad.order);
    let initial: f64 = (0..q.len())
        .into_par_iter()
        .map(|i| {
            let y0 = q.nodes[i];
            q.weights[i]
                * q.nodes
                    .iter()
                    .zip(&q.weights)
                    .map(|(&y1, &w)| w * k.value(t - t0, x, [y0, y1]) * u0([y0, y1]))
                    .sum::<f64>()
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    let qt = Composite::new(t0, t, quad.time_panels, quad.order);
    let boundary: f64 = (0..qt.len())
        .into_par_iter()
        .map(|i| {
            let tau = qt.nodes[i];
            let s = t - tau;
            let inner: f64 = SIDES
                .iter()
                .map(|&side| {
                    q.integrate(|u| {
                        let y = side.point(k.l, u);
                        k.normal_raw(s, x, y, side) * g(y, tau)
                    })
                })
                .sum();
            qt.weights[i] * inner
        })
        .collect::<Vec<f64>>()
        .iter()
        .sum();
    Ok(initial - boundary)
}

/// A scalar field sampled on the square grid `axis × axis` at each time;
/// values are row-major in (z1, z2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledField {
    pub axis: Axis,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

/// Cubic Lagrange interpolation on the four nodes nearest to x.
fn lagrange4(xs: &[f64], ys: impl Fn(usize) -> f64, x: f64) -> f64 {
    let n = xs.len();
    let i = xs.partition_point(|&v| v <= x).saturating_sub(1).min(n - 2);
    let lo = i.saturating_sub(1).min(n.saturating_sub(4));
    let hi = (lo + 4).min(n);
    let mut s = 0.0;
    for a in lo..hi {
        let mut w = 1.0;
        for b in lo..hi {
            if b != a {
                w *= (x - xs[b]) / (xs[a] - xs[b]);
            }
        }
        s += w * ys(a);
    }
    s
}

impl SampledField {
    fn validate(&self) -> Result<()> {
        let n = self.axis.n;
        if self.axis.periodic || n < 4 {
            return Err(Error::GridMismatch(
                "need a non-periodic axis with at least 4 nodes".into(),
            ));
        }
        if self.times.len() < 2
            || self.times.len() != self.values.len()
            || self.values.iter().any(|v| v.len() != n * n)
        {
            return Err(Error::GridMismatch(
                "one n×n slice per time required".into(),
            ));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::GridMismatch("times must increase".into()));
        }
        Ok(())
    }

    fn spatial(&self, slice: usize, y: [f64; 2]) -> f64 {
        let zs = self.axis.coords();
        let n = self.axis.n;
        let v = &self.values[slice];
        lagrange4(&zs, |i| lagrange4(&zs, |j| v[i * n + j], y[1]), y[0])
    }

    pub fn eval(&self, y: [f64; 2], t: f64) -> f64 {
        lagrange4(&self.times, |s| self.spatial(s, y), t)
    }
}

/// Representation formula driven by sampled data: the first slice is the
/// initial condition, the boundary nodes of all slices the Dirichlet data.
pub fn boundary_solution_formula(
    k: &ImageKernel,
    data: &SampledField,
    x: [f64; 2],
    t: f64,
) -> Result<f64> {
    data.validate()?;
    let tol = 1e-12 * k.l;
    if (data.axis.min + k.l).abs() > tol || (data.axis.max - k.l).abs() > tol {
        return Err(Error::GridMismatch(format!(
            "data axis [{}, {}] does not span Ω_{}",
            data.axis.min, data.axis.max, k.l
        )));
    }
    let (t0, t1) = (data.times[0], *data.times.last().expect("non-empty"));
    if !(t > t0 && t <= t1 + 1e-12 * t1.abs().max(1.0)) {
        return Err(Error::GridMismatch(format!(
            "target time {t} outside ({t0}, {t1}]"
        )));
    }
    let cells = data.axis.n - 1;
    let intervals = data
        .times
        .iter()
        .filter(|&&s| s > t0 && s <= t)
        .count()
        .max(1);
    let quad = FormulaQuadrature {
        space_panels: cells * 2,
        time_panels: intervals * 8,
        order: 6,
    };
    let u0 = |y: [f64; 2]| data.spatial(0, y);
    let g = |y: [f64; 2], tau: f64| data.eval(y, tau);
    representation_formula(k, t0, &u0, &g, x, t, quad)
}
