//! Linearized flow on the shrinking cylinder S¹_{√(−2t)} × R².
//!
//! u(θ, z1, z2, t) solves
//!     ∂_t u = ∂²_{z1} u + ∂²_{z2} u + (∂²_θ u + u)/(−2t)
//! on Ω_l = [−l, l]² with Dirichlet data on the parabolic boundary. θ is
//! handled spectrally (the coefficients do not depend on θ, so Fourier modes
//! decouple exactly); z by the 5-point Laplacian; t by backward Euler with
//! the 1/(−2t) coefficient frozen at the step midpoint. Each mode's implicit
//! solve is diagonalized by the type-I discrete sine transform.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::curvature::normal_of;
use crate::geom::{Axis, PatchKind, SurfacePatch};
use crate::rotation::field::{j, RotationField};

pub const DEFAULT_MAX_MODE: usize = 16;

/// Samples u(θ, z1, z2) per stored time; θ is periodic with `ntheta` nodes,
/// z1 and z2 share `z`. Node order is (θ, z1, z2), row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolarField {
    pub ntheta: usize,
    pub z: Axis,
    pub times: Vec<f64>,
    pub values: Vec<Vec<f64>>,
}

impl PolarField {
    pub fn from_fn(
        ntheta: usize,
        z: Axis,
        times: Vec<f64>,
        f: impl Fn(f64, f64, f64, f64) -> f64,
    ) -> Result<Self> {
        if ntheta < 4 || z.n < 4 {
            return invalid("polar field needs at least 4 nodes per direction");
        }
        let zs = z.coords();
        let values = times
            .iter()
            .map(|&t| {
                let mut v = Vec::with_capacity(ntheta * z.n * z.n);
                for k in 0..ntheta {
                    let th = TAU * k as f64 / ntheta as f64;
                    for &z1 in &zs {
                        for &z2 in &zs {
                            v.push(f(th, z1, z2, t));
                        }
                    }
                }
                v
            })
            .collect::<Vec<_>>();
        if values.iter().flatten().any(|x| !x.is_finite()) {
            return invalid("polar field samples must be finite");
        }
        Ok(PolarField {
            ntheta,
            z,
            times,
            values,
        })
    }

    pub fn at(&self, slice: usize, theta: usize, i1: usize, i2: usize) -> f64 {
        let n = self.z.n;
        // Wraparound in θ.
        self.values[slice][((theta % self.ntheta) * n + i1) * n + i2]
    }
}

/// Fourier coefficients per (slice, mode, z-node):
/// ũ_m = (1/π)∫u cos mθ dθ, ṽ_m = (1/π)∫u sin mθ dθ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeSpectrum {
    pub max_mode: usize,
    pub z: Axis,
    pub times: Vec<f64>,
    pub cos: Vec<Vec<Vec<f64>>>,
    pub sin: Vec<Vec<Vec<f64>>>,
    /// Set when modes above 3M/4 carry more than 1% of the energy.
    pub aliasing_warning: bool,
}

impl ModeSpectrum {
    pub fn nodes(&self) -> usize {
        self.z.n * self.z.n
    }

    /// Value at θ from the stored modes.
    pub fn value(&self, slice: usize, node: usize, theta: f64) -> f64 {
        let mut v = 0.5 * self.cos[slice][0][node];
        for m in 1..=self.max_mode {
            let (s, c) = (m as f64 * theta).sin_cos();
            v += self.cos[slice][m][node] * c + self.sin[slice][m][node] * s;
        }
        v
    }

    pub fn synthesize(&self, ntheta: usize) -> Result<PolarField> {
        if ntheta < 2 * self.max_mode + 1 {
            return invalid("too few θ samples to resynthesize every mode");
        }
        let n = self.nodes();
        let values = (0..self.times.len())
            .map(|s| {
                let mut v = vec![0.0; ntheta * n];
                for k in 0..ntheta {
                    let th = TAU * k as f64 / ntheta as f64;
                    for node in 0..n {
                        v[k * n + node] = self.value(s, node, th);
                    }
                }
                v
            })
            .collect();
        Ok(PolarField {
            ntheta,
            z: self.z,
            times: self.times.clone(),
            values,
        })
    }

    /// Σ(ũ_m² + ṽ_m²)/2 + ũ_0²/4, which equals (1/2π)∫u² dθ.
    pub fn energy(&self, slice: usize, node: usize) -> f64 {
        let mut e = 0.25 * self.cos[slice][0][node].powi(2);
        for m in 1..=self.max_mode {
            e += 0.5 * (self.cos[slice][m][node].powi(2) + self.sin[slice][m][node].powi(2));
        }
        e
    }

    /// Σ over z-nodes of the mode-m energy at a slice.
    pub fn mode_energy(&self, slice: usize, m: usize) -> f64 {
        (0..self.nodes())
            .map(|i| self.cos[slice][m][i].powi(2) + self.sin[slice][m][i].powi(2))
            .sum()
    }

    /// Rows (t, m, sup_z |ũ_m|, sup_z |ṽ_m|).
    pub fn history(&self) -> Vec<(f64, usize, f64, f64)> {
        let mut out = Vec::new();
        for (s, &t) in self.times.iter().enumerate() {
            for m in 0..=self.max_mode {
                let a = self.cos[s][m].iter().fold(0.0f64, |x, v| x.max(v.abs()));
                let b = self.sin[s][m].iter().fold(0.0f64, |x, v| x.max(v.abs()));
                out.push((t, m, a, b));
            }
        }
        out
    }
}

/// Trapezoidal Fourier coefficients of periodic samples, m = 0..=max_mode.
fn dft(samples: &[f64], max_mode: usize, tables: &Trig) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len();
    let mut c = vec![0.0; max_mode + 1];
    let mut s = vec![0.0; max_mode + 1];
    for m in 0..=max_mode {
        let (mut a, mut b) = (0.0, 0.0);
        for (k, &u) in samples.iter().enumerate() {
            let idx = (m * k) % n;
            a += u * tables.cos[idx];
            b += u * tables.sin[idx];
        }
        c[m] = 2.0 * a / n as f64;
        s[m] = 2.0 * b / n as f64;
    }
    s[0] = 0.0;
    (c, s)
}

struct Trig {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Trig {
    fn new(n: usize) -> Self {
        let (sin, cos) = (0..n)
            .map(|k| (TAU * k as f64 / n as f64).sin_cos())
            .unzip();
        Trig { cos, sin }
    }
}

pub fn mode_decompose(field: &PolarField, max_mode: usize) -> Result<ModeSpectrum> {
    if field.ntheta < 4 * max_mode.max(1) {
        return invalid(format!(
            "need at least {} θ samples for modes up to {max_mode}",
            4 * max_mode.max(1)
        ));
    }
    let tables = Trig::new(field.ntheta);
    let n = field.z.n * field.z.n;
    let mut cos = Vec::with_capacity(field.times.len());
    let mut sin = Vec::with_capacity(field.times.len());
    for s in 0..field.times.len() {
        let per_node: Vec<(Vec<f64>, Vec<f64>)> = (0..n)
            .into_par_iter()
            .map(|node| {
                let col: Vec<f64> = (0..field.ntheta)
                    .map(|k| field.values[s][k * n + node])
                    .collect();
                dft(&col, max_mode, &tables)
            })
            .collect();
        let mut c = vec![vec![0.0; n]; max_mode + 1];
        let mut sn = vec![vec![0.0; n]; max_mode + 1];
        for (node, (a, b)) in per_node.into_iter().enumerate() {
            for m in 0..=max_mode {
                c[m][node] = a[m];
                sn[m][node] = b[m];
            }
        }
        cos.push(c);
        sin.push(sn);
    }
    let mut spec = ModeSpectrum {
        max_mode,
        z: field.z,
        times: field.times.clone(),
        cos,
        sin,
        aliasing_warning: false,
    };
    let cut = (3 * max_mode) / 4;
    let (mut top, mut total) = (0.0, 0.0);
    for s in 0..spec.times.len() {
        for m in 0..=max_mode {
            let e = spec.mode_energy(s, m) * if m == 0 { 0.5 } else { 1.0 };
            total += e;
            if m > cut {
                top += e;
            }
        }
    }
    spec.aliasing_warning = total > 0.0 && top > 0.01 * total;
    Ok(spec)
}

/// (1/2π)∫u² dθ by the trapezoid rule, per node, for the Parseval check.
pub fn mean_square(field: &PolarField, slice: usize, node: usize) -> f64 {
    let n = field.z.n * field.z.n;
    (0..field.ntheta)
        .map(|k| field.values[slice][k * n + node].powi(2))
        .sum::<f64>()
        / field.ntheta as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveConfig {
    pub ntheta: usize,
    pub nz: usize,
    /// Half-width l of Ω_l = [−l, l]².
    pub half_width: f64,
    /// Output times, strictly increasing, first = initial time t0 < 0, last < 0.
    pub times: Vec<f64>,
    pub max_mode: usize,
    /// Largest allowed step.
    pub max_dt: f64,
    /// Optional cap on Δt/(−t); steps are then uniform in ln(−t).
    pub rel_dt: Option<f64>,
    /// Combine runs at Δt and Δt/2 as 2·fine − coarse.
    pub richardson: bool,
}

impl EvolveConfig {
    /// Δt ≤ min(0.01, h²), uniform stepping.
    pub fn uniform(
        ntheta: usize,
        nz: usize,
        half_width: f64,
        times: Vec<f64>,
        max_mode: usize,
    ) -> Self {
        let h = 2.0 * half_width / (nz as f64 - 1.0);
        EvolveConfig {
            ntheta,
            nz,
            half_width,
            times,
            max_mode,
            max_dt: 0.01f64.min(h * h),
            rel_dt: None,
            richardson: false,
        }
    }

    pub fn z_axis(&self) -> Axis {
        Axis::new(-self.half_width, self.half_width, self.nz)
    }

    fn validate(&self) -> Result<()> {
        if self.nz < 4 || self.ntheta < 4 * self.max_mode.max(1) {
            return invalid("grid too small (nz ≥ 4, ntheta ≥ 4·max_mode)");
        }
        if !(self.half_width > 0.0 && self.max_dt > 0.0) {
            return invalid("half-width and max_dt must be positive");
        }
        if self.times.len() < 2 || self.times.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("output times must be strictly increasing, at least two");
        }
        if *self.times.last().unwrap() >= 0.0 {
            return invalid("the cylinder vanishes at t = 0; end before it");
        }
        if let Some(r) = self.rel_dt {
            if !(r > 0.0) {
                return invalid("rel_dt must be positive");
            }
        }
        Ok(())
    }

    fn substeps(&self, a: f64, b: f64, refine: usize) -> Vec<f64> {
        let mut n = ((b - a) / self.max_dt).ceil().max(1.0) as usize;
        let log = self.rel_dt.is_some();
        if let Some(r) = self.rel_dt {
            let span = ((-a) / (-b)).ln();
            n = n.max((span / r).ceil() as usize);
            // Uniform in ln(−t): the first step is the longest.
            n = n.max(((-a) * (1.0 - (-span / n as f64).exp()) / self.max_dt).ceil() as usize);
        }
        let n = n * refine;
        (0..=n)
            .map(|k| {
                let f = k as f64 / n as f64;
                if k == n {
                    b
                } else if log {
                    -((-a).ln() + f * ((-b).ln() - (-a).ln())).exp()
                } else {
                    a + f * (b - a)
                }
            })
            .collect()
    }
}

/// DST-I diagonalization of the Dirichlet 5-point Laplacian on N×N interior nodes.
struct Dirichlet {
    n: usize,
    h: f64,
    s: DMatrix<f64>,
    lambda: Vec<f64>,
}

impl Dirichlet {
    fn new(nz: usize, h: f64) -> Self {
        let n = nz - 2;
        let norm = (2.0 / (n as f64 + 1.0)).sqrt();
        let s = DMatrix::from_fn(n, n, |a, b| {
            norm * (PI * ((a + 1) * (b + 1)) as f64 / (n as f64 + 1.0)).sin()
        });
        let lambda = (1..=n)
            .map(|k| 4.0 / (h * h) * (PI * k as f64 / (2.0 * (n as f64 + 1.0))).sin().powi(2))
            .collect();
        Dirichlet { n, h, s, lambda }
    }

    /// Solves (1/Δt − Δ_h − c)v = rhs/Δt + boundary terms for the interior.
    /// `full` holds the current field on all nz² nodes, boundary values
    /// already at the new time; its interior is overwritten.
    fn step(&self, full: &mut [f64], dt: f64, c: f64) {
        let n = self.n;
        let nz = n + 2;
        let ih2 = 1.0 / (self.h * self.h);
        let mut r = DMatrix::from_fn(n, n, |a, b| full[(a + 1) * nz + (b + 1)] / dt);
        for a in 0..n {
            r[(a, 0)] += ih2 * full[(a + 1) * nz];
            r[(a, n - 1)] += ih2 * full[(a + 1) * nz + nz - 1];
            r[(0, a)] += ih2 * full[a + 1];
            r[(n - 1, a)] += ih2 * full[(nz - 1) * nz + a + 1];
        }
        let mut hat = &self.s * r * &self.s;
        for a in 0..n {
            for b in 0..n {
                hat[(a, b)] /= 1.0 / dt + self.lambda[a] + self.lambda[b] - c;
            }
        }
        let v = &self.s * hat * &self.s;
        for a in 0..n {
            for b in 0..n {
                full[(a + 1) * nz + (b + 1)] = v[(a, b)];
            }
        }
    }
}

fn is_boundary(i1: usize, i2: usize, nz: usize) -> bool {
    i1 == 0 || i2 == 0 || i1 + 1 == nz || i2 + 1 == nz
}

type Data<'a> = &'a (dyn Fn(f64, f64, f64, f64) -> f64 + Sync);

/// Cosine and sine coefficient rows of one node.
type CosSin = (Vec<f64>, Vec<f64>);

/// Boundary-node mode coefficients at time t: (cos[m][node], sin[m][node]),
/// nonzero only on boundary nodes.
fn boundary_modes(
    cfg: &EvolveConfig,
    data: Data,
    t: f64,
    all_nodes: bool,
    tables: &Trig,
) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let nz = cfg.nz;
    let zs = cfg.z_axis().coords();
    let nodes: Vec<usize> = (0..nz * nz)
        .filter(|&l| all_nodes || is_boundary(l / nz, l % nz, nz))
        .collect();
    let coeffs: Vec<(usize, CosSin)> = nodes
        .par_iter()
        .map(|&l| {
            let (z1, z2) = (zs[l / nz], zs[l % nz]);
            let col: Vec<f64> = (0..cfg.ntheta)
                .map(|k| data(TAU * k as f64 / cfg.ntheta as f64, z1, z2, t))
                .collect();
            (l, dft(&col, cfg.max_mode, tables))
        })
        .collect();
    let mut c = vec![vec![0.0; nz * nz]; cfg.max_mode + 1];
    let mut s = vec![vec![0.0; nz * nz]; cfg.max_mode + 1];
    for (l, (a, b)) in coeffs {
        for m in 0..=cfg.max_mode {
            c[m][l] = a[m];
            s[m][l] = b[m];
        }
    }
    (c, s)
}

fn run(cfg: &EvolveConfig, data: Data, refine: usize) -> Result<ModeSpectrum> {
    let tables = Trig::new(cfg.ntheta);
    let nz = cfg.nz;
    let z = cfg.z_axis();
    let solver = Dirichlet::new(nz, z.step());
    let t0 = cfg.times[0];
    let (mut cos, mut sin) = boundary_modes(cfg, data, t0, true, &tables);
    let mut out_c = vec![cos.clone()];
    let mut out_s = vec![sin.clone()];
    let weight0 = (-t0).sqrt();
    let mut bound = sup_all(&cos, &sin) * weight0;
    for w in cfg.times.windows(2) {
        let steps = cfg.substeps(w[0], w[1], refine);
        for st in steps.windows(2) {
            let (ta, tb) = (st[0], st[1]);
            let dt = tb - ta;
            let tmid = 0.5 * (ta + tb);
            let (bc, bs) = boundary_modes(cfg, data, tb, false, &tables);
            let fields: Vec<(usize, bool)> = (0..=cfg.max_mode)
                .flat_map(|m| [(m, false), (m, true)])
                .filter(|&(m, s)| !(m == 0 && s))
                .collect();
            let updated: Vec<Vec<f64>> = fields
                .par_iter()
                .map(|&(m, is_sin)| {
                    let mut f = if is_sin {
                        sin[m].clone()
                    } else {
                        cos[m].clone()
                    };
                    let b = if is_sin { &bs[m] } else { &bc[m] };
                    for l in 0..nz * nz {
                        if is_boundary(l / nz, l % nz, nz) {
                            f[l] = b[l];
                        }
                    }
                    let c = (1.0 - (m * m) as f64) / (-2.0 * tmid);
                    solver.step(&mut f, dt, c);
                    f
                })
                .collect();
            for (&(m, is_sin), f) in fields.iter().zip(updated) {
                if is_sin {
                    sin[m] = f;
                } else {
                    cos[m] = f;
                }
            }
            // The weighted field u·(−t)^{1/2} obeys a pure diffusion; growth
            // far past its boundary sup signals instability.
            let boundary_sup = sup_boundary(&bc, &bs, nz) * (-tb).sqrt();
            bound = bound.max(boundary_sup);
            let now = sup_all(&cos, &sin) * (-tb).sqrt();
            if !now.is_finite() || now > 10.0 * bound + 1e-300 {
                return Err(Error::Unstable(format!(
                    "weighted sup {now:.3e} exceeds 10× data sup {bound:.3e} at t = {tb}"
                )));
            }
        }
        out_c.push(cos.clone());
        out_s.push(sin.clone());
    }
    Ok(ModeSpectrum {
        max_mode: cfg.max_mode,
        z,
        times: cfg.times.clone(),
        cos: out_c,
        sin: out_s,
        aliasing_warning: false,
    })
}

fn sup_all(c: &[Vec<f64>], s: &[Vec<f64>]) -> f64 {
    let m = c.len() as f64;
    c.iter()
        .chain(s)
        .flatten()
        .fold(0.0f64, |a, v| a.max(v.abs()))
        * m
}

fn sup_boundary(c: &[Vec<f64>], s: &[Vec<f64>], nz: usize) -> f64 {
    let m = c.len() as f64;
    let mut out = 0.0f64;
    for f in c.iter().chain(s) {
        for (l, v) in f.iter().enumerate() {
            if is_boundary(l / nz, l % nz, nz) {
                out = out.max(v.abs());
            }
        }
    }
    out * m
}

/// Evolves from `data(θ, z1, z2, t0)` with Dirichlet data `data(·, t)` on
/// |z1| = l or |z2| = l, returning the mode spectrum at the output times.
pub fn evolve_cylinder_heat(cfg: &EvolveConfig, data: Data) -> Result<ModeSpectrum> {
    cfg.validate()?;
    if !cfg.richardson {
        return run(cfg, data, 1);
    }
    let coarse = run(cfg, data, 1)?;
    let mut fine = run(cfg, data, 2)?;
    for s in 0..fine.times.len() {
        for m in 0..=cfg.max_mode {
            for l in 0..fine.nodes() {
                fine.cos[s][m][l] = 2.0 * fine.cos[s][m][l] - coarse.cos[s][m][l];
                fine.sin[s][m][l] = 2.0 * fine.sin[s][m][l] - coarse.sin[s][m][l];
            }
        }
    }
    Ok(fine)
}

/// û_m = ũ_m·(−t)^{(1−m²)/2 + shift}; returns the sup over interior z-nodes
/// and interior output times of |∂_t û − Δ_z û| (centered differences),
/// taken over both the cos and sin coefficients.
pub fn rescaled_mode_heat_residual(
    spec: &ModeSpectrum,
    m: usize,
    exponent_shift: f64,
) -> Result<f64> {
    if m > spec.max_mode {
        return invalid("mode beyond the spectrum");
    }
    if spec.times.len() < 3 {
        return invalid("need at least three time slices");
    }
    let nz = spec.z.n;
    let h = spec.z.step();
    let p = (1.0 - (m * m) as f64) / 2.0 + exponent_shift;
    let mut worst = 0.0f64;
    for coeffs in [&spec.cos, &spec.sin] {
        let hat = |s: usize, l: usize| coeffs[s][m][l] * (-spec.times[s]).powf(p);
        for s in 1..spec.times.len() - 1 {
            let dt = spec.times[s + 1] - spec.times[s - 1];
            for i1 in 1..nz - 1 {
                for i2 in 1..nz - 1 {
                    let l = i1 * nz + i2;
                    let ut = (hat(s + 1, l) - hat(s - 1, l)) / dt;
                    let lap = (hat(s, l - nz) + hat(s, l + nz) + hat(s, l - 1) + hat(s, l + 1)
                        - 4.0 * hat(s, l))
                        / (h * h);
                    worst = worst.max((ut - lap).abs());
                }
            }
        }
    }
    Ok(worst)
}

/// ũ_m(t)/ũ_m(t0) for a spatially constant pure mode, at the center node.
pub fn separated_mode_ratio(spec: &ModeSpectrum, m: usize, slice: usize) -> f64 {
    let c = spec.nodes() / 2;
    spec.cos[slice][m][c] / spec.cos[0][m][c]
}

/// ∫₀^{2π} u·√(1 + r⁻²r_θ² + r_{z1}² + r_{z2}²) dθ with u = ⟨K, ν⟩, maximized
/// in absolute value over interior (z1, z2) nodes; the matching plain ∫u dθ
/// is returned alongside.
///
/// θ-derivatives are spectral, z-derivatives centered; the normal is the
/// generalized cross product of the tangents.
pub fn mode_zero_identity(patch: &SurfacePatch, k: &RotationField) -> Result<(f64, f64)> {
    if patch.kind != PatchKind::PolarGraph {
        return invalid("mode-0 identity needs a polar graph");
    }
    let pl = &patch.placement;
    let axis_field = pl.rotation * j() * pl.rotation.transpose();
    let kq_local = pl.rotation.transpose() * (k.q - pl.offset);
    if (k.matrix() - axis_field).abs().max() > 1e-10
        || kq_local[0].hypot(kq_local[1]) > 1e-10 * (1.0 + k.q.norm())
    {
        return Err(Error::Assumption(
            "K must be the rotation field about the graph axis".into(),
        ));
    }
    let [nt, n1, n2] = patch.dims();
    let tables = Trig::new(nt);
    let (h1, h2) = (patch.grid[1].step(), patch.grid[2].step());
    let mut worst = (0.0f64, 0.0f64);
    for i1 in 1..n1 - 1 {
        for i2 in 1..n2 - 1 {
            let r: Vec<f64> = (0..nt).map(|a| patch.sample([a, i1, i2])).collect();
            let r_theta = spectral_derivative(&r, &tables);
            let (mut weighted, mut plain) = (0.0, 0.0);
            for a in 0..nt {
                let th = TAU * a as f64 / nt as f64;
                let (s, c) = th.sin_cos();
                let r1 =
                    (patch.sample([a, i1 + 1, i2]) - patch.sample([a, i1 - 1, i2])) / (2.0 * h1);
                let r2 =
                    (patch.sample([a, i1, i2 + 1]) - patch.sample([a, i1, i2 - 1])) / (2.0 * h2);
                let rot = pl.rotation * pl.scale;
                let t_theta = rot
                    * Vector4::new(
                        r_theta[a] * c - r[a] * s,
                        r_theta[a] * s + r[a] * c,
                        0.0,
                        0.0,
                    );
                let t1 = rot * Vector4::new(r1 * c, r1 * s, 1.0, 0.0);
                let t2 = rot * Vector4::new(r2 * c, r2 * s, 0.0, 1.0);
                let mut nu =
                    normal_of(&[t_theta, t1, t2]).ok_or(Error::DegenerateMetric([a, i1, i2]))?;
                if nu.dot(&patch.inward_hint([th, 0.0, 0.0])) < 0.0 {
                    nu = -nu;
                }
                let x = patch.point([a, i1, i2]);
                let u = k.eval(&x).dot(&nu);
                let w = (1.0 + (r_theta[a] / r[a]).powi(2) + r1 * r1 + r2 * r2).sqrt();
                weighted += u * w;
                plain += u;
            }
            let dth = TAU / nt as f64;
            // Scale-free: divide by the placement scale so K's length unit cancels.
            let norm = dth / pl.scale;
            if (weighted * norm).abs() > worst.0.abs() {
                worst.0 = weighted * norm;
            }
            if (plain * norm).abs() > worst.1.abs() {
                worst.1 = plain * norm;
            }
        }
    }
    Ok((worst.0.abs(), worst.1.abs()))
}

fn spectral_derivative(f: &[f64], tables: &Trig) -> Vec<f64> {
    let n = f.len();
    let top = (n - 1) / 2;
    let (c, s) = dft(f, top, tables);
    (0..n)
        .map(|k| {
            (1..=top)
                .map(|m| {
                    let idx = (m * k) % n;
                    m as f64 * (s[m] * tables.cos[idx] - c[m] * tables.sin[idx])
                })
                .sum()
        })
        .collect()
}

/// Shapes of the parabolic-boundary perturbation for the improvement run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Perturbation {
    None,
    /// a·z1·cos θ everywhere (an exact solution).
    LinearModeOne {
        a: f64,
    },
    /// ε·√(−2t)·cos 2θ on the parabolic boundary, so |u|·H = ε there.
    ModeTwo,
    /// ModeTwo plus a linear m = 1 part and an m = 3 term, each sized by ε.
    Mixed,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ImprovementReport {
    pub l0: f64,
    pub epsilon: f64,
    /// sup |u|·H over the whole computed domain.
    pub epsilon_domain: f64,
    /// sup |u − ψ|·H over the central region after subtracting the fitted
    /// (A0 + A1 z1 + A2 z2) cos θ + (B0 + B1 z1 + B2 z2) sin θ.
    pub epsilon_prime: f64,
    pub ratio: f64,
    pub fit_cos: [f64; 3],
    pub fit_sin: [f64; 3],
    /// Central region P̂(x̄, −1, L_c, L_c²).
    pub central_l: f64,
    pub slices: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImprovementConfig {
    pub nz: usize,
    pub ntheta: usize,
    pub max_mode: usize,
    pub rel_dt: f64,
    pub central_l: f64,
    pub output_slices: usize,
}

impl Default for ImprovementConfig {
    fn default() -> Self {
        ImprovementConfig {
            nz: 49,
            ntheta: 16,
            max_mode: 4,
            rel_dt: 2e-3,
            central_l: 10.0,
            output_slices: 40,
        }
    }
}

/// Domain Ω_{L0} × [−L0², −1]; ε′ measured on P̂(x̄, −1, L_c, L_c²).
pub fn improvement_experiment(
    l0: f64,
    eps: f64,
    pert: Perturbation,
    cfg: &ImprovementConfig,
) -> Result<ImprovementReport> {
    if !(10.0..=200.0).contains(&l0) {
        return invalid("L0 must lie in [10, 200]");
    }
    if !(eps > 0.0 && eps <= 1e-2) {
        return invalid("ε must lie in (0, 0.01]");
    }
    let t0 = -l0 * l0;
    let h_center = 1.0 / 2f64.sqrt();
    let central_radius = cfg.central_l / h_center;
    let central_lo = -1.0 - cfg.central_l * cfg.central_l / (h_center * h_center);
    if central_radius >= l0 || central_lo <= t0 {
        return invalid("central region does not fit inside the domain");
    }
    // Output times: log-spaced on [t0, central_lo], then dense across the central window.
    let mut times: Vec<f64> = (0..=8)
        .map(|k| -((-t0).ln() + k as f64 / 8.0 * ((-central_lo).ln() - (-t0).ln())).exp())
        .collect();
    times.pop();
    let nc = cfg.output_slices.max(2);
    times.extend((0..=nc).map(|k| -((-central_lo).ln() * (1.0 - k as f64 / nc as f64)).exp()));
    let data = move |th: f64, z1: f64, _z2: f64, t: f64| -> f64 {
        let w = (-2.0 * t).sqrt();
        match pert {
            Perturbation::None => 0.0,
            Perturbation::LinearModeOne { a } => a * z1 * th.cos(),
            Perturbation::ModeTwo => eps * w * (2.0 * th).cos(),
            Perturbation::Mixed => {
                eps * w * (0.6 * (2.0 * th).cos() + 0.3 * (3.0 * th).sin())
                    + eps * 0.1 * (1.0 + z1 / l0) * th.cos()
            }
        }
    };
    let ecfg = EvolveConfig {
        ntheta: cfg.ntheta,
        nz: cfg.nz,
        half_width: l0,
        times,
        max_mode: cfg.max_mode,
        max_dt: f64::INFINITY,
        rel_dt: Some(cfg.rel_dt),
        richardson: false,
    };
    let spec = evolve_cylinder_heat(&ecfg, &data)?;
    let nz = cfg.nz;
    let zs = ecfg.z_axis().coords();
    let thetas: Vec<f64> = (0..cfg.ntheta)
        .map(|k| TAU * k as f64 / cfg.ntheta as f64)
        .collect();
    let mut eps_domain = 0.0f64;
    for (s, &t) in spec.times.iter().enumerate() {
        let h = 1.0 / (-2.0 * t).sqrt();
        for l in 0..nz * nz {
            for &th in &thetas {
                eps_domain = eps_domain.max(spec.value(s, l, th).abs() * h);
            }
        }
    }
    let central: Vec<(usize, usize)> = spec
        .times
        .iter()
        .enumerate()
        .filter(|(_, &t)| t >= central_lo - 1e-9)
        .flat_map(|(s, _)| {
            (0..nz * nz)
                .filter(|&l| zs[l / nz].hypot(zs[l % nz]) <= central_radius)
                .map(move |l| (s, l))
                .collect::<Vec<_>>()
        })
        .collect();
    if central.is_empty() {
        return invalid("central region holds no nodes");
    }
    let fit = |coeffs: &Vec<Vec<Vec<f64>>>| -> Result<[f64; 3]> {
        let mut a = DMatrix::zeros(central.len(), 3);
        let mut b = nalgebra::DVector::zeros(central.len());
        for (row, &(s, l)) in central.iter().enumerate() {
            a[(row, 0)] = 1.0;
            a[(row, 1)] = zs[l / nz];
            a[(row, 2)] = zs[l % nz];
            b[row] = coeffs[s][1][l];
        }
        let sol = a
            .svd(true, true)
            .solve(&b, 1e-12)
            .map_err(|e| Error::NoConvergence {
                what: format!("linear mode fit: {e}"),
                residual: f64::NAN,
            })?;
        Ok([sol[0], sol[1], sol[2]])
    };
    let fc = fit(&spec.cos)?;
    let fs = fit(&spec.sin)?;
    let mut eps_prime = 0.0f64;
    let slices: std::collections::BTreeSet<usize> = central.iter().map(|c| c.0).collect();
    for &(s, l) in &central {
        let h = 1.0 / (-2.0 * spec.times[s]).sqrt();
        let (z1, z2) = (zs[l / nz], zs[l % nz]);
        let psi_c = fc[0] + fc[1] * z1 + fc[2] * z2;
        let psi_s = fs[0] + fs[1] * z1 + fs[2] * z2;
        for &th in &thetas {
            let v = spec.value(s, l, th) - psi_c * th.cos() - psi_s * th.sin();
            eps_prime = eps_prime.max(v.abs() * h);
        }
    }
    let ratio = if eps_domain > 0.0 {
        eps_prime / eps_domain
    } else {
        0.0
    };
    Ok(ImprovementReport {
        l0,
        epsilon: eps,
        epsilon_domain: eps_domain,
        epsilon_prime: eps_prime,
        ratio,
        fit_cos: fc,
        fit_sin: fs,
        central_l: cfg.central_l,
        slices: slices.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dst_is_an_involution() {
        let d = Dirichlet::new(9, 0.25);
        let eye = &d.s * &d.s;
        assert!((eye - DMatrix::identity(7, 7)).abs().max() < 1e-14);
    }

    #[test]
    fn decompose_recovers_modes() {
        let f = PolarField::from_fn(32, Axis::new(-1.0, 1.0, 5), vec![0.0], |th, _, _, _| {
            3.0 * th.cos() + 0.5 * (2.0 * th).sin()
        })
        .unwrap();
        let s = mode_decompose(&f, 8).unwrap();
        assert!((s.cos[0][1][0] - 3.0).abs() < 1e-12);
        assert!((s.sin[0][2][0] - 0.5).abs() < 1e-12);
        let c =
            PolarField::from_fn(32, Axis::new(-1.0, 1.0, 5), vec![0.0], |_, _, _, _| 1.5).unwrap();
        let s = mode_decompose(&c, 8).unwrap();
        assert!((s.cos[0][0][3] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_theta_samples_rejected() {
        let f =
            PolarField::from_fn(16, Axis::new(-1.0, 1.0, 5), vec![0.0], |_, _, _, _| 0.0).unwrap();
        assert!(mode_decompose(&f, 8).is_err());
    }
}
