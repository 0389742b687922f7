use std::f64::consts::PI;

use nalgebra::{Matrix3, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{Axis, PatchKind, SurfacePatch};

/// Gaussian mass allowed outside the sampled region.
pub const TAIL_TOL: f64 = 1e-6;

/// Quadrature nodes and area weights of an n-dimensional surface in R^4.
#[derive(Clone, Debug)]
pub struct WeightedSurface {
    pub dim: usize,
    pub points: Vec<Vector4<f64>>,
    pub weights: Vec<f64>,
    /// Nodes on the clipping edge; empty for closed surfaces.
    pub boundary: Vec<Vector4<f64>>,
}

/// 1-d rule on a grid axis: trapezoid when periodic, Simpson for odd counts, trapezoid otherwise.
fn axis_weights(ax: &Axis) -> Vec<f64> {
    let h = ax.step();
    let n = ax.n;
    if ax.periodic {
        return vec![h; n];
    }
    if n >= 3 && n % 2 == 1 {
        (0..n)
            .map(|i| {
                let c = if i == 0 || i == n - 1 {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                c * h / 3.0
            })
            .collect()
    } else {
        (0..n)
            .map(|i| if i == 0 || i == n - 1 { 0.5 * h } else { h })
            .collect()
    }
}

/// Second-order derivative of node samples along one axis.
fn grid_derivative(values: &dyn Fn(isize) -> Option<f64>, i: usize, ax: &Axis) -> f64 {
    let h = ax.step();
    let i = i as isize;
    match (values(i - 1), values(i + 1)) {
        (Some(a), Some(b)) => (b - a) / (2.0 * h),
        (None, Some(b)) => {
            let c = values(i + 2).expect("axis has at least three nodes");
            (-3.0 * values(i).unwrap() + 4.0 * b - c) / (2.0 * h)
        }
        (Some(a), None) => {
            let c = values(i - 2).expect("axis has at least three nodes");
            (3.0 * values(i).unwrap() - 4.0 * a + c) / (2.0 * h)
        }
        (None, None) => 0.0,
    }
}

impl WeightedSurface {
    /// Area-weighted nodes of a 3-d patch.
    ///
    /// Tangents combine the analytic embedding derivative (by a tiny central
    /// difference) with grid derivatives of the samples. Edge faces whose area
    /// element vanishes (poles, axes of revolution) are not treated as clipping
    /// boundary.
    pub fn from_patch(patch: &SurfacePatch) -> Result<Self> {
        let [n0, n1, n2] = patch.dims();
        if (0..3).any(|a| !patch.grid[a].periodic && patch.grid[a].n < 3) {
            return invalid("every non-periodic axis needs at least three nodes");
        }
        let w: Vec<Vec<f64>> = patch.grid.iter().map(axis_weights).collect();
        let delta = 1e-6;
        let mut points = Vec::with_capacity(patch.len());
        let mut weights = Vec::with_capacity(patch.len());
        let mut jac = Vec::with_capacity(patch.len());
        for i in 0..n0 {
            for j in 0..n1 {
                for k in 0..n2 {
                    let idx = [i, j, k];
                    let u = patch.param([i as isize, j as isize, k as isize]);
                    let s = patch.sample(idx);
                    let ds = patch.embed(u, s + delta) - patch.embed(u, s - delta);
                    let ds = ds / (2.0 * delta);
                    let mut tangents = [Vector4::zeros(); 3];
                    for (a, t) in tangents.iter_mut().enumerate() {
                        let mut up = u;
                        let mut um = u;
                        up[a] += delta;
                        um[a] -= delta;
                        let de = (patch.embed(up, s) - patch.embed(um, s)) / (2.0 * delta);
                        let sample_at = |m: isize| {
                            let mut q = [i as isize, j as isize, k as isize];
                            q[a] = m;
                            patch.sample_wrapped(q)
                        };
                        let dsa = grid_derivative(&sample_at, idx[a], &patch.grid[a]);
                        *t = de + ds * dsa;
                    }
                    let g = Matrix3::from_fn(|r, c| tangents[r].dot(&tangents[c]));
                    let area = g.determinant().max(0.0).sqrt();
                    points.push(patch.embed(u, s));
                    jac.push(area);
                    weights.push(area * w[0][i] * w[1][j] * w[2][k]);
                }
            }
        }
        let mean_area = jac.iter().sum::<f64>() / jac.len() as f64;
        let mut boundary = Vec::new();
        for a in 0..3 {
            if patch.grid[a].periodic {
                continue;
            }
            for end in [0, patch.grid[a].n - 1] {
                let face: Vec<usize> = (0..points.len())
                    .filter(|&l| patch.unlinear(l)[a] == end)
                    .collect();
                let face_area = face.iter().map(|&l| jac[l]).sum::<f64>() / face.len() as f64;
                if face_area > 1e-8 * mean_area {
                    boundary.extend(face.iter().map(|&l| points[l]));
                }
            }
        }
        Ok(WeightedSurface {
            dim: 3,
            points,
            weights,
            boundary,
        })
    }

    /// Area-weighted nodes of a 2-d parametrized surface over a tensor grid.
    pub fn from_param2(u: Axis, v: Axis, f: impl Fn(f64, f64) -> Vector4<f64>) -> Result<Self> {
        if (!u.periodic && u.n < 3) || (!v.periodic && v.n < 3) {
            return invalid("every non-periodic axis needs at least three nodes");
        }
        let (wu, wv) = (axis_weights(&u), axis_weights(&v));
        let delta = 1e-6;
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let mut boundary = Vec::new();
        for i in 0..u.n {
            for j in 0..v.n {
                let (a, b) = (u.coord(i as isize), v.coord(j as isize));
                let tu = (f(a + delta, b) - f(a - delta, b)) / (2.0 * delta);
                let tv = (f(a, b + delta) - f(a, b - delta)) / (2.0 * delta);
                let g = tu.norm_squared() * tv.norm_squared() - tu.dot(&tv).powi(2);
                let area = g.max(0.0).sqrt();
                let p = f(a, b);
                let on_edge = (!u.periodic && (i == 0 || i == u.n - 1))
                    || (!v.periodic && (j == 0 || j == v.n - 1));
                if on_edge && area > 1e-12 {
                    boundary.push(p);
                }
                points.push(p);
                weights.push(area * wu[i] * wv[j]);
            }
        }
        Ok(WeightedSurface {
            dim: 2,
            points,
            weights,
            boundary,
        })
    }

    pub fn area(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn centroid(&self) -> Vector4<f64> {
        let a = self.area();
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(p, w)| p * *w)
            .sum::<Vector4<f64>>()
            / a
    }

    /// Gaussian mass that may lie beyond the clipping edge, as seen from `(x0, t0)`.
    ///
    /// With ρ the distance from x0 to the edge, the surface is assumed to have
    /// at most its observed volume ratio V inside B_ρ, giving the bound
    /// `V · e^{−s²/2} (1 + s)^{n−1}`, `s = ρ/√(2 t0)`.
    pub fn tail_estimate(&self, x0: &Vector4<f64>, t0: f64) -> (f64, f64, f64) {
        if self.boundary.is_empty() {
            return (0.0, f64::INFINITY, 1.0);
        }
        let rho = self
            .boundary
            .iter()
            .map(|p| (p - x0).norm())
            .fold(f64::INFINITY, f64::min);
        let inside: f64 = self
            .points
            .iter()
            .zip(&self.weights)
            .filter(|(p, _)| (*p - x0).norm() <= rho)
            .map(|(_, w)| w)
            .sum();
        let v = (inside / (unit_ball_volume(self.dim) * rho.powi(self.dim as i32))).max(1.0);
        (tail_bound(self.dim, v, rho, t0), rho, v)
    }
}

fn tail_bound(dim: usize, v: f64, rho: f64, t0: f64) -> f64 {
    let s = rho / (2.0 * t0).sqrt();
    v * (-0.5 * s * s).exp() * (1.0 + s).powi(dim as i32 - 1)
}

fn unit_ball_volume(n: usize) -> f64 {
    match n {
        1 => 2.0,
        2 => PI,
        3 => 4.0 * PI / 3.0,
        _ => PI * PI / 2.0,
    }
}

/// Gaussian-weighted area `∫ (4π t0)^{−n/2} e^{−|x−x0|²/(4 t0)} dμ`.
#[allow(non_snake_case)]
pub fn entropy_F(surface: &WeightedSurface, x0: &Vector4<f64>, t0: f64) -> Result<f64> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return invalid("t0 must be positive");
    }
    let (tail, rho, v) = surface.tail_estimate(x0, t0);
    if tail > TAIL_TOL {
        let mut lo = rho;
        let mut hi = rho.max(1.0);
        while tail_bound(surface.dim, v, hi, t0) > TAIL_TOL {
            hi *= 2.0;
        }
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if tail_bound(surface.dim, v, mid, t0) > TAIL_TOL {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        return Err(Error::TailBound {
            required_radius: hi,
        });
    }
    let norm = (4.0 * PI * t0).powf(-(surface.dim as f64) / 2.0);
    let inv = 1.0 / (4.0 * t0);
    let sum: f64 = surface
        .points
        .iter()
        .zip(&surface.weights)
        .map(|(p, w)| w * (-(p - x0).norm_squared() * inv).exp())
        .sum();
    Ok(norm * sum)
}

/// Search box for the supremum over `(x0, log t0)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SupSearch {
    pub center: [f64; 4],
    /// Half-width of the cube of centers.
    pub radius: f64,
    /// Odd, so the center is a grid node.
    pub points_per_axis: usize,
    pub log_t: (f64, f64),
    pub t_points: usize,
    pub refine_rounds: usize,
    /// Values within this relative amount count as ties, resolved toward the
    /// box center and log t0 = 0; symmetric directions then report the center.
    pub tie_tol: f64,
}

impl SupSearch {
    /// Box of half-width `2 · d2` around the centroid, `log t0 ∈ [−4, 4]`.
    pub fn around(surface: &WeightedSurface, d2: f64) -> Self {
        let c = surface.centroid();
        SupSearch {
            center: [c[0], c[1], c[2], c[3]],
            radius: 2.0 * d2,
            points_per_axis: 5,
            log_t: (-4.0, 4.0),
            t_points: 17,
            refine_rounds: 2,
            tie_tol: 1e-9,
        }
    }

    pub fn x_step(&self) -> f64 {
        2.0 * self.radius / (self.points_per_axis - 1).max(1) as f64
    }

    pub fn log_t_step(&self) -> f64 {
        (self.log_t.1 - self.log_t.0) / (self.t_points - 1).max(1) as f64
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SupRecord {
    pub evaluations: usize,
    /// Grid points skipped because the tail could not be certified.
    pub excluded: usize,
    pub coarse_best: ([f64; 4], f64, f64),
    pub x_step: f64,
    pub log_t_step: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EntropyEvaluation {
    pub x0: [f64; 4],
    pub t0: f64,
    pub value: f64,
    pub record: SupRecord,
}

/// Coarse grid over the box, then cyclic golden-section refinement per coordinate.
pub fn entropy_sup(surface: &WeightedSurface, search: &SupSearch) -> Result<EntropyEvaluation> {
    if search.points_per_axis == 0 || search.t_points < 2 || search.radius < 0.0 {
        return invalid("empty search box");
    }
    let px = search.points_per_axis;
    let (hx, ht) = (search.x_step(), search.log_t_step());
    let offset = |i: usize| {
        if px == 1 {
            0.0
        } else {
            -search.radius + i as f64 * hx
        }
    };
    let total = px.pow(4) * search.t_points;
    let eval = |z: &[f64; 5]| -> Result<Option<f64>> {
        let x0 = Vector4::new(z[0], z[1], z[2], z[3]);
        match entropy_F(surface, &x0, z[4].exp()) {
            Ok(v) => Ok(Some(v)),
            Err(Error::TailBound { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    };
    let coarse: Vec<(usize, Option<f64>)> = (0..total)
        .into_par_iter()
        .map(|l| {
            let z = grid_point(l, px, search, &offset);
            eval(&z).map(|v| (l, v))
        })
        .collect::<Result<_>>()?;
    let excluded = coarse.iter().filter(|c| c.1.is_none()).count();
    let top = coarse
        .iter()
        .filter_map(|c| c.1)
        .fold(f64::NEG_INFINITY, f64::max);
    if top == f64::NEG_INFINITY {
        let c = Vector4::from(search.center);
        return Err(entropy_F(surface, &c, search.log_t.0.exp())
            .err()
            .unwrap_or(Error::Assumption("no admissible point".into())));
    }
    let off_center = |z: &[f64; 5]| -> f64 {
        let dx: f64 = (0..4)
            .map(|d| ((z[d] - search.center[d]) / hx.max(f64::MIN_POSITIVE)).powi(2))
            .sum();
        dx + (z[4] / ht).powi(2)
    };
    let (best_l, best_v) = coarse
        .iter()
        .filter_map(|(l, v)| {
            v.filter(|v| *v >= top * (1.0 - search.tie_tol))
                .map(|v| (*l, v))
        })
        .min_by(|a, b| {
            let (za, zb) = (
                grid_point(a.0, px, search, &offset),
                grid_point(b.0, px, search, &offset),
            );
            off_center(&za)
                .total_cmp(&off_center(&zb))
                .then(a.0.cmp(&b.0))
        })
        .expect("top value is attained");
    let mut z = grid_point(best_l, px, search, &offset);
    let coarse_best = ([z[0], z[1], z[2], z[3]], z[4].exp(), best_v);
    let mut value = best_v;
    let mut evaluations = total;
    for _ in 0..search.refine_rounds {
        for c in 0..5 {
            let half = if c < 4 { hx } else { ht };
            if half == 0.0 {
                continue;
            }
            let f = |x: f64| -> Result<f64> {
                let mut q = z;
                q[c] = x;
                Ok(eval(&q)?.unwrap_or(f64::NEG_INFINITY))
            };
            let (x, v, n) = golden_max(f, z[c] - half, z[c] + half, 1e-6 * half.max(1e-3))?;
            evaluations += n;
            if v > value * (1.0 + search.tie_tol) {
                value = v;
                z[c] = x;
            }
        }
    }
    Ok(EntropyEvaluation {
        x0: [z[0], z[1], z[2], z[3]],
        t0: z[4].exp(),
        value,
        record: SupRecord {
            evaluations,
            excluded,
            coarse_best,
            x_step: hx,
            log_t_step: ht,
        },
    })
}

fn grid_point(l: usize, px: usize, s: &SupSearch, offset: &dyn Fn(usize) -> f64) -> [f64; 5] {
    let it = l % s.t_points;
    let mut rest = l / s.t_points;
    let mut z = [0.0; 5];
    for (d, zd) in z.iter_mut().take(4).enumerate() {
        *zd = s.center[d] + offset(rest % px);
        rest /= px;
    }
    z[4] = s.log_t.0 + it as f64 * s.log_t_step();
    z
}

/// Golden-section maximization on `[a, b]`; returns `(argmax, max, evaluations)`.
fn golden_max(
    f: impl Fn(f64) -> Result<f64>,
    mut a: f64,
    mut b: f64,
    tol: f64,
) -> Result<(f64, f64, usize)> {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c)?, f(d)?);
    let mut n = 2;
    while (b - a).abs() > tol && n < 200 {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d)?;
        }
        n += 1;
    }
    Ok(if fc >= fd { (c, fc, n) } else { (d, fd, n) })
}

/// Closed-form entropy of the round shrinker S^k of radius √(2k).
pub fn sphere_entropy(k: usize) -> f64 {
    let kf = k as f64;
    let area = 2.0 * PI.powf((kf + 1.0) / 2.0) / gamma_half(k + 1);
    (4.0 * PI).powf(-kf / 2.0) * area * (2.0 * kf).powf(kf / 2.0) * (-kf / 2.0).exp()
}

/// Γ(m/2) for positive integers m.
fn gamma_half(m: usize) -> f64 {
    match m {
        1 => PI.sqrt(),
        2 => 1.0,
        _ => (m as f64 / 2.0 - 1.0) * gamma_half(m - 2),
    }
}

/// Clipped shrinking cylinder S^k_{√(2k)} × R^{3−k} in R^4 for k = 1, 2.
///
/// `clip` is the half-width of the flat factor; `n_round` nodes cover each
/// angular direction, `n_flat` (odd) each flat one.
pub fn shrinker_cylinder(
    k: usize,
    clip: f64,
    n_round: usize,
    n_flat: usize,
) -> Result<SurfacePatch> {
    match k {
        1 => SurfacePatch::from_fn(
            PatchKind::PolarGraph,
            [
                Axis::angle(n_round),
                Axis::new(-clip, clip, n_flat),
                Axis::new(-clip, clip, n_flat),
            ],
            |_| 2f64.sqrt(),
        ),
        2 => SurfacePatch::from_fn(
            PatchKind::SphericalGraph,
            [
                Axis::new(0.0, PI, n_round / 2 + 1),
                Axis::angle(n_round),
                Axis::new(-clip, clip, n_flat),
            ],
            |_| 2.0,
        ),
        _ => invalid(format!("k = {k} has no patch model (1 or 2)")),
    }
}
