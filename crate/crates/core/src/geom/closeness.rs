//! Normal-graph representation of one patch over another and discrete C^k norms.
//!
//! The model is made continuous by tensor Catmull-Rom interpolation of its
//! samples; nearest points come from damped Gauss-Newton started at the
//! closest grid node.

use nalgebra::{Matrix3, Vector3, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::curvature::normal_of;
use super::patch::SurfacePatch;
use crate::error::{Error, Result};

const PROJ_TOL: f64 = 1e-10;
const PROJ_MAX_ITER: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClosenessReport {
    pub graph_norm_c0: f64,
    pub graph_norm_c1: f64,
    pub graph_norm_c2: f64,
    pub matched: bool,
}

#[derive(Clone, Debug)]
pub struct Projection {
    pub u: [f64; 3],
    pub foot: Vector4<f64>,
    pub distance: f64,
    /// ⟨p − foot, ν⟩ with ν the model's inward normal.
    pub w: f64,
    pub normal: Vector4<f64>,
}

/// Smooth interpolant of a patch's samples.
pub struct ModelSurface<'a> {
    pub patch: &'a SurfacePatch,
}

fn catmull_rom(t: f64) -> [f64; 4] {
    let t2 = t * t;
    let t3 = t2 * t;
    [
        0.5 * (-t3 + 2.0 * t2 - t),
        0.5 * (3.0 * t3 - 5.0 * t2 + 2.0),
        0.5 * (-3.0 * t3 + 4.0 * t2 + t),
        0.5 * (t3 - t2),
    ]
}

impl<'a> ModelSurface<'a> {
    pub fn new(patch: &'a SurfacePatch) -> Self {
        ModelSurface { patch }
    }

    fn stencil(&self, axis: usize, u: f64) -> ([usize; 4], [f64; 4]) {
        let ax = &self.patch.grid[axis];
        let x = (u - ax.min) / ax.step();
        let (i0, t) = if ax.periodic {
            let i = x.floor();
            (i as isize, x - i)
        } else {
            let i = x.floor().clamp(0.0, (ax.n - 2) as f64);
            (i as isize, x - i)
        };
        let w = catmull_rom(t);
        let mut idx = [0usize; 4];
        for (o, slot) in idx.iter_mut().enumerate() {
            let i = i0 + o as isize - 1;
            *slot = if ax.periodic {
                i.rem_euclid(ax.n as isize) as usize
            } else {
                i.clamp(0, ax.n as isize - 1) as usize
            };
        }
        (idx, w)
    }

    pub fn sample_at(&self, u: [f64; 3]) -> f64 {
        let (i0, w0) = self.stencil(0, u[0]);
        let (i1, w1) = self.stencil(1, u[1]);
        let (i2, w2) = self.stencil(2, u[2]);
        let mut acc = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let mut line = 0.0;
                for c in 0..4 {
                    line += w2[c] * self.patch.sample([i0[a], i1[b], i2[c]]);
                }
                acc += w0[a] * w1[b] * line;
            }
        }
        acc
    }

    pub fn point(&self, u: [f64; 3]) -> Vector4<f64> {
        self.patch.embed(u, self.sample_at(u))
    }

    pub fn jacobian(&self, u: [f64; 3]) -> [Vector4<f64>; 3] {
        let mut out = [Vector4::zeros(); 3];
        for (a, col) in out.iter_mut().enumerate() {
            let d = 1e-6 * self.patch.grid[a].step();
            let mut up = u;
            let mut um = u;
            up[a] += d;
            um[a] -= d;
            *col = (self.point(up) - self.point(um)) / (2.0 * d);
        }
        out
    }

    pub fn normal(&self, u: [f64; 3]) -> Option<Vector4<f64>> {
        let n = normal_of(&self.jacobian(u))?;
        Some(if n.dot(&self.patch.inward_hint(u)) < 0.0 {
            -n
        } else {
            n
        })
    }

    fn clamp(&self, mut u: [f64; 3]) -> [f64; 3] {
        for (a, x) in u.iter_mut().enumerate() {
            let ax = &self.patch.grid[a];
            if !ax.periodic {
                *x = x.clamp(ax.min, ax.max);
            }
        }
        u
    }

    /// Damped Gauss-Newton for the nearest point, started at parameter `u0`.
    pub fn project_from(&self, p: &Vector4<f64>, u0: [f64; 3]) -> Projection {
        let mut u = u0;
        let mut x = self.point(u);
        let mut r = x - p;
        let mut mu = 1e-12;
        for _ in 0..PROJ_MAX_ITER {
            let jac = self.jacobian(u);
            let jtj = Matrix3::from_fn(|a, b| jac[a].dot(&jac[b]));
            let jtr = Vector3::new(jac[0].dot(&r), jac[1].dot(&r), jac[2].dot(&r));
            let mut moved = None;
            for _ in 0..40 {
                let damped = jtj + Matrix3::identity() * (mu * jtj.trace().max(1e-300));
                let Some(delta) = damped.lu().solve(&(-jtr)) else {
                    mu *= 10.0;
                    continue;
                };
                let cand = self.clamp([u[0] + delta[0], u[1] + delta[1], u[2] + delta[2]]);
                let xc = self.point(cand);
                let rc = xc - p;
                if rc.norm() <= r.norm() {
                    mu = (mu * 0.1).max(1e-15);
                    moved = Some((cand, xc, rc));
                    break;
                }
                mu *= 10.0;
            }
            let Some((cand, xc, rc)) = moved else { break };
            let step = (xc - x).norm();
            u = cand;
            x = xc;
            r = rc;
            if step < PROJ_TOL {
                break;
            }
        }
        let normal = self.normal(u).unwrap_or_else(Vector4::zeros);
        Projection {
            u,
            foot: x,
            distance: r.norm(),
            w: (p - x).dot(&normal),
            normal,
        }
    }
}

fn nearest_node(points: &[Vector4<f64>], candidates: &[usize], p: &Vector4<f64>) -> (usize, f64) {
    candidates
        .iter()
        .map(|&l| (l, (points[l] - p).norm_squared()))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
        .expect("non-empty model")
}

fn hill_climb(
    model: &SurfacePatch,
    points: &[Vector4<f64>],
    start: usize,
    p: &Vector4<f64>,
) -> usize {
    let mut best = start;
    let mut best_d = (points[start] - p).norm_squared();
    loop {
        let idx = model.unlinear(best);
        let mut improved = false;
        for di in -1isize..=1 {
            for dj in -1isize..=1 {
                for dk in -1isize..=1 {
                    let q = [
                        idx[0] as isize + di,
                        idx[1] as isize + dj,
                        idx[2] as isize + dk,
                    ];
                    let (Some(i), Some(j), Some(k)) = (
                        model.grid[0].wrap(q[0]),
                        model.grid[1].wrap(q[1]),
                        model.grid[2].wrap(q[2]),
                    ) else {
                        continue;
                    };
                    let l = model.linear([i, j, k]);
                    let d = (points[l] - p).norm_squared();
                    if d < best_d {
                        best_d = d;
                        best = l;
                        improved = true;
                    }
                }
            }
        }
        if !improved {
            return best;
        }
    }
}

struct ModelIndex<'a> {
    surface: ModelSurface<'a>,
    points: Vec<Vector4<f64>>,
    coarse: Vec<usize>,
    separation: f64,
}

impl<'a> ModelIndex<'a> {
    fn new(model: &'a SurfacePatch) -> Self {
        let points = model.points();
        let dims = model.dims();
        let stride: Vec<usize> = dims.iter().map(|&n| (n / 16).max(1)).collect();
        let mut coarse = Vec::new();
        for i in (0..dims[0]).step_by(stride[0]) {
            for j in (0..dims[1]).step_by(stride[1]) {
                for k in (0..dims[2]).step_by(stride[2]) {
                    coarse.push(model.linear([i, j, k]));
                }
            }
        }
        let mut cell: f64 = 0.0;
        for l in (0..model.len()).step_by((model.len() / 512).max(1)) {
            let idx = model.unlinear(l);
            for a in 0..3 {
                let mut q = [idx[0] as isize, idx[1] as isize, idx[2] as isize];
                q[a] += 1;
                if let Some(x) = model.point_wrapped(q) {
                    cell = cell.max((x - points[l]).norm());
                }
            }
        }
        ModelIndex {
            surface: ModelSurface::new(model),
            points,
            coarse,
            separation: 4.0 * cell,
        }
    }

    fn node_param(&self, l: usize) -> [f64; 3] {
        let idx = self.surface.patch.unlinear(l);
        self.surface
            .patch
            .param([idx[0] as isize, idx[1] as isize, idx[2] as isize])
    }

    fn project(&self, p: &Vector4<f64>) -> Result<Projection> {
        let model = self.surface.patch;
        let (c, _) = nearest_node(&self.points, &self.coarse, p);
        let best = hill_climb(model, &self.points, c, p);
        if (self.points[best] - p).norm() == 0.0 {
            let u = self.node_param(best);
            let normal = self.surface.normal(u).unwrap_or_else(Vector4::zeros);
            return Ok(Projection {
                u,
                foot: self.points[best],
                distance: 0.0,
                w: 0.0,
                normal,
            });
        }
        let first = self.surface.project_from(p, self.node_param(best));
        let far: Vec<usize> = self
            .coarse
            .iter()
            .copied()
            .filter(|&l| (self.points[l] - first.foot).norm() > self.separation)
            .collect();
        if !far.is_empty() {
            let (c2, _) = nearest_node(&self.points, &far, p);
            let second_node = hill_climb(model, &self.points, c2, p);
            if (self.points[second_node] - first.foot).norm() > self.separation {
                let second = self.surface.project_from(p, self.node_param(second_node));
                let tie = (second.distance - first.distance).abs() <= 1e-9 * (1.0 + first.distance);
                if tie && (second.foot - first.foot).norm() > self.separation {
                    return Err(Error::GraphMapUndefined(format!(
                        "point {:?} is {:.3e} from two model sheets",
                        p.as_slice(),
                        first.distance
                    )));
                }
                if second.distance < first.distance {
                    return Ok(second);
                }
            }
        }
        Ok(first)
    }
}

/// Nearest-point projection of `p` onto the model.
pub fn project_to_model(model: &SurfacePatch, p: &Vector4<f64>) -> Result<Projection> {
    ModelIndex::new(model).project(p)
}

/// Projection of every patch node onto the model, in linear node order.
pub fn normal_graph(patch: &SurfacePatch, model: &SurfacePatch) -> Result<Vec<Projection>> {
    let index = ModelIndex::new(model);
    (0..patch.len())
        .into_par_iter()
        .map(|l| index.project(&patch.point(patch.unlinear(l))))
        .collect()
}

/// Discrete C^0, C^1, C^2 norms of w where patch = model + w·ν.
///
/// Derivatives are centered differences on the patch grid; the metric and
/// Christoffel symbols are those of the projected feet, i.e. the model's
/// metric pulled back to the patch parameters.
pub fn closeness_to_model(patch: &SurfacePatch, model: &SurfacePatch) -> Result<ClosenessReport> {
    let proj = normal_graph(patch, model)?;
    let c0 = proj.iter().map(|p| p.w.abs()).fold(0.0, f64::max);
    let hs = [
        patch.grid[0].step(),
        patch.grid[1].step(),
        patch.grid[2].step(),
    ];
    let per_node: Vec<(f64, f64)> = (0..patch.len())
        .into_par_iter()
        .filter_map(|l| {
            let idx = patch.unlinear(l);
            if !patch.is_interior(idx) {
                return None;
            }
            let b = [idx[0] as isize, idx[1] as isize, idx[2] as isize];
            let get = |d: [isize; 3]| {
                let q = [b[0] + d[0], b[1] + d[1], b[2] + d[2]];
                let i = patch.grid[0].wrap(q[0]).unwrap();
                let j = patch.grid[1].wrap(q[1]).unwrap();
                let k = patch.grid[2].wrap(q[2]).unwrap();
                &proj[patch.linear([i, j, k])]
            };
            let unit = |a: usize, s: isize| {
                let mut d = [0isize; 3];
                d[a] = s;
                d
            };
            let c = get([0, 0, 0]);
            let mut wd = Vector3::zeros();
            let mut yd = [Vector4::zeros(); 3];
            let mut wdd = Matrix3::zeros();
            let mut ydd = [[Vector4::zeros(); 3]; 3];
            for a in 0..3 {
                let (p, m) = (get(unit(a, 1)), get(unit(a, -1)));
                wd[a] = (p.w - m.w) / (2.0 * hs[a]);
                yd[a] = (p.foot - m.foot) / (2.0 * hs[a]);
                wdd[(a, a)] = (p.w - 2.0 * c.w + m.w) / (hs[a] * hs[a]);
                ydd[a][a] = (p.foot - 2.0 * c.foot + m.foot) / (hs[a] * hs[a]);
            }
            for a in 0..3 {
                for bb in (a + 1)..3 {
                    let mut pp = [0isize; 3];
                    pp[a] = 1;
                    pp[bb] = 1;
                    let mut pm = pp;
                    pm[bb] = -1;
                    let mut mp = pp;
                    mp[a] = -1;
                    let mut mm = pm;
                    mm[a] = -1;
                    let s = 4.0 * hs[a] * hs[bb];
                    let v = (get(pp).w - get(pm).w - get(mp).w + get(mm).w) / s;
                    wdd[(a, bb)] = v;
                    wdd[(bb, a)] = v;
                    let y = (get(pp).foot - get(pm).foot - get(mp).foot + get(mm).foot) / s;
                    ydd[a][bb] = y;
                    ydd[bb][a] = y;
                }
            }
            let g = Matrix3::from_fn(|a, b| yd[a].dot(&yd[b]));
            let gi = g.try_inverse()?;
            let grad2 = (wd.transpose() * gi * wd)[0];
            let mut hess = wdd;
            for a in 0..3 {
                for b2 in 0..3 {
                    let lower = Vector3::new(
                        ydd[a][b2].dot(&yd[0]),
                        ydd[a][b2].dot(&yd[1]),
                        ydd[a][b2].dot(&yd[2]),
                    );
                    let gamma = gi * lower;
                    hess[(a, b2)] -= gamma.dot(&wd);
                }
            }
            let m = gi * hess;
            let hess2 = (m * m).trace();
            Some((grad2.max(0.0).sqrt(), hess2.max(0.0).sqrt()))
        })
        .collect();
    let g1 = per_node.iter().map(|x| x.0).fold(0.0, f64::max);
    let g2 = per_node.iter().map(|x| x.1).fold(0.0, f64::max);
    let c1 = c0.max(g1);
    let c2 = c1.max(g2);
    Ok(ClosenessReport {
        graph_norm_c0: c0,
        graph_norm_c1: c1,
        graph_norm_c2: c2,
        matched: c0.is_finite() && c1.is_finite() && c2.is_finite(),
    })
}
