//! Model flows: the Bowl soliton profile, shrinking cylinders, Bowl²×R,
//! blow-down rescaling and the height function of a translator.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::closeness::ModelSurface;
use crate::geom::curvature::node_geometry;
use crate::geom::{Axis, Flow, PatchKind, Placement, SurfacePatch};

/// Number of leading nodes filled from the series expansion.
const SERIES_NODES: usize = 10;

/// Profile φ(r) of the n-dimensional Bowl soliton, x_{n+1} = φ(|x|),
/// normalized to translate with unit speed: φ''/(1+φ'²) + (n−1)φ'/r = 1.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BowlProfile {
    pub n: usize,
    pub r_max: f64,
    pub step: f64,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
}

/// φ'' from the ODE, with the removable singularity at r = 0 filled in.
fn bowl_rhs(n: usize, r: f64, p: f64) -> f64 {
    if r == 0.0 {
        return 1.0 / n as f64;
    }
    (1.0 + p * p) * (1.0 - (n as f64 - 1.0) * p / r)
}

/// Series coefficients (c₄, c₆) in φ = r²/(2n) + c₄ r⁴ + c₆ r⁶ + O(r⁸),
/// from matching powers of r in the ODE.
pub fn bowl_series(n: usize) -> (f64, f64) {
    let n = n as f64;
    let c4 = 1.0 / (4.0 * n.powi(3) * (n + 2.0));
    let c6 = -(n - 3.0) / (6.0 * n.powi(5) * (n + 2.0) * (n + 4.0));
    (c4, c6)
}

pub fn solve_bowl_profile(n: usize, r_max: f64, step: f64) -> Result<BowlProfile> {
    if n < 2 {
        return invalid("Bowl dimension n must be at least 2");
    }
    if !(r_max > 0.0 && r_max <= 1e4) {
        return invalid(format!("r_max = {r_max} outside (0, 1e4]"));
    }
    if !(step > 0.0 && step <= 1e-4 * r_max.max(1.0)) {
        return invalid(format!(
            "step = {step} outside (0, {}]",
            1e-4 * r_max.max(1.0)
        ));
    }
    let count = (r_max / step).round() as usize;
    let h = r_max / count as f64;
    let (c4, c6) = bowl_series(n);
    let nf = n as f64;
    let mut phi = Vec::with_capacity(count + 1);
    let mut dphi = Vec::with_capacity(count + 1);
    for i in 0..=SERIES_NODES.min(count) {
        let r = i as f64 * h;
        phi.push(r * r / (2.0 * nf) + c4 * r.powi(4) + c6 * r.powi(6));
        dphi.push(r / nf + 4.0 * c4 * r.powi(3) + 6.0 * c6 * r.powi(5));
    }
    let f = |r: f64, y: [f64; 2]| [y[1], bowl_rhs(n, r, y[1])];
    for i in SERIES_NODES..count {
        let r = i as f64 * h;
        let y = [phi[i], dphi[i]];
        let k1 = f(r, y);
        let k2 = f(
            r + 0.5 * h,
            [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]],
        );
        let k3 = f(
            r + 0.5 * h,
            [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]],
        );
        let k4 = f(r + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
        phi.push(y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]));
        dphi.push(y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]));
    }
    let profile = BowlProfile {
        n,
        r_max,
        step: h,
        phi,
        dphi,
    };
    let (dphi_slack, phi_slack) = profile.bound_slack();
    if dphi_slack < 0.0 || phi_slack < 0.0 {
        return Err(Error::StepTooCoarse(format!(
            "min φ' − r/n = {dphi_slack:e}, min φ − r²/(2n) = {phi_slack:e}"
        )));
    }
    if let Some(i) = (1..profile.dphi.len()).find(|&i| profile.dphi[i] <= profile.dphi[i - 1]) {
        return Err(Error::StepTooCoarse(format!(
            "H fails to decrease at r = {}",
            i as f64 * h
        )));
    }
    Ok(profile)
}

impl BowlProfile {
    pub fn radii(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.phi.len()).map(move |i| i as f64 * self.step)
    }

    /// (min φ' − r/n, min φ − r²/(2n)) over the nodes.
    pub fn bound_slack(&self) -> (f64, f64) {
        let nf = self.n as f64;
        let mut a = f64::INFINITY;
        let mut b = f64::INFINITY;
        for (i, r) in self.radii().enumerate() {
            a = a.min(self.dphi[i] - r / nf);
            b = b.min(self.phi[i] - r * r / (2.0 * nf));
        }
        (a, b)
    }

    fn bracket(&self, r: f64) -> (usize, f64) {
        assert!(
            (0.0..=self.r_max * (1.0 + 1e-12)).contains(&r),
            "r = {r} outside solved range [0, {}]",
            self.r_max
        );
        let x = (r / self.step).min((self.phi.len() - 1) as f64);
        let i = (x.floor() as usize).min(self.phi.len() - 2);
        (i, x - i as f64)
    }

    fn hermite(&self, i: usize, t: f64, v: &[f64], dv: impl Fn(usize) -> f64) -> (f64, f64) {
        let h = self.step;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        let val = h00 * v[i] + h10 * h * dv(i) + h01 * v[i + 1] + h11 * h * dv(i + 1);
        let d00 = 6.0 * t2 - 6.0 * t;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = -6.0 * t2 + 6.0 * t;
        let d11 = 3.0 * t2 - 2.0 * t;
        let der = (d00 * v[i] + d01 * v[i + 1]) / h + d10 * dv(i) + d11 * dv(i + 1);
        (val, der)
    }

    fn ddphi_node(&self, i: usize) -> f64 {
        bowl_rhs(self.n, i as f64 * self.step, self.dphi[i])
    }

    pub fn phi_at(&self, r: f64) -> f64 {
        let (i, t) = self.bracket(r.abs());
        self.hermite(i, t, &self.phi, |j| self.dphi[j]).0
    }

    /// φ'(|r|)·sign(r).
    pub fn dphi_at(&self, r: f64) -> f64 {
        let (i, t) = self.bracket(r.abs());
        self.hermite(i, t, &self.dphi, |j| self.ddphi_node(j)).0 * r.signum()
    }

    pub fn ddphi_at(&self, r: f64) -> f64 {
        bowl_rhs(self.n, r.abs(), self.dphi_at(r.abs()))
    }

    /// Mean curvature 1/√(1+φ'²) of the n-dimensional Bowl at radius r.
    pub fn mean_curvature(&self, r: f64) -> f64 {
        let p = self.dphi_at(r);
        1.0 / (1.0 + p * p).sqrt()
    }

    /// (axial curvature, rotational curvature), the latter with multiplicity n − 1.
    pub fn principal_curvatures(&self, r: f64) -> (f64, f64) {
        let r = r.abs();
        let p = self.dphi_at(r);
        let w = (1.0 + p * p).sqrt();
        let axial = self.ddphi_at(r) / (w * w * w);
        let rot = if r == 0.0 {
            1.0 / self.n as f64
        } else {
            p / (r * w)
        };
        (axial, rot)
    }

    /// |A|² of the Bowl (and of Bowl×R) at radius r.
    pub fn a2(&self, r: f64) -> f64 {
        let (k1, k2) = self.principal_curvatures(r);
        k1 * k1 + (self.n as f64 - 1.0) * k2 * k2
    }

    /// Inverse of φ on [0, r_max].
    pub fn radius_at_height(&self, z: f64) -> Result<f64> {
        let top = *self.phi.last().unwrap();
        if !(0.0..=top).contains(&z) {
            return invalid(format!("height {z} outside [0, {top}]"));
        }
        let i = self
            .phi
            .partition_point(|&p| p <= z)
            .clamp(1, self.phi.len() - 1)
            - 1;
        let (mut lo, mut hi) = (
            i as f64 * self.step,
            ((i + 1) as f64 * self.step).min(self.r_max),
        );
        let mut r = 0.5 * (lo + hi);
        for _ in 0..100 {
            let g = self.phi_at(r) - z;
            if g > 0.0 {
                hi = r;
            } else {
                lo = r;
            }
            let d = self.dphi_at(r);
            let newton = r - g / d;
            r = if d > 0.0 && newton > lo && newton < hi {
                newton
            } else {
                0.5 * (lo + hi)
            };
            if (hi - lo) < 1e-15 * (1.0 + r) || g.abs() < 1e-14 * (1.0 + z) {
                break;
            }
        }
        Ok(r)
    }

    /// (r, φ) rows for CSV export.
    pub fn rows(&self) -> Vec<(f64, f64)> {
        self.radii().zip(self.phi.iter().copied()).collect()
    }
}

/// κ/H = f(H·d) on the Bowl, d the distance to the tip line; κ = 1 here.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TipRatioTable {
    pub s: Vec<f64>,
    pub f: Vec<f64>,
}

impl TipRatioTable {
    /// Piecewise-linear interpolation; `None` outside the table.
    pub fn eval(&self, s: f64) -> Option<f64> {
        if s < self.s[0] || s > *self.s.last()? {
            return None;
        }
        let i = self
            .s
            .partition_point(|&x| x <= s)
            .clamp(1, self.s.len() - 1)
            - 1;
        let t = (s - self.s[i]) / (self.s[i + 1] - self.s[i]);
        Some(self.f[i] + t * (self.f[i + 1] - self.f[i]))
    }
}

pub fn tabulate_tip_ratio(profile: &BowlProfile) -> Result<TipRatioTable> {
    let mut s = Vec::with_capacity(profile.phi.len());
    let mut f = Vec::with_capacity(profile.phi.len());
    for (i, r) in profile.radii().enumerate() {
        let h = 1.0 / (1.0 + profile.dphi[i] * profile.dphi[i]).sqrt();
        let d = (r * r + profile.phi[i] * profile.phi[i]).sqrt();
        s.push(h * d);
        f.push(1.0 / h);
    }
    for i in 1..s.len() {
        if !(s[i] > s[i - 1] && f[i] > f[i - 1]) {
            return Err(Error::NotMonotone(format!("tip ratio table at node {i}")));
        }
    }
    Ok(TipRatioTable { s, f })
}

/// The Bowl²×R translator, axis e3, split direction e4, as a graph
/// x3 = φ(|(x1, x2)|) over (x1, x2, x4). Covers the tip.
pub fn bowl_line_graph(
    profile: &BowlProfile,
    half: f64,
    n: usize,
    s_half: f64,
    ns: usize,
) -> Result<SurfacePatch> {
    if profile.n != 2 {
        return invalid("Bowl²×R needs the n = 2 profile");
    }
    if half * std::f64::consts::SQRT_2 > profile.r_max {
        return invalid("profile too short for the requested box");
    }
    let grid = [
        Axis::new(-half, half, n),
        Axis::new(-half, half, n),
        Axis::new(-s_half, s_half, ns),
    ];
    let patch =
        SurfacePatch::from_fn(PatchKind::Graph, grid, |u| profile.phi_at(u[0].hypot(u[1])))?;
    Ok(patch.with_placement(Placement {
        scale: 1.0,
        rotation: swap34(),
        offset: Vector4::zeros(),
    }))
}

/// Bowl²×R as a profile-of-revolution × line patch (r, θ, s) ↦ (r cos θ, r sin θ, φ(r), s).
pub fn bowl_line_revolution(
    profile: &BowlProfile,
    r_range: (f64, f64),
    nr: usize,
    ntheta: usize,
    s_half: f64,
    ns: usize,
) -> Result<SurfacePatch> {
    if profile.n != 2 {
        return invalid("Bowl²×R needs the n = 2 profile");
    }
    let grid = [
        Axis::new(r_range.0, r_range.1, nr),
        Axis::angle(ntheta),
        Axis::new(-s_half, s_half, ns),
    ];
    SurfacePatch::from_fn(PatchKind::Revolution, grid, |u| profile.phi_at(u[0]))
}

/// Bowl²×R away from the tip as a polar graph r(θ, x3, x4) = φ⁻¹(x3).
pub fn bowl_line_polar(
    profile: &BowlProfile,
    z_range: (f64, f64),
    nz: usize,
    ntheta: usize,
    s_half: f64,
    ns: usize,
) -> Result<SurfacePatch> {
    if profile.n != 2 {
        return invalid("Bowl²×R needs the n = 2 profile");
    }
    if z_range.0 <= 0.0 {
        return invalid("polar representation needs heights above the tip");
    }
    let grid = [
        Axis::angle(ntheta),
        Axis::new(z_range.0, z_range.1, nz),
        Axis::new(-s_half, s_half, ns),
    ];
    let radii: Vec<f64> = grid[1]
        .coords()
        .iter()
        .map(|&z| profile.radius_at_height(z))
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(ntheta * nz * ns);
    for _ in 0..ntheta {
        for r in &radii {
            samples.extend(std::iter::repeat_n(*r, ns));
        }
    }
    SurfacePatch::new(PatchKind::PolarGraph, grid, samples)
}

/// The Bowl³ translator x4 = φ(|x'|) as a spherical graph ρ(σ, θ, s) = φ⁻¹(s).
pub fn bowl3_spherical(
    profile: &BowlProfile,
    s_range: (f64, f64),
    ns: usize,
    nsigma: usize,
    ntheta: usize,
) -> Result<SurfacePatch> {
    if profile.n != 3 {
        return invalid("Bowl³ needs the n = 3 profile");
    }
    let pad = std::f64::consts::PI / (2.0 * nsigma as f64);
    let grid = [
        Axis::new(pad, std::f64::consts::PI - pad, nsigma),
        Axis::angle(ntheta),
        Axis::new(s_range.0, s_range.1, ns),
    ];
    let radii: Vec<f64> = grid[2]
        .coords()
        .iter()
        .map(|&z| profile.radius_at_height(z))
        .collect::<Result<_>>()?;
    let mut samples = Vec::with_capacity(nsigma * ntheta * ns);
    for _ in 0..nsigma * ntheta {
        samples.extend_from_slice(&radii);
    }
    SurfacePatch::new(PatchKind::SphericalGraph, grid, samples)
}

/// Permutation matrix exchanging e3 and e4.
pub fn swap34() -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m[(0, 0)] = 1.0;
    m[(1, 1)] = 1.0;
    m[(2, 3)] = 1.0;
    m[(3, 2)] = 1.0;
    m
}

/// Translator flow M_t = M + tω sampled at `times`.
pub fn translator_flow(patch: &SurfacePatch, omega: Vector4<f64>, times: Vec<f64>) -> Result<Flow> {
    Flow::from_fn(times, |t| {
        Ok(patch.transformed(&Placement {
            scale: 1.0,
            rotation: Matrix4::identity(),
            offset: omega * t,
        }))
    })
}

/// Shrinking generalized cylinder S^k_{√(−2kt)} × R^{3−k}, k ∈ {1, 2}.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CylinderModel {
    pub k: usize,
    pub rotation: Matrix4<f64>,
    pub center_offset: Vector4<f64>,
}

impl CylinderModel {
    pub fn new(k: usize, rotation: Matrix4<f64>, center_offset: Vector4<f64>) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return invalid("cylinder sphere dimension must be 1 or 2");
        }
        let err = (rotation.transpose() * rotation - Matrix4::identity())
            .abs()
            .max();
        if err > 1e-12 {
            return invalid(format!("rotation not orthogonal (error {err:e})"));
        }
        Ok(CylinderModel {
            k,
            rotation,
            center_offset,
        })
    }

    pub fn standard(k: usize) -> Self {
        CylinderModel::new(k, Matrix4::identity(), Vector4::zeros()).expect("k in range")
    }

    pub fn radius(&self, t: f64) -> f64 {
        (-2.0 * self.k as f64 * t).sqrt()
    }

    /// Slice at time t on `grid`: (θ, z1, z2) for k = 1, (σ, θ, s) for k = 2.
    pub fn patch(&self, t: f64, grid: [Axis; 3]) -> Result<SurfacePatch> {
        if t >= 0.0 {
            return invalid("shrinking cylinder exists only for t < 0");
        }
        let kind = if self.k == 1 {
            PatchKind::PolarGraph
        } else {
            PatchKind::SphericalGraph
        };
        let r = self.radius(t);
        let p = SurfacePatch::from_fn(kind, grid, |_| r)?;
        Ok(p.with_placement(Placement {
            scale: 1.0,
            rotation: self.rotation,
            offset: self.center_offset,
        }))
    }

    pub fn flow(&self, times: Vec<f64>, grid: [Axis; 3]) -> Result<Flow> {
        Flow::from_fn(times, |t| self.patch(t, grid))
    }

    /// Signed distance from x to the time-t slice (positive outside).
    pub fn signed_distance(&self, x: &Vector4<f64>, t: f64) -> f64 {
        let local = self.rotation.transpose() * (x - self.center_offset);
        let rho = local
            .iter()
            .take(self.k + 1)
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt();
        rho - self.radius(t)
    }
}

/// a⁻¹(M − a²ω) ∩ B_R, as the smallest parameter box holding the clipped nodes.
pub fn blow_down_rescale(
    surface: &SurfacePatch,
    omega: Vector4<f64>,
    a: f64,
    radius: f64,
) -> Result<SurfacePatch> {
    if a < 1.0 {
        return invalid("blow-down factor a must be at least 1");
    }
    let heights: Vec<f64> = surface.points().iter().map(|x| x.dot(&omega)).collect();
    let have_lo = heights.iter().copied().fold(f64::INFINITY, f64::min);
    let have_hi = heights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let (need_lo, need_hi) = (a * a - a * radius, a * a + a * radius);
    if have_lo > need_lo || have_hi < need_hi {
        return Err(Error::HeightRange {
            need_lo,
            need_hi,
            have_lo,
            have_hi,
        });
    }
    let scaled = surface.transformed(&Placement {
        scale: 1.0 / a,
        rotation: Matrix4::identity(),
        offset: -omega * a,
    });
    crop_to_ball(&scaled, radius)
}

/// Smallest index box (periodic axes kept whole) containing every node in B_R(0).
pub fn crop_to_ball(patch: &SurfacePatch, radius: f64) -> Result<SurfacePatch> {
    let dims = patch.dims();
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    for l in 0..patch.len() {
        let idx = patch.unlinear(l);
        if patch.point(idx).norm() <= radius {
            for a in 0..3 {
                lo[a] = lo[a].min(idx[a]);
                hi[a] = hi[a].max(idx[a]);
            }
        }
    }
    if lo[0] == usize::MAX {
        return invalid("no node inside the ball");
    }
    let mut grid = patch.grid;
    for a in 0..3 {
        if grid[a].periodic {
            lo[a] = 0;
            hi[a] = dims[a] - 1;
            continue;
        }
        if hi[a] - lo[a] + 1 < 4 {
            return invalid(format!("ball holds fewer than 4 nodes along axis {a}"));
        }
        grid[a] = Axis::new(
            grid[a].coord(lo[a] as isize),
            grid[a].coord(hi[a] as isize),
            hi[a] - lo[a] + 1,
        );
    }
    let mut samples = Vec::with_capacity(grid[0].n * grid[1].n * grid[2].n);
    for i in lo[0]..=hi[0] {
        for j in lo[1]..=hi[1] {
            for k in lo[2]..=hi[2] {
                samples.push(patch.sample([i, j, k]));
            }
        }
    }
    Ok(SurfacePatch::new(patch.kind, grid, samples)?.with_placement(patch.placement.clone()))
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct HeightReport {
    /// max over sampled trajectories of the measured ∂_t h.
    pub max_dt_h: f64,
    /// max of ⟨ν, ω⟩ − 1.
    pub max_identity: f64,
    /// max |measured ∂_t h − (⟨ν,ω⟩² − 1)|, the normal-trajectory prediction.
    pub trajectory_residual: f64,
    /// max of ⟨ω, ν⟩ − H; positive values mean ω is not the translation direction.
    pub max_defect: f64,
    /// max |H − ⟨ω, ν⟩|.
    pub translator_residual: f64,
    /// Largest ⟨ν, ω⟩ seen, 1 on the tip line.
    pub max_normal_alignment: f64,
    pub samples: usize,
    pub matched: bool,
}

/// ∂_t h for h = ⟨x, ω⟩ − t along nearest-point (normal) trajectories between
/// consecutive slices, sampled every `stride` nodes.
pub fn height_evolution_check(
    flow: &Flow,
    omega: Vector4<f64>,
    stride: usize,
    defect_tol: f64,
) -> HeightReport {
    let mut rep = HeightReport {
        max_dt_h: f64::NEG_INFINITY,
        max_identity: f64::NEG_INFINITY,
        trajectory_residual: 0.0,
        max_defect: f64::NEG_INFINITY,
        translator_residual: 0.0,
        max_normal_alignment: f64::NEG_INFINITY,
        samples: 0,
        matched: false,
    };
    for w in 0..flow.times.len().saturating_sub(1) {
        let dt = flow.times[w + 1] - flow.times[w];
        let (cur, next) = (&flow.slices[w], &flow.slices[w + 1]);
        let model = ModelSurface::new(next);
        for l in (0..cur.len()).step_by(stride.max(1)) {
            let idx = cur.unlinear(l);
            let Ok(g) = node_geometry(cur, idx) else {
                continue;
            };
            let u = cur.param([idx[0] as isize, idx[1] as isize, idx[2] as isize]);
            let y = model.project_from(&g.point, u).foot;
            let nw = g.normal.dot(&omega);
            let dth = ((y - g.point).dot(&omega) - dt) / dt;
            rep.max_dt_h = rep.max_dt_h.max(dth);
            rep.max_identity = rep.max_identity.max(nw - 1.0);
            rep.trajectory_residual = rep.trajectory_residual.max((dth - (nw * nw - 1.0)).abs());
            rep.max_defect = rep.max_defect.max(nw - g.h);
            rep.translator_residual = rep.translator_residual.max((g.h - nw).abs());
            rep.max_normal_alignment = rep.max_normal_alignment.max(nw);
            rep.samples += 1;
        }
    }
    rep.matched = rep.samples > 0 && rep.max_dt_h <= 1e-8 && rep.max_defect <= defect_tol;
    rep
}

/// Grim reaper y = −ln cos x translating along e2: returns (max ⟨ν,e2⟩ − 1,
/// max |κ − ⟨ν, e2⟩|) over the sample abscissae, from the closed-form normal.
pub fn grim_reaper_check(xs: &[f64]) -> (f64, f64) {
    let mut worst = f64::NEG_INFINITY;
    let mut identity: f64 = 0.0;
    for &x in xs {
        let (yp, ypp) = (x.tan(), 1.0 / (x.cos() * x.cos()));
        let w = (1.0 + yp * yp).sqrt();
        let nu = [-yp / w, 1.0 / w];
        let kappa = ypp / (w * w * w);
        worst = worst.max(nu[1] - 1.0);
        identity = identity.max((kappa - nu[1]).abs());
    }
    (worst, identity)
}
