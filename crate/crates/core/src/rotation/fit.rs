//! Least-squares fitting of generalized cylinders S^k_ρ × R^{3−k}.
//!
//! Parameters: the sphere (k+1)-plane, as a rotation chart about the current
//! frame; the center within that plane; the radius (optionally fixed).

use nalgebra::{DMatrix, DVector, Matrix4, SymmetricEigen, Vector4};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::geom::{closeness_to_model, geometry_field, Axis, PatchKind, Placement, SurfacePatch};
use crate::rng::stream;
use crate::solitons::CylinderModel;

pub const RESTARTS: usize = 5;
const MAX_ITER: usize = 200;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CylinderFit {
    pub model: CylinderModel,
    pub radius: f64,
    /// Slice time at which `model` has `radius`.
    pub time: f64,
    pub rms: f64,
    /// max over nodes of |distance to the fitted cylinder|.
    pub max_deviation: f64,
    /// C² closeness of the patch to the fitted model.
    pub c2_error: f64,
    pub converged: bool,
}

impl CylinderFit {
    pub fn cylindrical(&self, eps: f64) -> bool {
        self.c2_error <= eps
    }
}

struct State {
    frame: Matrix4<f64>,
    center: DVector<f64>,
    radius: f64,
}

fn chart_generator(k: usize, w: &[f64]) -> Matrix4<f64> {
    let mut g = Matrix4::zeros();
    let mut c = 0;
    for i in 0..=k {
        for j in (k + 1)..4 {
            g[(i, j)] = w[c];
            g[(j, i)] = -w[c];
            c += 1;
        }
    }
    g
}

fn residuals(
    k: usize,
    pts: &[Vector4<f64>],
    frame: &Matrix4<f64>,
    center: &DVector<f64>,
    radius: f64,
) -> DVector<f64> {
    DVector::from_iterator(
        pts.len(),
        pts.iter().map(|x| {
            let y = frame.transpose() * x;
            let d2: f64 = (0..=k).map(|i| (y[i] - center[i]).powi(2)).sum();
            d2.sqrt() - radius
        }),
    )
}

fn cost(r: &DVector<f64>) -> f64 {
    r.norm_squared()
}

/// Levenberg–Marquardt with the chart re-centred after every accepted step.
fn refine(
    k: usize,
    pts: &[Vector4<f64>],
    mut st: State,
    fixed_radius: Option<f64>,
) -> (State, f64, bool) {
    let nw = (k + 1) * (3 - k);
    let np = nw + (k + 1) + usize::from(fixed_radius.is_none());
    let eval = |st: &State, p: &[f64]| {
        let frame = st.frame * chart_generator(k, &p[..nw]).exp();
        let mut c = st.center.clone();
        for i in 0..=k {
            c[i] += p[nw + i];
        }
        let rad = fixed_radius.unwrap_or(st.radius + if np > nw + k + 1 { p[np - 1] } else { 0.0 });
        (frame, c, rad)
    };
    let mut r = residuals(k, pts, &st.frame, &st.center, st.radius);
    let mut c0 = cost(&r);
    let mut mu = 1e-3;
    let scale = st.radius.max(1e-3);
    for _ in 0..MAX_ITER {
        let mut jac = DMatrix::zeros(pts.len(), np);
        for p in 0..np {
            let h = if p < nw { 1e-7 } else { 1e-7 * scale };
            let mut v = vec![0.0; np];
            v[p] = h;
            let (f1, c1, r1) = eval(&st, &v);
            v[p] = -h;
            let (f2, c2, r2) = eval(&st, &v);
            let d = (residuals(k, pts, &f1, &c1, r1) - residuals(k, pts, &f2, &c2, r2)) / (2.0 * h);
            jac.set_column(p, &d);
        }
        let jtj = jac.transpose() * &jac;
        let g = jac.transpose() * &r;
        let mut accepted = false;
        for _ in 0..20 {
            let mut a = jtj.clone();
            for i in 0..np {
                a[(i, i)] += mu * jtj[(i, i)].max(1e-12);
            }
            let Some(step) = a.cholesky().map(|c| c.solve(&(-&g))) else {
                mu *= 10.0;
                continue;
            };
            let (f, c, rad) = eval(&st, step.as_slice());
            let rn = residuals(k, pts, &f, &c, rad);
            let cn = cost(&rn);
            if cn <= c0 {
                let done = c0 - cn <= 1e-15 * c0.max(1e-300) || step.norm() < 1e-13;
                st = State {
                    frame: f,
                    center: c,
                    radius: rad,
                };
                r = rn;
                c0 = cn;
                mu = (mu / 3.0).max(1e-12);
                accepted = true;
                if done {
                    return (st, c0, true);
                }
                break;
            }
            mu *= 10.0;
        }
        if !accepted {
            return (st, c0, true);
        }
    }
    (st, c0, false)
}

/// Frame from normals: the axis directions are those the normals avoid.
fn initial_state(k: usize, patch: &SurfacePatch, pts: &[Vector4<f64>]) -> Result<State> {
    let mut m = Matrix4::zeros();
    let mut count = 0;
    for g in geometry_field(patch).into_iter().flatten() {
        m += g.normal * g.normal.transpose();
        count += 1;
    }
    if count == 0 {
        return invalid("patch has no interior nodes to fit");
    }
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..4).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let frame = Matrix4::from_columns(&[
        eig.eigenvectors.column(order[0]).into_owned(),
        eig.eigenvectors.column(order[1]).into_owned(),
        eig.eigenvectors.column(order[2]).into_owned(),
        eig.eigenvectors.column(order[3]).into_owned(),
    ]);
    // Algebraic sphere fit |y|² = 2c·y + d in the sphere coordinates.
    let mut a = DMatrix::zeros(pts.len(), k + 2);
    let mut rhs = DVector::zeros(pts.len());
    for (i, x) in pts.iter().enumerate() {
        let y = frame.transpose() * x;
        for j in 0..=k {
            a[(i, j)] = 2.0 * y[j];
        }
        a[(i, k + 1)] = 1.0;
        rhs[i] = (0..=k).map(|j| y[j] * y[j]).sum();
    }
    let sol = a
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|_| Error::Degenerate("sphere fit".into()))?;
    let center = DVector::from_iterator(k + 1, (0..=k).map(|j| sol[j]));
    let radius = (sol[k + 1] + center.norm_squared()).max(0.0).sqrt();
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::Degenerate("initial radius".into()));
    }
    Ok(State {
        frame,
        center,
        radius,
    })
}

/// Model patch covering the fitted patch's axis extent.
fn model_patch(
    k: usize,
    frame: &Matrix4<f64>,
    offset: &Vector4<f64>,
    radius: f64,
    pts: &[Vector4<f64>],
) -> Result<SurfacePatch> {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for x in pts {
        let y = frame.transpose() * (x - offset);
        for (a, i) in ((k + 1)..4).enumerate() {
            lo[a] = lo[a].min(y[i]);
            hi[a] = hi[a].max(y[i]);
        }
    }
    let widen = |a: usize, n: usize| {
        let pad = ((hi[a] - lo[a]) / (n as f64 - 5.0)).max(1e-3 * radius) * 2.0;
        Axis::new(lo[a] - pad, hi[a] + pad, n)
    };
    let (kind, grid) = if k == 1 {
        (
            PatchKind::PolarGraph,
            [Axis::angle(128), widen(0, 33), widen(1, 33)],
        )
    } else {
        let pad = std::f64::consts::PI / 128.0;
        (
            PatchKind::SphericalGraph,
            [
                Axis::new(pad, std::f64::consts::PI - pad, 64),
                Axis::angle(128),
                widen(0, 33),
            ],
        )
    };
    Ok(
        SurfacePatch::from_fn(kind, grid, |_| radius)?.with_placement(Placement {
            scale: 1.0,
            rotation: *frame,
            offset: *offset,
        }),
    )
}

/// Fit of S¹ × R².
pub fn fit_cylinder(patch: &SurfacePatch) -> Result<CylinderFit> {
    fit_generalized_cylinder(patch, 1, None, 0)
}

pub fn fit_generalized_cylinder(
    patch: &SurfacePatch,
    k: usize,
    fixed_radius: Option<f64>,
    seed: u64,
) -> Result<CylinderFit> {
    let fit = fit_shape(patch, k, fixed_radius, seed)?;
    let model = model_patch(
        k,
        &fit.model.rotation,
        &fit.model.center_offset,
        fit.radius,
        &patch.points(),
    )?;
    let rep = closeness_to_model(patch, &model)?;
    Ok(CylinderFit {
        c2_error: rep.graph_norm_c2,
        ..fit
    })
}

/// The least-squares fit alone, without the C² closeness evaluation.
pub fn fit_shape(
    patch: &SurfacePatch,
    k: usize,
    fixed_radius: Option<f64>,
    seed: u64,
) -> Result<CylinderFit> {
    if !(1..=2).contains(&k) {
        return invalid("k must be 1 or 2");
    }
    if let Some(r) = fixed_radius {
        if !(r > 0.0) {
            return invalid("fixed radius must be positive");
        }
    }
    let pts = patch.points();
    let mut base = initial_state(k, patch, &pts)?;
    if let Some(r) = fixed_radius {
        base.radius = r;
    }
    let nw = (k + 1) * (3 - k);
    let mut best: Option<(State, f64, bool, usize)> = None;
    for restart in 0..RESTARTS {
        let st = if restart == 0 {
            State {
                frame: base.frame,
                center: base.center.clone(),
                radius: base.radius,
            }
        } else {
            let mut rng = stream(seed, "fit-cylinder", restart as u64);
            let w: Vec<f64> = (0..nw)
                .map(|_| 0.05 * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let frame = base.frame * chart_generator(k, &w).exp();
            let center = DVector::from_iterator(
                k + 1,
                base.center
                    .iter()
                    .map(|c| c + 0.05 * base.radius * rng.sample::<f64, _>(StandardNormal)),
            );
            let radius = fixed_radius
                .unwrap_or(base.radius * (1.0 + 0.05 * rng.sample::<f64, _>(StandardNormal)).abs());
            State {
                frame,
                center,
                radius,
            }
        };
        let (st, c, ok) = refine(k, &pts, st, fixed_radius);
        if !c.is_finite() {
            continue;
        }
        let better = match &best {
            None => true,
            Some((_, bc, _, _)) => c < *bc,
        };
        if better {
            best = Some((st, c, ok, restart));
        }
    }
    let Some((st, c, ok, _)) = best else {
        return Err(Error::NoConvergence {
            what: "cylinder fit".into(),
            residual: f64::NAN,
        });
    };
    let rms = (c / pts.len() as f64).sqrt();
    if !ok {
        return Err(Error::NoConvergence {
            what: "cylinder fit".into(),
            residual: rms,
        });
    }
    let mut local = Vector4::zeros();
    for i in 0..=k {
        local[i] = st.center[i];
    }
    let offset = st.frame * local;
    let max_deviation = residuals(k, &pts, &st.frame, &st.center, st.radius).amax();
    let model = CylinderModel::new(k, orthonormalize(st.frame), offset)?;
    Ok(CylinderFit {
        model,
        radius: st.radius,
        time: -st.radius * st.radius / (2.0 * k as f64),
        rms,
        max_deviation,
        c2_error: f64::NAN,
        converged: ok,
    })
}

fn orthonormalize(m: Matrix4<f64>) -> Matrix4<f64> {
    let q = m.qr().q();
    // QR may flip column signs; restore them so the frame matches `m`.
    let mut out = q;
    for j in 0..4 {
        if out.column(j).dot(&m.column(j)) < 0.0 {
            let c = -out.column(j);
            out.set_column(j, &c);
        }
    }
    out
}

/// One-sided Hausdorff distance from the patch nodes to the cylinder.
pub fn hausdorff_to_cylinder(patch: &SurfacePatch, model: &CylinderModel, radius: f64) -> f64 {
    patch
        .points()
        .iter()
        .map(|x| {
            let y = model.rotation.transpose() * (x - model.center_offset);
            let rho: f64 = (0..=model.k).map(|i| y[i] * y[i]).sum::<f64>().sqrt();
            (rho - radius).abs()
        })
        .fold(0.0, f64::max)
}
