//! Second-order centered finite-difference geometry at patch nodes.

use nalgebra::{Matrix3, Matrix3x4, SymmetricEigen, Vector4};
use rayon::prelude::*;

use super::patch::SurfacePatch;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct NodeGeometry {
    pub point: Vector4<f64>,
    /// Inward unit normal.
    pub normal: Vector4<f64>,
    /// Tangent vectors ∂X/∂u_a.
    pub tangents: [Vector4<f64>; 3],
    pub metric: Matrix3<f64>,
    pub second_form: Matrix3<f64>,
    pub h: f64,
    pub a2: f64,
    /// Principal curvatures, ascending.
    pub principal: [f64; 3],
}

impl NodeGeometry {
    /// λ1 + λ2, the sum of the two smallest principal curvatures.
    pub fn lambda12(&self) -> f64 {
        self.principal[0] + self.principal[1]
    }
}

/// Unit vector orthogonal to the three rows.
pub fn normal_of(t: &[Vector4<f64>; 3]) -> Option<Vector4<f64>> {
    let m = Matrix3x4::from_rows(&[t[0].transpose(), t[1].transpose(), t[2].transpose()]);
    let minor = |skip: usize| {
        let cols: Vec<usize> = (0..4).filter(|&c| c != skip).collect();
        Matrix3::from_fn(|i, j| m[(i, cols[j])]).determinant()
    };
    let n = Vector4::new(minor(0), -minor(1), minor(2), -minor(3));
    let len = n.norm();
    let scale = t[0].norm() * t[1].norm() * t[2].norm();
    (len > 1e-12 * scale && len.is_finite()).then(|| n / len)
}

/// Full geometry at an interior node.
pub fn node_geometry(patch: &SurfacePatch, idx: [usize; 3]) -> Result<NodeGeometry> {
    if !patch.is_interior(idx) {
        return Err(Error::NeedsInteriorStencil(idx));
    }
    let base = [idx[0] as isize, idx[1] as isize, idx[2] as isize];
    let at = |d: [isize; 3]| {
        patch
            .point_wrapped([base[0] + d[0], base[1] + d[1], base[2] + d[2]])
            .expect("interior stencil")
    };
    let hs = [
        patch.grid[0].step(),
        patch.grid[1].step(),
        patch.grid[2].step(),
    ];
    let e = |a: usize, s: isize| {
        let mut d = [0isize; 3];
        d[a] = s;
        d
    };
    let x0 = at([0, 0, 0]);
    let mut tangents = [Vector4::zeros(); 3];
    let mut second = [[Vector4::zeros(); 3]; 3];
    for a in 0..3 {
        let p = at(e(a, 1));
        let m = at(e(a, -1));
        tangents[a] = (p - m) / (2.0 * hs[a]);
        second[a][a] = (p - 2.0 * x0 + m) / (hs[a] * hs[a]);
    }
    for a in 0..3 {
        for b in (a + 1)..3 {
            let mut pp = [0isize; 3];
            pp[a] = 1;
            pp[b] = 1;
            let mut pm = pp;
            pm[b] = -1;
            let mut mp = pp;
            mp[a] = -1;
            let mut mm = pm;
            mm[a] = -1;
            let v = (at(pp) - at(pm) - at(mp) + at(mm)) / (4.0 * hs[a] * hs[b]);
            second[a][b] = v;
            second[b][a] = v;
        }
    }
    let mut normal = normal_of(&tangents).ok_or(Error::DegenerateMetric(idx))?;
    let u = patch.param(base);
    if normal.dot(&patch.inward_hint(u)) < 0.0 {
        normal = -normal;
    }
    let metric = Matrix3::from_fn(|a, b| tangents[a].dot(&tangents[b]));
    let second_form = Matrix3::from_fn(|a, b| second[a][b].dot(&normal));
    let (h, a2, principal) =
        shape_invariants(&metric, &second_form).ok_or(Error::DegenerateMetric(idx))?;
    Ok(NodeGeometry {
        point: x0,
        normal,
        tangents,
        metric,
        second_form,
        h,
        a2,
        principal,
    })
}

/// (H, |A|², ascending principal curvatures) from the two fundamental forms.
pub fn shape_invariants(g: &Matrix3<f64>, b: &Matrix3<f64>) -> Option<(f64, f64, [f64; 3])> {
    let chol = g.cholesky()?;
    let l_inv = chol.l().try_inverse()?;
    let s = l_inv * b * l_inv.transpose();
    let s = (s + s.transpose()) * 0.5;
    let eig = SymmetricEigen::new(s);
    let mut k = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2]];
    k.sort_by(f64::total_cmp);
    let h = k.iter().sum();
    let a2 = k.iter().map(|x| x * x).sum();
    Some((h, a2, k))
}

/// Mean curvature (sum convention, inward normal) at an interior node.
pub fn mean_curvature(patch: &SurfacePatch, idx: [usize; 3]) -> Result<f64> {
    node_geometry(patch, idx).map(|g| g.h)
}

/// Geometry at every interior node, in linear order; boundary nodes map to `None`.
pub fn geometry_field(patch: &SurfacePatch) -> Vec<Option<NodeGeometry>> {
    (0..patch.len())
        .into_par_iter()
        .map(|l| {
            let idx = patch.unlinear(l);
            if patch.is_interior(idx) {
                node_geometry(patch, idx).ok()
            } else {
                None
            }
        })
        .collect()
}
