//! ε-symmetry verdicts over discrete parabolic neighborhoods.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::field::RotationField;
use crate::error::Result;
use crate::geom::curvature::node_geometry;
use crate::geom::{extract_parabolic_neighborhood, Flow, ParabolicNeighborhood, SpacetimePoint};

pub const DEFAULT_L: f64 = 100.0;
pub const DEFAULT_T: f64 = 10_000.0;
/// Admissible bound on |K|·H.
pub const KH_BOUND: f64 = 5.0;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SymmetryVerdict {
    /// sup |⟨K, ν⟩|·H over the neighborhood.
    pub epsilon_measured: f64,
    /// sup |K|·H over the same nodes.
    pub bound_kh: f64,
    pub samples: usize,
    pub slices: usize,
    pub neighborhood: ParabolicNeighborhood,
}

impl SymmetryVerdict {
    pub fn passes(&self, eps: f64) -> bool {
        self.epsilon_measured <= eps && self.bound_kh <= KH_BOUND
    }
}

/// Verdict on P̂(center, 100, 100²).
pub fn check_epsilon_symmetric(
    flow: &Flow,
    center: &SpacetimePoint,
    k: &RotationField,
) -> Result<SymmetryVerdict> {
    check_epsilon_symmetric_on(flow, center, k, DEFAULT_L, DEFAULT_T)
}

pub fn check_epsilon_symmetric_on(
    flow: &Flow,
    center: &SpacetimePoint,
    k: &RotationField,
    l: f64,
    t: f64,
) -> Result<SymmetryVerdict> {
    let (nb, clip) = extract_parabolic_neighborhood(flow, center, l, t)?;
    let nodes: Vec<usize> = clip.nodes().collect();
    let m = k.matrix();
    let per_slice = clip
        .slices
        .iter()
        .map(|&si| {
            let patch = &flow.slices[si];
            nodes
                .par_iter()
                .map(|&lnode| {
                    let g = node_geometry(patch, patch.unlinear(lnode))?;
                    let kv = m * (g.point - k.q);
                    Ok((kv.dot(&g.normal).abs() * g.h, kv.norm() * g.h.abs()))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let (mut eps, mut kh) = (0.0f64, 0.0f64);
    for (a, b) in per_slice.iter().flatten() {
        eps = eps.max(*a);
        kh = kh.max(*b);
    }
    Ok(SymmetryVerdict {
        epsilon_measured: eps,
        bound_kh: kh,
        samples: nodes.len() * clip.slices.len(),
        slices: clip.slices.len(),
        neighborhood: nb,
    })
}
