//! Time-indexed patch families and parabolic neighborhoods P̂(x, t, L, T).
//!
//! All slices of a [`Flow`] share one parameter grid; a parameter node is
//! followed through time, which is the normal-flow correspondence for the
//! model flows built here (up to tangential motion for translators).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::Vector4;
use serde::{Deserialize, Serialize};

use super::curvature::mean_curvature;
use super::patch::SurfacePatch;
use crate::error::{invalid, Error, Result};

/// Balls with L = ρ·H at most this size use Euclidean distance; beyond it,
/// shortest paths on the 26-neighbour node graph.
pub const EUCLIDEAN_BALL_MAX_L: f64 = 10.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpacetimePoint {
    pub position: Vector4<f64>,
    pub time: f64,
}

impl SpacetimePoint {
    pub fn new(position: Vector4<f64>, time: f64) -> Self {
        SpacetimePoint { position, time }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParabolicNeighborhood {
    pub center: SpacetimePoint,
    pub l: f64,
    pub t_depth: f64,
    pub h_center: f64,
}

impl ParabolicNeighborhood {
    pub fn spatial_radius(&self) -> f64 {
        self.l / self.h_center
    }

    pub fn time_depth(&self) -> f64 {
        self.t_depth / (self.h_center * self.h_center)
    }

    pub fn time_window(&self) -> (f64, f64) {
        (self.center.time - self.time_depth(), self.center.time)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub times: Vec<f64>,
    pub slices: Vec<SurfacePatch>,
}

impl Flow {
    pub fn new(times: Vec<f64>, slices: Vec<SurfacePatch>) -> Result<Self> {
        if times.is_empty() || times.len() != slices.len() {
            return invalid("flow needs one slice per time");
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return invalid("flow times must be strictly increasing");
        }
        let grid = slices[0].grid;
        let kind = slices[0].kind;
        if slices.iter().any(|s| s.grid != grid || s.kind != kind) {
            return invalid("flow slices must share kind and grid");
        }
        Ok(Flow { times, slices })
    }

    /// Builds a flow by sampling `make` at each time.
    pub fn from_fn(times: Vec<f64>, make: impl Fn(f64) -> Result<SurfacePatch>) -> Result<Self> {
        let slices = times.iter().map(|&t| make(t)).collect::<Result<Vec<_>>>()?;
        Flow::new(times, slices)
    }

    pub fn slice_at(&self, t: f64) -> Option<usize> {
        let tol = 1e-12 * t.abs().max(1.0);
        self.times.iter().position(|&s| (s - t).abs() <= tol)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClippedFlow {
    /// Indices into the parent flow's slices, oldest first.
    pub slices: Vec<usize>,
    /// Node mask shared by every slice (linear node order).
    pub mask: Vec<bool>,
    pub center_node: [usize; 3],
    /// Distance from the center node, per node, at the center time.
    pub distance: Vec<f64>,
}

impl ClippedFlow {
    pub fn node_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask
            .iter()
            .enumerate()
            .filter(|(_, &m)| m)
            .map(|(l, _)| l)
    }
}

#[derive(PartialEq)]
struct Item(f64, usize);
impl Eq for Item {}
impl Ord for Item {
    fn cmp(&self, o: &Self) -> Ordering {
        o.0.total_cmp(&self.0).then(o.1.cmp(&self.1))
    }
}
impl PartialOrd for Item {
    fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
        Some(self.cmp(o))
    }
}

/// Shortest-path distances on the 26-neighbour node graph with chord lengths,
/// truncated at `cutoff`.
fn graph_distances(
    patch: &SurfacePatch,
    points: &[Vector4<f64>],
    src: usize,
    cutoff: f64,
) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; patch.len()];
    let mut heap = BinaryHeap::new();
    dist[src] = 0.0;
    heap.push(Item(0.0, src));
    while let Some(Item(d, l)) = heap.pop() {
        if d > dist[l] || d > cutoff {
            continue;
        }
        let idx = patch.unlinear(l);
        for di in -1isize..=1 {
            for dj in -1isize..=1 {
                for dk in -1isize..=1 {
                    let q = [
                        idx[0] as isize + di,
                        idx[1] as isize + dj,
                        idx[2] as isize + dk,
                    ];
                    let (Some(i), Some(j), Some(k)) = (
                        patch.grid[0].wrap(q[0]),
                        patch.grid[1].wrap(q[1]),
                        patch.grid[2].wrap(q[2]),
                    ) else {
                        continue;
                    };
                    let m = patch.linear([i, j, k]);
                    let nd = d + (points[m] - points[l]).norm();
                    if nd < dist[m] {
                        dist[m] = nd;
                        heap.push(Item(nd, m));
                    }
                }
            }
        }
    }
    dist
}

/// Restricts a flow to P̂(center, L, T) = B(x, L/H) × [t − T/H², t].
///
/// The ball is measured on the center slice and carried to all slices through
/// the shared parameter grid.
pub fn extract_parabolic_neighborhood(
    flow: &Flow,
    center: &SpacetimePoint,
    l: f64,
    t: f64,
) -> Result<(ParabolicNeighborhood, ClippedFlow)> {
    if !(l > 0.0 && t > 0.0) {
        return invalid("L and T must be positive");
    }
    let si = flow
        .slice_at(center.time)
        .ok_or_else(|| Error::Invalid(format!("no slice at t = {}", center.time)))?;
    let patch = &flow.slices[si];
    let points = patch.points();
    let (node, d) = points
        .iter()
        .enumerate()
        .map(|(i, p)| (i, (p - center.position).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty patch");
    if d > 1e-9 * (1.0 + center.position.norm()) {
        return invalid(format!(
            "center is {d:.3e} from the nearest node; not on the flow"
        ));
    }
    let center_node = patch.unlinear(node);
    let h = mean_curvature(patch, center_node)?;
    if h <= 0.0 {
        return invalid(format!("H(center) = {h} is not positive"));
    }
    let nb = ParabolicNeighborhood {
        center: *center,
        l,
        t_depth: t,
        h_center: h,
    };
    let rho = nb.spatial_radius();
    let distance = if l <= EUCLIDEAN_BALL_MAX_L {
        points
            .iter()
            .map(|p| (p - points[node]).norm())
            .collect::<Vec<_>>()
    } else {
        graph_distances(patch, &points, node, rho * 1.5)
    };
    let mask: Vec<bool> = distance.iter().map(|&x| x <= rho).collect();

    let mut deficits = Vec::new();
    for a in 0..3 {
        let ax = &patch.grid[a];
        if ax.periodic {
            continue;
        }
        let mut worst: Option<f64> = None;
        for (lnode, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
            let idx = patch.unlinear(lnode);
            if idx[a] == 0 || idx[a] + 1 == ax.n {
                let deficit = rho - distance[lnode];
                worst = Some(worst.map_or(deficit, |w: f64| w.max(deficit)));
            }
        }
        if let Some(w) = worst {
            deficits.push(format!(
                "axis {a}: ball reaches the grid edge, deficit ≈ {w:.4}"
            ));
        }
    }
    let (lo, hi) = nb.time_window();
    let tol = 1e-12 * lo.abs().max(1.0);
    if flow.times[0] > lo + tol {
        deficits.push(format!(
            "time: window starts at {lo}, flow starts at {} (deficit {})",
            flow.times[0],
            flow.times[0] - lo
        ));
    }
    if !deficits.is_empty() {
        return Err(Error::RegionExceedsGrid(deficits.join("; ")));
    }
    let slices = (0..flow.times.len())
        .filter(|&i| flow.times[i] >= lo - tol && flow.times[i] <= hi + tol)
        .collect();
    Ok((
        nb,
        ClippedFlow {
            slices,
            mask,
            center_node,
            distance,
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::patch::{Axis, PatchKind};

    fn shrinking_cylinder(times: Vec<f64>, half: f64, n: usize) -> Flow {
        let grid = [
            Axis::angle(128),
            Axis::new(-half, half, n),
            Axis::new(-half, half, n),
        ];
        Flow::from_fn(times, |t| {
            SurfacePatch::from_fn(PatchKind::PolarGraph, grid, |_| (-2.0 * t).sqrt())
        })
        .unwrap()
    }

    #[test]
    fn cylinder_radius_and_window() {
        let flow = shrinking_cylinder(vec![-10.0, -9.0, -5.0, -2.0, -1.0], 4.0, 17);
        let c = SpacetimePoint::new(Vector4::new(2f64.sqrt(), 0.0, 0.0, 0.0), -1.0);
        let (nb, clip) = extract_parabolic_neighborhood(&flow, &c, 1.0, 4.0).unwrap();
        assert!((nb.spatial_radius() - 2f64.sqrt()).abs() < 1e-3);
        let (lo, hi) = nb.time_window();
        assert!((lo + 9.0).abs() < 1e-2 && hi == -1.0, "window [{lo}, {hi}]");
        assert!(clip.node_count() > 0);
    }

    #[test]
    fn deficits_reported() {
        let flow = shrinking_cylinder(vec![-2.0, -1.0], 1.0, 9);
        let c = SpacetimePoint::new(Vector4::new(2f64.sqrt(), 0.0, 0.0, 0.0), -1.0);
        let err = extract_parabolic_neighborhood(&flow, &c, 2.0, 4.0).unwrap_err();
        let msg = err.to_string();
        assert!(
            msg.contains("axis 1") && msg.contains("axis 2") && msg.contains("time"),
            "{msg}"
        );
    }

    #[test]
    fn monotone_in_l_and_t() {
        let flow = shrinking_cylinder(vec![-40.0, -20.0, -10.0, -4.0, -2.0, -1.0], 20.0, 41);
        let c = SpacetimePoint::new(Vector4::new(2f64.sqrt(), 0.0, 0.0, 0.0), -1.0);
        let (_, big) = extract_parabolic_neighborhood(&flow, &c, 12.0, 16.0).unwrap();
        for (l, t) in [(1.0, 1.0), (5.0, 8.0), (11.0, 16.0), (12.0, 2.0)] {
            let (_, small) = extract_parabolic_neighborhood(&flow, &c, l, t).unwrap();
            assert!(small.mask.iter().zip(&big.mask).all(|(s, b)| !s || *b));
            assert!(small.slices.iter().all(|s| big.slices.contains(s)));
        }
    }
}
