use petgraph::algo::dijkstra;
use petgraph::graph::{NodeIndex, UnGraph};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::body::{dist, gaussian_polytope, BodySource, ConvexBody};
use crate::error::{invalid, Error, Result};
use crate::rng;

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct DiameterOptions {
    /// Neighbors per sample in the proximity graph.
    pub k: usize,
    /// Initial boundary spacing as a fraction of the extrinsic diameter.
    pub initial_spacing: f64,
    /// Stop refining once d1 changes by less than this relative amount.
    pub rel_change: f64,
    pub max_levels: usize,
    /// Eccentricity sweeps starting from the extrinsic-diameter endpoints.
    pub sweeps: usize,
}

impl Default for DiameterOptions {
    fn default() -> Self {
        DiameterOptions {
            k: 32,
            initial_spacing: 1.0 / 8.0,
            rel_change: 0.01,
            max_levels: 4,
            sweeps: 3,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Diameters {
    /// Intrinsic (boundary geodesic) diameter estimate.
    pub d1: f64,
    /// Extrinsic diameter over the samples.
    pub d2: f64,
    pub ratio: f64,
    pub samples: usize,
    /// `(samples, d1)` at each refinement level.
    pub levels: Vec<(usize, f64)>,
    pub converged: bool,
}

/// Farthest pair among `pts` (exact, quadratic).
pub fn extrinsic_diameter(pts: &[Vec<f64>]) -> (f64, usize, usize) {
    (0..pts.len())
        .into_par_iter()
        .map(|i| {
            let mut b = (0.0, i, i);
            for j in i + 1..pts.len() {
                let d = dist(&pts[i], &pts[j]);
                if d > b.0 {
                    b = (d, i, j);
                }
            }
            b
        })
        .reduce(
            || (0.0, 0, 0),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && (b.1, b.2) < (a.1, a.2)) {
                    b
                } else {
                    a
                }
            },
        )
}

fn nearest(pts: &[Vec<f64>], i: usize, candidates: &[usize], k: usize) -> Vec<(usize, f64)> {
    let mut d: Vec<(usize, f64)> = candidates
        .iter()
        .filter(|&&j| j != i)
        .map(|&j| (j, dist(&pts[i], &pts[j])))
        .collect();
    let k = k.min(d.len());
    if k < d.len() {
        d.select_nth_unstable_by(k, |a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
    }
    d[..k].to_vec()
}

/// Symmetric k-nearest-neighbor graph weighted by chord length.
///
/// With `owners` non-empty, candidate neighbors of a sample are limited to
/// samples on one of its facets, so every edge runs along the boundary.
pub fn proximity_graph(pts: &[Vec<f64>], owners: &[Vec<usize>], k: usize) -> UnGraph<(), f64> {
    let n = pts.len();
    let restricted = owners.iter().any(|o| !o.is_empty());
    let neighbors: Vec<Vec<(usize, f64)>> = if restricted {
        let mut members: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
        for (i, o) in owners.iter().enumerate() {
            for &f in o {
                members.entry(f).or_default().push(i);
            }
        }
        (0..n)
            .into_par_iter()
            .map(|i| {
                owners[i]
                    .iter()
                    .flat_map(|f| nearest(pts, i, &members[f], k))
                    .collect()
            })
            .collect()
    } else {
        let all: Vec<usize> = (0..n).collect();
        (0..n)
            .into_par_iter()
            .map(|i| nearest(pts, i, &all, k))
            .collect()
    };
    let mut edges = std::collections::BTreeMap::new();
    for (i, list) in neighbors.iter().enumerate() {
        for &(j, w) in list {
            edges.insert((i.min(j), i.max(j)), w);
        }
    }
    let mut g = UnGraph::with_capacity(n, edges.len());
    for _ in 0..n {
        g.add_node(());
    }
    for ((a, b), w) in edges {
        g.add_edge(NodeIndex::new(a), NodeIndex::new(b), w);
    }
    g
}

/// Graph-geodesic diameter of one sample set, with `(d2, endpoints)` already known.
fn graph_diameter(
    pts: &[Vec<f64>],
    owners: &[Vec<usize>],
    opts: &DiameterOptions,
    ends: (usize, usize),
) -> Result<f64> {
    let g = proximity_graph(pts, owners, opts.k);
    let mut best: f64 = 0.0;
    let mut sources = vec![ends.0, ends.1];
    let mut seen = std::collections::BTreeSet::new();
    for _ in 0..opts.sweeps.max(1) {
        let mut next = Vec::new();
        for s in sources {
            if !seen.insert(s) {
                continue;
            }
            let d = dijkstra(&g, NodeIndex::new(s), None, |e| *e.weight());
            if d.len() != pts.len() {
                return Err(Error::RefineSampling(format!(
                    "proximity graph disconnected ({} of {} samples reachable)",
                    d.len(),
                    pts.len()
                )));
            }
            let (far, dmax) = d
                .iter()
                .map(|(n, v)| (n.index(), *v))
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)))
                .unwrap_or((s, 0.0));
            best = best.max(dmax);
            next.push(far);
        }
        sources = next;
        if sources.is_empty() {
            break;
        }
    }
    Ok(best)
}

/// Intrinsic and extrinsic diameters of the body's boundary.
///
/// Polytope boundaries are resampled with halving spacing until d1 settles;
/// surface-sampled bodies are evaluated once on their own samples.
pub fn diameters(body: &ConvexBody, opts: &DiameterOptions) -> Result<Diameters> {
    if opts.k < 2 {
        return invalid("k must be at least 2");
    }
    let (d2_vertices, _, _) = extrinsic_diameter(&body.vertices);
    let mut h = opts.initial_spacing * d2_vertices;
    let mut levels = Vec::new();
    let mut converged = false;
    let mut last: Option<(f64, f64)> = None;
    let single = body.source == BodySource::SurfaceSamples;
    for _ in 0..opts.max_levels.max(1) {
        let (pts, owners) = body.boundary_samples_on_facets(h);
        let (d2, a, b) = extrinsic_diameter(&pts);
        let d1 = graph_diameter(&pts, &owners, opts, (a, b))?.max(d2);
        levels.push((pts.len(), d1));
        if let Some((prev, _)) = last {
            if ((d1 - prev) / prev).abs() < opts.rel_change {
                converged = true;
            }
        }
        last = Some((d1, d2));
        if single || converged {
            converged |= single;
            break;
        }
        h *= 0.5;
    }
    let (d1, d2) = last.expect("at least one level");
    Ok(Diameters {
        d1,
        d2,
        ratio: d1 / d2,
        samples: levels.last().map_or(0, |l| l.0),
        levels,
        converged,
    })
}

/// Like [`diameters`], but resamples a smooth body by doubling the sample count.
pub fn diameters_by_refinement(
    make: impl Fn(usize) -> Result<ConvexBody>,
    n0: usize,
    opts: &DiameterOptions,
) -> Result<Diameters> {
    let mut n = n0;
    let mut levels = Vec::new();
    let mut prev: Option<f64> = None;
    let mut out = None;
    for _ in 0..opts.max_levels.max(1) {
        let body = make(n)?;
        let mut d = diameters(&body, opts)?;
        levels.push((d.samples, d.d1));
        let done = prev.is_some_and(|p| ((d.d1 - p) / p).abs() < opts.rel_change);
        prev = Some(d.d1);
        d.converged = done;
        out = Some(d);
        if done {
            break;
        }
        n *= 2;
    }
    let mut d = out.expect("at least one level");
    d.levels = levels;
    Ok(d)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DiameterTrial {
    pub trial: usize,
    pub dim: usize,
    pub cloud_points: usize,
    pub vertices: usize,
    pub d1: f64,
    pub d2: f64,
    pub ratio: f64,
    pub samples: usize,
    pub converged: bool,
}

/// Diameter ratios of hulls of Gaussian clouds, one seeded stream per trial.
pub fn random_polytope_trials(
    count: usize,
    dim: usize,
    cloud_points: std::ops::RangeInclusive<usize>,
    seed: u64,
    opts: &DiameterOptions,
) -> Result<Vec<DiameterTrial>> {
    (0..count)
        .into_par_iter()
        .map(|trial| {
            use rand::Rng;
            let mut r = rng::stream(seed, "diameters", trial as u64);
            let n = r.random_range(cloud_points.clone());
            let body = gaussian_polytope(dim, n, &mut r)?;
            let d = diameters(&body, opts)?;
            Ok(DiameterTrial {
                trial,
                dim,
                cloud_points: n,
                vertices: body.vertices.len(),
                d1: d.d1,
                d2: d.d2,
                ratio: d.ratio,
                samples: d.samples,
                converged: d.converged,
            })
        })
        .collect()
}
