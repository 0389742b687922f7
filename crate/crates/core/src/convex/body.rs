use std::collections::BTreeMap;

use chull::ConvexHullWrapper;
use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Tolerance of the supporting-hyperplane certificate, relative to the body's size.
pub const CERTIFY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Facet {
    /// Sorted vertex indices into [`ConvexBody::vertices`].
    pub vertices: Vec<usize>,
    /// Outward unit normal.
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl Facet {
    pub fn signed_distance(&self, p: &[f64]) -> f64 {
        self.normal.iter().zip(p).map(|(a, b)| a * b).sum::<f64>() - self.offset
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BodySource {
    /// Hull of a vertex cloud; the boundary is the union of flat facets.
    Polytope,
    /// Dense samples of a smooth convex surface; the samples are the boundary.
    SurfaceSamples,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConvexBody {
    pub dim: usize,
    pub source: BodySource,
    pub vertices: Vec<Vec<f64>>,
    pub facets: Vec<Facet>,
    /// Largest violation of the supporting-hyperplane test over all vertices.
    pub certificate: f64,
}

impl ConvexBody {
    /// Convex hull of `points` (n = 3 or 4), certified facet by facet.
    pub fn from_cloud(points: &[Vec<f64>]) -> Result<Self> {
        Self::build(points, BodySource::Polytope)
    }

    /// Body whose boundary is sampled by `samples`; every sample must be a hull vertex.
    pub fn from_surface(samples: &[Vec<f64>]) -> Result<Self> {
        let body = Self::build(samples, BodySource::SurfaceSamples)?;
        if body.vertices.len() != samples.len() {
            return Err(Error::Assumption(format!(
                "{} of {} samples are not in convex position",
                samples.len() - body.vertices.len(),
                samples.len()
            )));
        }
        Ok(body)
    }

    fn build(points: &[Vec<f64>], source: BodySource) -> Result<Self> {
        let dim = points.first().map_or(0, Vec::len);
        if !(3..=4).contains(&dim) {
            return invalid(format!("dimension {dim} unsupported (3 or 4)"));
        }
        if points
            .iter()
            .any(|p| p.len() != dim || p.iter().any(|x| !x.is_finite()))
        {
            return invalid("points must share one dimension and be finite");
        }
        if points.len() <= dim {
            return invalid("need more than n points for a full-dimensional hull");
        }
        let (vertices, mut simplices) = if dim == 3 {
            let hull = ConvexHullWrapper::try_new(points, None)
                .map_err(|e| Error::Degenerate(format!("convex hull: {e:?}")))?;
            let (vertices, flat) = hull.vertices_indices();
            let simplices: Vec<Vec<usize>> = flat
                .chunks(dim)
                .map(|c| {
                    let mut v = c.to_vec();
                    v.sort_unstable();
                    v
                })
                .collect();
            (vertices, simplices)
        } else {
            brute_force_hull(points)?
        };
        simplices.sort();
        simplices.dedup();

        let centroid = mean(&vertices);
        let scale = vertices
            .iter()
            .map(|v| dist(v, &centroid))
            .fold(1.0, f64::max);
        let mut facets = Vec::with_capacity(simplices.len());
        for s in simplices {
            let normal =
                simplex_normal(&s.iter().map(|&i| vertices[i].clone()).collect::<Vec<_>>())?;
            let mut f = Facet {
                offset: dot(&normal, &vertices[s[0]]),
                normal,
                vertices: s,
            };
            if f.signed_distance(&centroid) > 0.0 {
                f.normal.iter_mut().for_each(|x| *x = -*x);
                f.offset = -f.offset;
            }
            facets.push(f);
        }
        let certificate = facets
            .iter()
            .flat_map(|f| vertices.iter().map(move |v| f.signed_distance(v)))
            .fold(f64::NEG_INFINITY, f64::max);
        if certificate > CERTIFY_TOL * scale {
            return Err(Error::Assumption(format!(
                "supporting-hyperplane test failed by {certificate:e}"
            )));
        }
        Ok(ConvexBody {
            dim,
            source,
            vertices,
            facets,
            certificate,
        })
    }

    /// Every face (of every dimension) of the facet complex, with the facets containing it.
    pub fn faces(&self) -> BTreeMap<Vec<usize>, Vec<usize>> {
        let mut out: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
        for (fi, f) in self.facets.iter().enumerate() {
            let k = f.vertices.len();
            for mask in 1u32..(1 << k) {
                let face: Vec<usize> = (0..k)
                    .filter(|b| mask & (1 << b) != 0)
                    .map(|b| f.vertices[b])
                    .collect();
                out.entry(face).or_default().push(fi);
            }
        }
        out
    }

    /// Boundary sample points at spacing about `h`.
    ///
    /// Vertices, evenly spaced points along each edge, and an isotropic
    /// lattice (hexagonal on 2-faces, cubic on 3-faces) clipped to each higher
    /// face at distance `h/2` from its sides. Every face is visited once.
    /// Surface-sampled bodies return their samples and ignore `h`.
    pub fn boundary_samples(&self, h: f64) -> Vec<Vec<f64>> {
        self.boundary_samples_on_facets(h).0
    }

    /// [`Self::boundary_samples`] plus, per sample, the facets it lies on
    /// (empty for surface-sampled bodies).
    pub fn boundary_samples_on_facets(&self, h: f64) -> (Vec<Vec<f64>>, Vec<Vec<usize>>) {
        if self.source == BodySource::SurfaceSamples {
            return (self.vertices.clone(), vec![Vec::new(); self.vertices.len()]);
        }
        let mut out = Vec::new();
        let mut owners = Vec::new();
        for (face, facets) in self.faces() {
            let pts: Vec<&Vec<f64>> = face.iter().map(|&i| &self.vertices[i]).collect();
            let before = out.len();
            match pts.len() {
                1 => out.push(pts[0].clone()),
                2 => {
                    let m = ((dist(pts[0], pts[1]) / h).ceil() as usize).max(1);
                    for i in 1..m {
                        let t = i as f64 / m as f64;
                        out.push(
                            pts[0]
                                .iter()
                                .zip(pts[1])
                                .map(|(a, b)| a + t * (b - a))
                                .collect(),
                        );
                    }
                }
                _ => out.extend(face_lattice(&pts, h)),
            }
            owners.extend(std::iter::repeat_n(facets, out.len() - before));
        }
        (out, owners)
    }
}

/// Lattice points inside a 2- or 3-simplex embedded in R^n, at least `h/2` from its sides.
fn face_lattice(pts: &[&Vec<f64>], h: f64) -> Vec<Vec<f64>> {
    let n = pts[0].len();
    let d = pts.len() - 1;
    let e = DMatrix::from_fn(n, d, |r, c| pts[c + 1][r] - pts[0][r]);
    let q = e.clone().qr().q();
    let local = q.transpose() * &e;
    let Some(inv) = local.clone().try_inverse() else {
        return Vec::new();
    };
    // Rows of `inv` are the gradients of λ_1..λ_d; λ_0 takes minus their sum.
    let mut grads: Vec<Vec<f64>> = (0..d)
        .map(|r| inv.row(r).iter().copied().collect())
        .collect();
    grads.insert(
        0,
        (0..d)
            .map(|c| -(0..d).map(|r| inv[(r, c)]).sum::<f64>())
            .collect(),
    );
    let heights: Vec<f64> = grads
        .iter()
        .map(|g| 1.0 / g.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();

    let corners: Vec<Vec<f64>> = std::iter::once(vec![0.0; d])
        .chain((0..d).map(|c| local.column(c).iter().copied().collect()))
        .collect();
    let centroid: Vec<f64> = (0..d)
        .map(|k| corners.iter().map(|c| c[k]).sum::<f64>() / (d + 1) as f64)
        .collect();
    let reach = corners
        .iter()
        .map(|c| dist(c, &centroid))
        .fold(0.0, f64::max);
    let steps = (2.0 * reach / h).ceil() as i64 + 1;

    let basis: Vec<Vec<f64>> = if d == 2 {
        vec![vec![h, 0.0], vec![0.5 * h, 0.75f64.sqrt() * h]]
    } else {
        (0..d)
            .map(|k| (0..d).map(|j| if j == k { h } else { 0.0 }).collect())
            .collect()
    };
    let mut out = Vec::new();
    let mut idx = vec![-steps; d];
    loop {
        let y: Vec<f64> = (0..d)
            .map(|k| centroid[k] + (0..d).map(|j| idx[j] as f64 * basis[j][k]).sum::<f64>())
            .collect();
        let lam: Vec<f64> = (0..d)
            .map(|r| (0..d).map(|c| inv[(r, c)] * y[c]).sum())
            .collect();
        let lam0 = 1.0 - lam.iter().sum::<f64>();
        let inside = std::iter::once(lam0)
            .chain(lam.iter().copied())
            .zip(&heights)
            .all(|(l, hh)| l * hh >= 0.5 * h);
        if inside {
            let mut p = pts[0].clone();
            for (r, pr) in p.iter_mut().enumerate() {
                *pr += (0..d).map(|c| q[(r, c)] * y[c]).sum::<f64>();
            }
            out.push(p);
        }
        let mut k = 0;
        loop {
            if k == d {
                return out;
            }
            idx[k] += 1;
            if idx[k] <= steps {
                break;
            }
            idx[k] = -steps;
            k += 1;
        }
    }
}

/// Vertex indices of one facet.
pub type FacetIndices = Vec<usize>;

/// Largest cloud accepted by [`brute_force_hull`].
pub const BRUTE_FORCE_MAX: usize = 64;

/// Facets of the hull of points in general position by exhaustive search:
/// an n-subset is a facet when every other point lies on one side of its
/// hyperplane. Returns the hull vertices and facets indexed into them.
pub fn brute_force_hull(points: &[Vec<f64>]) -> Result<(Vec<Vec<f64>>, Vec<FacetIndices>)> {
    let n = points[0].len();
    if points.len() > BRUTE_FORCE_MAX {
        return invalid(format!(
            "exhaustive hull limited to {BRUTE_FORCE_MAX} points"
        ));
    }
    let scale = points.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
    let tol = 1e-12 * scale;
    let mut facets = Vec::new();
    let mut subset: Vec<usize> = (0..n).collect();
    loop {
        let corners: Vec<Vec<f64>> = subset.iter().map(|&i| points[i].clone()).collect();
        if let Ok(normal) = simplex_normal(&corners) {
            let offset = dot(&normal, &corners[0]);
            let (mut above, mut below) = (false, false);
            for (j, p) in points.iter().enumerate() {
                if subset.contains(&j) {
                    continue;
                }
                let s = dot(&normal, p) - offset;
                if s.abs() <= tol {
                    return Err(Error::Degenerate("points not in general position".into()));
                }
                above |= s > 0.0;
                below |= s < 0.0;
            }
            if !(above && below) {
                facets.push(subset.clone());
            }
        }
        // Next n-subset in lexicographic order.
        let m = points.len();
        let mut i = n;
        loop {
            if i == 0 {
                let used: std::collections::BTreeSet<usize> =
                    facets.iter().flatten().copied().collect();
                if used.len() <= n {
                    return Err(Error::Degenerate("hull is not full-dimensional".into()));
                }
                let remap: BTreeMap<usize, usize> =
                    used.iter().enumerate().map(|(k, &v)| (v, k)).collect();
                let vertices = used.iter().map(|&v| points[v].clone()).collect();
                let facets = facets
                    .iter()
                    .map(|f| f.iter().map(|v| remap[v]).collect())
                    .collect();
                return Ok((vertices, facets));
            }
            i -= 1;
            if subset[i] < m - n + i {
                subset[i] += 1;
                for k in i + 1..n {
                    subset[k] = subset[k - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Unit normal of the hyperplane through `n` points in R^n (generalized cross product).
fn simplex_normal(pts: &[Vec<f64>]) -> Result<Vec<f64>> {
    let n = pts[0].len();
    let rows = DMatrix::from_fn(n - 1, n, |r, c| pts[r + 1][c] - pts[0][c]);
    let mut normal = vec![0.0; n];
    for (i, ni) in normal.iter_mut().enumerate() {
        let minor = rows.clone().remove_column(i);
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        *ni = sign * minor.determinant();
    }
    let len = normal.iter().map(|x| x * x).sum::<f64>().sqrt();
    if len == 0.0 || !len.is_finite() {
        return Err(Error::Degenerate("flat facet".into()));
    }
    Ok(normal.into_iter().map(|x| x / len).collect())
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn mean(pts: &[Vec<f64>]) -> Vec<f64> {
    let mut c = vec![0.0; pts[0].len()];
    for p in pts {
        for (ci, pi) in c.iter_mut().zip(p) {
            *ci += pi;
        }
    }
    c.iter_mut().for_each(|x| *x /= pts.len() as f64);
    c
}

/// Hull of `n_points` standard Gaussian samples in R^dim.
pub fn gaussian_polytope(dim: usize, n_points: usize, rng: &mut impl Rng) -> Result<ConvexBody> {
    let pts: Vec<Vec<f64>> = (0..n_points)
        .map(|_| (0..dim).map(|_| rng.sample(StandardNormal)).collect())
        .collect();
    ConvexBody::from_cloud(&pts)
}

/// `n` nearly uniform points on the unit sphere S² (golden-angle spiral).
pub fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2 * i + 1) as f64 / n as f64;
            let r = (1.0 - z * z).sqrt();
            let a = golden * i as f64;
            vec![r * a.cos(), r * a.sin(), z]
        })
        .collect()
}

/// Fibonacci samples mapped onto the ellipsoid with semi-axes `axes`.
pub fn ellipsoid_samples(axes: [f64; 3], n: usize) -> Vec<Vec<f64>> {
    fibonacci_sphere(n)
        .into_iter()
        .map(|p| vec![axes[0] * p[0], axes[1] * p[1], axes[2] * p[2]])
        .collect()
}
