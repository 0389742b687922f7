//! Tensor-grid hypersurface patches in R^4.
//!
//! Every patch is a map from a 3-d parameter box to R^4 driven by one scalar
//! sample per node. The kind fixes how the sample enters the embedding:
//!
//! | kind             | parameters   | local embedding                              |
//! |------------------|--------------|----------------------------------------------|
//! | `Graph`          | (x1, x2, x3) | (x1, x2, x3, w)                              |
//! | `PolarGraph`     | (θ, z1, z2)  | (r cos θ, r sin θ, z1, z2)                   |
//! | `Revolution`     | (r, θ, s)    | (r cos θ, r sin θ, ζ, s)                     |
//! | `SphericalGraph` | (σ, θ, s)    | (ρ sin σ cos θ, ρ sin σ sin θ, ρ cos σ, s)   |
//!
//! A [`Placement`] (scale, rotation, offset) is applied afterwards, so rigid
//! motions and parabolic rescalings never touch the samples.

use nalgebra::{Matrix4, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PatchKind {
    Graph,
    PolarGraph,
    Revolution,
    SphericalGraph,
}

impl PatchKind {
    /// Index of the periodic angular axis, if any.
    pub fn periodic_axis(self) -> Option<usize> {
        match self {
            PatchKind::Graph => None,
            PatchKind::PolarGraph => Some(0),
            PatchKind::Revolution | PatchKind::SphericalGraph => Some(1),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub n: usize,
    pub periodic: bool,
}

impl Axis {
    pub fn new(min: f64, max: f64, n: usize) -> Self {
        Axis {
            min,
            max,
            n,
            periodic: false,
        }
    }

    /// Periodic axis over [min, max) with `n` samples; the endpoint is not stored.
    pub fn periodic(min: f64, max: f64, n: usize) -> Self {
        Axis {
            min,
            max,
            n,
            periodic: true,
        }
    }

    /// Full turn [0, 2π).
    pub fn angle(n: usize) -> Self {
        Axis::periodic(0.0, std::f64::consts::TAU, n)
    }

    pub fn step(&self) -> f64 {
        if self.periodic {
            (self.max - self.min) / self.n as f64
        } else {
            (self.max - self.min) / (self.n - 1) as f64
        }
    }

    pub fn coord(&self, i: isize) -> f64 {
        self.min + i as f64 * self.step()
    }

    /// Maps a possibly out-of-range index onto storage; `None` off a non-periodic edge.
    pub fn wrap(&self, i: isize) -> Option<usize> {
        let n = self.n as isize;
        if self.periodic {
            Some(i.rem_euclid(n) as usize)
        } else if (0..n).contains(&i) {
            Some(i as usize)
        } else {
            None
        }
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n as isize).map(|i| self.coord(i)).collect()
    }
}

/// Similarity `x ↦ scale·R·x + offset` applied after the local embedding.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement {
    pub scale: f64,
    pub rotation: Matrix4<f64>,
    pub offset: Vector4<f64>,
}

impl Default for Placement {
    fn default() -> Self {
        Placement {
            scale: 1.0,
            rotation: Matrix4::identity(),
            offset: Vector4::zeros(),
        }
    }
}

impl Placement {
    pub fn apply(&self, x: &Vector4<f64>) -> Vector4<f64> {
        self.rotation * x * self.scale + self.offset
    }

    /// `other ∘ self`.
    pub fn then(&self, other: &Placement) -> Placement {
        Placement {
            scale: self.scale * other.scale,
            rotation: other.rotation * self.rotation,
            offset: other.apply(&self.offset),
        }
    }

    pub fn is_identity(&self) -> bool {
        self.scale == 1.0 && self.rotation == Matrix4::identity() && self.offset == Vector4::zeros()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurfacePatch {
    pub kind: PatchKind,
    pub grid: [Axis; 3],
    /// Row-major, axis 0 slowest.
    pub samples: Vec<f64>,
    pub ambient_dim: usize,
    #[serde(default)]
    pub placement: Placement,
}

impl SurfacePatch {
    pub fn new(kind: PatchKind, grid: [Axis; 3], samples: Vec<f64>) -> Result<Self> {
        let patch = SurfacePatch {
            kind,
            grid,
            samples,
            ambient_dim: 4,
            placement: Placement::default(),
        };
        patch.validate()?;
        Ok(patch)
    }

    pub fn from_fn(kind: PatchKind, grid: [Axis; 3], f: impl Fn([f64; 3]) -> f64) -> Result<Self> {
        let mut samples = Vec::with_capacity(grid[0].n * grid[1].n * grid[2].n);
        for i in 0..grid[0].n as isize {
            for j in 0..grid[1].n as isize {
                for k in 0..grid[2].n as isize {
                    samples.push(f([grid[0].coord(i), grid[1].coord(j), grid[2].coord(k)]));
                }
            }
        }
        Self::new(kind, grid, samples)
    }

    pub fn validate(&self) -> Result<()> {
        if self.ambient_dim != 4 {
            return invalid(format!(
                "ambient_dim {} unsupported (only 4)",
                self.ambient_dim
            ));
        }
        for (a, ax) in self.grid.iter().enumerate() {
            if ax.n < 4 {
                return invalid(format!("axis {a} has {} samples, need at least 4", ax.n));
            }
            if !(ax.max > ax.min) || !ax.min.is_finite() || !ax.max.is_finite() {
                return invalid(format!("axis {a} has empty or non-finite range"));
            }
        }
        if let Some(p) = self.kind.periodic_axis() {
            if !self.grid[p].periodic {
                return invalid(format!("axis {p} must be periodic for {:?}", self.kind));
            }
        }
        if self.samples.len() != self.len() {
            return invalid(format!(
                "expected {} samples, got {}",
                self.len(),
                self.samples.len()
            ));
        }
        if self.samples.iter().any(|s| !s.is_finite()) {
            return invalid("non-finite sample");
        }
        if matches!(self.kind, PatchKind::PolarGraph | PatchKind::SphericalGraph)
            && self.samples.iter().any(|&s| s <= 0.0)
        {
            return invalid("polar radii must be strictly positive");
        }
        Ok(())
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.grid[0].n, self.grid[1].n, self.grid[2].n]
    }

    pub fn len(&self) -> usize {
        self.grid[0].n * self.grid[1].n * self.grid[2].n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn linear(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.grid[1].n + idx[1]) * self.grid[2].n + idx[2]
    }

    pub fn unlinear(&self, l: usize) -> [usize; 3] {
        let n2 = self.grid[2].n;
        let n1 = self.grid[1].n;
        [l / (n1 * n2), (l / n2) % n1, l % n2]
    }

    pub fn sample(&self, idx: [usize; 3]) -> f64 {
        self.samples[self.linear(idx)]
    }

    pub fn param(&self, idx: [isize; 3]) -> [f64; 3] {
        [
            self.grid[0].coord(idx[0]),
            self.grid[1].coord(idx[1]),
            self.grid[2].coord(idx[2]),
        ]
    }

    /// Sample at a possibly wrapped index; `None` off a non-periodic edge.
    pub fn sample_wrapped(&self, idx: [isize; 3]) -> Option<f64> {
        let i = self.grid[0].wrap(idx[0])?;
        let j = self.grid[1].wrap(idx[1])?;
        let k = self.grid[2].wrap(idx[2])?;
        Some(self.samples[self.linear([i, j, k])])
    }

    /// Embedding before placement.
    pub fn embed_local(kind: PatchKind, u: [f64; 3], s: f64) -> Vector4<f64> {
        match kind {
            PatchKind::Graph => Vector4::new(u[0], u[1], u[2], s),
            PatchKind::PolarGraph => Vector4::new(s * u[0].cos(), s * u[0].sin(), u[1], u[2]),
            PatchKind::Revolution => Vector4::new(u[0] * u[1].cos(), u[0] * u[1].sin(), s, u[2]),
            PatchKind::SphericalGraph => {
                let (ss, cs) = u[0].sin_cos();
                Vector4::new(s * ss * u[1].cos(), s * ss * u[1].sin(), s * cs, u[2])
            }
        }
    }

    pub fn embed(&self, u: [f64; 3], s: f64) -> Vector4<f64> {
        self.placement.apply(&Self::embed_local(self.kind, u, s))
    }

    pub fn point_wrapped(&self, idx: [isize; 3]) -> Option<Vector4<f64>> {
        let s = self.sample_wrapped(idx)?;
        Some(self.embed(self.param(idx), s))
    }

    pub fn point(&self, idx: [usize; 3]) -> Vector4<f64> {
        let u = self.param([idx[0] as isize, idx[1] as isize, idx[2] as isize]);
        self.embed(u, self.sample(idx))
    }

    pub fn points(&self) -> Vec<Vector4<f64>> {
        (0..self.len())
            .map(|l| self.point(self.unlinear(l)))
            .collect()
    }

    /// A vector on the inward side at parameter `u`, used to orient normals.
    pub fn inward_hint(&self, u: [f64; 3]) -> Vector4<f64> {
        let local = match self.kind {
            PatchKind::Graph => Vector4::new(0.0, 0.0, 0.0, 1.0),
            PatchKind::PolarGraph => Vector4::new(-u[0].cos(), -u[0].sin(), 0.0, 0.0),
            PatchKind::Revolution => Vector4::new(0.0, 0.0, 1.0, 0.0),
            PatchKind::SphericalGraph => {
                let (ss, cs) = u[0].sin_cos();
                Vector4::new(-ss * u[1].cos(), -ss * u[1].sin(), -cs, 0.0)
            }
        };
        self.placement.rotation * local
    }

    /// True when the node has a full centered stencil along every axis.
    pub fn is_interior(&self, idx: [usize; 3]) -> bool {
        (0..3).all(|a| self.grid[a].periodic || (idx[a] >= 1 && idx[a] + 1 < self.grid[a].n))
    }

    pub fn with_placement(mut self, placement: Placement) -> Self {
        self.placement = placement;
        self
    }

    /// Applies `x ↦ scale·R·x + offset` on top of the current placement.
    pub fn transformed(&self, extra: &Placement) -> Self {
        let mut out = self.clone();
        out.placement = self.placement.then(extra);
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("patch serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let patch: SurfacePatch = serde_json::from_str(s)
            .map_err(|e| crate::Error::Invalid(format!("patch json: {e}")))?;
        patch.validate()?;
        Ok(patch)
    }
}
