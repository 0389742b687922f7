//! Import and export of surface patches in the JSON container format.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;
use soliton_core::convex::shrinker_cylinder;
use soliton_core::geom::{geometry_field, SurfacePatch};
use soliton_core::solitons::{bowl3_spherical, bowl_line_graph, solve_bowl_profile};

pub const MODELS: [&str; 4] = ["cylinder", "sphere-cylinder", "bowl-line", "bowl3"];

/// A sample patch of a named model surface.
pub fn model_patch(name: &str) -> Result<SurfacePatch> {
    Ok(match name {
        "cylinder" => shrinker_cylinder(1, 4.0, 64, 17)?,
        "sphere-cylinder" => shrinker_cylinder(2, 4.0, 32, 17)?,
        "bowl-line" => {
            let prof = solve_bowl_profile(2, 20.0, 2e-3)?;
            bowl_line_graph(&prof, 4.0, 33, 4.0, 9)?
        }
        "bowl3" => {
            let prof = solve_bowl_profile(3, 20.0, 2e-3)?;
            bowl3_spherical(&prof, (1.0, 20.0), 33, 16, 32)?
        }
        other => bail!("unknown model {other:?}; known: {}", MODELS.join(", ")),
    })
}

pub fn export(name: &str, path: &Path) -> Result<()> {
    let patch = model_patch(name)?;
    std::fs::write(path, patch.to_json()).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Serialize)]
pub struct PatchSummary {
    pub kind: String,
    pub dims: [usize; 3],
    pub nodes: usize,
    pub interior_nodes: usize,
    pub mean_curvature_min: f64,
    pub mean_curvature_max: f64,
}

pub fn inspect(path: &Path) -> Result<PatchSummary> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let patch = SurfacePatch::from_json(&text)?;
    let geo: Vec<_> = geometry_field(&patch).into_iter().flatten().collect();
    let (lo, hi) = geo
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), g| {
            (lo.min(g.h), hi.max(g.h))
        });
    Ok(PatchSummary {
        kind: format!("{:?}", patch.kind),
        dims: patch.dims(),
        nodes: patch.len(),
        interior_nodes: geo.len(),
        mean_curvature_min: lo,
        mean_curvature_max: hi,
    })
}
