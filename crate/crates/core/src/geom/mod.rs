//! Discrete hypersurfaces in R^4: curvature, closeness to a model, parabolic neighborhoods.

pub mod closeness;
pub mod curvature;
pub mod flow;
pub mod patch;

pub use closeness::{
    closeness_to_model, project_to_model, ClosenessReport, ModelSurface, Projection,
};
pub use curvature::{geometry_field, mean_curvature, node_geometry, NodeGeometry};
pub use flow::{
    extract_parabolic_neighborhood, ClippedFlow, Flow, ParabolicNeighborhood, SpacetimePoint,
};
pub use patch::{Axis, PatchKind, Placement, SurfacePatch};
