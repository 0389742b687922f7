//! Convex bodies, diameters, rotated-cylinder sections and Gaussian entropy.

pub mod body;
pub mod diameter;
pub mod entropy;
pub mod section;

pub use body::{
    ellipsoid_samples, fibonacci_sphere, gaussian_polytope, BodySource, ConvexBody, Facet,
};
pub use diameter::{
    diameters, diameters_by_refinement, extrinsic_diameter, random_polytope_trials,
    DiameterOptions, DiameterTrial, Diameters,
};
pub use entropy::{
    entropy_F, entropy_sup, shrinker_cylinder, sphere_entropy, EntropyEvaluation, SupRecord,
    SupSearch, WeightedSurface,
};
pub use section::{
    cross_section_quadratic, eccentricity, eta_sweep, linear_fit, plane_rotation,
    random_tilted_rotation, CrossSection, Eccentricity, EtaRow, EtaSweep,
};
