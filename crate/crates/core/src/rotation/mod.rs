//! Normalized rotational vector fields and the symmetry diagnostics built on them.

pub mod alignment;
pub mod field;
pub mod fit;
pub mod so4;
pub mod symmetry;

pub use alignment::{
    alignment_distance, alignment_experiment, commutator_kernel_lower_bound, rigidity_residual,
    rigidity_trials, AlignmentReport, RigidModel, SurfacePoint,
};
pub use field::{evaluate_field, j, j_prime, AffineField, RotationField};
pub use fit::{
    fit_cylinder, fit_generalized_cylinder, fit_shape, hausdorff_to_cylinder, CylinderFit,
};
pub use so4::{gauge_fix, so4_structure_checks, So4Report};
pub use symmetry::{check_epsilon_symmetric, check_epsilon_symmetric_on, SymmetryVerdict};
