//! The benchmark inputs must be valid, or criterion panics mid-run.

use soliton_core::convex::{entropy_F, shrinker_cylinder, WeightedSurface};
use soliton_core::heat_kernel::{kernel_eval, ImageKernel};
use soliton_core::nalgebra::Vector4;
use soliton_core::solitons::solve_bowl_profile;

#[test]
fn bench_inputs_evaluate() {
    solve_bowl_profile(3, 100.0, 1e-2).unwrap();
    let k = ImageKernel::new(1.0, 6).unwrap();
    assert!(kernel_eval(&k, 0.1, [0.2, -0.3], [0.5, 0.1]).unwrap() > 0.0);
    let patch = shrinker_cylinder(2, 12.0, 32, 41).unwrap();
    let surface = WeightedSurface::from_patch(&patch).unwrap();
    let f = entropy_F(&surface, &Vector4::zeros(), 1.0).unwrap();
    assert!(f > 1.0 && f < 2.0);
}
