//! Numerics for SO(2)-symmetric translating solitons of mean curvature flow in R^4.
//!
//! Modules follow the computation chain: discrete hypersurfaces ([`geom`]),
//! model flows ([`solitons`]), rotation fields and symmetry checks
//! ([`rotation`]), the cylinder Jacobi analysis ([`jacobi`]), Dirichlet heat
//! kernels ([`heat_kernel`]), barrier functions ([`barrier`]) and convex
//! geometry / entropy ([`convex`]).

// NaN-rejecting guards are written as `!(x > 0.0)` on purpose.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod barrier;
pub mod convex;
pub mod error;
pub mod geom;
pub mod heat_kernel;
pub mod jacobi;
pub mod quad;
pub mod rng;
pub mod rotation;
pub mod solitons;

pub use error::{Error, Result};
pub use nalgebra;
pub use rand;
