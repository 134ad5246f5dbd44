//! Numerical laboratory for sub-Riemannian geodesics, Gaussian beams and hypoelliptic waves.
//!
//! Modules follow the pipeline: [`frames`] (exact polynomial vector fields) feed [`flow`]
//! (bicharacteristics) and [`nilpotent`] (gradings); [`beams`] builds approximate wave
//! solutions along geodesics; [`wave`] evolves them on grids; [`experiments`] runs sweeps.

// `!(x > 0.0)` also rejects NaN; index loops mirror the tensor formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod beams;
pub mod error;
pub mod experiments;
pub mod flow;
pub mod frames;
pub mod nilpotent;
pub mod wave;

pub use error::{Error, Result};
pub use flow::{BicharTrajectory, RegionSpec};
pub use frames::{builtin_frame, PhasePoint, Poly, PolyVectorField, SubRiemannianFrame};
