//! Numerical laboratory for the semilinear heat equation
//! `u_t = Δu + a|u|^α u` with initial data that are anti-symmetric in the
//! first `m` coordinates and singular at the origin.
//!
//! Solutions are represented by their restriction to the sector
//! `{x_1 > 0, ..., x_m > 0}` where they solve a Dirichlet problem.
//!
//! * [`geometry`]: sector parameters, grids, fields, reflection and dilation.
//! * [`profiles`]: exact initial-data families.
//! * [`semigroup`]: the linear heat flow on the sector (kernel quadrature,
//!   sine/Fourier transforms, and the self-similar reference solution).
//! * [`picard`]: the fixed-point construction in a weighted ball.
//! * [`evolve`]: splitting integrator with blow-up time extrapolation.
//! * [`lifespan`]: sweeps, dilation limits and blow-up criteria.
//! * [`manifest`]: declarative experiment runner behind the command-line tool.

pub mod error;
pub mod evolve;
pub mod field_io;
pub mod geometry;
pub mod lifespan;
pub mod manifest;
pub mod numerics;
pub mod picard;
pub mod profiles;
pub mod semigroup;

pub use error::{Error, Result};
pub use geometry::{AxisKind, Field, GridSpec, SectorSpec, Sign};
pub use profiles::{Modulation, ProfileKind, SingularProfile};
