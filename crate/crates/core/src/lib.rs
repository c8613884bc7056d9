//! Augmented phase portraits for planar discrete maps.
//!
//! A planar map `X' = F(X, Y)`, `Y' = G(X, Y)` is studied through its
//! nullclines, the direction field they induce, and the *next-iterate
//! operators* attached to each nullcline. The sign of an operator says on
//! which side of its nullcline the image of a point lands, which is what
//! makes region invariance checkable for maps whose orbits jump across
//! nullclines.
//!
//! Module map:
//!
//! - [`models`]: the built-in map families and the [`PlanarMap`] abstraction.
//! - [`nullclines`]: explicit nullclines, equilibria and direction signs.
//! - [`next_iterate`]: operator evaluation, closed-form competition root-curves.
//! - [`trace`]: marching-squares zero-set tracing for arbitrary fields.
//! - [`regions`]: sign-labeled region decomposition and invariance checks.
//! - [`competition`]: case classification and theorem verification for the
//!   Leslie-Gower competition map.
//! - [`numerics`]: the shared 2x2 linear algebra, root finding and sampling kernel.

pub mod competition;
pub mod error;
pub mod models;
pub mod next_iterate;
pub mod nullclines;
pub mod numerics;
pub mod regions;
pub mod trace;

pub use error::{Error, Result};
pub use models::{
    CompetitionParams, Family, MutualismParams, PlanarMap, Point, PredPreyParams, RickerParams,
};
pub use numerics::{BBox, Mat2};
