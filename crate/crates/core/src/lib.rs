//! Reachable sets of linear time-invariant systems under magnitude-, energy-
//! and `L^p`-bounded inputs, and design optimization constrained by
//! reachability metrics.
//!
//! The modules build on each other bottom-up:
//!
//! * [`lti`]: systems, matrix exponential, closed-form convolution integrals,
//!   an RK4 integrator used as an independent check.
//! * [`boundary`]: switching functions, bang-bang controls and the exact
//!   boundary curves of the magnitude-bounded reachable set of planar
//!   single-input systems.
//! * [`gramian`]: reachability Gramian, energy ellipsoid and minimum-energy
//!   control.
//! * [`lp`]: costate-parameterized `L^p`-optimal controls, costate sampling
//!   and the costate-norm inner approximation.
//! * [`geometry`]: convex hulls, membership and volume in 2 to 4 dimensions.
//! * [`design`]: parametric models, reachability constraints and an SQP
//!   optimizer.
//! * [`run`]: JSON task configuration and file export behind the `reachkit`
//!   command.

pub mod boundary;
pub mod design;
pub mod error;
pub mod geometry;
pub mod gramian;
pub mod lp;
pub mod lti;
pub mod quad;
pub mod run;

pub use error::{ReachError, Result};
pub use lti::LtiSystem;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lti.md")]
    mod lti {}
    #[doc = include_str!("../../../book/src/boundary.md")]
    mod boundary {}
    #[doc = include_str!("../../../book/src/gramian.md")]
    mod gramian {}
    #[doc = include_str!("../../../book/src/lp.md")]
    mod lp {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/design.md")]
    mod design {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
