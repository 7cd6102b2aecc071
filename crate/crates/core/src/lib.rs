//! Bayesian-optimization auto-tuning of ADRC controllers on a simulated
//! throttle valve.
//!
//! The crate is organized around a closed tuning loop: a [`plant`] simulation
//! produces closed-loop trajectories under an [`adrc`] controller synthesized
//! from a candidate parameter vector, [`cost`] turns trajectories into scalar
//! objectives, and [`bo`] drives the search using a [`gp`] surrogate and the
//! [`acquisition`] functions (expected improvement or entropy search) over the
//! normalized domain defined in [`paramspace`]. [`campaign`] and [`config`]
//! wire everything to persisted, reproducible runs.

pub mod acquisition;
pub mod adrc;
pub mod bo;
pub mod campaign;
pub mod config;
pub mod cost;
pub mod gp;
pub mod linalg;
pub mod opt;
pub mod paramspace;
pub mod plant;
pub mod rng;

pub use paramspace::{Bounds, ParamVector, PoleSpec};
