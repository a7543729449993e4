//! Construction and certification of choreography orbits.
//!
//! The crate builds periodic n-body solutions in which every body travels
//! the same closed curve with equal phase spacing, in flat space, with a
//! fixed attracting center, and on surfaces of constant curvature. On top
//! of the constructors it provides the spectral analyses that decide
//! whether such an orbit could also be a solution for unequal masses.

pub mod action;
pub mod analysis;
pub mod canonical;
pub mod choreography;
pub mod dynamics;
pub mod error;
pub mod io;
pub mod model;
pub mod path;
pub mod spectral;
pub(crate) mod vecs;

pub use error::{ChoreoError, Result};
