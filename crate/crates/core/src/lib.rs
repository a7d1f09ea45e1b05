//! Discrete harmonic maps from closed surfaces into non-positively curved
//! targets, evaluated across holomorphic families of conformal structures.

pub mod conformal;
pub mod error;
pub mod harmonic;
pub mod hypgeom;
pub mod scenario;
pub mod surface;
pub mod target;
pub mod variation;

pub use error::{Error, Result, Stage};
