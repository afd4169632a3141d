//! Numerical engine for duality-preserving regularizations of fermionic
//! point interactions in one dimension.

pub mod error;
pub mod numerics;
pub mod pointlike;
pub mod profiles;
pub mod acceptance;
pub mod bethe;
pub mod manybody;
pub mod perturb;
pub mod solver;

pub use error::{Error, Result};
