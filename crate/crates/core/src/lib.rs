//! Exact computation for groups acting on regular rooted trees through
//! wreath recursions: canonical element storage, pseudonorm balls and
//! spheres, incompressible elements and the finite inequalities behind a
//! subexponential growth criterion.

pub mod catalog;
pub mod cli;
pub mod config;
pub mod criterion;
pub mod error;
pub mod family;
pub mod group;
pub mod growth;
pub mod incompressible;
pub mod intern;
pub mod perm;
pub mod persist;
pub mod tree;

pub use error::{Error, Result};
pub use group::Group;
pub use perm::Perm;
pub use tree::GroupElement;
