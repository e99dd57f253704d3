//! Sum-of-squares relaxations for min-max polynomial optimization over
//! simple sets (tori, spheres, balls, Boolean cubes, finite sets and their
//! products), solved with a dense primal-dual interior-point method.

#![no_std]

extern crate alloc;

pub mod certify;
pub mod error;
pub mod matalg;
pub mod matrixsos;
pub mod minmax;
pub mod sdp;
pub mod simpleset;
pub mod sosmin;

pub use error::{Error, Result};
pub use matalg::SymMatrix;
pub use simpleset::{Kind, PointSet, SetKind, SimpleSet};
