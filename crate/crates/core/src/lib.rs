//! Numerical verification of weighted Sobolev identities and inequalities
//! for second-order elliptic operators in non-divergent form.
//!
//! The crate evaluates every term of the weighted integration-by-parts
//! identity term by term on closed-form examples, tracks the quadrature
//! residual under refinement, and checks the derived inequalities with
//! their explicit constants. Unit-disk potential theory (Douglas energy,
//! Poisson extension, Feller form) lives in [`douglas`].
//!
//! Builds without `std` (with `alloc`); the `parallel` feature spreads
//! integration over a rayon pool with a fixed reduction tree.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod douglas;
pub mod error;
pub mod expr;
pub mod geometry;
pub mod linalg;
pub mod math;
pub mod operator;
pub mod quad;
pub mod testfn;
pub mod trend;
pub mod verifier;
pub mod weights;

pub use error::{Error, Result};
