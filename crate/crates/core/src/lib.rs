//! Infinitely generated discontinuous groups acting on AdS³.
//!
//! The groups are built from sequence families `(a1, a2, r, R)` via a
//! ping-pong construction. The crate counts their orbit points in
//! pseudo-balls, measures (non-)sharpness, and sums Poincaré series of the
//! eigenfunctions `(x1 + i x2)^{-m}`.

pub mod error;
pub mod family;
pub mod cli;
pub mod hyperbolic;
pub mod numerics;
pub mod orbit;
pub mod spectral;
pub mod words;

pub use error::{Error, Result};
