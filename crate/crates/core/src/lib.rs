//! Explicit adaptive Milstein integration for Ito SDEs with one-sided
//! Lipschitz drift and non-commutative noise.
//!
//! * [`model`]: problem coefficients and the built-in test problems,
//! * [`wiener`]: shared fine Wiener paths, iterated integrals, Levy-area moments,
//! * [`steppers`]: Milstein, tamed Milstein (the backstop) and comparator maps,
//! * [`adaptive`]: the path-bounded step controller and the integration loops,
//! * [`harness`]: Monte Carlo strong-error, efficiency and backstop experiments.

pub mod adaptive;
pub mod error;
pub mod harness;
pub mod model;
pub mod stats;
pub mod steppers;
pub mod wiener;

pub use error::{Error, Result};
