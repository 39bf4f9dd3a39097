//! Non-Markovian population dynamics and transient Casimir-Polder forces of a
//! two-level atom above a (possibly magnetized) plasma half-space.

pub mod cli;
pub mod error;
pub mod force;
pub mod greens;
pub mod laplace;
pub mod markov;
pub mod material;
pub mod oracles;
pub mod output;
pub mod quad;
pub mod scenario;
pub mod spectral;
pub mod units;
pub mod volterra;

pub use error::{Error, Result};
