//! Transition probabilities of a uniformly accelerated detector whose mass
//! and acceleration change as it emits or absorbs field quanta, and the
//! evaporation history that follows from it.
//!
//! Units have c = k_B = 1. The constant force ties mass to acceleration,
//! m = f/a; choosing f = 1/(4G) maps the detector onto a two-dimensional
//! black hole with the Hawking temperature.

// `!(x > 0.0)` is used on purpose so that NaN inputs are rejected too
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod detector;
pub mod error;
pub mod evaporation;
pub mod oracle;
pub mod quad;
pub mod transition;
pub mod wavepacket;

pub use error::{Error, Result, Warning};
