//! Numerical laboratory for solitary-wave trains of a two-component
//! shallow-water system of Camassa-Holm type.
//!
//! The crate constructs exact solitary-wave profiles, evolves the coupled
//! equations pseudospectrally, tracks the modulation parameters of an N-wave
//! train, monitors conserved and localized energy functionals, and certifies
//! coercivity of the linearized Hessian at a solitary wave.

pub mod coercivity;
pub mod config;
pub mod dynamics;
pub mod error;
pub mod experiments;
pub mod functionals;
pub mod grid;
pub mod modulation;
pub mod util;
pub mod wave;

pub use error::{Error, Result};
