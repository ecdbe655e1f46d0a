//! Reference PDEs on the unit interval, transported to self-similar cell
//! hierarchies and discretized as interacting particle systems.
//!
//! The pipeline: code the attractor cells of an iterated function system by
//! lexicographic words, identify them with the uniform subintervals of
//! [0, 1], replace a differential operator by a scaled integral kernel,
//! average the kernel over cell pairs, and integrate the resulting ODE
//! system. Convergence sweeps measure the two error scales (kernel scale
//! `epsilon`, partition level `m`) against exact reference solutions.

pub mod error;
pub mod experiments;
pub mod ifs;
pub mod ips;
pub mod kernel;
pub mod math;
pub mod partition;
pub mod reference;
pub mod transport;
pub mod weights;

pub use error::{Error, Result};
