//! Collision Clustering decoding for the rotated planar surface code.
//!
//! [`geometry`] builds decoding graphs by fault injection and provides the
//! closed-form metrics, [`sampler`] draws syndromes, [`decoder`] runs the
//! clustering loop, [`oracles`] holds slow reference implementations,
//! [`instrument`] counts operations, and [`experiment`] drives Monte Carlo
//! runs for the `ccdecode` binary.

pub mod decoder;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod instrument;
pub mod oracles;
pub mod sampler;

pub use error::{Error, Result};
