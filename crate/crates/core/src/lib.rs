//! Numerical toolkit for one-shot measurement compression with quantum side
//! information: smooth entropies, a small SDP engine, covering and convex-split
//! experiments, compressed-POVM protocols and rate regions.

pub mod covering;
pub mod entropy;
pub mod error;
pub mod instance;
pub mod linalg;
pub mod objects;
pub mod protocols;
pub mod sdp;
pub mod split;

pub use error::{Error, Result};
