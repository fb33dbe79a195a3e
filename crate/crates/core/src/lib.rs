//! Numerical lab for an exactly detailed-balanced Lindbladian Gibbs sampler
//! on small spin systems.

pub mod bounds;
pub mod dirichlet;
pub mod error;
pub mod lindblad;
pub mod linalg;
pub mod markov;
pub mod oft;
pub mod quad;
pub mod recovery;
pub mod special;
pub mod spinsys;
pub mod stats;

pub use error::{Error, Result};
pub use faer::{c64, Mat};

/// Thread count for dense kernels; 0 or 1 means sequential.
pub fn set_threads(n: usize) {
    faer::set_global_parallelism(if n <= 1 { faer::Par::Seq } else { faer::Par::rayon(n) });
}
