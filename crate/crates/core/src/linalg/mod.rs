pub mod gibbs;
pub mod kms;
pub mod ops;
pub mod propagate;
pub mod spectrum;
pub mod superop;

pub use gibbs::{gibbs, kms_inner, GibbsState};
pub use kms::{KmsSpectral, Picture};
pub use ops::{partial_trace, trace_distance, DenseOp};
pub use propagate::{propagate, Backend};
pub use spectrum::{hermitian_eig, Spectrum};
pub use superop::SuperOp;
