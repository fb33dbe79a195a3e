//! The exactly detailed-balanced Lindbladian: weights, coefficient tables,
//! coherent term and assembly.

pub mod coherent;
pub mod generator;
pub mod weight;

pub use coherent::{coherent_term, KERNEL_SCALE_CONSISTENT, PV_CONSTANT_CONSISTENT, PV_CONSTANT_EQUATION, PV_CONSTANT_PROOF};
pub use generator::{assemble, assemble_ops, assemble_with, consistent_kernel, dissipative_part, scan_kernel_constants, Coherent, ConstantScan, DbResidual, Generator, GeneratorSnapshot};
pub use weight::{transition_coefficients, TransitionCoeffs, Weight, WeightKind};
