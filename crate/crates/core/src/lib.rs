//! Decoherence functionals as dense Hermitian matrices.
//!
//! The crate checks the DF axioms in matrix form, composes DFs with the
//! product rule `D₁₂ = D₁ ⊗ D₂`, and runs two composability experiments:
//! a family that survives `n` copies but not `n + 1`, and an explicit quantum
//! partner that breaks positivity for any DF that is not positive
//! semidefinite.

pub mod axioms;
pub mod bell;
pub mod cli;
pub mod compose;
pub mod df;
pub mod error;
pub mod lemma1;
pub mod matrix;
pub mod maximality;
pub mod quantum;
pub mod sample;
pub mod scan;
pub mod space;
pub mod tol;

pub use axioms::{
    check_hermiticity, check_normalization, check_partition_decoherence, check_strong_positivity,
    check_weak_positivity, check_witness, validate_df, CheckOptions, DecoherenceMode,
    PositivityReport, SpectralReport, Strategy, ValidationReport, Verdict,
};
pub use compose::{
    check_composability, detect_blocks, tensor, tensor_power, BlockStructure, ComposabilityReport,
};
pub use df::{DecoherenceFunctional, DfJson, ValidationLevel};
pub use error::{Error, Result};
pub use matrix::{ComplexMatrix, C64};
pub use space::{Event, Factor, HistorySpace, Partition};
pub use tol::Tolerances;
